"""Holomorphic side: line bundles on V_tau, theta-section bases and their products.

Translate convention: a translate is z = d + tau c with real c, d. The canonical
representative has c, d in [0,1)^g and is stored in a :class:`TorusPoint` with
a = d and b = c, which is also how A-side positions and holonomies line up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterator

import numpy as np

from .errors import (
    LevelNotPositive,
    LevelOrderViolation,
    ModulusMismatch,
    ValidationError,
)
from .siegel import SiegelPoint
from .theta import DEFAULT_TOL, ThetaChar, ThetaRequest, _offsets, theta_batch, theta_eval

STRUCT_TOL = 1e-13
POINT_TOL = 1e-10


def frac(x: Any) -> np.ndarray:
    """Componentwise representative in [0, 1)."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x)
    return np.where(r >= 1.0, 0.0, r)


def wrap_distance(x: Any, y: Any) -> float:
    """Max over coordinates of the circle distance between x and y mod 1."""
    diff = np.abs(frac(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return float(np.max(np.minimum(diff, 1.0 - diff), initial=0.0))


@dataclass(frozen=True)
class TorusPoint:
    tau: SiegelPoint
    a: np.ndarray
    b: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return self.a + self.tau.tau @ self.b

    def equals(self, other: "TorusPoint", tol: float = POINT_TOL) -> bool:
        return max(wrap_distance(self.a, other.a), wrap_distance(self.b, other.b)) < tol

    def to_json(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist()}


def torus_point(tau: SiegelPoint, a: Any, b: Any) -> TorusPoint:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != (tau.genus,) or b.shape != (tau.genus,):
        raise ValidationError("a and b must have length g")
    return TorusPoint(tau, frac(a), frac(b))


def reduce_torus_point(tau: SiegelPoint, z: Any) -> TorusPoint:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    b = np.linalg.solve(tau.Omega, z.imag)
    a = z.real - tau.B @ b
    return torus_point(tau, a, b)


@dataclass(frozen=True)
class LineBundleLabel:
    level: int
    translate: TorusPoint

    @property
    def genus(self) -> int:
        return self.translate.tau.genus

    @property
    def tau(self) -> SiegelPoint:
        return self.translate.tau


def index_box(k: int, g: int) -> np.ndarray:
    """All lambda in {0..k-1}^g, lexicographic, shape (k^g, g)."""
    return _offsets(k, g)


def flat_index(lam: np.ndarray, k: int) -> np.ndarray:
    """Row index of lambda (reduced mod k) inside :func:`index_box`."""
    lam = np.mod(np.asarray(lam, dtype=np.int64), k)
    g = lam.shape[-1]
    weights = k ** np.arange(g - 1, -1, -1, dtype=np.int64)
    return lam @ weights


@dataclass(frozen=True)
class SectionVector:
    """Coefficients over {s_{k,z,lambda}} (or the dual basis when ``dual``).

    ``coeffs`` is a flat complex array indexed like :func:`index_box`.
    """

    label: LineBundleLabel
    dual: bool
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        k = self.label.level
        if k <= 0:
            raise LevelNotPositive("section labels carry the positive level |k|")
        if self.coeffs.shape != (k**self.label.genus,):
            raise ValidationError("coefficient array does not match the basis size")

    def items(self) -> Iterator[tuple[tuple[int, ...], complex]]:
        lams = index_box(self.label.level, self.label.genus)
        for lam, c in zip(lams, self.coeffs):
            yield tuple(int(x) for x in lam), complex(c)

    def to_json(self) -> dict:
        return {
            "k": self.label.level,
            "dual": self.dual,
            "translate": self.label.translate.to_json(),
            "coeffs": [{"lambda": list(l), "re": c.real, "im": c.imag} for l, c in self.items()],
        }


def basis_vector(label: LineBundleLabel, lam: Any, dual: bool = False) -> SectionVector:
    k = label.level
    v = np.zeros(k**label.genus, dtype=complex)
    v[flat_index(np.asarray(lam), k)] = 1.0
    return SectionVector(label, dual, v)


def section_value(label: LineBundleLabel, index: Any, z: Any, tol: float = DEFAULT_TOL) -> complex:
    """s_{k,z0,lambda}(z) = theta[(c+lambda)/k, d](k tau, k z) for translate z0 = d + tau c."""
    k = label.level
    if k <= 0:
        raise LevelNotPositive("sections exist only at positive level")
    lam = np.asarray(index, dtype=float)
    c = label.translate.b
    d = label.translate.a
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    req = ThetaRequest(label.tau.scaled(k), k * z, ThetaChar((c + lam) / k, d), tol)
    return theta_eval(req)


def section_vector_value(s: SectionVector, z: Any, tol: float = DEFAULT_TOL) -> complex:
    if s.dual:
        raise ValidationError("dual classes have no pointwise values")
    return sum(
        (coef * section_value(s.label, lam, z, tol) for lam, coef in s.items() if coef != 0),
        0j,
    )


def h0_dim(level: int, g: int) -> int:
    if level < 1:
        raise LevelNotPositive("h0_dim is defined here for k >= 1")
    return level**g


def ext_dims(k: int, kp: int, z: TorusPoint, zp: TorusPoint, g: int) -> list[int]:
    """Dimensions of Ext^w(L_{k,[z]}, L_{k',[z']}), w = 0..g."""
    out = [0] * (g + 1)
    if kp > k:
        out[0] = (kp - k) ** g
    elif kp < k:
        out[g] = (k - kp) ** g
    elif z.equals(zp):
        out = [math.comb(g, w) for w in range(g + 1)]
    return out


def lattice_split(kp: int, kpp: int, np_: Any, npp: Any) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique (n, ntilde, w) with n' = n + k'' ntilde + w, n'' = n - k' ntilde, 0 <= w < k'+k''."""
    if kp < 1 or kpp < 1:
        raise LevelNotPositive("levels must be positive")
    a = np.asarray(np_, dtype=np.int64)
    b = np.asarray(npp, dtype=np.int64)
    nt, w = np.divmod(a - b, kp + kpp)
    n = b + kp * nt
    return n, nt, w


@dataclass(frozen=True)
class Rebase:
    """s_{k,raw,lambda} = phase[lambda] * s_{k,canonical,perm[lambda]}."""

    c: np.ndarray
    d: np.ndarray
    perm: np.ndarray
    phase: np.ndarray


def rebase(k: int, c_raw: Any, d_raw: Any, target: TorusPoint | None = None) -> Rebase:
    """Relate the basis on a raw translate to the one on its canonical form.

    With ``target`` given, that point (which must agree with the raw translate mod 1)
    is used as the canonical form, which avoids ambiguity right at the 0/1 seam.
    """
    c_raw = np.asarray(c_raw, dtype=float)
    d_raw = np.asarray(d_raw, dtype=float)
    if target is None:
        c, d = frac(c_raw), frac(d_raw)
    else:
        c, d = target.b, target.a
        if max(wrap_distance(c, c_raw), wrap_distance(d, d_raw)) >= POINT_TOL:
            raise ValidationError("rebase target is not the same torus point")
    ec = np.round(c_raw - c).astype(np.int64)
    ed = np.round(d_raw - d)
    lams = index_box(k, len(c))
    mu = np.mod(lams + ec, k)
    phase = np.exp(2j * math.pi * (((c + mu) / k) @ ed))
    return Rebase(c, d, flat_index(mu, k), phase)


def express_on(s: SectionVector, target: TorusPoint) -> SectionVector:
    """The same class written in the basis attached to an equal translate ``target``."""
    t = s.label.translate
    rb = rebase(s.label.level, t.b, t.a, target)
    return SectionVector(LineBundleLabel(s.label.level, target), s.dual, apply_rebase(rb, s.coeffs, s.dual))


def apply_rebase(rb: Rebase, coeffs: np.ndarray, dual: bool = False) -> np.ndarray:
    """Coordinates in the canonical basis of a vector given in the raw basis."""
    out = np.zeros_like(coeffs)
    factor = 1.0 / rb.phase if dual else rb.phase
    np.add.at(out, rb.perm, factor * coeffs)
    return out


_TABLES: dict[tuple, np.ndarray] = {}
_TABLES_MAX = 4096


def multiplication_table(
    tau: SiegelPoint,
    k1: int,
    c1: Any,
    d1: Any,
    k2: int,
    c2: Any,
    d2: Any,
    tol: float = STRUCT_TOL,
) -> np.ndarray:
    """T[l1, l2, l] with s_{k1,z1,l1} s_{k2,z2,l2} = sum_l T[l1,l2,l] s_{k1+k2,z1+z2,l}.

    Translates are taken as given (no reduction), z_i = d_i + tau c_i, so the
    output lives on the raw translate z1 + z2.
    """
    parts = [np.asarray(x, dtype=float) for x in (c1, d1, c2, d2)]
    key = (tau, k1, k2, tol) + tuple(p.tobytes() for p in parts)
    table = _TABLES.get(key)
    if table is None:
        table = _build_table(tau, k1, parts[0], parts[1], k2, parts[2], parts[3], tol)
        if len(_TABLES) >= _TABLES_MAX:
            _TABLES.clear()
        _TABLES[key] = table
    return table


def _build_table(tau, k1, c1, d1, k2, c2, d2, tol) -> np.ndarray:
    if k1 < 1 or k2 < 1:
        raise LevelNotPositive("multiplication needs positive levels")
    g = tau.genus
    kk = k1 + k2
    l1 = index_box(k1, g)
    l2 = index_box(k2, g)
    w = index_box(kk, g)
    n1, n2, nw = len(l1), len(l2), len(w)
    ct1 = (c1 + l1)[:, None, None, :]
    ct2 = (c2 + l2)[None, :, None, :]
    ww = w[None, None, :, :]
    num = k1 * k2 * ww + k2 * ct1 - k1 * ct2
    chars = (num / (k1 * k2 * kk)).reshape(-1, g)
    dvec = np.broadcast_to(k2 * d1 - k1 * d2, chars.shape)
    vals = theta_batch(tau.scaled(k1 * k2 * kk), chars, dvec, None, tol).reshape(n1, n2, nw)
    out_idx = flat_index(l1[:, None, None, :] + l2[None, :, None, :] + k1 * ww, kk)
    table = np.zeros((n1, n2, kk**g), dtype=complex)
    i1, i2, _ = np.indices((n1, n2, nw))
    np.add.at(table, (i1, i2, out_idx), vals)
    table.setflags(write=False)
    return table


def _check_same_modulus(*vs: SectionVector) -> SiegelPoint:
    tau = vs[0].label.tau
    for v in vs[1:]:
        if v.label.tau != tau:
            raise ModulusMismatch("sections live on different tori")
    return tau


def product_tensor(
    tau: SiegelPoint, k1: int, t1: TorusPoint, k2: int, t2: TorusPoint, tol: float = STRUCT_TOL
) -> tuple[np.ndarray, TorusPoint]:
    """T[l1, l2, l] for s_{k1,t1,l1} s_{k2,t2,l2} in the canonical basis of level k1 + k2."""
    table = multiplication_table(tau, k1, t1.b, t1.a, k2, t2.b, t2.a, tol)
    rb = rebase(k1 + k2, t1.b + t2.b, t1.a + t2.a)
    canon = np.zeros_like(table)
    np.add.at(canon, (slice(None), slice(None), rb.perm), table * rb.phase[None, None, :])
    return canon, TorusPoint(tau, rb.d, rb.c)


def multiply_sections(sp: SectionVector, spp: SectionVector, tol: float = STRUCT_TOL) -> SectionVector:
    if sp.dual or spp.dual:
        raise LevelNotPositive("multiply_sections takes two H^0 elements")
    tau = _check_same_modulus(sp, spp)
    k1, k2 = sp.label.level, spp.label.level
    table, t = product_tensor(tau, k1, sp.label.translate, k2, spp.label.translate, tol)
    out = np.einsum("i,j,ijl->l", sp.coeffs, spp.coeffs, table)
    return SectionVector(LineBundleLabel(k1 + k2, t), False, out)


def dual_product_table(
    tau: SiegelPoint, k1: int, t1: TorusPoint, k2: int, t2: TorusPoint, tol: float = STRUCT_TOL
) -> tuple[np.ndarray, TorusPoint]:
    """U[l1, l2, mu]: s_{k1,t1,l1} (x) s^{k2,t2,l2} = sum_mu U[l1,l2,mu] s^{k2-k1,t,mu}.

    Here t is the canonical form of t2 - t1. Entry U[l1,l2,mu] is the coefficient of
    s_{k2,t2,l2} in s_{k1,t1,l1} * s_{k2-k1,t,mu}.
    """
    if k1 >= k2:
        raise LevelOrderViolation(f"need k' < k'', got {k1} >= {k2}")
    t = torus_point(tau, t2.a - t1.a, t2.b - t1.b)
    table = multiplication_table(tau, k1, t1.b, t1.a, k2 - k1, t.b, t.a, tol)
    rb = rebase(k2, t1.b + t.b, t1.a + t.a, t2)
    # move the output axis of the raw table onto the canonical basis at translate t2
    canon = np.zeros_like(table)
    np.add.at(canon, (slice(None), slice(None), rb.perm), table * rb.phase[None, None, :])
    return np.transpose(canon, (0, 2, 1)), t


def serre_dual_product(sp: SectionVector, sdual: SectionVector, tol: float = STRUCT_TOL) -> SectionVector:
    if sp.dual or not sdual.dual:
        raise ValidationError("expects an H^0 element and a dual (H^g) element")
    tau = _check_same_modulus(sp, sdual)
    k1, k2 = sp.label.level, sdual.label.level
    table, t = dual_product_table(tau, k1, sp.label.translate, k2, sdual.label.translate, tol)
    out = np.einsum("i,j,ijm->m", sp.coeffs, sdual.coeffs, table)
    return SectionVector(LineBundleLabel(k2 - k1, t), True, out)


def serre_pairing(s: SectionVector, sdual: SectionVector) -> complex:
    """Pairing of H^0 against its Serre dual in the dual bases."""
    if s.dual or not sdual.dual or s.label.level != sdual.label.level:
        raise ValidationError("pairing needs an H^0 element and a dual element of equal level")
    if not s.label.translate.equals(sdual.label.translate):
        raise ValidationError("pairing needs equal translates")
    return complex(s.coeffs @ sdual.coeffs)


def ring_table(tau: SiegelPoint, d_max: int, tol: float = STRUCT_TOL) -> dict[tuple[int, int], np.ndarray]:
    """Structure constants of the ring of sections (zero translates) up to degree d_max."""
    if d_max < 2:
        raise ValidationError("d_max must be at least 2")
    g = tau.genus
    zero = np.zeros(g)
    return {
        (d1, d2): multiplication_table(tau, d1, zero, zero, d2, zero, zero, tol)
        for d1 in range(1, d_max)
        for d2 in range(1, d_max - d1 + 1)
    }
