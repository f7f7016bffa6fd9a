"""Symplectic side: affine Lagrangian branes on T^{2g} and their Floer theory.

A brane of finite slope k is the affine Lagrangian theta = b - k r (mod 1) with a flat
U(1)-connection of holonomy vector a; a vertical brane is the fiber r = b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from scipy import integrate

from .bside import POINT_TOL, frac, index_box, flat_index, wrap_distance
from .errors import (
    EqualSlopes,
    InvalidSlopeTriple,
    ModulusMismatch,
    RepeatedSlopes,
    SlopeOrderViolation,
    ValidationError,
    VerticalSlope,
)
from .siegel import SiegelPoint
from .theta import DEFAULT_TOL, _offsets, tail_bound, theta_batch

INFINITY = "inf"
Slope = Union[int, str]
Key = tuple[int, ...]


@dataclass(frozen=True)
class Brane:
    tau: SiegelPoint
    slope: Slope
    b: np.ndarray
    a: np.ndarray

    @property
    def vertical(self) -> bool:
        return self.slope == INFINITY

    @property
    def genus(self) -> int:
        return self.tau.genus

    def to_json(self) -> dict:
        return {"slope": self.slope, "a": self.a.tolist(), "b": self.b.tolist()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Brane):
            return NotImplemented
        return (
            self.slope == other.slope
            and self.tau == other.tau
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )

    def __hash__(self) -> int:
        return hash((self.tau, self.slope, self.a.tobytes(), self.b.tobytes()))


def brane(tau: SiegelPoint, slope: Slope, a: Any, b: Any) -> Brane:
    if slope != INFINITY:
        if isinstance(slope, bool) or int(slope) != slope:
            raise ValidationError(f"slope must be an integer or {INFINITY!r}")
        slope = int(slope)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != (tau.genus,) or b.shape != (tau.genus,):
        raise ValidationError("a and b must have length g")
    return Brane(tau, slope, frac(b), frac(a))


@dataclass(frozen=True)
class FloerGenerator:
    kind: str  # "transverse", "perturbed" or "vertical"
    key: Key
    degree: int
    coords: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class FloerElement:
    source: Brane
    target: Brane
    degree: int
    coeffs: dict[Key, complex]
    note: str = field(default="", compare=False)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.coeffs.values())

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "degree": self.degree,
            "coeffs": [
                {"key": list(k), "re": complex(v).real, "im": complex(v).imag}
                for k, v in sorted(self.coeffs.items())
            ],
        }


@dataclass(frozen=True)
class PerturbationParams:
    epsilon: float = 0.01
    quadrature_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not 0 < self.epsilon < 0.1:
            raise ValidationError("epsilon must lie in (0, 0.1)")
        if not self.quadrature_tol > 0:
            raise ValidationError("quadrature_tol must be positive")


def _same_tau(*branes: Brane) -> None:
    for br in branes[1:]:
        if br.tau != branes[0].tau:
            raise ModulusMismatch("branes live on different tori")


def transverse_degree(k1: int, k2: int, g: int) -> int:
    return 0 if k1 < k2 else g


def intersection_points(b1: Brane, b2: Brane) -> list[FloerGenerator]:
    _same_tau(b1, b2)
    if b1.vertical or b2.vertical:
        raise VerticalSlope("use slope_vertical_generator for vertical branes")
    k1, k2 = b1.slope, b2.slope
    if k1 == k2:
        raise EqualSlopes("equal slopes need the perturbed complex")
    dk = k2 - k1
    deg = transverse_degree(k1, k2, b1.genus)
    out = []
    for lam in index_box(abs(dk), b1.genus):
        r = frac((lam + b2.b - b1.b) / dk)
        th = frac((-k1 * lam + k2 * b1.b - k1 * b2.b) / dk)
        out.append(FloerGenerator("transverse", tuple(int(x) for x in lam), deg, np.concatenate([r, th])))
    return out


def slope_vertical_generator(b1: Brane, b2: Brane) -> FloerGenerator:
    _same_tau(b1, b2)
    if b1.vertical or not b2.vertical:
        raise ValidationError("expects a finite-slope brane followed by a vertical one")
    r = b2.b
    th = frac(b1.b - b1.slope * b2.b)
    return FloerGenerator("vertical", (), 0, np.concatenate([r, th]))


def perturbed_generators(g: int) -> list[FloerGenerator]:
    """p_delta for delta in {0,1}^g, ordered by degree then lexicographically."""
    deltas = sorted((tuple(int(x) for x in d) for d in index_box(2, g)), key=lambda d: (sum(d), d))
    return [
        FloerGenerator("perturbed", d, sum(d), np.concatenate([np.array(d) / 2.0, np.zeros(g)]))
        for d in deltas
    ]


@dataclass(frozen=True)
class FloerComplex:
    """Generators by degree and the differential blocks d_w: C^w -> C^{w+1}.

    ``differential[w]`` has shape (dim C^{w+1}, dim C^w) with entry [q, p] = <dp, q>.
    """

    g: int
    by_degree: dict[int, list[FloerGenerator]]
    differential: dict[int, np.ndarray]

    def chain_dims(self) -> list[int]:
        return [len(self.by_degree.get(w, [])) for w in range(self.g + 1)]


def zero_complex(g: int) -> FloerComplex:
    return FloerComplex(g, {w: [] for w in range(g + 1)}, {w: np.zeros((0, 0)) for w in range(g)})


def concentrated_complex(g: int, gens: list[FloerGenerator]) -> FloerComplex:
    """Complex with zero differential (transverse or single-point cases)."""
    by_deg: dict[int, list[FloerGenerator]] = {w: [] for w in range(g + 1)}
    for gen in gens:
        by_deg[gen.degree].append(gen)
    diff = {w: np.zeros((len(by_deg[w + 1]), len(by_deg[w])), dtype=complex) for w in range(g)}
    return FloerComplex(g, by_deg, diff)


def bigon_area(tau: SiegelPoint, j: int, epsilon: float, tol: float = 1e-10) -> complex:
    """Integral of omega_tau over the bigon (t, s) -> (r_j = t/2, y_j = s sin(pi t))."""
    coef = (tau.B @ tau.omega_inv)[j, j] + 1j

    def density(s: float, t: float) -> float:
        # dr_j ^ dy_j evaluated on (d/dt, d/ds)
        return 0.5 * math.sin(math.pi * t)

    val, _ = integrate.dblquad(density, 0.0, 1.0, 0.0, 2 * math.pi * epsilon, epsabs=tol, epsrel=tol)
    return coef * val


def connection_correction(tau: SiegelPoint, j: int, epsilon: float, tol: float = 1e-10) -> float:
    """Extra holonomy picked up along the perturbed boundary arc in direction r_j."""
    coef = (tau.B @ tau.omega_inv)[j, j]
    val, _ = integrate.quad(lambda t: math.sin(math.pi * t) * 0.5, 0.0, 1.0, epsabs=tol, epsrel=tol)
    return 2 * math.pi * epsilon * coef * val


def perturbed_complex(
    b1: Brane, b2: Brane, params: PerturbationParams = PerturbationParams(), unit_prefactor: bool = False
) -> FloerComplex:
    _same_tau(b1, b2)
    g = b1.genus
    if b1.slope != b2.slope:
        raise ValidationError("perturbed complex needs equal slopes")
    if wrap_distance(b1.b, b2.b) >= POINT_TOL:
        return zero_complex(g)
    gens = perturbed_generators(g)
    by_deg: dict[int, list[FloerGenerator]] = {w: [x for x in gens if x.degree == w] for w in range(g + 1)}
    da = b2.a - b1.a
    weights = []
    for j in range(g):
        if unit_prefactor:
            pref = 1.0 + 0j
        else:
            area = bigon_area(b1.tau, j, params.epsilon, params.quadrature_tol)
            extra = connection_correction(b1.tau, j, params.epsilon, params.quadrature_tol)
            pref = np.exp(2j * math.pi * (area + extra))
        weights.append(pref * (np.exp(1j * math.pi * da[j]) - np.exp(-1j * math.pi * da[j])))
    diff = {}
    for w in range(g):
        src, dst = by_deg[w], by_deg[w + 1]
        row = {q.key: i for i, q in enumerate(dst)}
        mat = np.zeros((len(dst), len(src)), dtype=complex)
        for col, p in enumerate(src):
            for j in range(g):
                if p.key[j]:
                    continue
                q = p.key[:j] + (1,) + p.key[j + 1 :]
                koszul = sum(p.key[:j])
                mat[row[q], col] = (-1) ** koszul * weights[j]
        diff[w] = mat
    return FloerComplex(g, by_deg, diff)


def _rank(m: np.ndarray, rel: float = 1e-8) -> int:
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > rel * s[0])) if s[0] > 0 else 0


def floer_cohomology_dims(cx: FloerComplex) -> list[int]:
    dims = cx.chain_dims()
    ranks = [_rank(cx.differential[w]) if w in cx.differential else 0 for w in range(cx.g)]
    out = []
    for w in range(cx.g + 1):
        incoming = ranks[w - 1] if w > 0 else 0
        outgoing = ranks[w] if w < cx.g else 0
        out.append(dims[w] - incoming - outgoing)
    return out


def floer_complex(b1: Brane, b2: Brane, params: PerturbationParams = PerturbationParams(), unit_prefactor: bool = False) -> FloerComplex:
    """Morphism complex for any pair of branes."""
    _same_tau(b1, b2)
    g = b1.genus
    if b1.vertical and b2.vertical:
        return perturbed_complex(b1, b2, params, unit_prefactor)
    if not b1.vertical and b2.vertical:
        return concentrated_complex(g, [slope_vertical_generator(b1, b2)])
    if b1.vertical:
        # the single point, seen from the vertical side, sits in top degree
        pt = slope_vertical_generator(b2, b1)
        return concentrated_complex(g, [FloerGenerator("vertical", (), g, pt.coords)])
    if b1.slope == b2.slope:
        return perturbed_complex(b1, b2, params, unit_prefactor)
    return concentrated_complex(g, intersection_points(b1, b2))


def slope_product(k1: int, k2: int, k3: int) -> int:
    return (k2 - k1) * (k3 - k2) * (k3 - k1)


def _s_vector(k1, k2, k3, lam1, lam2, b1, b2, b3, m) -> np.ndarray:
    return (
        (k3 - k2) * (lam1 + b2 - b1)
        - (k2 - k1) * (lam2 + b3 - b2)
        - (k2 - k1) * (k3 - k2) * m
    )


def triangle_area(k1: int, k2: int, k3: int, lambda1: Any, lambda2: Any, b1: Any, b2: Any, b3: Any, m: Any, tau: SiegelPoint) -> complex:
    """Complexified area S_m^T tau S_m / (2P) of the triangle labelled by m."""
    p = slope_product(k1, k2, k3)
    if p <= 0:
        raise InvalidSlopeTriple(f"slope product {p} is not positive")
    s = _s_vector(k1, k2, k3, *(np.asarray(x, dtype=float) for x in (lambda1, lambda2, b1, b2, b3, m)))
    return complex(s @ tau.tau @ s) / (2 * p)


@dataclass(frozen=True)
class Mu2Table:
    """D[l1, l2, l]: mu2(p2(l2), p1(l1)) = sum_l D[l1,l2,l] q(l)."""

    degree: int
    table: np.ndarray
    reason: str = ""


def _triple_slopes(b1: Brane, b2: Brane, b3: Brane) -> tuple[int, int, int]:
    _same_tau(b1, b2, b3)
    if any(x.vertical for x in (b1, b2, b3)):
        raise VerticalSlope("mu2 handles finite slopes; see mu2_vertical")
    k1, k2, k3 = b1.slope, b2.slope, b3.slope
    if len({k1, k2, k3}) < 3:
        raise RepeatedSlopes("products through a perturbed complex are not computed")
    return k1, k2, k3


_MU2_CACHE: dict[tuple, Mu2Table] = {}


def mu2_table(b1: Brane, b2: Brane, b3: Brane, tol: float = 1e-13) -> Mu2Table:
    key = (b1, b2, b3, tol)
    hit = _MU2_CACHE.get(key)
    if hit is None:
        if len(_MU2_CACHE) > 4096:
            _MU2_CACHE.clear()
        hit = _MU2_CACHE[key] = _build_mu2_table(b1, b2, b3, tol)
    return hit


def _build_mu2_table(b1: Brane, b2: Brane, b3: Brane, tol: float) -> Mu2Table:
    k1, k2, k3 = _triple_slopes(b1, b2, b3)
    g = b1.genus
    d12, d23, d13 = abs(k2 - k1), abs(k3 - k2), abs(k3 - k1)
    out_deg = transverse_degree(k1, k3, g)
    p = slope_product(k1, k2, k3)
    if p <= 0:
        deg_in = transverse_degree(k1, k2, g) + transverse_degree(k2, k3, g)
        return Mu2Table(out_deg, np.zeros((d12**g, d23**g, d13**g), dtype=complex),
                        f"input degree {deg_in} cannot land in degree {out_deg}")
    l1 = index_box(d12, g)[:, None, None, :]
    l2 = index_box(d23, g)[None, :, None, :]
    w = index_box(d13, g)[None, None, :, :]
    s = _s_vector(k1, k2, k3, l1, l2, b1.b, b2.b, b3.b, w)
    chars = (-s / p).reshape(-1, g)
    dvec = (b3.a - b2.a) * (k2 - k1) - (b2.a - b1.a) * (k3 - k2)
    vals = theta_batch(b1.tau.scaled(p), chars, np.broadcast_to(dvec, chars.shape), None, tol)
    vals = vals.reshape(d12**g, d23**g, d13**g)
    out_idx = flat_index(l1 + l2 + (k3 - k2) * w, d13)
    table = np.zeros_like(vals)
    i1, i2, _ = np.indices(vals.shape)
    np.add.at(table, (i1, i2, np.broadcast_to(out_idx, vals.shape)), vals)
    return Mu2Table(out_deg, table)


def triangle_sum(b1: Brane, b2: Brane, b3: Brane, tol: float = 1e-13) -> np.ndarray:
    """The same table as :func:`mu2_table`, summed triangle by triangle over m in Z^g.

    Each triangle contributes exp(2 pi i area) times its holonomy; the box over m is
    sized with the Gaussian tail bound in the variable m itself.
    """
    k1, k2, k3 = _triple_slopes(b1, b2, b3)
    p = slope_product(k1, k2, k3)
    if p <= 0:
        raise InvalidSlopeTriple(f"slope product {p} is not positive")
    g = b1.genus
    tau = b1.tau
    d12, d23, d13 = abs(k2 - k1), abs(k3 - k2), abs(k3 - k1)
    step = (k2 - k1) * (k3 - k2)
    # |weight| = exp(-pi S^T Omega S / P) and S is affine in m with slope -step
    lam_eff = tau.lam_min * step * step / p
    radius = 1
    while tail_bound(lam_eff, radius, g) >= tol:
        radius += 1
    dvec = (b3.a - b2.a) * (k2 - k1) - (b2.a - b1.a) * (k3 - k2)
    table = np.zeros((d12**g, d23**g, d13**g), dtype=complex)
    offs = _offsets(2 * radius + 2, g) - radius - 1
    for i1, lam1 in enumerate(index_box(d12, g)):
        for i2, lam2 in enumerate(index_box(d23, g)):
            s0 = _s_vector(k1, k2, k3, lam1, lam2, b1.b, b2.b, b3.b, np.zeros(g))
            m = np.round(s0 / step).astype(np.int64) + offs
            s = s0 - step * m
            weight = np.exp(1j * math.pi * (np.einsum("ng,gh,nh->n", s, tau.tau, s) / p - 2 * (s @ dvec) / p))
            out = flat_index(lam1 + lam2 + (k3 - k2) * m, d13)
            np.add.at(table[i1, i2], out, weight)
    return table


def _dense(e: FloerElement, size: int, k: int, g: int) -> np.ndarray:
    v = np.zeros(size, dtype=complex)
    for key, c in e.coeffs.items():
        v[flat_index(np.asarray(key), k)] += c
    return v


def _sparse(vec: np.ndarray, k: int, g: int) -> dict[Key, complex]:
    return {tuple(int(x) for x in lam): complex(c) for lam, c in zip(index_box(k, g), vec) if c != 0}


def generator_element(b1: Brane, b2: Brane, key: Key, coeff: complex = 1.0) -> FloerElement:
    """A single generator of the transverse complex CF(b1, b2) as an element."""
    k1, k2 = b1.slope, b2.slope
    if k1 == k2:
        raise EqualSlopes("single-generator elements are for transverse pairs")
    return FloerElement(b1, b2, transverse_degree(k1, k2, b1.genus), {tuple(key): complex(coeff)})


def mu2(gen1: FloerElement, gen2: FloerElement, tol: float = 1e-13) -> FloerElement:
    """mu2(gen2, gen1) for gen1 in CF(b1,b2) and gen2 in CF(b2,b3)."""
    b1, b2, b3 = gen1.source, gen1.target, gen2.target
    if gen2.source != b2:
        raise ValidationError("the middle branes of the two inputs differ")
    k1, k2, k3 = _triple_slopes(b1, b2, b3)
    g = b1.genus
    d12, d23, d13 = abs(k2 - k1), abs(k3 - k2), abs(k3 - k1)
    if slope_product(k1, k2, k3) <= 0:
        deg = transverse_degree(k1, k3, g)
        return FloerElement(b1, b3, deg, {}, f"degree {gen1.degree}+{gen2.degree} cannot land in degree {deg}")
    if gen1.is_zero() or gen2.is_zero():
        return FloerElement(b1, b3, transverse_degree(k1, k3, g), {})
    tab = mu2_table(b1, b2, b3, tol)
    v1 = _dense(gen1, d12**g, d12, g)
    v2 = _dense(gen2, d23**g, d23, g)
    out = np.einsum("i,j,ijl->l", v1, v2, tab.table)
    return FloerElement(b1, b3, tab.degree, _sparse(out, d13, g))


def vertical_point(br: Brane) -> np.ndarray:
    """Point z(x) = a(x) - tau b(x) of V_tau mirror to a vertical brane (a(x), b(x)).

    This sign choice is the one under which the closed-form coefficient of
    :func:`mu2_vertical` equals the direct triangle sum.
    """
    return br.a - br.tau.tau @ br.b


def vertical_prefactor(b1: Brane, b2: Brane, bv: Brane) -> complex:
    dk = b2.slope - b1.slope
    bx = bv.b
    expo = 0.5 * dk * (bx @ bv.tau.tau @ bx) - (b2.a - b1.a + dk * bv.a) @ bx
    return complex(np.exp(2j * math.pi * expo))


def mu2_vertical(gen12: FloerElement, genV: FloerElement, tol: float = DEFAULT_TOL) -> FloerElement:
    b1, b2, bv = gen12.source, gen12.target, genV.target
    _same_tau(b1, b2, bv)
    if genV.source != b2 or not bv.vertical:
        raise ValidationError("second input must be a morphism from the middle brane to a vertical brane")
    if b1.vertical or b2.vertical or b1.slope >= b2.slope:
        raise SlopeOrderViolation("needs finite slopes k1 < k2")
    g = b1.genus
    dk = b2.slope - b1.slope
    lams = index_box(dk, g)
    chars = (lams + b2.b - b1.b) / dk
    zx = vertical_point(bv)
    vals = theta_batch(b1.tau.scaled(dk), chars, np.broadcast_to(b2.a - b1.a, chars.shape), dk * zx, tol)
    v = _dense(gen12, dk**g, dk, g)
    coeff = vertical_prefactor(b1, b2, bv) * complex(v @ vals) * genV.coeffs.get((), 0.0)
    return FloerElement(b1, bv, 0, {(): coeff} if coeff != 0 else {})


def vertical_triangle_sum(b1: Brane, b2: Brane, bv: Brane, lam: Any, tol: float = 1e-13) -> complex:
    """Direct sum over the triangles u_m for one generator p(lam) of CF(b1, b2)."""
    g = b1.genus
    dk = b2.slope - b1.slope
    if dk <= 0:
        raise SlopeOrderViolation("needs k1 < k2")
    tau = b1.tau
    base = bv.b - (np.asarray(lam, dtype=float) + b2.b - b1.b) / dk
    radius = 1
    while tail_bound(tau.lam_min * dk, radius, g) >= tol:
        radius += 1
    m = np.round(base).astype(np.int64) + _offsets(2 * radius + 2, g) - radius - 1
    delta = base - m
    hol = b2.a - b1.a + dk * bv.a
    expo = 0.5 * dk * np.einsum("ng,gh,nh->n", delta, tau.tau, delta) - delta @ hol
    return complex(np.exp(2j * math.pi * expo).sum())
