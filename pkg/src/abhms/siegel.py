"""Points of the Siegel upper half space and the modular group actions on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    GenusMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    NotSymplectic,
    NotUnimodular,
    SingularDenominator,
    ValidationError,
)

PD_TOL = 1e-12
SYM_TOL = 1e-13
COND_MAX = 1e14
SP_OMEGA_TOL = 1e-10


def _symmetrized(x: Any, name: str) -> np.ndarray:
    m = np.array(x, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym >= SYM_TOL:
        raise NotSymmetric(f"{name} is not symmetric (max |X - X^T| = {asym:.3e})")
    m = 0.5 * (m + m.T)
    m.setflags(write=False)
    return m


def _pd_margin(omega: np.ndarray, pd_tol: float) -> float:
    """Cholesky gate, then the smallest eigenvalue as the reported margin."""
    try:
        np.linalg.cholesky(omega)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Omega failed the Cholesky test") from None
    lam_min = float(np.linalg.eigvalsh(omega)[0])
    if lam_min <= pd_tol:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam_min:.3e} <= {pd_tol:.1e}")
    return lam_min


@dataclass(frozen=True)
class SiegelPoint:
    """tau = B + i*Omega with B symmetric and Omega symmetric positive definite.

    Build instances through :func:`validate_siegel`; the constructor itself trusts
    its arguments.
    """

    B: np.ndarray
    Omega: np.ndarray
    lam_min: float = field(compare=False)

    @property
    def genus(self) -> int:
        return self.B.shape[0]

    @property
    def tau(self) -> np.ndarray:
        return self.B + 1j * self.Omega

    @property
    def omega_inv(self) -> np.ndarray:
        return np.linalg.inv(self.Omega)

    def scaled(self, k: float) -> "SiegelPoint":
        """The point k*tau for k > 0."""
        if k <= 0:
            raise ValidationError("scale factor must be positive")
        return validate_siegel(k * self.B, k * self.Omega)

    def to_json(self) -> dict:
        return {"g": self.genus, "B": self.B.tolist(), "Omega": self.Omega.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SiegelPoint":
        if "Omega" not in obj:
            raise ValidationError("tau JSON is missing 'Omega'")
        omega = np.array(obj["Omega"], dtype=float)
        b = obj.get("B")
        b = np.zeros_like(omega) if b is None else np.array(b, dtype=float)
        pt = validate_siegel(b, omega)
        if "g" in obj and int(obj["g"]) != pt.genus:
            raise GenusMismatch(f"declared g={obj['g']} but matrices are {pt.genus}x{pt.genus}")
        return pt

    def __hash__(self) -> int:
        return hash((self.B.tobytes(), self.Omega.tobytes()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SiegelPoint):
            return NotImplemented
        return np.array_equal(self.B, other.B) and np.array_equal(self.Omega, other.Omega)


def validate_siegel(B: Any, Omega: Any, pd_tol: float = PD_TOL) -> SiegelPoint:
    b = _symmetrized(B, "B")
    om = _symmetrized(Omega, "Omega")
    if b.shape != om.shape:
        raise GenusMismatch(f"B has shape {b.shape} but Omega has shape {om.shape}")
    lam = _pd_margin(om, pd_tol)
    return SiegelPoint(b, om, lam)


def siegel_from_complex(tau: np.ndarray) -> SiegelPoint:
    return validate_siegel(tau.real, tau.imag)


@dataclass(frozen=True)
class TropicalPoint:
    """A positive definite symmetric Omega, without a B-field."""

    Omega: np.ndarray
    lam_min: float = field(compare=False)

    @property
    def genus(self) -> int:
        return self.Omega.shape[0]


def validate_tropical(Omega: Any, pd_tol: float = PD_TOL) -> TropicalPoint:
    om = _symmetrized(Omega, "Omega")
    return TropicalPoint(om, _pd_margin(om, pd_tol))


def _int_matrix(x: Any, name: str) -> np.ndarray:
    m = np.asarray(x)
    if m.dtype.kind not in "iu":
        mf = np.asarray(m, dtype=float)
        if not np.all(mf == np.round(mf)):
            raise ValidationError(f"{name} must have integer entries")
        m = np.round(mf)
    m = m.astype(np.int64)
    m.setflags(write=False)
    return m


def standard_j(g: int) -> np.ndarray:
    z = np.zeros((g, g), dtype=np.int64)
    i = np.eye(g, dtype=np.int64)
    return np.block([[z, i], [-i, z]])


@dataclass(frozen=True)
class SymplecticIntMatrix:
    """An element of Sp(2g, Z) stored as its four g x g blocks."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def genus(self) -> int:
        return self.A.shape[0]

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def __matmul__(self, other: "SymplecticIntMatrix") -> "SymplecticIntMatrix":
        return symplectic_from_full(self.full @ other.full)

    def __hash__(self) -> int:
        return hash(self.full.tobytes())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymplecticIntMatrix):
            return NotImplemented
        return np.array_equal(self.full, other.full)


def symplectic_from_blocks(A: Any, B: Any, C: Any, D: Any) -> SymplecticIntMatrix:
    blocks = [_int_matrix(x, n) for x, n in zip((A, B, C, D), "ABCD")]
    g = blocks[0].shape[0]
    if any(b.shape != (g, g) for b in blocks):
        raise ValidationError("all four blocks must be g x g")
    m = SymplecticIntMatrix(*blocks)
    full = m.full
    j = standard_j(g)
    # object dtype keeps the check exact even if entries grow large
    lhs = full.astype(object).T @ j.astype(object) @ full.astype(object)
    if np.any(lhs != j):
        raise NotSymplectic("M^T J M != J")
    return m


def symplectic_from_full(M: Any) -> SymplecticIntMatrix:
    m = _int_matrix(M, "M")
    n = m.shape[0]
    if m.ndim != 2 or n != m.shape[1] or n % 2:
        raise ValidationError("symplectic matrix must be 2g x 2g")
    g = n // 2
    return symplectic_from_blocks(m[:g, :g], m[:g, g:], m[g:, :g], m[g:, g:])


def sp_identity(g: int) -> SymplecticIntMatrix:
    i = np.eye(g, dtype=np.int64)
    z = np.zeros((g, g), dtype=np.int64)
    return symplectic_from_blocks(i, z, z, i)


def sp_j(g: int) -> SymplecticIntMatrix:
    """The inversion tau -> -tau^{-1}."""
    i = np.eye(g, dtype=np.int64)
    z = np.zeros((g, g), dtype=np.int64)
    return symplectic_from_blocks(z, -i, i, z)


def sp_act(M: SymplecticIntMatrix, tau: SiegelPoint) -> SiegelPoint:
    """(A tau + B)(C tau + D)^{-1}."""
    if M.genus != tau.genus:
        raise GenusMismatch(f"matrix genus {M.genus} != point genus {tau.genus}")
    t = tau.tau
    num = M.A @ t + M.B
    den = M.C @ t + M.D
    if np.linalg.cond(den) > COND_MAX:
        raise SingularDenominator("C tau + D is numerically singular")
    # X = num den^{-1}  <=>  den^T X^T = num^T
    out = np.linalg.solve(den.T, num.T).T
    return siegel_from_complex(_force_symmetric(out))


def _force_symmetric(x: np.ndarray) -> np.ndarray:
    # exact result is symmetric, so only roundoff is removed here
    return 0.5 * (x + x.T)


@dataclass(frozen=True)
class ParabolicElement:
    """Upper block-triangular element (A, B; 0, A^{-T}) of Sp(2g, Z)."""

    A: np.ndarray
    B: np.ndarray

    @property
    def genus(self) -> int:
        return self.A.shape[0]

    def embed(self) -> SymplecticIntMatrix:
        d = np.round(np.linalg.inv(self.A).T).astype(np.int64)
        z = np.zeros_like(self.A)
        return symplectic_from_blocks(self.A, self.B, z, d)


def validate_parabolic(A: Any, B: Any) -> ParabolicElement:
    a = _int_matrix(A, "A")
    b = _int_matrix(B, "B")
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("A and B must be square of the same size")
    _check_unimodular(a)
    ao, bo = a.astype(object), b.astype(object)
    if np.any(ao @ bo.T != bo @ ao.T):
        raise NotSymplectic("A B^T != B A^T")
    return ParabolicElement(a, b)


def _check_unimodular(a: np.ndarray) -> None:
    if abs(round(np.linalg.det(a))) != 1 or abs(abs(np.linalg.det(a)) - 1) > 1e-9:
        raise NotUnimodular("|det A| must be 1")


def parabolic_act(P: ParabolicElement, tau: SiegelPoint) -> SiegelPoint:
    """(A tau + B) A^T; its imaginary part is A Omega A^T."""
    if P.genus != tau.genus:
        raise GenusMismatch(f"element genus {P.genus} != point genus {tau.genus}")
    out = (P.A @ tau.tau + P.B) @ P.A.T
    return siegel_from_complex(_force_symmetric(out))


def gl_act(A: Any, Omega: TropicalPoint) -> TropicalPoint:
    a = _int_matrix(A, "A")
    if a.shape != Omega.Omega.shape:
        raise GenusMismatch("A and Omega sizes differ")
    _check_unimodular(a)
    out = a @ Omega.Omega @ a.T
    return validate_tropical(_force_symmetric(out))


def is_sp_omega(M: Any, Omega: TropicalPoint, tol: float = SP_OMEGA_TOL) -> bool:
    """Membership in the integral group preserving the Omega-twisted pairing."""
    m = _int_matrix(M, "M").astype(float)
    g = Omega.genus
    if m.shape != (2 * g, 2 * g):
        raise GenusMismatch("M must be 2g x 2g for the given Omega")
    a, b, c, d = m[:g, :g], m[:g, g:], m[g:, :g], m[g:, g:]
    om = Omega.Omega
    checks = (
        a.T @ om @ d - c.T @ om @ b - om,
        a.T @ om @ c - c.T @ om @ a,
        b.T @ om @ d - d.T @ om @ b,
    )
    return all(float(np.max(np.abs(x))) <= tol for x in checks)


def random_siegel(rng: np.random.Generator, g: int, eig_range: tuple[float, float] = (0.8, 3.0)) -> SiegelPoint:
    """B uniform in [-1,1], Omega = Q D Q^T with Haar-ish Q and D in eig_range."""
    b = rng.uniform(-1.0, 1.0, size=(g, g))
    b = 0.5 * (b + b.T)
    q, r = np.linalg.qr(rng.standard_normal((g, g)))
    q = q * np.sign(np.diag(r))
    d = rng.uniform(*eig_range, size=g)
    om = (q * d) @ q.T
    return validate_siegel(b, 0.5 * (om + om.T))


def sp_generators(g: int) -> list[SymplecticIntMatrix]:
    """Translations by elementary symmetric matrices, elementary GL moves and J."""
    gens = [sp_j(g)]
    i = np.eye(g, dtype=np.int64)
    z = np.zeros((g, g), dtype=np.int64)
    for p in range(g):
        for q in range(p, g):
            s = np.zeros((g, g), dtype=np.int64)
            s[p, q] = s[q, p] = 1
            gens.append(symplectic_from_blocks(i, s, z, i))
    for p in range(g):
        for q in range(g):
            if p != q:
                e = i.copy()
                e[p, q] = 1
                gens.append(ParabolicElement(e, z).embed())
    return gens
