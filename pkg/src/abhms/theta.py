"""Riemann theta functions with real characteristics.

Everything is evaluated in the additive variable z (never through x = exp(2 pi i z)),

    theta[c, d](tau, z) = sum_n exp(pi i (n+c)^T tau (n+c) + 2 pi i (n+c)^T (z+d)),

truncated to a lattice box whose size is certified by a Gaussian tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import BoxTooLarge, ValidationError
from .siegel import SiegelPoint

DEFAULT_TOL = 1e-12
TERM_CAP = 10**8
_CHUNK = 1 << 18


@dataclass(frozen=True)
class ThetaChar:
    c: np.ndarray
    d: np.ndarray

    @classmethod
    def of(cls, c: Any, d: Any) -> "ThetaChar":
        cc = np.atleast_1d(np.asarray(c, dtype=float))
        dd = np.atleast_1d(np.asarray(d, dtype=float))
        if cc.shape != dd.shape or cc.ndim != 1:
            raise ValidationError("characteristic vectors must be 1-d of equal length")
        if not (np.all(np.isfinite(cc)) and np.all(np.isfinite(dd))):
            raise ValidationError("characteristic has non-finite entries")
        return cls(cc, dd)

    @classmethod
    def zero(cls, g: int) -> "ThetaChar":
        return cls(np.zeros(g), np.zeros(g))


@dataclass(frozen=True)
class ThetaRequest:
    tau: SiegelPoint
    z: np.ndarray
    char: ThetaChar
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        if z.shape != (self.tau.genus,) or self.char.c.shape != (self.tau.genus,):
            raise ValidationError("z and characteristic must have length g")
        if not np.all(np.isfinite(z)):
            raise ValidationError("z has non-finite entries")
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class LatticeBox:
    """Indices n with lo_j <= n_j <= lo_j + 2R, a superset of |n_j - center_j| <= R."""

    center: np.ndarray
    radius: int
    lo: np.ndarray

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def terms(self) -> int:
        return self.side ** len(self.lo)


def tail_bound(lam_min: float, radius: int, g: int) -> float:
    """Bound on sum over n outside the box of exp(-pi lam |n - x|^2), any real x."""
    q = math.exp(-math.pi * lam_min * radius * radius)
    outside = 2.0 * q / (1.0 - math.exp(-2.0 * math.pi * lam_min * radius))
    full = 1.0 + 1.0 / math.sqrt(lam_min)
    return g * outside * full ** (g - 1)


def _peak(tau: SiegelPoint, c: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lattice center -c - Omega^{-1} y and the peak log-modulus pi y^T Omega^{-1} y.

    Works on stacked rows: c and y have shape (N, g).
    """
    shift = np.linalg.solve(tau.Omega, y.T).T
    log_peak = math.pi * np.einsum("ng,ng->n", y, shift)
    return -c - shift, log_peak


def _radius_for(tau: SiegelPoint, log_peak: float, tol: float, cap: int) -> int:
    g = tau.genus
    lam = tau.lam_min
    r = 1
    while True:
        if (2 * r + 1) ** g > cap:
            raise BoxTooLarge(
                f"tolerance {tol:.1e} needs more than {cap} lattice terms (lambda_min={lam:.3e})"
            )
        b = tail_bound(lam, r, g)
        if b == 0.0 or math.log(b) + log_peak < math.log(tol):
            return r
        r += 1


def truncation_radius(
    tau: SiegelPoint, char: ThetaChar, z: Any, tol: float = DEFAULT_TOL, cap: int = TERM_CAP
) -> LatticeBox:
    if not tol > 0:
        raise ValidationError("tol must be positive")
    y = np.atleast_1d(np.asarray(z, dtype=complex)).imag
    center, log_peak = _peak(tau, char.c[None, :], y[None, :])
    r = _radius_for(tau, float(log_peak[0]), tol, cap)
    lo = np.ceil(center[0] - r).astype(np.int64)
    return LatticeBox(center[0], r, lo)


def _offsets(side: int, g: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Lexicographic block of {0..side-1}^g, rows start..stop."""
    total = side**g
    stop = total if stop is None else min(stop, total)
    flat = np.arange(start, stop, dtype=np.int64)
    out = np.empty((flat.size, g), dtype=np.int64)
    for j in range(g - 1, -1, -1):
        out[:, j] = flat % side
        flat = flat // side
    return out


def _terms(tau: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """exp(pi i v^T tau v + 2 pi i v^T w) over the last axis of v."""
    quad = np.einsum("...g,gh,...h->...", v, tau, v)
    lin = np.einsum("...g,...g->...", v, w)
    return np.exp(1j * math.pi * (quad + 2.0 * lin))


def theta_eval(req: ThetaRequest, compensated: bool = False, cap: int = TERM_CAP) -> complex:
    box = truncation_radius(req.tau, req.char, req.z, req.tol, cap)
    return _sum_box(req, box, compensated)


def theta_eval_with_box(
    req: ThetaRequest, compensated: bool = False, cap: int = TERM_CAP
) -> tuple[complex, LatticeBox]:
    box = truncation_radius(req.tau, req.char, req.z, req.tol, cap)
    return _sum_box(req, box, compensated), box


def _sum_box(req: ThetaRequest, box: LatticeBox, compensated: bool) -> complex:
    g = req.tau.genus
    t = req.tau.tau
    w = req.z + req.char.d
    re_parts: list[float] = []
    im_parts: list[float] = []
    acc = 0j
    for start in range(0, box.terms, _CHUNK):
        v = box.lo + _offsets(box.side, g, start, start + _CHUNK) + req.char.c
        vals = _terms(t, v, w)
        if compensated:
            re_parts.extend(vals.real.tolist())
            im_parts.extend(vals.imag.tolist())
        else:
            acc += vals.sum()
    if compensated:
        return complex(math.fsum(re_parts), math.fsum(im_parts))
    return complex(acc)


def theta(tau: SiegelPoint, z: Any, c: Any = None, d: Any = None, tol: float = DEFAULT_TOL) -> complex:
    """Convenience wrapper around :func:`theta_eval`."""
    g = tau.genus
    char = ThetaChar.of(np.zeros(g) if c is None else c, np.zeros(g) if d is None else d)
    return theta_eval(ThetaRequest(tau, np.asarray(z, dtype=complex), char, tol))


def theta_batch(
    tau: SiegelPoint, c: Any, d: Any, z: Any = None, tol: float = DEFAULT_TOL, cap: int = TERM_CAP
) -> np.ndarray:
    """Many theta values sharing one modulus.

    c, d have shape (N, g); z is (N, g), (g,) or None for zero. Each row gets a box
    of the common radius needed by the worst row, so one vectorized pass suffices.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    d = np.atleast_2d(np.asarray(d, dtype=float))
    n, g = c.shape
    if n == 0:
        return np.zeros(0, dtype=complex)
    zz = np.zeros((n, g), dtype=complex) if z is None else np.broadcast_to(np.asarray(z, dtype=complex), (n, g))
    # integer parts of c are invisible to the series, so drop them to keep boxes tight
    c = c - np.floor(c)
    center, log_peak = _peak(tau, c, zz.imag)
    r = _radius_for(tau, float(np.max(log_peak)), tol, cap)
    side = 2 * r + 1
    if n * side**g > 50 * _CHUNK:
        return np.array([_sum_box(ThetaRequest(tau, zz[i], ThetaChar(c[i], d[i]), tol),
                                  LatticeBox(center[i], r, np.ceil(center[i] - r).astype(np.int64)), False)
                         for i in range(n)])
    lo = np.ceil(center - r)
    v = lo[:, None, :] + _offsets(side, g)[None, :, :] + c[:, None, :]
    vals = _terms(tau.tau, v, (zz + d)[:, None, :])
    return vals.sum(axis=1)


def integral_shift_factor(char: ThetaChar, dc: Any, dd: Any) -> complex:
    """theta[c+dc, d+dd] = factor * theta[c, d] for integer dc, dd; factor = e^{2 pi i c.dd}."""
    dc = np.asarray(dc)
    dd = np.asarray(dd)
    if not (np.all(dc == np.round(dc)) and np.all(dd == np.round(dd))):
        raise ValidationError("shifts must be integer vectors")
    return complex(np.exp(2j * math.pi * float(char.c @ dd)))


def automorphy_factor(tau: SiegelPoint, z: Any, char: ThetaChar, a: Any, b: Any) -> complex:
    """Multiplier relating theta at z + a + tau b to theta at z."""
    z = np.asarray(z, dtype=complex)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    expo = (char.c @ a - char.d @ b) - 0.5 * (b @ tau.tau @ b) - b @ z
    return complex(np.exp(2j * math.pi * expo))


def quasiperiodicity_residual(
    tau: SiegelPoint, z: Any, char: ThetaChar, a: Any, b: Any, tol: float = DEFAULT_TOL
) -> float:
    """Residual of the quasi-periodicity law for an integer shift (a, b).

    Both sides are divided by max(1, |multiplier|) so the number is an absolute
    error on the scale of the unshifted value; for b = 0 it is plainly absolute.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if not (np.all(a == np.round(a)) and np.all(b == np.round(b))):
        raise ValidationError("a and b must be integer vectors")
    z = np.asarray(z, dtype=complex)
    if not np.any(a) and not np.any(b):
        return 0.0
    fac = automorphy_factor(tau, z, char, a, b)
    scale = max(1.0, abs(fac))
    shifted = z + a + tau.tau @ b
    lhs = theta_eval(ThetaRequest(tau, shifted, char, tol * scale))
    rhs = fac * theta_eval(ThetaRequest(tau, z, char, tol))
    return abs(lhs - rhs) / scale
