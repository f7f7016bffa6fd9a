"""Mirror functor on generators and numerical checks of the mirror identities."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import aside, bside
from .aside import INFINITY, Brane, FloerElement, PerturbationParams
from .bside import LineBundleLabel, SectionVector, TorusPoint
from .errors import EqualSlopes, SlopeOrderViolation, ValidationError
from .siegel import SiegelPoint

DEN_FLOOR = 1e-30
# A degree-g generator p(lam) of CF(l1, l2), k1 > k2, is the point that CF(l2, l1)
# labels by -lam; it goes to the dual of that section (see the notes in README).
DUAL_INDEX_SIGN = -1


@dataclass(frozen=True)
class MirrorAssignment:
    """A brane and the B-side object it corresponds to.

    Finite slopes map to line bundles L_{k,[a + tau b]}; vertical branes map to the
    skyscraper at the torus point stored in ``point``.
    """

    brane: Brane
    label: LineBundleLabel | None
    point: TorusPoint | None


def assign(br: Brane) -> MirrorAssignment:
    tp = TorusPoint(br.tau, br.a, br.b)
    if br.vertical:
        return MirrorAssignment(br, None, tp)
    return MirrorAssignment(br, LineBundleLabel(br.slope, tp), None)


def unassign(m: MirrorAssignment) -> Brane:
    if m.label is not None:
        t = m.label.translate
        return Brane(t.tau, m.label.level, t.b, t.a)
    t = m.point
    return Brane(t.tau, INFINITY, t.b, t.a)


def _phi1_data(b1: Brane, b2: Brane) -> tuple[int, bool, bside.Rebase, int]:
    if b1.vertical or b2.vertical:
        raise ValidationError("phi1 is defined between finite-slope branes")
    k1, k2 = b1.slope, b2.slope
    if k1 == k2:
        raise EqualSlopes("phi1 needs distinct slopes")
    if k1 < k2:
        k, dual, sign = k2 - k1, False, 1
        rb = bside.rebase(k, b2.b - b1.b, b2.a - b1.a)
    else:
        k, dual, sign = k1 - k2, True, DUAL_INDEX_SIGN
        rb = bside.rebase(k, b1.b - b2.b, b1.a - b2.a)
    return k, dual, rb, sign


def phi1(gen: FloerElement) -> SectionVector:
    """p(lam) -> s_{k2-k1, z2-z1, lam} for k1 < k2, and to a dual class for k1 > k2.

    Raw translates z2 - z1 are moved to their canonical form, which multiplies
    coefficients by the phases of :func:`bside.rebase`.
    """
    b1, b2 = gen.source, gen.target
    k, dual, rb, sign = _phi1_data(b1, b2)
    g = b1.genus
    raw = np.zeros(k**g, dtype=complex)
    for key, c in gen.coeffs.items():
        raw[bside.flat_index(sign * np.asarray(key), k)] += c
    coeffs = bside.apply_rebase(rb, raw, dual)
    return SectionVector(LineBundleLabel(k, TorusPoint(b1.tau, rb.d, rb.c)), dual, coeffs)


def phi1_inverse(s: SectionVector, b1: Brane, b2: Brane) -> FloerElement:
    k, dual, rb, sign = _phi1_data(b1, b2)
    g = b1.genus
    if k != s.label.level or dual != s.dual:
        raise ValidationError("section does not live in the mirror of CF(b1, b2)")
    s = bside.express_on(s, TorusPoint(b1.tau, rb.d, rb.c))
    factor = rb.phase if dual else 1.0 / rb.phase
    raw = factor * s.coeffs[rb.perm]
    lams = bside.index_box(k, g)
    coeffs = {}
    for lam, c in zip(lams, raw):
        if c != 0:
            key = tuple(int(x) for x in np.mod(sign * lam, k))
            coeffs[key] = complex(c)
    return FloerElement(b1, b2, aside.transverse_degree(b1.slope, b2.slope, g), coeffs)


@dataclass(frozen=True)
class VerificationReport:
    scenario: str
    g: int
    params: dict
    max_residual: float
    tol: float
    passed: bool
    seconds: float = field(default=0.0, compare=False)

    def to_json(self, with_timing: bool = True) -> dict:
        return {
            "scenario": self.scenario,
            "g": self.g,
            "params": self.params,
            "max_residual": self.max_residual,
            "tol": self.tol,
            "pass": self.passed,
            "seconds": round(self.seconds, 6) if with_timing else 0.0,
        }


def _report(scenario: str, g: int, params: dict, residual: float, tol: float, t0: float) -> VerificationReport:
    residual = float(residual)
    return VerificationReport(scenario, g, params, residual, tol, bool(residual < tol), time.perf_counter() - t0)


def _rel_residual(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b), initial=0.0) / max(float(np.max(np.abs(b), initial=0.0)), DEN_FLOOR))


def _brane_params(branes: list[Brane]) -> dict:
    return {"branes": [br.to_json() for br in branes]}


def product_pattern(k1: int, k2: int, k3: int) -> str:
    if k1 < k2 < k3:
        return "tensor"
    if k2 < k3 < k1:
        return "dual-right"
    if k3 < k1 < k2:
        return "dual-left"
    return "degree-mismatch"


def mirror_product(s2: SectionVector, s1: SectionVector, pattern: str) -> SectionVector:
    """B-side counterpart of mu2(p2, p1) for the given degree pattern."""
    if pattern == "tensor":
        return bside.multiply_sections(s2, s1)
    if pattern == "dual-right":
        return bside.serre_dual_product(s2, s1)
    if pattern == "dual-left":
        return bside.serre_dual_product(s1, s2)
    raise ValidationError(f"no B-side product for pattern {pattern}")


def phi1_matrix(b1: Brane, b2: Brane, target: TorusPoint | None = None) -> tuple[np.ndarray, SectionVector]:
    """Columns are phi1 of the generators of CF(b1, b2), optionally moved onto ``target``.

    Also returns the image of the first generator, which carries the label.
    """
    g = b1.genus
    k = abs(b2.slope - b1.slope)
    cols = []
    first = None
    for key in map(tuple, bside.index_box(k, g)):
        s = phi1(aside.generator_element(b1, b2, key))
        if target is not None:
            s = bside.express_on(s, target)
        first = first or s
        cols.append(s.coeffs)
    return np.stack(cols, axis=1), first


def _product_tensor(s2: SectionVector, s1: SectionVector, pattern: str) -> tuple[np.ndarray, TorusPoint]:
    """T[j1, j2, out] with mirror_product(basis_j2, basis_j1) = T[j1, j2, :]."""
    tau = s1.label.tau
    l1, l2 = s1.label, s2.label
    if pattern == "tensor":
        table, t = bside.product_tensor(tau, l2.level, l2.translate, l1.level, l1.translate)
        return np.transpose(table, (1, 0, 2)), t
    if pattern == "dual-right":
        table, t = bside.dual_product_table(tau, l2.level, l2.translate, l1.level, l1.translate)
        return np.transpose(table, (1, 0, 2)), t
    if pattern == "dual-left":
        return bside.dual_product_table(tau, l1.level, l1.translate, l2.level, l2.translate)
    raise ValidationError(f"no B-side product for pattern {pattern}")


def verify_product(tau: SiegelPoint, branes: list[Brane], tol: float = 1e-8) -> VerificationReport:
    """Max over generator pairs of the relative gap between phi1(mu2) and the B-side product.

    Everything is bilinear, so the check is done on whole tables at once.
    """
    t0 = time.perf_counter()
    b1, b2, b3 = branes
    k1, k2, k3 = b1.slope, b2.slope, b3.slope
    pattern = product_pattern(k1, k2, k3)
    params = {"slopes": [k1, k2, k3], "pattern": pattern, **_brane_params(branes)}
    if pattern == "degree-mismatch":
        raise aside.InvalidSlopeTriple(f"slopes {k1},{k2},{k3} have non-positive product")
    m12, s1 = phi1_matrix(b1, b2)
    m23, s2 = phi1_matrix(b2, b3)
    prod, t = _product_tensor(s2, s1, pattern)
    b_side = np.einsum("ai,bj,abo->ijo", m12, m23, prod)
    m13, _ = phi1_matrix(b1, b3, t)
    a_side = np.einsum("ijl,ol->ijo", aside.mu2_table(b1, b2, b3).table, m13)
    gap = np.max(np.abs(a_side - b_side), axis=2)
    scale = np.maximum(np.max(np.abs(b_side), axis=2), DEN_FLOOR)
    return _report("product", tau.genus, params, float(np.max(gap / scale)), tol, t0)


def verify_product_elementwise(tau: SiegelPoint, branes: list[Brane], tol: float = 1e-8) -> VerificationReport:
    """Same check as :func:`verify_product`, one generator pair at a time through mu2 and phi1."""
    t0 = time.perf_counter()
    b1, b2, b3 = branes
    k1, k2, k3 = b1.slope, b2.slope, b3.slope
    pattern = product_pattern(k1, k2, k3)
    params = {"slopes": [k1, k2, k3], "pattern": pattern, **_brane_params(branes)}
    if pattern == "degree-mismatch":
        raise aside.InvalidSlopeTriple(f"slopes {k1},{k2},{k3} have non-positive product")
    g = tau.genus
    worst = 0.0
    s2s = {}
    for key1 in map(tuple, bside.index_box(abs(k2 - k1), g)):
        e1 = aside.generator_element(b1, b2, key1)
        s1 = phi1(e1)
        for key2 in map(tuple, bside.index_box(abs(k3 - k2), g)):
            e2 = aside.generator_element(b2, b3, key2)
            if key2 not in s2s:
                s2s[key2] = phi1(e2)
            a_side = phi1(aside.mu2(e1, e2))
            b_side = mirror_product(s2s[key2], s1, pattern)
            a_side = bside.express_on(a_side, b_side.label.translate)
            worst = max(worst, _rel_residual(a_side.coeffs, b_side.coeffs))
    return _report("product", g, params, worst, tol, t0)


def skyscraper_dims(g: int, to_vertical: bool) -> list[int]:
    out = [0] * (g + 1)
    out[0 if to_vertical else g] = 1
    return out


def ext_for(b1: Brane, b2: Brane) -> list[int]:
    """Dimensions of Ext between the mirror B-side objects."""
    g = b1.genus
    m1, m2 = assign(b1), assign(b2)
    if b1.vertical and b2.vertical:
        same = m1.point.equals(m2.point)
        return [math.comb(g, w) if same else 0 for w in range(g + 1)]
    if b2.vertical:
        return skyscraper_dims(g, True)
    if b1.vertical:
        return skyscraper_dims(g, False)
    return bside.ext_dims(b1.slope, b2.slope, m1.label.translate, m2.label.translate, g)


def pair_kind(b1: Brane, b2: Brane) -> str:
    if b1.vertical and b2.vertical:
        return "vertical-vertical"
    if b1.vertical or b2.vertical:
        return "slope-vertical" if b2.vertical else "vertical-slope"
    return "equal-slopes" if b1.slope == b2.slope else "distinct-slopes"


def verify_dims(
    tau: SiegelPoint, b1: Brane, b2: Brane, tol: float = 0.5, params: PerturbationParams = PerturbationParams()
) -> VerificationReport:
    """Integer comparison; the residual is the l1 distance of the two dimension vectors."""
    t0 = time.perf_counter()
    hf = aside.floer_cohomology_dims(aside.floer_complex(b1, b2, params))
    ext = ext_for(b1, b2)
    residual = float(sum(abs(x - y) for x, y in zip(hf, ext)))
    info = {"kind": pair_kind(b1, b2), "hf": hf, "ext": ext, **_brane_params([b1, b2])}
    return _report("dims", tau.genus, info, residual, tol, t0)


@dataclass(frozen=True)
class SeidelRingResult:
    report: VerificationReport
    floer_table: dict[tuple[int, int], np.ndarray]
    section_table: dict[tuple[int, int], np.ndarray]
    commutativity_residual: float


def seidel_ring(tau: SiegelPoint, k_max: int, tol: float = 1e-8) -> SeidelRingResult:
    """Compare mu2 on the chain l_0 -> l_k -> l_{k+k'} with the ring of sections.

    ``floer_table[(k, k')][l1, l2, l]`` is mu2(p(l2), p(l1)) for p(l1) in HF(l_0, l_k)
    and p(l2) in HF(l_k, l_{k+k'}) identified with HF(l_0, l_{k'}).
    """
    t0 = time.perf_counter()
    if k_max < 2:
        raise ValidationError("k_max must be at least 2")
    g = tau.genus
    zero = np.zeros(g)
    ell = {k: aside.brane(tau, k, zero, zero) for k in range(k_max + 1)}
    floer = {}
    for k in range(1, k_max):
        for kp in range(1, k_max - k + 1):
            floer[(k, kp)] = aside.mu2_table(ell[0], ell[k], ell[k + kp]).table
    sections = bside.ring_table(tau, k_max)
    worst = 0.0
    for (k, kp), tab in floer.items():
        # phi1 is the identity on indices here since all translates vanish
        worst = max(worst, _rel_residual(tab, np.transpose(sections[(kp, k)], (1, 0, 2))))
    comm = 0.0
    for (k, kp), tab in floer.items():
        comm = max(comm, _rel_residual(tab, np.transpose(floer[(kp, k)], (1, 0, 2))))
    report = _report("ring", g, {"k_max": k_max, "commutativity_residual": comm}, max(worst, comm), tol, t0)
    return SeidelRingResult(report, floer, sections, comm)


def verify_vertical(
    tau: SiegelPoint, b1: Brane, b2: Brane, bv: Brane, tol: float = 1e-9
) -> VerificationReport:
    """Closed-form vertical product against evaluation of the mirror section and the triangle sum."""
    t0 = time.perf_counter()
    if b1.slope >= b2.slope:
        raise SlopeOrderViolation("needs k1 < k2")
    g = tau.genus
    dk = b2.slope - b1.slope
    zx = aside.vertical_point(bv)
    pref = aside.vertical_prefactor(b1, b2, bv)
    unit = FloerElement(b2, bv, 0, {(): 1.0})
    closed, via_section, via_sum = [], [], []
    for key in map(tuple, bside.index_box(dk, g)):
        e = aside.generator_element(b1, b2, key)
        closed.append(aside.mu2_vertical(e, unit).coeffs.get((), 0j))
        via_section.append(pref * bside.section_vector_value(phi1(e), zx, tol=1e-14))
        via_sum.append(aside.vertical_triangle_sum(b1, b2, bv, key))
    closed_a, sec_a, sum_a = map(np.array, (closed, via_section, via_sum))
    residual = max(_rel_residual(closed_a, sec_a), _rel_residual(sum_a, sec_a))
    params = {"slopes": [b1.slope, b2.slope], **_brane_params([b1, b2, bv])}
    return _report("vertical", g, params, residual, tol, t0)


def cohomology_report(
    tau: SiegelPoint, b1: Brane, b2: Brane, params: PerturbationParams = PerturbationParams(), tol: float = 1e-12
) -> VerificationReport:
    """d^2 = 0, expected ranks, and rank invariance under the unit prefactor."""
    t0 = time.perf_counter()
    g = tau.genus
    cx = aside.perturbed_complex(b1, b2, params)
    unit = aside.perturbed_complex(b1, b2, params, unit_prefactor=True)
    d2 = 0.0
    for w in range(g - 1):
        if cx.differential[w].size and cx.differential[w + 1].size:
            d2 = max(d2, float(np.max(np.abs(cx.differential[w + 1] @ cx.differential[w]))))
    dims = aside.floer_cohomology_dims(cx)
    dims_unit = aside.floer_cohomology_dims(unit)
    expected = ext_for(b1, b2)
    ok = dims == expected and dims_unit == expected
    # a rank mismatch is reported as residual 1, far above any d^2 tolerance
    residual = d2 if ok else max(d2, 1.0)
    info = {"dims": dims, "dims_unit_prefactor": dims_unit, "expected": expected, "d2": d2,
            "epsilon": params.epsilon, **_brane_params([b1, b2])}
    return _report("cohomology", g, info, residual, tol, t0)
