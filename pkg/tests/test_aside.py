import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abhms import aside
from abhms.aside import (
    INFINITY,
    PerturbationParams,
    brane,
    floer_cohomology_dims,
    floer_complex,
    generator_element,
    intersection_points,
    mu2,
    mu2_table,
    mu2_vertical,
    perturbed_complex,
    slope_vertical_generator,
    triangle_area,
    triangle_sum,
    vertical_triangle_sum,
)
from abhms.errors import (
    EqualSlopes,
    InvalidSlopeTriple,
    ModulusMismatch,
    RepeatedSlopes,
    SlopeOrderViolation,
    ValidationError,
    VerticalSlope,
)
from abhms.siegel import random_siegel, validate_siegel
from abhms.theta import theta
from oracles import brute_rank, count_intersections

TAU_I = validate_siegel([[0.0]], [[1.0]])


def _eye(g):
    return validate_siegel(np.zeros((g, g)), np.eye(g))


def test_intersection_examples():
    tau = _eye(2)
    pts = intersection_points(brane(tau, 0, [0, 0], [0, 0]), brane(tau, 3, [0, 0], [0, 0]))
    assert sorted(p.key for p in pts) == list(itertools.product(range(3), repeat=2))
    (p,) = intersection_points(brane(TAU_I, 0, [0], [0]), brane(TAU_I, 1, [0], [0]))
    assert np.allclose(p.coords, 0) and p.degree == 0
    pts = intersection_points(brane(TAU_I, 2, [0], [0]), brane(TAU_I, 0, [0], [0]))
    assert len(pts) == 2 and all(p.degree == 1 for p in pts)


@settings(max_examples=40, deadline=None)
@given(k1=st.integers(-3, 3), k2=st.integers(-3, 3), g=st.integers(1, 2), seed=st.integers(0, 2**32 - 1))
def test_intersections_lie_on_both_branes(k1, k2, g, seed):
    if k1 == k2:
        return
    rng = np.random.default_rng(seed)
    tau = random_siegel(rng, g)
    b1, b2 = brane(tau, k1, rng.random(g), rng.random(g)), brane(tau, k2, rng.random(g), rng.random(g))
    pts = intersection_points(b1, b2)
    assert len(pts) == count_intersections(k1, k2, g)
    seen = set()
    for p in pts:
        r, th = p.coords[:g], p.coords[g:]
        for br in (b1, b2):
            resid = th - (br.b - br.slope * r)
            assert np.max(np.abs(resid - np.round(resid))) < 1e-12
        seen.add(tuple(np.round(p.coords, 9)))
    assert len(seen) == len(pts)


def test_intersection_errors():
    b = brane(TAU_I, 1, [0], [0])
    with pytest.raises(EqualSlopes):
        intersection_points(b, b)
    with pytest.raises(VerticalSlope):
        intersection_points(b, brane(TAU_I, INFINITY, [0], [0]))
    with pytest.raises(ModulusMismatch):
        intersection_points(b, brane(_eye(1).scaled(2), 0, [0], [0]))
    with pytest.raises(ValidationError):
        brane(TAU_I, 1.5, [0], [0])


def test_slope_vertical_examples():
    p = slope_vertical_generator(brane(TAU_I, 0, [0], [0]), brane(TAU_I, INFINITY, [0], [0]))
    assert np.allclose(p.coords, 0) and p.degree == 0
    p = slope_vertical_generator(brane(TAU_I, 2, [0], [0.5]), brane(TAU_I, INFINITY, [0], [0.25]))
    assert np.allclose(p.coords, [0.25, 0.0])
    cx = floer_complex(brane(TAU_I, INFINITY, [0], [0.1]), brane(TAU_I, INFINITY, [0], [0.2]))
    assert cx.chain_dims() == [0, 0]


def test_perturbed_g1_cases():
    b1 = brane(TAU_I, 1, [0.3], [0.2])
    cx = perturbed_complex(b1, brane(TAU_I, 1, [0.3], [0.2]))
    assert not np.any(cx.differential[0]) and floer_cohomology_dims(cx) == [1, 1]
    cx = perturbed_complex(b1, brane(TAU_I, 1, [0.8], [0.2]))
    assert cx.differential[0].shape == (1, 1) and abs(cx.differential[0][0, 0]) > 1
    assert floer_cohomology_dims(cx) == [0, 0]


def test_perturbed_weights_closed_form():
    # weight_J = exp(2 pi i (A + A')) (e^{i pi da} - e^{-i pi da}), A + A' = 2 eps (2 (B Omega^-1)_JJ + i)
    tau = random_siegel(np.random.default_rng(4), 1)
    eps = 0.02
    da = 0.3
    cx = perturbed_complex(brane(tau, 0, [0.0], [0.1]), brane(tau, 0, [da], [0.1]), PerturbationParams(eps))
    bw = (tau.B @ tau.omega_inv)[0, 0]
    expect = np.exp(2j * math.pi * 2 * eps * (2 * bw + 1j)) * 2j * math.sin(math.pi * da)
    assert abs(cx.differential[0][0, 0] - expect) < 1e-12


def test_bigon_area_positive_imaginary(tau_g12):
    for j in range(tau_g12.genus):
        area = aside.bigon_area(tau_g12, j, 0.01)
        assert area.imag == pytest.approx(2 * 0.01, rel=1e-10)


@pytest.mark.parametrize("g", [1, 2, 3])
def test_d_squared_and_ranks(g):
    rng = np.random.default_rng(100 + g)
    for trial in range(8):
        tau = random_siegel(rng, g)
        a1, b = rng.random(g), rng.random(g)
        a2 = a1 if trial % 2 == 0 else rng.random(g)
        b1, b2 = brane(tau, 1, a1, b), brane(tau, 1, a2, b)
        cx = perturbed_complex(b1, b2)
        for w in range(g - 1):
            assert np.max(np.abs(cx.differential[w + 1] @ cx.differential[w]), initial=0) < 1e-12
        dims = floer_cohomology_dims(cx)
        expect = [math.comb(g, w) for w in range(g + 1)] if trial % 2 == 0 else [0] * (g + 1)
        assert dims == expect
        assert floer_cohomology_dims(perturbed_complex(b1, b2, unit_prefactor=True)) == expect
        # independent rank computation
        ranks = [brute_rank(cx.differential[w]) for w in range(g)]
        chain = cx.chain_dims()
        alt = [chain[w] - (ranks[w - 1] if w else 0) - (ranks[w] if w < g else 0) for w in range(g + 1)]
        assert alt == expect


def test_cohomology_examples():
    tau2 = _eye(2)
    z = np.zeros(2)
    assert floer_cohomology_dims(floer_complex(brane(tau2, 1, z, z), brane(tau2, 1, z, z))) == [1, 2, 1]
    tau3 = _eye(3)
    cx = floer_complex(brane(tau3, 0, [0.1, 0, 0], np.zeros(3)), brane(tau3, 0, [0.6, 0.2, 0], np.zeros(3)))
    assert floer_cohomology_dims(cx) == [0, 0, 0, 0]
    cx = floer_complex(brane(tau2, 3, z, z), brane(tau2, 1, z, z))
    assert floer_cohomology_dims(cx) == [0, 0, 4]


def test_perturbation_params_bounds():
    with pytest.raises(ValidationError):
        PerturbationParams(0.2)
    with pytest.raises(ValidationError):
        PerturbationParams(0.0)


def test_triangle_area_examples():
    tau = TAU_I
    z = [0.0]
    assert triangle_area(0, 1, 2, [0], [0], z, z, z, [0], tau) == 0
    assert triangle_area(0, 1, 2, [0], [0], z, z, z, [1], tau) == pytest.approx(tau.tau[0, 0] / 4)
    with pytest.raises(InvalidSlopeTriple):
        triangle_area(0, 2, 1, [0], [0], z, z, z, [1], tau)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_triangle_area_imaginary_positive(seed):
    rng = np.random.default_rng(seed)
    g = int(rng.integers(1, 4))
    tau = random_siegel(rng, g)
    k = sorted(rng.choice(np.arange(-3, 5), 3, replace=False))
    m = rng.integers(-3, 4, g)
    lam = rng.integers(0, 3, g)
    area = triangle_area(*k, lam, lam, rng.random(g), rng.random(g), rng.random(g), m, tau)
    s = aside._s_vector(*k, lam, lam, np.zeros(g), np.zeros(g), np.zeros(g), m)
    assert area.imag > 0 or np.allclose(s, 0)


def test_mu2_classical_example():
    tau = random_siegel(np.random.default_rng(6), 1)
    z = [0.0]
    b = [brane(tau, k, z, z) for k in (0, 1, 2)]
    out = mu2(generator_element(b[0], b[1], (0,)), generator_element(b[1], b[2], (0,)))
    for w in (0, 1):
        assert abs(out.coeffs[(w,)] - theta(tau.scaled(2), [0.0], [w / 2], [0.0])) < 1e-13
    assert out.degree == 0


def test_mu2_zero_and_degree_mismatch():
    z = [0.0]
    b = [brane(TAU_I, k, z, z) for k in (0, 2, 1)]
    e1 = generator_element(b[0], b[1], (0,))
    e2 = generator_element(b[1], b[2], (0,))
    out = mu2(e1, e2)
    assert out.is_zero() and "degree" in out.note
    c = [brane(TAU_I, k, z, z) for k in (0, 1, 2)]
    zero = aside.FloerElement(c[0], c[1], 0, {})
    assert mu2(zero, generator_element(c[1], c[2], (0,))).is_zero()
    with pytest.raises(RepeatedSlopes):
        mu2(generator_element(c[0], c[1], (0,)), generator_element(c[1], brane(TAU_I, 0, z, z), (0,)))


@pytest.mark.parametrize("g", [1, 2])
def test_mu2_against_triangle_sum(g):
    rng = np.random.default_rng(40 + g)
    triples = [t for t in itertools.permutations(range(-2, 4), 3) if aside.slope_product(*t) > 0]
    for t in [triples[i] for i in rng.choice(len(triples), 6, replace=False)]:
        tau = random_siegel(rng, g)
        br = [brane(tau, k, rng.random(g), rng.random(g)) for k in t]
        closed = mu2_table(*br).table
        direct = triangle_sum(*br)
        assert np.max(np.abs(closed - direct)) < 1e-10


def test_mu2_degree_additivity():
    rng = np.random.default_rng(9)
    tau = random_siegel(rng, 2)
    for t in itertools.permutations(range(0, 4), 3):
        br = [brane(tau, k, rng.random(2), rng.random(2)) for k in t]
        e1 = generator_element(br[0], br[1], (0, 0))
        e2 = generator_element(br[1], br[2], (0, 0))
        out = mu2(e1, e2)
        if not out.is_zero():
            assert out.degree == e1.degree + e2.degree


def test_mu2_vertical_examples():
    z = [0.0]
    b1, b2 = brane(TAU_I, 0, z, z), brane(TAU_I, 1, z, z)
    bv = brane(TAU_I, INFINITY, [0.3], [0.0])
    gen = generator_element(b1, b2, (0,))
    gv = aside.FloerElement(b2, bv, 0, {(): 1.0})
    out = mu2_vertical(gen, gv)
    assert abs(out.coeffs[()] - theta(TAU_I, [0.3])) < 1e-12
    origin = brane(TAU_I, INFINITY, z, z)
    assert aside.vertical_prefactor(b1, b2, origin) == 1
    with pytest.raises(SlopeOrderViolation):
        mu2_vertical(generator_element(b2, b1, (0,)), aside.FloerElement(b1, bv, 0, {(): 1.0}))


def test_mu2_vertical_against_triangle_sum(tau_g12, rng):
    g = tau_g12.genus
    for k1, k2 in [(0, 1), (0, 2), (1, 3)]:
        b1 = brane(tau_g12, k1, rng.random(g), rng.random(g))
        b2 = brane(tau_g12, k2, rng.random(g), rng.random(g))
        bv = brane(tau_g12, INFINITY, rng.random(g), rng.random(g))
        gv = aside.FloerElement(b2, bv, 0, {(): 1.0})
        for lam in aside.index_box(k2 - k1, g)[:3]:
            key = tuple(int(x) for x in lam)
            closed = mu2_vertical(generator_element(b1, b2, key), gv).coeffs[()]
            assert abs(closed - vertical_triangle_sum(b1, b2, bv, lam)) < 1e-9
