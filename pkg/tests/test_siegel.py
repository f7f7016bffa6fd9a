import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abhms.errors import (
    GenusMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    NotSymplectic,
    NotUnimodular,
    SingularDenominator,
    ValidationError,
)
from abhms.siegel import (
    ParabolicElement,
    SiegelPoint,
    gl_act,
    is_sp_omega,
    parabolic_act,
    random_siegel,
    sp_act,
    sp_generators,
    sp_identity,
    sp_j,
    symplectic_from_blocks,
    validate_parabolic,
    validate_siegel,
    validate_tropical,
)


def test_identity_point():
    tau = validate_siegel(np.zeros((2, 2)), np.eye(2))
    assert np.allclose(tau.tau, 1j * np.eye(2))
    assert tau.lam_min == pytest.approx(1.0)


def test_indefinite_rejected():
    with pytest.raises(NotPositiveDefinite):
        validate_siegel(np.zeros((2, 2)), np.diag([1.0, -1.0]))


def test_lam_min_of_2x2():
    tau = validate_siegel([[0, 1], [1, 0]], [[2, 1], [1, 2]])
    assert tau.lam_min == pytest.approx(1.0, abs=1e-14)


def test_asymmetric_rejected_but_roundoff_symmetrized():
    with pytest.raises(NotSymmetric):
        validate_siegel([[0, 1e-6], [0, 0]], np.eye(2))
    tau = validate_siegel([[0, 1e-15], [0, 0]], np.eye(2))
    assert np.array_equal(tau.B, tau.B.T)


def test_shape_and_finiteness_checks():
    with pytest.raises(GenusMismatch):
        validate_siegel(np.zeros((1, 1)), np.eye(2))
    with pytest.raises(ValidationError):
        validate_siegel([[np.nan]], [[1.0]])
    with pytest.raises(NotPositiveDefinite):
        validate_siegel([[0.0]], [[1e-14]])


def test_json_roundtrip_and_missing_omega():
    tau = random_siegel(np.random.default_rng(1), 2)
    back = SiegelPoint.from_json(json.loads(json.dumps(tau.to_json())))
    assert back == tau
    with pytest.raises(ValidationError):
        SiegelPoint.from_json({"B": [[0]]})


def test_identity_and_inversion():
    tau = validate_siegel(np.zeros((2, 2)), [[2.0, 0.5], [0.5, 1.0]])
    assert sp_act(sp_identity(2), tau) == tau
    inv = sp_act(sp_j(2), tau)
    assert np.allclose(inv.tau, 1j * np.linalg.inv(tau.Omega), atol=1e-14)


def test_non_symplectic_rejected():
    with pytest.raises(NotSymplectic):
        symplectic_from_blocks([[2]], [[0]], [[0]], [[1]])


def test_singular_denominator():
    # C tau + D = tau here; a spread of 5e14 in Omega's spectrum makes it ill-conditioned
    tau = validate_siegel(np.zeros((2, 2)), np.diag([1e3, 2e-12]))
    with pytest.raises(SingularDenominator):
        sp_act(sp_j(2), tau)


def _random_word(rng, g, length):
    gens = sp_generators(g)
    m = sp_identity(g)
    for _ in range(length):
        m = m @ gens[rng.integers(len(gens))]
    return m


@pytest.mark.parametrize("g", [1, 2, 3])
def test_composition_law(g):
    rng = np.random.default_rng(g)
    for _ in range(15):
        tau = random_siegel(rng, g)
        m1 = _random_word(rng, g, 3)
        m2 = _random_word(rng, g, 3)
        lhs = sp_act(m1 @ m2, tau).tau
        rhs = sp_act(m1, sp_act(m2, tau)).tau
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_parabolic_examples():
    tau = validate_siegel([[0.3]], [[1.2]])
    p = validate_parabolic([[-1]], [[3]])
    assert np.allclose(parabolic_act(p, tau).tau, tau.tau - 3)
    s = validate_parabolic(np.eye(2), [[1, 2], [2, 0]])
    t2 = random_siegel(np.random.default_rng(0), 2)
    assert np.allclose(parabolic_act(s, t2).tau, t2.tau + np.array([[1, 2], [2, 0]]))
    with pytest.raises(NotUnimodular):
        validate_parabolic([[2]], [[0]])


def test_parabolic_embeds_into_sp():
    p = validate_parabolic([[1, 1], [0, 1]], [[1, 0], [0, 0]])
    tau = random_siegel(np.random.default_rng(5), 2)
    assert np.allclose(sp_act(p.embed(), tau).tau, parabolic_act(p, tau).tau, atol=1e-12)


def test_gl_example():
    om = validate_tropical(np.eye(2))
    assert np.array_equal(gl_act([[1, 1], [0, 1]], om).Omega, [[2, 1], [1, 1]])


unimodular_2x2 = st.sampled_from(
    [np.array(a) for a in ([[1, 0], [0, 1]], [[1, 1], [0, 1]], [[0, 1], [1, 0]], [[2, 1], [1, 1]],
                           [[1, -3], [0, -1]], [[3, 2], [1, 1]], [[-1, 0], [4, 1]])]
)


@settings(max_examples=60, deadline=None)
@given(a=unimodular_2x2, b_entries=st.tuples(*[st.integers(-3, 3)] * 3), seed=st.integers(0, 2**32 - 1))
def test_parabolic_imaginary_part_law(a, b_entries, seed):
    # B = S A^{-T} with S symmetric makes A B^T symmetric
    s = np.array([[b_entries[0], b_entries[1]], [b_entries[1], b_entries[2]]])
    b = np.round(s @ np.linalg.inv(a).T).astype(int)
    p = validate_parabolic(a, b)
    tau = random_siegel(np.random.default_rng(seed), 2)
    im = parabolic_act(p, tau).Omega
    assert np.max(np.abs(im - gl_act(a, validate_tropical(tau.Omega)).Omega)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(a=unimodular_2x2, seed=st.integers(0, 2**32 - 1))
def test_gl_determinant_invariance(a, seed):
    om = random_siegel(np.random.default_rng(seed), 2).Omega
    out = gl_act(a, validate_tropical(om)).Omega
    assert abs(np.linalg.det(out) - np.linalg.det(om)) <= 1e-12 * abs(np.linalg.det(om))


def test_is_sp_omega_examples():
    om = validate_tropical(np.diag([1.0, 2.0]))
    assert is_sp_omega(np.eye(4, dtype=int), om)
    i2 = np.eye(2, dtype=int)
    for a, b, c, d in [(2, 1, 1, 1), (0, -1, 1, 0), (1, 3, 0, 1)]:
        m = np.block([[a * i2, b * i2], [c * i2, d * i2]])
        assert is_sp_omega(m, om)
    swap = np.array([[0, 1], [1, 0]])
    z = np.zeros((2, 2), dtype=int)
    assert not is_sp_omega(np.block([[swap, z], [z, swap]]), om)
