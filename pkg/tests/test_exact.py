import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import roqec.noise
from roqec.checks import closed_form_f1
from roqec.code import LogicalState, build_code, build_ideal_recovery, build_opt_recovery, logical_two_design
from roqec.exact import (
    N_MAX_SYMBOLIC,
    ExperimentParams,
    FidelitySurface,
    PhasePolynomial,
    SymbolicDensityMatrix,
    average_fidelity,
    fidelity_vs_pfb_polynomial,
    pfb_nodes,
    symbolic_apply_channel,
    symbolic_dephase,
)
from roqec.noise import segment_unitary

from conftest import random_density_matrix, random_unit_vector

probs = st.floats(0.0, 1.0)


def _rounds(sdm, channel, n):
    for _ in range(n):
        sdm = symbolic_apply_channel(symbolic_dephase(sdm), channel)
    return sdm


# -- PhasePolynomial ------------------------------------------------------------


def test_phase_polynomial_arithmetic():
    a = PhasePolynomial({(1, 0, 0): 2.0, (0, 0, 0): 1.0})
    b = PhasePolynomial({(1, 0, 0): -2.0, (0, 1, 0): 0.5j})
    s = a + b
    assert s.terms == {(0, 0, 0): 1.0, (0, 1, 0): 0.5j}
    assert (a - a).terms == {}
    assert (3 * a).terms[(1, 0, 0)] == 6.0
    assert a.shifted((1, -1, 0)).terms == {(2, -1, 0): 2.0, (1, -1, 0): 1.0}
    assert PhasePolynomial({(1, 2, 3): 1 + 1j}).reflected().terms == {(-1, -2, -3): 1 - 1j}


def test_phase_polynomial_prunes_tiny_terms():
    p = PhasePolynomial({(0, 0, 0): 1e-17, (1, 0, 0): 1e-3})
    assert list(p.terms) == [(1, 0, 0)]


def test_phase_polynomial_evaluation(rng):
    p = PhasePolynomial({(1, 0, -2): 0.3 - 0.1j, (0, 0, 0): 0.7})
    omega, tau = rng.normal(size=3), 0.4
    expected = (0.3 - 0.1j) * np.exp(-1j * tau * (omega[0] - 2 * omega[2])) + 0.7
    assert p.evaluate(omega, tau) == pytest.approx(expected, abs=1e-15)
    assert p.expectation(tau) == pytest.approx((0.3 - 0.1j) * np.exp(-5 * tau**2) + 0.7, abs=1e-15)


# -- symbolic steps -------------------------------------------------------------


def _state_sdm(rng):
    return SymbolicDensityMatrix.from_operator(random_density_matrix(rng))


def test_dephase_leaves_diagonal_unchanged(rng):
    sdm = _state_sdm(rng)
    out = symbolic_dephase(sdm)
    for a in range(8):
        assert out.entry(a, a).isclose(sdm.entry(a, a), atol=0)


def test_dephase_shift_of_extreme_entry(rng):
    sdm = _state_sdm(rng)
    out = symbolic_dephase(sdm)
    assert list(out.entry(0, 7).terms) == [(1, 1, 1)]
    assert list(out.entry(7, 0).terms) == [(-1, -1, -1)]
    assert out.entry(0, 7).terms[(1, 1, 1)] == sdm.entry(0, 7).terms[(0, 0, 0)]


def test_two_dephase_steps_double_the_shift(rng):
    sdm = _state_sdm(rng)
    twice = symbolic_dephase(symbolic_dephase(sdm))
    for a, b in itertools.product(range(8), repeat=2):
        shift = 2 * roqec.noise.ENTRY_SHIFTS[a, b]
        assert twice.entry(a, b).isclose(sdm.entry(a, b).shifted(shift), atol=0)


def test_channel_leaves_code_state_constant(rng):
    rho = LogicalState(*random_unit_vector(rng, 2)).density_matrix()
    sdm = SymbolicDensityMatrix.from_operator(rho)
    out = symbolic_apply_channel(sdm, build_ideal_recovery())
    np.testing.assert_allclose(out.coeffs[..., 0, 0, 0], rho, atol=1e-12)


def test_trace_polynomial_is_constant_one(rng):
    psi = LogicalState(*random_unit_vector(rng, 2)).vector()
    sdm = _rounds(SymbolicDensityMatrix.from_state(psi), build_opt_recovery(0.4, 0.3), 4)
    assert sdm.trace_polynomial().isclose(PhasePolynomial.constant(1.0), atol=1e-12)


def test_symbolic_matches_numeric_simulation(rng):
    psi = LogicalState(*random_unit_vector(rng, 2)).vector()
    channel = build_opt_recovery(0.55, 0.2)
    n, tau = 5, 0.37
    sdm = _rounds(SymbolicDensityMatrix.from_state(psi), channel, n)
    for _ in range(20):
        omega = rng.normal(scale=np.sqrt(2), size=3)
        v = segment_unitary(omega, tau)
        rho = np.outer(psi, psi.conj())
        for _ in range(n):
            rho = channel.apply(v.conjugate(rho))
        assert np.abs(sdm.evaluate(omega, tau) - rho).max() <= 1e-12


def test_symbolic_state_is_hermitian(rng):
    psi = LogicalState(*random_unit_vector(rng, 2)).vector()
    sdm = _rounds(SymbolicDensityMatrix.from_state(psi), build_opt_recovery(0.3, 0.4), 3)
    for a, b in [(0, 7), (2, 5), (1, 1), (6, 3)]:
        assert sdm.entry(a, b).isclose(sdm.entry(b, a).reflected(), atol=1e-14)


def test_term_count_and_index_bounds(rng):
    sdm = SymbolicDensityMatrix.from_state(LogicalState(*random_unit_vector(rng, 2)).vector())
    channel = build_opt_recovery(0.5, 0.25)
    for n in range(1, 7):
        sdm = _rounds(sdm, channel, 1)
        assert sdm.term_counts().max() <= (2 * n + 1) ** 3
        assert max(sdm.entry(a, b).max_index() for a, b in [(0, 7), (3, 4), (0, 0)]) <= n


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        SymbolicDensityMatrix(np.zeros((8, 8, 3, 3, 3)), radius=0)


# -- average fidelity -----------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(probs, probs, st.floats(0.0, 4.0))
def test_matches_closed_form_single_round(p_fb, p_meas, x):
    assert average_fidelity(ExperimentParams(1, p_fb, p_meas, x)) == pytest.approx(
        closed_form_f1(p_fb, p_meas, x), abs=1e-9
    )


@pytest.mark.parametrize("p_fb,p_meas", [(0.0, 0.3), (0.5, 0.5), (1.0, 0.22), (0.7, 1.0)])
def test_zero_time_limit(p_fb, p_meas):
    assert average_fidelity(ExperimentParams(1, p_fb, p_meas, 0.0)) == pytest.approx(1 - p_fb * p_meas, abs=1e-12)


def test_reference_point():
    assert average_fidelity(ExperimentParams(10, 0.488, 0.22, 2.0)) == pytest.approx(0.674, abs=0.002)


def test_design_batching_equals_per_state_propagation(rng):
    # the engine propagates logical basis operators; check against one run per design state
    params = ExperimentParams(3, 0.35, 0.15, 1.4)
    code = build_code()
    channel = build_opt_recovery(params.p_fb, params.p_meas)
    per_state = []
    for s in logical_two_design():
        psi = s.vector(code)
        sdm = _rounds(SymbolicDensityMatrix.from_state(psi), channel, params.n)
        per_state.append(np.vdot(psi, sdm.average(params.tau) @ psi).real)
    assert average_fidelity(params) == pytest.approx(np.mean(per_state), abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), probs, probs, st.floats(0.0, 5.0))
def test_fidelity_in_unit_interval(n, p_fb, p_meas, x):
    f = average_fidelity(ExperimentParams(n, p_fb, p_meas, x))
    assert -1e-12 <= f <= 1 + 1e-12


@pytest.mark.parametrize("order", [(1, 0, 2), (2, 1, 0), (1, 2, 0)])
def test_qubit_relabeling_invariance(order):
    params = ExperimentParams(4, 0.6, 0.17, 1.9)
    assert average_fidelity(params, build_code(order)) == pytest.approx(average_fidelity(params), abs=1e-13)


@pytest.mark.parametrize("n", [1, 3, 7])
def test_noiseless_limit(monkeypatch, n):
    monkeypatch.setattr(roqec.noise, "damping_1d", lambda k, tau, t2_star=1.0: np.ones_like(np.asarray(k, float)))
    for p_fb in (0.0, 0.4, 1.0):
        assert average_fidelity(ExperimentParams(n, p_fb, 0.0, 2.5)) == pytest.approx(1.0, abs=1e-12)


def test_symbolic_limit_enforced():
    with pytest.raises(ValueError, match="quadrature"):
        average_fidelity(ExperimentParams(N_MAX_SYMBOLIC + 1, 0.5, 0.1, 1.0))


@pytest.mark.parametrize(
    "kwargs",
    [dict(n=0, p_fb=0.5, p_meas=0.1, x=1.0), dict(n=2, p_fb=1.1, p_meas=0.1, x=1.0),
     dict(n=2, p_fb=0.5, p_meas=-0.1, x=1.0), dict(n=2, p_fb=0.5, p_meas=0.1, x=-1.0),
     dict(n=1.5, p_fb=0.5, p_meas=0.1, x=1.0)],
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        ExperimentParams(**kwargs)


# -- polynomial in p_fb ---------------------------------------------------------


def test_nodes():
    np.testing.assert_allclose(pfb_nodes(2), [0.0, 1.0], atol=1e-16)
    nodes = pfb_nodes(11)
    assert nodes[0] == 0.0 and nodes[-1] == 1.0 and np.all(np.diff(nodes) > 0)


def test_single_round_polynomial_is_affine():
    p_meas = 0.3
    coef = fidelity_vs_pfb_polynomial(1, p_meas, 0.0)
    assert coef.shape == (2,)
    assert coef[1] == pytest.approx(-p_meas, abs=1e-12)
    assert coef[0] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n,p_meas,x", [(2, 0.1, 0.8), (5, 0.3, 2.2), (9, 0.22, 2.0)])
def test_polynomial_interpolates_direct_evaluation(n, p_meas, x):
    coef = fidelity_vs_pfb_polynomial(n, p_meas, x)
    assert coef.shape == (n + 1,)
    assert np.isrealobj(coef)
    for p in (0.5, 0.123, 0.9):
        direct = average_fidelity(ExperimentParams(n, p, p_meas, x))
        assert np.polynomial.polynomial.polyval(p, coef) == pytest.approx(direct, abs=1e-9)


def test_shared_surface_matches_per_n_polynomial():
    surface = FidelitySurface(0.15, 8)
    for n in (1, 4, 8):
        np.testing.assert_allclose(
            surface.coefficients(n, 1.3), fidelity_vs_pfb_polynomial(n, 0.15, 1.3), atol=1e-10
        )
    with pytest.raises(ValueError):
        surface.coefficients(9, 1.3)
