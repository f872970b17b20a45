import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from roqec.noise import (
    ENTRY_SHIFTS,
    NoiseParams,
    NoiseSample,
    gaussian_damping,
    sample_noise,
    segment_unitary,
)

from conftest import random_density_matrix

small_k = st.integers(-10, 10)


def test_noise_params():
    p = NoiseParams(0.7)
    assert p.sigma_sq * p.t2_star**2 == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        NoiseParams(0.0)


@pytest.mark.parametrize("t2", [1.0, 2.5])
def test_sample_moments(t2):
    params = NoiseParams(t2)
    w = sample_noise(params, rng_seed=7, size=1_000_000 // 3).omega.reshape(-1)
    assert abs(w.var() / params.sigma_sq - 1) < 0.01
    assert abs(w.mean()) <= 4 * np.sqrt(params.sigma_sq / w.size)


def test_sample_shape_and_reproducible():
    a, b = sample_noise(rng_seed=3), sample_noise(rng_seed=3)
    assert a.omega.shape == (3,)
    np.testing.assert_array_equal(a.omega, b.omega)
    assert not np.array_equal(a.omega, sample_noise(rng_seed=4).omega)


def test_zero_noise_segment_is_identity():
    v = segment_unitary(np.zeros(3), 0.8)
    np.testing.assert_allclose(v.matrix, np.eye(8), atol=0)


def test_segment_is_unitary_and_dephasing_only(rng):
    v = segment_unitary(NoiseSample(rng.normal(size=3)), 0.37)
    np.testing.assert_allclose(np.abs(v.diagonal), 1, atol=1e-15)
    rho = random_density_matrix(rng)
    out = v.conjugate(rho)
    np.testing.assert_allclose(np.diag(out), np.diag(rho), atol=1e-15)
    np.testing.assert_allclose(out, v.matrix @ rho @ v.matrix.conj().T, atol=1e-14)


def test_segment_matches_matrix_exponential(rng):
    omega, tau = rng.normal(size=3), 0.6
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    h = 0.5 * (
        omega[0] * np.kron(np.kron(z, eye), eye)
        + omega[1] * np.kron(np.kron(eye, z), eye)
        + omega[2] * np.kron(np.kron(eye, eye), z)
    )
    np.testing.assert_allclose(segment_unitary(omega, tau).matrix, scipy.linalg.expm(-1j * tau * h), atol=1e-13)


def test_single_qubit_coherence_phase():
    # H = omega Z / 2 on one qubit: <0|rho|1> picks up exp(-i omega tau)
    omega, tau = 1.3, 0.45
    u = scipy.linalg.expm(-0.5j * tau * omega * np.diag([1.0, -1.0]))
    rho = np.full((2, 2), 0.5)
    assert (u @ rho @ u.conj().T)[0, 1] / 0.5 == pytest.approx(np.exp(-1j * omega * tau), abs=1e-14)
    # same coherence in the 3-qubit register between |000> and |100>
    v = segment_unitary(np.array([omega, 0.0, 0.0]), tau)
    assert v.diagonal[0] * v.diagonal[4].conj() == pytest.approx(np.exp(-1j * omega * tau), abs=1e-14)


def test_entry_shifts_convention():
    np.testing.assert_array_equal(ENTRY_SHIFTS[0, 7], [1, 1, 1])
    np.testing.assert_array_equal(ENTRY_SHIFTS[7, 0], [-1, -1, -1])
    np.testing.assert_array_equal(ENTRY_SHIFTS[0, 4], [1, 0, 0])
    assert np.all(ENTRY_SHIFTS[np.arange(8), np.arange(8)] == 0)


def test_damping_values():
    x = 1.7
    assert gaussian_damping((0, 0, 0), x) == 1.0
    assert gaussian_damping((1, 0, 0), x) == pytest.approx(np.exp(-(x**2)), rel=1e-15)
    assert gaussian_damping((1, 1, 1), x) == pytest.approx(np.exp(-3 * x**2), rel=1e-14)
    assert gaussian_damping((1, 0, 0), 1.0, NoiseParams(2.0)) == pytest.approx(np.exp(-0.25), rel=1e-15)


def test_damping_rejects_bad_input():
    with pytest.raises(ValueError):
        gaussian_damping((1, 0, 0), -0.1)
    with pytest.raises(ValueError):
        gaussian_damping((1, 0), 0.1)


def test_damping_matches_monte_carlo(rng):
    # the damping must equal the characteristic function of the sampled noise
    w = sample_noise(rng_seed=11, size=200_000).omega
    for _ in range(8):
        k = rng.integers(-10, 11, size=3)
        tau = rng.uniform(0.0, 0.3)
        samples = np.cos(tau * w @ k)  # imaginary part averages to zero
        se = samples.std(ddof=1) / np.sqrt(len(samples))
        assert abs(samples.mean() - gaussian_damping(k, tau)) <= 4 * se + 1e-12


@settings(max_examples=50, deadline=None)
@given(small_k, small_k, small_k, st.floats(0.0, 2.0))
def test_damping_factorizes_and_is_even(k1, k2, k3, tau):
    whole = gaussian_damping((k1, k2, k3), tau)
    parts = gaussian_damping((k1, 0, 0), tau) * gaussian_damping((0, k2, 0), tau) * gaussian_damping((0, 0, k3), tau)
    assert whole == parts
    assert gaussian_damping((-k1, k2, -k3), tau) == whole
    assert 0.0 <= whole <= 1.0
