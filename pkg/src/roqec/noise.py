"""Quasi-static Gaussian dephasing.

Each qubit sees a frequency offset omega_j drawn once per run from
N(0, 2 / T2*^2) and held constant.  Times are measured in units of T2*
unless a ``NoiseParams`` with another ``t2_star`` is passed.

Phase-index convention: after m segments of length tau the density-matrix
entry (a, b) carries exp(-i tau sum_j omega_j k_j), each segment adding
(z_j(a) - z_j(b)) / 2 to k_j, where z_j(a) = +1 (-1) if bit j of a is 0 (1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .code import DIM, N_QUBITS


@dataclass(frozen=True)
class NoiseParams:
    t2_star: float = 1.0

    def __post_init__(self):
        if not self.t2_star > 0:
            raise ValueError(f"t2_star must be positive, got {self.t2_star}")

    @property
    def sigma_sq(self) -> float:
        return 2.0 / self.t2_star**2

    @property
    def sigma(self) -> float:
        return np.sqrt(self.sigma_sq)


@dataclass(frozen=True)
class NoiseSample:
    omega: np.ndarray

    def __neg__(self) -> "NoiseSample":
        return NoiseSample(-self.omega)


@dataclass(frozen=True)
class SegmentUnitary:
    diagonal: np.ndarray
    tau: float

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def conjugate(self, rho: np.ndarray) -> np.ndarray:
        """V rho V^dagger."""
        return self.diagonal[:, None] * rho * self.diagonal.conj()[None, :]


# z_j(a) for each basis index a, qubit 0 most significant
Z_SIGNS = np.array(
    [[1 - 2 * ((a >> (N_QUBITS - 1 - j)) & 1) for j in range(N_QUBITS)] for a in range(DIM)]
)
# per-segment phase-index shift of entry (a, b), shape (8, 8, 3)
ENTRY_SHIFTS = (Z_SIGNS[:, None, :] - Z_SIGNS[None, :, :]) // 2


def sample_noise(params: NoiseParams = NoiseParams(), rng_seed: int | None = None, size=None) -> NoiseSample:
    """Draw omega = (omega_1, omega_2, omega_3); ``size`` prepends sample axes."""
    rng = np.random.default_rng(rng_seed)
    shape = (N_QUBITS,) if size is None else tuple(np.atleast_1d(size)) + (N_QUBITS,)
    return NoiseSample(rng.normal(0.0, params.sigma, size=shape))


def segment_unitary(omega: NoiseSample | np.ndarray, tau: float) -> SegmentUnitary:
    """exp(-i tau H) with H = 1/2 sum_j omega_j Z_j (diagonal)."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    w = omega.omega if isinstance(omega, NoiseSample) else np.asarray(omega, dtype=float)
    energies = 0.5 * Z_SIGNS @ w
    return SegmentUnitary(np.exp(-1j * tau * energies), float(tau))


def damping_1d(k, tau: float, t2_star: float = 1.0) -> np.ndarray:
    """<exp(-i tau k omega)> for a single qubit, exp(-(k tau / T2*)^2)."""
    k = np.asarray(k, dtype=float)
    return np.exp(-((k * tau / t2_star) ** 2))


def gaussian_damping(k, tau: float, params: NoiseParams = NoiseParams()) -> float:
    """Exact Gaussian average of exp(-i tau k . omega) for a phase vector ``k``."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    k = np.asarray(k)
    if k.shape[-1] != N_QUBITS:
        raise ValueError(f"phase vector must have {N_QUBITS} entries, got shape {k.shape}")
    return np.prod(damping_1d(k, tau, params.t2_star), axis=-1)
