"""Numerical evaluation of the average fidelity by direct simulation.

Independent of the phase-polynomial engine: each noise realization is
simulated as an explicit density matrix and the Gaussian average is taken
by tensor Gauss-Hermite quadrature or by Monte Carlo sampling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .code import (
    DIM,
    LogicalState,
    PhaseFlipCode,
    build_code,
    build_opt_recovery,
    logical_two_design,
)
from .exact import ExperimentParams
from .noise import ENTRY_SHIFTS, NoiseParams, NoiseSample, segment_unitary

K_CAP = 96
CHUNK = 8192


@dataclass(frozen=True)
class QuadratureSpec:
    """Starting Gauss-Hermite order per dimension and the convergence target."""

    nodes_per_dim: int = 12
    tol: float = 1e-8
    max_nodes: int = K_CAP

    def __post_init__(self):
        if self.nodes_per_dim < 2:
            raise ValueError(f"nodes_per_dim must be >= 2, got {self.nodes_per_dim}")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    nodes_per_dim: int
    delta: float
    converged: bool


@dataclass(frozen=True)
class MonteCarloSpec:
    samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")


def gauss_hermite_rule(nodes_per_dim: int, params: NoiseParams = NoiseParams()):
    """Nodes and weights for E[f(omega)], omega ~ N(0, 2 / T2*^2).

    Physicists' Hermite nodes y integrate against exp(-y^2); the change of
    variables omega = sqrt(2) sigma y and division by sqrt(pi) turn them
    into a rule for the Gaussian expectation.
    """
    y, w = np.polynomial.hermite.hermgauss(nodes_per_dim)
    return np.sqrt(2.0) * params.sigma * y, w / np.sqrt(np.pi)


def fidelity_fixed_noise(
    params: ExperimentParams,
    omega: NoiseSample | np.ndarray,
    psi: LogicalState,
    code: PhaseFlipCode | None = None,
) -> float:
    """Fidelity of one logical state for one frozen noise realization (plain 8x8 simulation)."""
    code = code or build_code()
    channel = build_opt_recovery(params.p_fb, params.p_meas, code)
    v = segment_unitary(omega, params.tau)
    target = psi.vector(code)
    rho = np.outer(target, target.conj())
    for _ in range(params.n):
        rho = channel.apply(v.conjugate(rho))
    return float(np.real(target.conj() @ rho @ target))


# -- batched round map ---------------------------------------------------------
#
# Every output of R_opt is block diagonal with respect to the four syndrome
# subspaces, and so is the initial code state.  With B (64 x 16) an
# orthonormal real basis of such operators, one round T D(omega) restricted to
# range(B) is the 16 x 16 matrix  B^T T D(omega) B.  D(omega) is diagonal with
# entries exp(-i tau k_e . omega), and k_e takes one of 27 values, so the round
# matrix is a sum of 27 fixed matrices times separable phases.


@lru_cache(maxsize=64)
def _round_terms(p_fb: float, p_meas: float, qubit_order: tuple[int, int, int]):
    code = build_code(qubit_order)
    sup = build_opt_recovery(p_fb, p_meas, code).superoperator.real

    cols = []
    for u in code.corrections:
        block = [u @ code.zero_L, u @ code.one_L]
        for a in block:
            for b in block:
                cols.append(np.outer(a, b.conj()).real.reshape(-1))
    basis = np.array(cols).T  # 64 x 16

    shifts = ENTRY_SHIFTS.reshape(DIM * DIM, 3)
    classes, inverse = np.unique(shifts, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    left = basis.T @ sup  # 16 x 64
    terms = np.stack(
        [left[:, inverse == c] @ basis[inverse == c, :] for c in range(len(classes))]
    )  # 27 x 16 x 16

    # readout weights: mean over design states of <psi|Phi(|psi><psi|)|psi>
    weights = np.zeros((16, 16), dtype=complex)
    design = logical_two_design()
    for state in design:
        psi = state.vector(code)
        vec = np.outer(psi, psi.conj()).reshape(-1)
        init = basis.T @ vec
        final = basis.T @ vec.conj()
        weights += np.outer(final, init)
    weights /= len(design)
    return classes, terms, weights


def design_fidelity_batch(
    params: ExperimentParams, omegas: np.ndarray, code: PhaseFlipCode | None = None
) -> np.ndarray:
    """Design-averaged fidelity for each row of ``omegas`` (shape (N, 3))."""
    code = code or build_code()
    classes, terms, weights = _round_terms(params.p_fb, params.p_meas, code.qubit_order)
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    out = np.empty(len(omegas))
    flat_terms = terms.reshape(len(classes), -1)
    for start in range(0, len(omegas), CHUNK):
        w = omegas[start : start + CHUNK]
        phases = np.exp(-1j * params.tau * (w @ classes.T))  # N x 27
        rounds = (phases @ flat_terms).reshape(-1, 16, 16)
        total = np.linalg.matrix_power(rounds, params.n)
        out[start : start + CHUNK] = np.einsum("npq,pq->n", total, weights).real
    return out


@lru_cache(maxsize=16)
def _symmetric_grid(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted index triples i <= j <= l and how many orderings each stands for."""
    idx = np.array(list(itertools.combinations_with_replacement(range(k), 3)))
    distinct = 1 + (idx[:, 0] != idx[:, 1]) + (idx[:, 1] != idx[:, 2])
    multiplicity = np.choose(distinct - 1, [1, 3, 6])
    return idx, multiplicity


def _quadrature_at(params: ExperimentParams, k: int, code, noise: NoiseParams) -> float:
    # the design-averaged integrand is symmetric under permuting the three
    # qubits, so only sorted node triples are evaluated
    nodes, weights = gauss_hermite_rule(k, noise)
    idx, multiplicity = _symmetric_grid(k)
    wgrid = multiplicity * weights[idx].prod(axis=1)
    return float(wgrid @ design_fidelity_batch(params, nodes[idx], code))


def quadrature_fidelity(
    params: ExperimentParams,
    quad: QuadratureSpec = QuadratureSpec(),
    code: PhaseFlipCode | None = None,
    noise: NoiseParams = NoiseParams(),
    full_output: bool = False,
):
    """Tensor Gauss-Hermite estimate of the average fidelity.

    The order per dimension doubles from ``quad.nodes_per_dim`` until two
    successive estimates differ by less than ``quad.tol`` or ``quad.max_nodes``
    is reached.  With ``full_output`` a ``QuadratureResult`` carrying the
    achieved difference and a convergence flag is returned.
    """
    k = quad.nodes_per_dim
    prev = _quadrature_at(params, k, code, noise)
    delta = np.inf
    while k < quad.max_nodes:
        k = min(2 * k, quad.max_nodes)
        value = _quadrature_at(params, k, code, noise)
        delta, prev = abs(value - prev), value
        if delta < quad.tol:
            break
    result = QuadratureResult(prev, k, float(delta), bool(delta < quad.tol))
    return result if full_output else result.value


def monte_carlo_fidelity(
    params: ExperimentParams,
    mc: MonteCarloSpec = MonteCarloSpec(),
    code: PhaseFlipCode | None = None,
    noise: NoiseParams = NoiseParams(),
) -> tuple[float, float]:
    """Sample mean and standard error of the design-averaged fidelity.

    Draws come in fixed-size blocks, block b seeded from (seed, b), so the
    result depends only on (samples, seed).
    """
    values = np.empty(mc.samples)
    for block, start in enumerate(range(0, mc.samples, CHUNK)):
        size = min(CHUNK, mc.samples - start)
        rng = np.random.default_rng([mc.seed, block])
        omegas = rng.normal(0.0, noise.sigma, size=(size, 3))
        values[start : start + size] = design_fidelity_batch(params, omegas, code)
    std_error = values.std(ddof=1) / np.sqrt(mc.samples) if mc.samples > 1 else np.nan
    return float(values.mean()), float(std_error)


def single_qubit_fidelity(x) -> float:
    """Bloch-averaged fidelity of a bare qubit dephased for time x (in units of T2*)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    out = (2.0 + np.exp(-(x**2))) / 3.0
    return float(out) if out.ndim == 0 else out


def single_qubit_monte_carlo(
    x: float, samples: int = 100_000, seed: int = 0, noise: NoiseParams = NoiseParams()
) -> tuple[float, float]:
    """Unencoded qubit: Haar-random pure state, random frozen detuning, explicit 2x2 evolution."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(samples, 2)) + 1j * rng.normal(size=(samples, 2))
    psi = z / np.linalg.norm(z, axis=1, keepdims=True)
    omega = rng.normal(0.0, noise.sigma, size=samples)
    phase = np.exp(-0.5j * omega * x)
    evolved = psi * np.stack([phase, phase.conj()], axis=1)
    f = np.abs(np.sum(psi.conj() * evolved, axis=1)) ** 2
    return float(f.mean()), float(f.std(ddof=1) / np.sqrt(samples))
