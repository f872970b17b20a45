"""Exact average fidelity via phase-polynomial propagation.

Within one run the noise is constant, so after m dephasing segments every
density-matrix entry is a finite sum  sum_k c_k exp(-i tau k . omega)  over
integer phase vectors k.  The recovery channel mixes entries linearly and
never touches the phases, so the whole evolution can be carried out on the
coefficients c_k.  The Gaussian average is taken once, at readout, by
replacing each monomial with its exact expectation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np

from . import noise
from .code import (
    DIM,
    N_QUBITS,
    KrausChannel,
    PhaseFlipCode,
    _check_probability,
    build_code,
    build_opt_recovery,
    logical_two_design,
)
from .noise import ENTRY_SHIFTS, NoiseParams

N_MAX_SYMBOLIC = 12
PRUNE_THRESHOLD = 1e-16


@dataclass(frozen=True)
class ExperimentParams:
    """One protocol configuration; ``x`` is the total time in units of T2*."""

    n: int
    p_fb: float
    p_meas: float
    x: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        _check_probability("p_fb", self.p_fb)
        _check_probability("p_meas", self.p_meas)
        if not self.x >= 0:
            raise ValueError(f"x must be non-negative, got {self.x!r}")

    @property
    def tau(self) -> float:
        """Length of one dephasing segment."""
        return self.x / self.n


class PhasePolynomial:
    """Sparse map from integer phase vectors to complex coefficients.

    Represents  sum_k c_k exp(-i tau k . omega).  Coefficients below
    ``PRUNE_THRESHOLD`` in modulus are dropped.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, ...], complex] | None = None):
        self.terms: dict[tuple[int, ...], complex] = {}
        for k, c in (terms or {}).items():
            if abs(c) >= PRUNE_THRESHOLD:
                self.terms[tuple(int(v) for v in k)] = complex(c)

    @classmethod
    def constant(cls, c: complex) -> "PhasePolynomial":
        return cls({(0,) * N_QUBITS: c})

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g})e{list(k)}" for k, c in sorted(self.terms.items()))
        return f"PhasePolynomial({body or '0'})"

    def __add__(self, other: "PhasePolynomial") -> "PhasePolynomial":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return PhasePolynomial(out)

    def __sub__(self, other: "PhasePolynomial") -> "PhasePolynomial":
        return self + (-1) * other

    def __mul__(self, scalar: complex) -> "PhasePolynomial":
        return PhasePolynomial({k: scalar * c for k, c in self.terms.items()})

    __rmul__ = __mul__

    def shifted(self, shift) -> "PhasePolynomial":
        shift = tuple(int(v) for v in shift)
        return PhasePolynomial(
            {tuple(a + b for a, b in zip(k, shift)): c for k, c in self.terms.items()}
        )

    def reflected(self) -> "PhasePolynomial":
        """Complex conjugate as a function of omega: conj coefficients, negate k."""
        return PhasePolynomial({tuple(-v for v in k): c.conjugate() for k, c in self.terms.items()})

    def max_index(self) -> int:
        return max((max(abs(v) for v in k) for k in self.terms), default=0)

    def isclose(self, other: "PhasePolynomial", atol: float = 1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= atol for k in keys)

    def evaluate(self, omega, tau: float) -> complex:
        omega = np.asarray(omega, dtype=float)
        return complex(sum(c * np.exp(-1j * tau * np.dot(k, omega)) for k, c in self.terms.items()))

    def expectation(self, tau: float, params: NoiseParams = NoiseParams()) -> complex:
        return complex(sum(c * noise.gaussian_damping(k, tau, params) for k, c in self.terms.items()))


class SymbolicDensityMatrix:
    """8x8 array of phase polynomials, stored densely.

    ``coeffs`` has shape ``(*batch, 8, 8, L, L, L)`` with ``L = 2 * radius + 1``;
    ``coeffs[..., a, b, i, j, l]`` is the coefficient of phase vector
    ``(i - radius, j - radius, l - radius)`` in entry (a, b).  Leading batch
    axes let several initial operators be propagated together.
    """

    def __init__(self, coeffs: np.ndarray, radius: int):
        side = 2 * radius + 1
        if coeffs.shape[-5:] != (DIM, DIM, side, side, side):
            raise ValueError(f"coefficient array shape {coeffs.shape} does not match radius {radius}")
        self.coeffs = coeffs
        self.radius = radius

    @classmethod
    def from_operator(cls, op: np.ndarray) -> "SymbolicDensityMatrix":
        op = np.asarray(op)
        return cls(op[..., None, None, None].copy(), 0)

    @classmethod
    def from_state(cls, psi: np.ndarray) -> "SymbolicDensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls.from_operator(np.outer(psi, psi.conj()))

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-5]

    def _keys(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1)

    def entry(self, a: int, b: int, index: tuple[int, ...] = ()) -> PhasePolynomial:
        cube = self.coeffs[index + (a, b)]
        nz = np.argwhere(cube != 0)
        return PhasePolynomial({tuple(i - self.radius): cube[tuple(i)] for i in nz})

    def trace_polynomial(self, index: tuple[int, ...] = ()) -> PhasePolynomial:
        out = PhasePolynomial()
        for a in range(DIM):
            out = out + self.entry(a, a, index)
        return out

    def term_counts(self) -> np.ndarray:
        """Number of stored terms per entry, shape ``(*batch, 8, 8)``."""
        return np.count_nonzero(self.coeffs, axis=(-3, -2, -1))

    def evaluate(self, omega, tau: float) -> np.ndarray:
        """Numeric density matrix for one fixed noise realization."""
        omega = np.asarray(omega, dtype=float)
        k = self._keys()
        factors = [np.exp(-1j * tau * k * w) for w in omega]
        return np.einsum("...xyz,x,y,z->...", self.coeffs, *factors)

    def average(self, tau: float, params: NoiseParams = NoiseParams()) -> np.ndarray:
        """Gaussian-averaged density matrix."""
        g = noise.damping_1d(self._keys(), tau, params.t2_star)
        return np.einsum("...xyz,x,y,z->...", self.coeffs, g, g, g)


def symbolic_dephase(sdm: SymbolicDensityMatrix) -> SymbolicDensityMatrix:
    """One dephasing segment: shift every term of entry (a, b) by its phase-index step."""
    r, side = sdm.radius, 2 * sdm.radius + 1
    old = sdm.coeffs.reshape(sdm.batch_shape + (DIM * DIM, side, side, side))
    new = np.zeros(sdm.batch_shape + (DIM * DIM, side + 2, side + 2, side + 2), dtype=old.dtype)
    shifts = ENTRY_SHIFTS.reshape(DIM * DIM, N_QUBITS)
    for shift in np.unique(shifts, axis=0):
        idx = np.flatnonzero((shifts == shift).all(axis=1))
        s0, s1, s2 = (slice(1 + d, 1 + d + side) for d in shift)
        new[..., idx, s0, s1, s2] = old[..., idx, :, :, :]
    return SymbolicDensityMatrix(new.reshape(sdm.batch_shape + (DIM, DIM) + new.shape[-3:]), r + 1)


def _superop_matrix(ch) -> np.ndarray:
    sup = ch.superoperator if isinstance(ch, KrausChannel) else np.asarray(ch)
    if np.max(np.abs(sup.imag)) == 0:
        sup = np.ascontiguousarray(sup.real)
    return sup


def symbolic_apply_channel(sdm: SymbolicDensityMatrix, ch) -> SymbolicDensityMatrix:
    """new(a, b) = sum_{c,d} T[(a,b),(c,d)] old(c, d), T the 64x64 superoperator.

    ``ch`` is a ``KrausChannel`` or a precomputed superoperator matrix.
    """
    sup = _superop_matrix(ch)
    side = 2 * sdm.radius + 1
    flat = sdm.coeffs.reshape(sdm.batch_shape + (DIM * DIM, side**3))
    out = np.matmul(sup, flat)
    out[np.abs(out) < PRUNE_THRESHOLD] = 0
    return SymbolicDensityMatrix(out.reshape(sdm.coeffs.shape), sdm.radius)


# -- readout -------------------------------------------------------------------


@lru_cache(maxsize=None)
def _design_readout(qubit_order: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Logical basis operators and the weights that turn them into the design-averaged fidelity.

    Returns ``(basis, weights)``: ``basis[e]`` is |i_L><j_L| for e = 2i + j and
    ``sum_e,a,b weights[e,a,b] * Phi(basis[e])[a,b]`` equals the mean over the six
    design states of <psi| Phi(|psi><psi|) |psi>, by linearity of Phi.
    """
    code = build_code(qubit_order)
    logical = np.array([code.zero_L, code.one_L])
    basis = np.einsum("ia,jb->ijab", logical, logical.conj()).reshape(4, DIM, DIM).real
    weights = np.zeros((4, DIM, DIM), dtype=complex)
    design = logical_two_design()
    for state in design:
        amp = state.amplitudes
        psi = state.vector(code)
        coeff = np.outer(amp, amp.conj()).reshape(4)
        weights += coeff[:, None, None] * np.outer(psi.conj(), psi)[None]
    weights /= len(design)
    return basis, weights


def propagate(
    p_fb: float, p_meas: float, n_rounds: int, code: PhaseFlipCode | None = None
) -> Iterator[SymbolicDensityMatrix]:
    """Yield the propagated logical basis operators after each of ``n_rounds`` rounds."""
    code = code or build_code()
    basis, _ = _design_readout(code.qubit_order)
    sup = _superop_matrix(build_opt_recovery(p_fb, p_meas, code))
    sdm = SymbolicDensityMatrix.from_operator(basis)
    for _ in range(n_rounds):
        sdm = symbolic_apply_channel(symbolic_dephase(sdm), sup)
        yield sdm


def fidelity_cube(sdm: SymbolicDensityMatrix, code: PhaseFlipCode | None = None) -> np.ndarray:
    """Phase-indexed coefficients of the design-averaged fidelity.

    The cube satisfies F(-k) = conj(F(k)); against an even damping only the
    real part contributes, which is what is returned.
    """
    code = code or build_code()
    _, weights = _design_readout(code.qubit_order)
    return np.einsum("eab,eabxyz->xyz", weights, sdm.coeffs).real


def readout(cube: np.ndarray, tau, t2_star: float = 1.0) -> np.ndarray:
    """Gaussian average of a fidelity cube for one or several segment lengths."""
    radius = (cube.shape[0] - 1) // 2
    k = np.arange(-radius, radius + 1)
    tau = np.asarray(tau, dtype=float)
    g = noise.damping_1d(k[None, :], tau.reshape(-1, 1), t2_star)
    out = np.einsum("xyz,tx,ty,tz->t", cube, g, g, g)
    return out.reshape(tau.shape)


def average_fidelity(params: ExperimentParams, code: PhaseFlipCode | None = None) -> float:
    """State-averaged fidelity after n rounds of (dephase, R_opt)."""
    if params.n > N_MAX_SYMBOLIC:
        raise ValueError(
            f"n = {params.n} exceeds the symbolic limit {N_MAX_SYMBOLIC}; use the quadrature engine"
        )
    code = code or build_code()
    for sdm in propagate(params.p_fb, params.p_meas, params.n, code):
        pass
    return float(readout(fidelity_cube(sdm, code), params.tau))


def pfb_nodes(count: int) -> np.ndarray:
    """Chebyshev-Lobatto points on [0, 1] (endpoints included)."""
    if count == 1:
        return np.array([0.5])
    return 0.5 - 0.5 * np.cos(np.pi * np.arange(count) / (count - 1))


class FidelitySurface:
    """F_n(p_fb) for one p_meas and all n <= n_max, at any x.

    The symbolic state after m rounds does not depend on x (only the
    readout does), and rounds are shared between different n, so one
    propagation per p_fb node serves every (n, x) pair.
    """

    def __init__(self, p_meas: float, n_max: int, code: PhaseFlipCode | None = None):
        if not 1 <= n_max <= N_MAX_SYMBOLIC:
            raise ValueError(f"n_max must lie in [1, {N_MAX_SYMBOLIC}], got {n_max}")
        self.p_meas = _check_probability("p_meas", p_meas)
        self.n_max = int(n_max)
        self.code = code or build_code()
        self.nodes = pfb_nodes(self.n_max + 1)
        # cubes[i][n - 1]: fidelity cube after n rounds at p_fb = nodes[i]
        self.cubes = [
            [fidelity_cube(sdm, self.code) for sdm in propagate(p, self.p_meas, self.n_max, self.code)]
            for p in self.nodes
        ]

    def node_values(self, n: int, x: float) -> np.ndarray:
        if not 1 <= n <= self.n_max:
            raise ValueError(f"n must lie in [1, {self.n_max}], got {n}")
        return np.array([readout(cubes[n - 1], x / n) for cubes in self.cubes])

    def coefficients(self, n: int, x: float) -> np.ndarray:
        """Ascending coefficients c_0..c_n of F_n as a polynomial in p_fb."""
        vander = np.vander(self.nodes, n + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(vander, self.node_values(n, x), rcond=None)
        return coef


def fidelity_vs_pfb_polynomial(
    n: int, p_meas: float, x: float, code: PhaseFlipCode | None = None
) -> np.ndarray:
    """Coefficients of F_n(p_fb) from n + 1 node evaluations (Vandermonde solve)."""
    ExperimentParams(n, 0.0, p_meas, x)
    if n > N_MAX_SYMBOLIC:
        raise ValueError(f"n = {n} exceeds the symbolic limit {N_MAX_SYMBOLIC}")
    return FidelitySurface(p_meas, n, code).coefficients(n, x)
