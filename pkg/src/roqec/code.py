"""Three-qubit phase-flip code and its recovery channels.

Basis convention: computational basis of three qubits with qubit 1 as the
most significant bit of the basis index.  All code objects are real in this
basis; they are stored as complex arrays for uniformity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

DIM = 8
N_QUBITS = 3

_I2 = np.eye(2)
_Z = np.diag([1.0, -1.0])
_PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
_MINUS = np.array([1.0, -1.0]) / np.sqrt(2)


def _kron(*ops: np.ndarray) -> np.ndarray:
    out = np.ones((1,) * ops[0].ndim)
    for op in ops:
        out = np.kron(out, op)
    return out


def pauli_z(qubit: int) -> np.ndarray:
    """Z on ``qubit`` (0-based, qubit 0 most significant) as an 8x8 matrix."""
    factors = [_I2] * N_QUBITS
    factors[qubit] = _Z
    return _kron(*factors).astype(complex)


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or np.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class PhaseFlipCode:
    """Codewords, syndrome projectors and correction unitaries.

    ``projectors[j]`` and ``corrections[j]`` follow the syndrome labelling
    j = 0 (no error) and j = 1, 2, 3 (phase flip on the j-th qubit).
    ``qubit_order`` relabels which physical qubit carries label j; the code
    is symmetric so any order yields an equivalent code.
    """

    zero_L: np.ndarray
    one_L: np.ndarray
    projectors: np.ndarray
    corrections: np.ndarray
    qubit_order: tuple[int, int, int] = (0, 1, 2)

    @property
    def code_projector(self) -> np.ndarray:
        return self.projectors[0]


def build_code(qubit_order: Sequence[int] = (0, 1, 2)) -> PhaseFlipCode:
    """Construct |0_L> = |+++>, |1_L> = |--->, {P_j} and {U_j}."""
    order = tuple(int(q) for q in qubit_order)
    if sorted(order) != [0, 1, 2]:
        raise ValueError(f"qubit_order must be a permutation of (0, 1, 2), got {order}")
    zero_L = _kron(_PLUS, _PLUS, _PLUS).astype(complex)
    one_L = _kron(_MINUS, _MINUS, _MINUS).astype(complex)
    p0 = np.outer(zero_L, zero_L.conj()) + np.outer(one_L, one_L.conj())

    corrections = [np.eye(DIM, dtype=complex)] + [pauli_z(q) for q in order]
    projectors = [p0] + [u @ p0 @ u for u in corrections[1:]]
    return PhaseFlipCode(
        zero_L=zero_L,
        one_L=one_L,
        projectors=np.array(projectors),
        corrections=np.array(corrections),
        qubit_order=order,
    )


class ChannelLabel(enum.Enum):
    IDEAL = "ideal"
    FAULTY = "faulty"
    MEASURE_ONLY = "measure_only"
    OPT = "opt"


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map rho -> sum_k K_k rho K_k^dagger on the 8-dim register."""

    kraus_ops: tuple[np.ndarray, ...]
    label: ChannelLabel

    def __post_init__(self):
        for k in self.kraus_ops:
            k.setflags(write=False)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)

    @cached_property
    def superoperator(self) -> np.ndarray:
        """64x64 matrix acting on row-major vec(rho), vec(rho)[8a + b] = rho[a, b]."""
        return sum(np.kron(k, k.conj()) for k in self.kraus_ops)

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ab |a><b| (x) Phi(|a><b|), built from the channel action."""
        choi = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
        for a in range(DIM):
            for b in range(DIM):
                e_ab = np.zeros((DIM, DIM), dtype=complex)
                e_ab[a, b] = 1.0
                choi += np.kron(e_ab, self.apply(e_ab))
        return choi

    def trace_preservation_error(self) -> float:
        gram = sum(k.conj().T @ k for k in self.kraus_ops)
        return float(np.max(np.abs(gram - np.eye(DIM))))

    def min_choi_eigenvalue(self) -> float:
        choi = self.choi()
        return float(np.linalg.eigvalsh((choi + choi.conj().T) / 2).min())

    def is_cptp(self, tp_tol: float = 1e-12, cp_tol: float = 1e-10) -> bool:
        return self.trace_preservation_error() <= tp_tol and self.min_choi_eigenvalue() >= -cp_tol


def build_ideal_recovery(code: PhaseFlipCode | None = None) -> KrausChannel:
    code = code or build_code()
    ops = tuple(u.conj().T @ p for u, p in zip(code.corrections, code.projectors))
    return KrausChannel(ops, ChannelLabel.IDEAL)


def _faulty_ops(code: PhaseFlipCode, p_meas: float) -> list[np.ndarray]:
    ops = []
    for j, u in enumerate(code.corrections):
        for i, p in enumerate(code.projectors):
            # wrong syndromes are reported uniformly over the three alternatives
            weight = (1.0 - p_meas) if i == j else p_meas / 3.0
            ops.append(np.sqrt(weight) * (u.conj().T @ p))
    return ops


def build_faulty_recovery(p_meas: float, code: PhaseFlipCode | None = None) -> KrausChannel:
    """Recovery whose syndrome readout is wrong with probability ``p_meas``."""
    p_meas = _check_probability("p_meas", p_meas)
    code = code or build_code()
    return KrausChannel(tuple(_faulty_ops(code, p_meas)), ChannelLabel.FAULTY)


def build_measure_only(code: PhaseFlipCode | None = None) -> KrausChannel:
    """Parity measurement without feedback: rho -> sum_j P_j rho P_j."""
    code = code or build_code()
    return KrausChannel(tuple(p.copy() for p in code.projectors), ChannelLabel.MEASURE_ONLY)


def build_opt_recovery(
    p_fb: float, p_meas: float, code: PhaseFlipCode | None = None
) -> KrausChannel:
    """Feed back (faultily) with probability ``p_fb``, otherwise only measure."""
    p_fb = _check_probability("p_fb", p_fb)
    p_meas = _check_probability("p_meas", p_meas)
    code = code or build_code()
    ops = [np.sqrt(p_fb) * k for k in _faulty_ops(code, p_meas)]
    ops += [np.sqrt(1.0 - p_fb) * p for p in code.projectors]
    return KrausChannel(tuple(ops), ChannelLabel.OPT)


@dataclass(frozen=True)
class LogicalState:
    """alpha |0_L> + beta |1_L>."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"logical amplitudes must be normalized, |a|^2+|b|^2 = {norm}")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def vector(self, code: PhaseFlipCode | None = None) -> np.ndarray:
        code = code or build_code()
        return self.alpha * code.zero_L + self.beta * code.one_L

    def density_matrix(self, code: PhaseFlipCode | None = None) -> np.ndarray:
        psi = self.vector(code)
        return np.outer(psi, psi.conj())


def logical_two_design() -> list[LogicalState]:
    """The six eigenstates of logical X, Y and Z (a qubit 2-design)."""
    s = 1 / np.sqrt(2)
    return [
        LogicalState(1.0, 0.0),
        LogicalState(0.0, 1.0),
        LogicalState(s, s),
        LogicalState(s, -s),
        LogicalState(s, 1j * s),
        LogicalState(s, -1j * s),
    ]


def is_density_matrix(rho: np.ndarray, tol: float = 1e-12, eig_tol: float = 1e-10) -> bool:
    rho = np.asarray(rho)
    if rho.shape != (DIM, DIM):
        return False
    hermitian = np.max(np.abs(rho - rho.conj().T)) <= tol
    unit_trace = abs(np.trace(rho) - 1.0) <= tol
    return bool(hermitian and unit_trace and np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= -eig_tol)
