"""Maximization of the average fidelity over p_fb and n, and grid sweeps."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .code import _check_probability
from .exact import N_MAX_SYMBOLIC, FidelitySurface
from .oracle import single_qubit_fidelity

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class PfbOptimum:
    n: int
    p_fb_star: float
    f_star: float
    f_at_0: float = float("nan")
    f_at_1: float = float("nan")


@dataclass
class OptimizationResult:
    x: float
    p_meas: float
    per_n: list[PfbOptimum]
    best: PfbOptimum | None
    baseline: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class GridSpec:
    x_min: float = 0.1
    x_max: float = 3.0
    x_steps: int = 59
    pmeas_min: float = 0.0
    pmeas_max: float = 0.5
    pmeas_steps: int = 51
    n_max: int = 10

    def __post_init__(self):
        if self.x_steps < 2 or self.pmeas_steps < 2:
            raise ValueError("grid needs at least 2 steps per axis")
        if not 0 <= self.x_min <= self.x_max:
            raise ValueError(f"x range [{self.x_min}, {self.x_max}] is invalid")
        _check_probability("pmeas_min", self.pmeas_min)
        _check_probability("pmeas_max", self.pmeas_max)
        if self.pmeas_min > self.pmeas_max:
            raise ValueError("pmeas_min exceeds pmeas_max")
        if not 1 <= self.n_max <= N_MAX_SYMBOLIC:
            raise ValueError(f"n_max must lie in [1, {N_MAX_SYMBOLIC}], got {self.n_max}")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.x_steps)

    @property
    def pmeas_values(self) -> np.ndarray:
        return np.linspace(self.pmeas_min, self.pmeas_max, self.pmeas_steps)


def maximize_on_unit_interval(coef) -> tuple[float, float]:
    """Maximize the polynomial sum_m coef[m] p^m over p in [0, 1].

    Candidates are both endpoints and every real critical point inside the
    interval; ties (within ``TIE_TOL``) go to the larger p.
    """
    coef = np.asarray(coef, dtype=float)
    scale = np.abs(coef).max(initial=0.0)
    # high-order terms this small cannot move the value on [0, 1]
    poly = np.polynomial.Polynomial(coef).trim(1e-15 * scale)
    candidates = [0.0, 1.0]
    if poly.degree() >= 2:
        deriv = poly.deriv()
        curv = deriv.deriv()
        for root in deriv.roots():
            if abs(root.imag) > 1e-7 or not -0.5 < root.real < 1.5:
                continue
            r = root.real
            # one Newton step against the root finder's error
            d2 = curv(r)
            if d2 != 0:
                r -= deriv(r) / d2
            if 0.0 < r < 1.0:
                candidates.append(float(r))
    values = poly(np.array(candidates))
    top = values.max()
    winners = [p for p, v in zip(candidates, values) if v >= top - TIE_TOL]
    p_star = max(winners)
    return p_star, float(poly(p_star))


def optimize_pfb(n: int, p_meas: float, x: float, surface: FidelitySurface | None = None) -> PfbOptimum:
    """Best feedback probability for ``n`` rounds at (p_meas, x)."""
    if surface is None:
        surface = FidelitySurface(p_meas, n)
    elif surface.p_meas != p_meas:
        raise ValueError(f"surface was built for p_meas={surface.p_meas}, not {p_meas}")
    coef = surface.coefficients(n, x)
    p_star, f_star = maximize_on_unit_interval(coef)
    poly = np.polynomial.Polynomial(coef)
    return PfbOptimum(n, p_star, f_star, float(poly(0.0)), float(poly(1.0)))


def optimize_cell(
    p_meas: float, x: float, n_max: int = 10, surface: FidelitySurface | None = None
) -> OptimizationResult:
    """Optimize over p_fb for each n <= n_max, then over n (ties toward larger n)."""
    if surface is None:
        surface = FidelitySurface(p_meas, n_max)
    per_n = [optimize_pfb(n, p_meas, x, surface) for n in range(1, n_max + 1)]
    top = max(o.f_star for o in per_n)
    best = [o for o in per_n if o.f_star >= top - TIE_TOL][-1]
    return OptimizationResult(float(x), float(p_meas), per_n, best, single_qubit_fidelity(x))


def _failed(x: float, p_meas: float, exc: Exception) -> OptimizationResult:
    return OptimizationResult(float(x), float(p_meas), [], None, single_qubit_fidelity(x), f"error: {exc}")


def _sweep_column(p_meas: float, xs: np.ndarray, n_max: int) -> list[OptimizationResult]:
    """All x cells for one p_meas, sharing one fidelity surface."""
    try:
        surface = FidelitySurface(p_meas, n_max)
    except Exception as exc:  # noqa: BLE001 - a broken column must not abort the sweep
        log.warning("surface for p_meas=%s failed: %s", p_meas, exc)
        return [_failed(x, p_meas, exc) for x in xs]
    out = []
    for x in xs:
        try:
            out.append(optimize_cell(p_meas, x, n_max, surface))
        except Exception as exc:  # noqa: BLE001
            log.warning("cell (x=%s, p_meas=%s) failed: %s", x, p_meas, exc)
            out.append(_failed(x, p_meas, exc))
    return out


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("ROQEC_THREADS", "0") or 0) or os.cpu_count() or 1
    return max(1, int(threads))


def sweep_grid(grid: GridSpec = GridSpec(), threads: int | None = None) -> list[OptimizationResult]:
    """Optimize every (x, p_meas) cell; results are row-major with x outermost."""
    xs, pms = grid.xs, grid.pmeas_values
    threads = resolve_threads(threads)
    if threads == 1:
        columns = [_sweep_column(p, xs, grid.n_max) for p in pms]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(_sweep_column, pms, [xs] * len(pms), [grid.n_max] * len(pms)))
    return [columns[j][i] for i in range(len(xs)) for j in range(len(pms))]
