"""Self-checks run by ``roqec validate``: cross-engine and closed-form agreement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .code import (
    build_faulty_recovery,
    build_ideal_recovery,
    build_measure_only,
    build_opt_recovery,
    logical_two_design,
)
from .exact import ExperimentParams, average_fidelity
from .optimize import optimize_cell
from .oracle import (
    MonteCarloSpec,
    fidelity_fixed_noise,
    monte_carlo_fidelity,
    quadrature_fidelity,
    single_qubit_fidelity,
    single_qubit_monte_carlo,
)

REF_POINT = dict(n=10, p_fb=0.488, p_meas=0.22, x=2.0)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def closed_form_f1(p_fb, p_meas, x):
    """Average fidelity after a single recovery, in closed form."""
    g = np.exp(-np.asarray(x, dtype=float) ** 2)
    return (
        (1 + p_fb * (3 - 4 * p_meas)) / 6
        + 0.5 * g**2 * (1 - p_fb)
        + 0.25 * g * (1 + p_fb * (1 - 2 * p_meas))
        + g**3 * (1 + p_fb * (2 * p_meas - 3)) / 12
    )


def _random_params(rng, count, n_max):
    for _ in range(count):
        yield ExperimentParams(int(rng.integers(1, n_max + 1)), rng.random(), rng.random(), 3 * rng.random())


def check_ref_point() -> Check:
    cell = optimize_cell(REF_POINT["p_meas"], REF_POINT["x"], 10)
    b = cell.best
    exact = average_fidelity(ExperimentParams(**REF_POINT))
    quad = quadrature_fidelity(ExperimentParams(**REF_POINT))
    ok = b.n == 10 and abs(b.p_fb_star - 0.488) <= 0.01 and abs(b.f_star - 0.674) <= 0.002
    ok = ok and abs(exact - 0.674) <= 0.002 and abs(quad - 0.674) <= 0.002
    return Check(
        "ref_point",
        ok,
        f"best n={b.n} p_fb*={b.p_fb_star:.4f} F_max={b.f_star:.5f}; "
        f"F(n=10, p_fb=0.488): exact={exact:.6f} quadrature={quad:.6f}",
    )


def check_closed_form_f1(count: int = 10, quad_count: int = 3, seed: int = 1) -> Check:
    rng = np.random.default_rng(seed)
    worst_exact = worst_quad = 0.0
    for i in range(count):
        p, m, x = rng.random(), rng.random(), 3 * rng.random()
        ref = closed_form_f1(p, m, x)
        params = ExperimentParams(1, p, m, x)
        worst_exact = max(worst_exact, abs(average_fidelity(params) - ref))
        if i < quad_count:
            worst_quad = max(worst_quad, abs(quadrature_fidelity(params) - ref))
    ok = worst_exact <= 1e-9 and worst_quad <= 1e-7
    return Check("closed_form_f1", ok, f"max |exact-ref|={worst_exact:.2e}, max |quad-ref|={worst_quad:.2e}")


def check_engines(count: int = 5, mc_samples: int = 10_000, seed: int = 2) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_z = 0.0
    for i, params in enumerate(_random_params(rng, count, 5)):
        exact = average_fidelity(params)
        worst = max(worst, abs(exact - quadrature_fidelity(params)))
        if i == 0:
            mean, se = monte_carlo_fidelity(params, MonteCarloSpec(mc_samples, seed))
            worst_z = abs(mean - exact) / se
    return Check("engines", worst <= 1e-6 and worst_z <= 4, f"max |exact-quad|={worst:.2e}, MC z={worst_z:.2f}")


def check_cptp() -> Check:
    probs = (0.0, 0.22, 0.5, 1.0)
    channels = [build_ideal_recovery(), build_measure_only()]
    channels += [build_faulty_recovery(m) for m in probs]
    channels += [build_opt_recovery(p, m) for p in probs for m in probs]
    tp = max(ch.trace_preservation_error() for ch in channels)
    cp = min(ch.min_choi_eigenvalue() for ch in channels)
    return Check("cptp", tp <= 1e-12 and cp >= -1e-10, f"{len(channels)} channels, TP err={tp:.1e}, min Choi eig={cp:.1e}")


def check_zero_time() -> Check:
    grid = np.linspace(0, 1, 5)
    worst = 0.0
    design = logical_two_design()
    for p in grid:
        for m in grid:
            params = ExperimentParams(1, p, m, 0.0)
            brute = np.mean([fidelity_fixed_noise(params, np.zeros(3), s) for s in design])
            target = 1 - p * m
            worst = max(worst, abs(average_fidelity(params) - target), abs(brute - target))
    return Check("zero_time", worst <= 1e-12, f"max deviation from 1 - p_fb p_meas = {worst:.1e}")


def check_zeno(p_meas: float = 0.3, ns=(1, 2, 5, 10, 20, 50, 100)) -> Check:
    values = [quadrature_fidelity(ExperimentParams(n, 0.0, p_meas, 1.0)) for n in ns]
    ok = all(b > a for a, b in zip(values, values[1:]))
    return Check("zeno", ok, ", ".join(f"F_{n}={v:.6f}" for n, v in zip(ns, values)))


def check_baseline(samples: int = 20_000, seed: int = 3) -> Check:
    zs = []
    for x in (0.5, 1.0, 2.0):
        mean, se = single_qubit_monte_carlo(x, samples, seed)
        zs.append(abs(mean - single_qubit_fidelity(x)) / se)
    at2 = single_qubit_fidelity(2.0)
    ok = max(zs) <= 4 and abs(at2 - 0.67277) <= 1e-5 and at2 < 0.674
    return Check("baseline", ok, f"max z={max(zs):.2f}, F_single(2)={at2:.5f}")


def check_phases() -> Check:
    feedback = optimize_cell(0.0, 1.5).best.p_fb_star
    zeno = optimize_cell(0.45, 0.3).best.p_fb_star
    hybrid = optimize_cell(0.22, 2.0).best.p_fb_star
    ok = feedback == 1.0 and zeno == 0.0 and 0.05 < hybrid < 0.95
    return Check("phases", ok, f"p_fb*: (x=1.5, p_meas=0)={feedback}, (0.3, 0.45)={zeno}, (2, 0.22)={hybrid:.4f}")


QUICK_CHECKS: list[Callable[[], Check]] = [
    check_ref_point,
    check_closed_form_f1,
    check_engines,
    check_cptp,
    check_zero_time,
    check_zeno,
    check_baseline,
    check_phases,
]


def run_checks() -> list[Check]:
    out = []
    for fn in QUICK_CHECKS:
        try:
            out.append(fn())
        except Exception as exc:  # noqa: BLE001 - a crashing check is a failing check
            out.append(Check(fn.__name__.removeprefix("check_"), False, f"raised {exc!r}"))
    return out
