"""Flat-file serialization of results (CSV and JSON)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Any, Iterable, Mapping

from .optimize import OptimizationResult, PfbOptimum

MAP_COLUMNS = ["x", "pmeas", "best_n", "best_pfb", "fmax", "baseline", "status"]
PER_N_COLUMNS = ["x", "pmeas", "n", "pfb_n", "f_n"]


@dataclass
class ResultRecord:
    x: float
    p_meas: float
    n: int
    p_fb: float
    fidelity: float
    engine: str
    baseline: float
    tolerance_flag: str

    def __post_init__(self):
        if not -1e-9 <= self.fidelity <= 1 + 1e-9:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")


RECORD_COLUMNS = list(ResultRecord.__dataclass_fields__)


def fmt(value: Any) -> str:
    """Fixed 12-significant-digit text for floats; other values verbatim."""
    if isinstance(value, float):
        return format(value, ".12g")
    return "" if value is None else str(value)


def config_header(config: Mapping[str, Any]) -> str:
    return "".join(f"# {key} = {json.dumps(config[key])}\n" for key in sorted(config))


def write_csv(rows: Iterable[Iterable[Any]], columns: list[str], config: Mapping[str, Any] | None = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write(config_header(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, str]]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def record_row(rec: ResultRecord) -> list[Any]:
    return [getattr(rec, c) for c in RECORD_COLUMNS]


def records_to_json(records: list[ResultRecord], config: Mapping[str, Any] | None = None) -> str:
    payload: dict[str, Any] = {"results": [asdict(r) for r in records]}
    if config is not None:
        payload["config"] = dict(config)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _optimum_to_dict(o: PfbOptimum) -> dict[str, Any]:
    return asdict(o)


def result_to_dict(result: OptimizationResult) -> dict[str, Any]:
    return {
        "x": result.x,
        "p_meas": result.p_meas,
        "baseline": result.baseline,
        "status": result.status,
        "best": None if result.best is None else _optimum_to_dict(result.best),
        "per_n": [_optimum_to_dict(o) for o in result.per_n],
    }


def result_from_dict(data: Mapping[str, Any]) -> OptimizationResult:
    best = data.get("best")
    return OptimizationResult(
        x=data["x"],
        p_meas=data["p_meas"],
        per_n=[PfbOptimum(**o) for o in data["per_n"]],
        best=None if best is None else PfbOptimum(**best),
        baseline=data["baseline"],
        status=data.get("status", "ok"),
    )


def map_rows(results: Iterable[OptimizationResult]) -> list[list[Any]]:
    rows = []
    for r in results:
        if r.best is None:
            rows.append([r.x, r.p_meas, None, None, None, r.baseline, r.status])
        else:
            rows.append([r.x, r.p_meas, r.best.n, r.best.p_fb_star, r.best.f_star, r.baseline, r.status])
    return rows


def per_n_rows(results: Iterable[OptimizationResult]) -> list[list[Any]]:
    return [[r.x, r.p_meas, o.n, o.p_fb_star, o.f_star] for r in results for o in r.per_n]
