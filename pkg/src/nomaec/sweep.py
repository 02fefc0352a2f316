"""Parameter sweeps and per-figure datasets written as CSV.

Rows are produced in the lexicographic order of the grids (rho_db, then
beta1, beta2, p1). Monte Carlo rows draw from stream ``row index`` of the
configured seed, so the output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterable, Sequence

from .capacity import PowerAllocation, Snr, all_ecs
from .errors import AccuracyFailure, DomainError

SWEEP_COLUMNS = (
    "rho_db", "beta1", "beta2", "p1", "p2",
    "ec1_noma", "ec2_noma", "ec1_oma", "ec2_oma", "v_n", "v_o",
    "method", "samples", "seed", "status",
)
OUTPUT_DIR_ENV = "NOMAEC_OUTPUT_DIR"


@dataclass
class SweepConfig:
    rho_db_grid: list[float]
    beta1_grid: list[float] = field(default_factory=lambda: [-1.0])
    beta2_grid: list[float] = field(default_factory=lambda: [-1.0])
    p1_grid: list[float] = field(default_factory=lambda: [0.2])
    method: str = "quadrature"
    mc_samples: int = 10**6
    seed: int = 0
    output_path: str = "sweep.csv"
    workers: int = 1

    def __post_init__(self):
        for name in ("rho_db_grid", "beta1_grid", "beta2_grid", "p1_grid"):
            grid = [float(v) for v in getattr(self, name)]
            if not grid:
                raise DomainError(f"{name} is empty")
            setattr(self, name, grid)
        if any(not 0 < p < 1 for p in self.p1_grid):
            raise DomainError("p1 values must lie in (0, 1)")
        if any(b >= 0 for b in self.beta1_grid + self.beta2_grid):
            raise DomainError("beta values must be negative")
        if self.method not in ("closed_form", "quadrature", "monte_carlo"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.method == "monte_carlo" and self.mc_samples < 1000:
            raise DomainError("monte_carlo needs mc_samples >= 1000")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    def points(self) -> list[tuple[float, float, float, float]]:
        return list(product(self.rho_db_grid, self.beta1_grid, self.beta2_grid, self.p1_grid))


@dataclass
class SweepRow:
    rho_db: float
    beta1: float
    beta2: float
    p1: float
    p2: float
    ec1_noma: float
    ec2_noma: float
    ec1_oma: float
    ec2_oma: float
    v_n: float
    v_o: float
    method: str
    samples: int
    seed: int
    status: str = "ok"


def evaluate_point(rho_db, beta1, beta2, p1, method="quadrature", samples=10**6, seed=0, stream_id=0) -> SweepRow:
    """One sweep row. Accuracy failures are recorded in ``status``, not raised."""
    pa = PowerAllocation(p1)
    base = dict(rho_db=rho_db, beta1=beta1, beta2=beta2, p1=pa.p1, p2=pa.p2, method=method,
                samples=samples if method == "monte_carlo" else 0, seed=seed)
    try:
        ecs = all_ecs(Snr.from_db(rho_db), pa, beta1, beta2, method, samples, seed, stream_id)
    except AccuracyFailure as exc:
        nan = math.nan
        return SweepRow(**base, ec1_noma=nan, ec2_noma=nan, ec1_oma=nan, ec2_oma=nan, v_n=nan, v_o=nan,
                        status=f"accuracy_failure: {exc}")
    notes = [f"{k}: {e.note}" for k, e in ecs.items() if e.note]
    v = {k: e.value for k, e in ecs.items()}
    return SweepRow(
        **base, **v,
        v_n=v["ec1_noma"] + v["ec2_noma"],
        v_o=v["ec1_oma"] + v["ec2_oma"],
        status="; ".join(["fallback " + n for n in notes]) or "ok",
    )


def _eval_task(args):
    return evaluate_point(*args)


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    tasks = [
        (rho_db, b1, b2, p1, config.method, config.mc_samples, config.seed, idx)
        for idx, (rho_db, b1, b2, p1) in enumerate(config.points())
    ]
    if config.workers == 1 or len(tasks) == 1:
        return [_eval_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_eval_task, tasks, chunksize=1))


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: Iterable, columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        d = row if isinstance(row, dict) else asdict(row)
        w.writerow([fmt(d[c]) for c in columns])
    return buf.getvalue()


def write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_sweep(config: SweepConfig) -> tuple[Path, list[SweepRow]]:
    rows = run_sweep(config)
    return write_text(config.output_path, rows_to_csv(rows, SWEEP_COLUMNS)), rows


# ------------------------------------------------------------- config files


def parse_grid(text) -> list[float]:
    """Parse ``"a,b,c"`` or an inclusive range ``"start:stop:step"``."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] == 0:
            raise DomainError(f"range must be start:stop:step with nonzero step, got {text!r}")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n <= 0:
            return []
        return [round(start + i * step, 12) for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def load_config_file(path: str | os.PathLike) -> dict:
    """Read a sweep config: JSON object, or ``key = value`` lines (# comments)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return dict(json.loads(text))
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line is not key=value: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------- figures

FIGURE_BETAS = (-0.5, -1.0, -2.0, -4.0)
GAP_BETAS = (-0.5, -1.0, -2.0)
FIG5_RHO_DB = (1.0, 10.0, 30.0, 40.0, 50.0)
FIG5_BETAS = (-8.0, -6.0, -4.0, -3.0, -2.0, -1.5, -1.0, -0.75, -0.5, -0.25)
FIG9_FIXED = -1.0
FIG9_VARIED = (-0.5, -1.0, -2.0, -4.0)

FIGURE_COLUMNS = {
    "fig2": ("rho_db", "ec1_noma", "ec2_noma", "ec1_oma", "ec2_oma"),
    "fig3": ("rho_db", "beta", "ec1_noma"),
    "fig4": ("rho_db", "beta", "ec2_noma"),
    "fig5": ("rho_db", "beta", "ec1_noma", "ec2_noma", "ec1_oma", "ec2_oma"),
    "fig6": ("rho_db", "beta", "gap1"),
    "fig7": ("rho_db", "beta", "gap2"),
    "fig8": ("rho_db", "beta", "v_n", "v_o"),
    "fig9": ("panel", "rho_db", "beta1", "beta2", "v_n_minus_v_o"),
}


def figure_points(rho_db_grid: Sequence[float]) -> list[tuple[float, float, float]]:
    """All (rho_db, beta1, beta2) points needed by the figure datasets."""
    pts = {(r, b, b) for r in rho_db_grid for b in set(FIGURE_BETAS) | set(GAP_BETAS)}
    pts |= {(r, b, b) for r in FIG5_RHO_DB for b in FIG5_BETAS}
    pts |= {(r, b, FIG9_FIXED) for r in rho_db_grid for b in FIG9_VARIED}
    pts |= {(r, FIG9_FIXED, b) for r in rho_db_grid for b in FIG9_VARIED}
    return sorted(pts)


def figure_datasets(rho_db_grid: Sequence[float], p1: float = 0.2, method: str = "quadrature",
                    samples: int = 10**6, seed: int = 0, workers: int = 1) -> dict[str, list[dict]]:
    points = figure_points(rho_db_grid)
    tasks = [(r, b1, b2, p1, method, samples, seed, i) for i, (r, b1, b2) in enumerate(points)]
    if workers == 1:
        rows = [_eval_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_eval_task, tasks, chunksize=1))
    at = {(r.rho_db, r.beta1, r.beta2): r for r in rows}

    def ecs(r, b1, b2):
        row = at[(r, b1, b2)]
        return dict(ec1_noma=row.ec1_noma, ec2_noma=row.ec2_noma, ec1_oma=row.ec1_oma, ec2_oma=row.ec2_oma)

    out: dict[str, list[dict]] = {k: [] for k in FIGURE_COLUMNS}
    for r in rho_db_grid:
        out["fig2"].append(dict(rho_db=r, **ecs(r, -1.0, -1.0)))
    for b in FIGURE_BETAS:
        for r in rho_db_grid:
            e = ecs(r, b, b)
            out["fig3"].append(dict(rho_db=r, beta=b, ec1_noma=e["ec1_noma"]))
            out["fig4"].append(dict(rho_db=r, beta=b, ec2_noma=e["ec2_noma"]))
            out["fig8"].append(dict(rho_db=r, beta=b, v_n=e["ec1_noma"] + e["ec2_noma"],
                                    v_o=e["ec1_oma"] + e["ec2_oma"]))
    for r in FIG5_RHO_DB:
        for b in FIG5_BETAS:
            out["fig5"].append(dict(rho_db=r, beta=b, **ecs(r, b, b)))
    for b in GAP_BETAS:
        for r in rho_db_grid:
            e = ecs(r, b, b)
            out["fig6"].append(dict(rho_db=r, beta=b, gap1=e["ec1_noma"] - e["ec1_oma"]))
            out["fig7"].append(dict(rho_db=r, beta=b, gap2=e["ec2_noma"] - e["ec2_oma"]))
    for panel, pairs in (("weak_varies", [(b, FIG9_FIXED) for b in FIG9_VARIED]),
                         ("strong_varies", [(FIG9_FIXED, b) for b in FIG9_VARIED])):
        for b1, b2 in pairs:
            for r in rho_db_grid:
                e = ecs(r, b1, b2)
                gap = (e["ec1_noma"] + e["ec2_noma"]) - (e["ec1_oma"] + e["ec2_oma"])
                out["fig9"].append(dict(panel=panel, rho_db=r, beta1=b1, beta2=b2, v_n_minus_v_o=gap))
    return out


def write_figures(outdir: str | os.PathLike, **kwargs) -> list[Path]:
    data = figure_datasets(**kwargs)
    outdir = Path(outdir)
    return [write_text(outdir / f"{name}.csv", rows_to_csv(rows, FIGURE_COLUMNS[name])) for name, rows in data.items()]
