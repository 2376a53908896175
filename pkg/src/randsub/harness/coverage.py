"""Monte Carlo coverage of the true mean, one row per level and method.

Replication ``r`` draws its sample from the data stream of ``r`` and runs
inference on ``RngStream.for_replication(seed, r, Purpose.INFERENCE)``
with the same substream layout as :func:`randsub.meantest.mean_test` and
:func:`randsub.meantest.confidence_function`.  Nothing else is random, so
the output does not depend on how replications are spread over workers.

Two coverage rules are available:

``test``
    covered when ``T_n(mu0) <= c`` for one fresh bundle at level ``alpha``
``set``
    covered when ``q(mu0; alpha - beta) >= 1 - alpha``
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core import CriticalValue, normal_quantile
from ..meantest import QuadraticKernel, bias_adjustment, order_statistic_critical_value
from ..permute import Purpose, RngStream, draw_bundle
from .designs import DesignContext
from .experiment import CoverageMode, ExperimentSpec

__all__ = [
    "CoverageRow",
    "CoverageTable",
    "coverage_counts",
    "replicate",
    "run_coverage",
    "write_rows",
]


@dataclass(frozen=True)
class CoverageRow:
    design: dict
    level: float
    method: CriticalValue
    covered: int
    mc_reps: int
    mu: float | None = None
    wall_time_s: float | None = None

    @property
    def coverage(self) -> float:
        return self.covered / self.mc_reps

    @property
    def mc_se(self) -> float:
        p = self.coverage
        return math.sqrt(p * (1.0 - p) / self.mc_reps)

    def sort_key(self):
        return (self.mu if self.mu is not None else 0.0, -self.level, self.method.value)


def replicate(ctx: DesignContext, rep: int, grid: np.ndarray) -> np.ndarray:
    """Coverage indicators for one replication, shape ``(levels, methods, grid)``."""
    spec = ctx.spec
    x = ctx.draw(rep)
    n = x.shape[0]
    cfg = spec.inference_config(spec.levels[0]).resolve(n)
    R, b = cfg.R, cfg.b_n
    base = RngStream.for_replication(spec.seed, rep, Purpose.INFERENCE)
    kernel = QuadraticKernel(x, cfg.rel_tol)
    shifts = np.stack([kernel.shift(mu) for mu in grid])
    bias = bias_adjustment(R, b, n)

    if spec.coverage_mode is CoverageMode.TEST:
        bundle = draw_bundle(base.substream(Purpose.TEST), n, b, R)
        A, B = kernel.summarize(bundle)
    else:
        A, B = kernel.bundle_summaries(base.substream(Purpose.CONFIDENCE), R, b, spec.S)
    t = kernel.s_values(A, B, shifts, R, b) - bias  # (grid, draws)

    draws = None
    if CriticalValue.PERMUTATION in spec.methods:
        draws = kernel.bundle_s_values(base.substream(Purpose.CRITICAL), R, b, spec.L)

    out = np.zeros((len(spec.levels), len(spec.methods), len(grid)), dtype=bool)
    for i, alpha in enumerate(spec.levels):
        level = alpha if spec.coverage_mode is CoverageMode.TEST else alpha - spec.beta
        for j, method in enumerate(spec.methods):
            if method is CriticalValue.PERMUTATION:
                c = order_statistic_critical_value(draws, level)
            else:
                c = normal_quantile(1.0 - level)
            if spec.coverage_mode is CoverageMode.TEST:
                out[i, j] = t[:, 0] <= c
            else:
                out[i, j] = np.mean(t <= c, axis=1) >= 1.0 - alpha
    return out


_WORKER_CTX: DesignContext | None = None
_WORKER_GRID: np.ndarray | None = None


def _init_worker(ctx, grid):
    global _WORKER_CTX, _WORKER_GRID
    _WORKER_CTX, _WORKER_GRID = ctx, grid


def _run_rep(rep: int) -> np.ndarray:
    return replicate(_WORKER_CTX, rep, _WORKER_GRID)


def coverage_counts(ctx: DesignContext, grid, threads: int = 1) -> np.ndarray:
    """Number of covering replications, shape ``(levels, methods, grid)``."""
    grid = np.asarray(grid, dtype=float).reshape(-1)
    reps = range(ctx.spec.mc_reps)
    if threads <= 1:
        results = (replicate(ctx, r, grid) for r in reps)
        total = None
        for res in results:
            total = res.astype(np.int64) if total is None else total + res
        return total
    chunk = max(1, ctx.spec.mc_reps // (8 * threads))
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                             initargs=(ctx, grid)) as pool:
        total = np.zeros((len(ctx.spec.levels), len(ctx.spec.methods), grid.size), dtype=np.int64)
        for res in pool.map(_run_rep, reps, chunksize=chunk):
            total += res
    return total


@dataclass(frozen=True)
class CoverageTable:
    rows: list[CoverageRow]
    curve: bool


def run_coverage(ctx: DesignContext, grid=None, threads: int = 1) -> CoverageTable:
    """Coverage of each point in ``grid`` (default: the true mean 0 only)."""
    spec: ExperimentSpec = ctx.spec
    curve = grid is not None
    grid = np.array([0.0]) if grid is None else np.asarray(grid, dtype=float).reshape(-1)
    start = time.perf_counter()
    counts = coverage_counts(ctx, grid, threads)
    elapsed = time.perf_counter() - start
    rows = []
    for i, alpha in enumerate(spec.levels):
        for j, method in enumerate(spec.methods):
            for k, mu in enumerate(grid):
                rows.append(CoverageRow(spec.design_fields(), round(1.0 - alpha, 12), method,
                                        int(counts[i, j, k]), spec.mc_reps,
                                        float(mu) if curve else None, elapsed))
    rows.sort(key=CoverageRow.sort_key)
    return CoverageTable(rows, curve)


def _g6(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.6g}"


DESIGN_COLUMNS = ("design", "n", "lambda_graph", "m_attach", "c", "rho")


def write_rows(table: CoverageTable, coverage_mode: CoverageMode, timing: bool = False) -> str:
    """RFC 4180 CSV text with one header row."""
    header = list(DESIGN_COLUMNS) + ["coverage_mode"]
    if table.curve:
        header.append("mu")
    header += ["level", "method", "coverage", "mc_se", "mc_reps"]
    if timing:
        header.append("wall_time_s")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in table.rows:
        d = row.design
        out = [d["design"]] + [_g6(d[k]) for k in DESIGN_COLUMNS[1:]] + [coverage_mode.value]
        if table.curve:
            out.append(_g6(row.mu))
        out += [_g6(row.level), row.method.value, _g6(row.coverage), _g6(row.mc_se),
                str(row.mc_reps)]
        if timing:
            out.append(f"{row.wall_time_s:.3f}")
        writer.writerow(out)
    return buf.getvalue()
