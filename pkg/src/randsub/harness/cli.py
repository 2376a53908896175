"""Command-line entry point: ``randsub {test,simulate,coverage-curve,lambda}``.

Exit codes: 0 success, 2 input error, 3 degenerate covariance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..core import CriticalValue, InferenceConfig, NotPositiveDefinite, Sample, normal_quantile
from ..graphgen import read_edge_list, write_edge_list
from ..lambda_oracle import MAX_EXACT_N, LambdaMethod, lambda_k
from ..meantest import QuadraticKernel, bias_adjustment, confidence_set, permutation_critical_value
from ..permute import Purpose, RngStream, draw_bundle
from .coverage import run_coverage, write_rows
from .designs import build_context, design_covariance
from .experiment import CoverageMode, ExperimentSpec, SpecError

log = logging.getLogger("randsub")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


class InputError(ValueError):
    pass


# -- data input ---------------------------------------------------------

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix(text: str, source: str = "<data>", header: str = "auto") -> np.ndarray:
    """Numeric matrix from CSV text.

    ``header`` is ``yes``, ``no`` or ``auto``; in auto mode a first line
    without any numeric cell is taken as a header.
    """
    rows, width = [], None
    reader = csv.reader(io.StringIO(text))
    first = True
    for cells in reader:
        lineno = reader.line_num
        cells = [c.strip() for c in cells]
        if not cells or all(c == "" for c in cells):
            continue
        if first:
            first = False
            if header == "yes" or (header == "auto" and not any(_is_number(c) for c in cells)):
                continue
        values = []
        for col, cell in enumerate(cells, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise InputError(f"{source}: line {lineno}, column {col}: "
                                 f"non-numeric cell {cell!r}") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise InputError(f"{source}: line {lineno}: expected {width} columns, got {len(values)}")
        rows.append(values)
    if not rows:
        raise InputError(f"{source}: no data rows")
    return np.array(rows)


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"bad vector {text!r}") from None


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise InputError(f"grid must look like start:stop:count, got {text!r}") from None


# -- subcommands --------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_test(args) -> int:
    path = Path(args.data)
    source = str(path)
    try:
        text = sys.stdin.read() if args.data == "-" else path.read_text()
    except OSError as err:
        raise InputError(f"cannot read {source}: {err.strerror}") from None
    matrix = read_matrix(text, source, args.header)
    try:
        sample = Sample(matrix)
    except ValueError as err:
        raise InputError(f"{source}: {err}") from None
    n, m = sample.n, sample.m

    points = [_parse_vector(v) for v in args.mu or []]
    if args.mu_grid:
        if m != 1:
            raise InputError("--mu-grid needs univariate data; pass --mu per point")
        points += [np.array([v]) for v in _parse_grid(args.mu_grid)]
    if not points:
        points = [np.zeros(m)]
    for p in points:
        if p.shape != (m,):
            raise InputError(f"mu has {p.shape[0]} entries but the data have {m} columns")
    grid = np.stack(points)

    cfg = InferenceConfig(R=args.R, b_n=args.b_n, L=args.L, S=args.S, alpha=args.alpha,
                          beta=args.beta, seed=args.seed, critical_value=args.method).resolve(n)
    rng = RngStream(cfg.seed)
    kernel = QuadraticKernel(sample.data, cfg.rel_tol)
    # same streams as mean_test and confidence_function on RngStream(seed)
    bundle = draw_bundle(rng.substream(Purpose.TEST), n, cfg.b_n, cfg.R)
    A, B = kernel.summarize(bundle)
    shifts = np.stack([kernel.shift(mu) for mu in grid])
    s_vals = kernel.s_values(A, B, shifts, cfg.R, cfg.b_n)[:, 0]
    bias = bias_adjustment(cfg.R, cfg.b_n, n)
    if cfg.critical_value is CriticalValue.PERMUTATION:
        c = permutation_critical_value(sample, cfg, rng.substream(Purpose.CRITICAL))
    else:
        c = normal_quantile(1.0 - cfg.alpha)
    curve = confidence_set(sample, grid, cfg, rng)

    records = []
    for k, mu in enumerate(grid):
        t = float(s_vals[k] - bias)
        records.append({
            "mu": ";".join(_fmt(v) for v in mu),
            "T_n": t,
            "S_n": float(s_vals[k]),
            "critical_value": c,
            "reject": bool(t > c),
            "q": float(curve.values[k]),
            "member": bool(curve.members[k]),
        })
    out = io.StringIO()
    if args.format == "jsonl":
        for rec in records:
            out.write(json.dumps(rec) + "\n")
    else:
        writer = csv.writer(out, lineterminator="\r\n")
        writer.writerow(list(records[0]))
        for rec in records:
            writer.writerow([rec["mu"], _fmt(rec["T_n"]), _fmt(rec["S_n"]),
                             _fmt(rec["critical_value"]), str(rec["reject"]).lower(),
                             _fmt(rec["q"]), str(rec["member"]).lower()])
    _emit(out.getvalue(), args.out)
    return EXIT_OK


def _load_spec(args) -> ExperimentSpec:
    spec = ExperimentSpec.load(args.spec) if args.spec else ExperimentSpec()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise SpecError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    for key in ("seed", "mc_reps", "coverage_mode", "mu_grid"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(value)
    return spec.override(overrides) if overrides else spec


def _context(args, spec):
    graph = read_edge_list(args.graph_file) if args.graph_file else None
    ctx = build_context(spec, graph)
    if args.write_graph:
        if ctx.graph is None:
            raise InputError("design IID has no graph to write")
        write_edge_list(ctx.graph, args.write_graph)
    if ctx.factor is not None:
        log.info("network correlation repair: relative change %.3e",
                 ctx.factor.relative_perturbation)
    return ctx


def _dump_samples(ctx, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["rep", "index", "value"])
        for rep in range(ctx.spec.mc_reps):
            for i, v in enumerate(ctx.draw(rep)[:, 0]):
                writer.writerow([rep, i, repr(float(v))])


def cmd_simulate(args, curve: bool = False) -> int:
    spec = _load_spec(args)
    if curve and spec.mu_grid is None:
        raise SpecError("coverage-curve needs mu_grid (in the experiment file or via --mu-grid)")
    if args.threads < 1:
        raise InputError("--threads must be positive")
    ctx = _context(args, spec)
    table = run_coverage(ctx, spec.mu_grid if curve else None, threads=args.threads)
    _emit(write_rows(table, spec.coverage_mode, timing=args.timing), args.out)
    if args.dump_samples:
        _dump_samples(ctx, args.dump_samples)
    return EXIT_OK


def cmd_lambda(args) -> int:
    spec = _load_spec(args)
    ks = spec.k_values if args.k is None else tuple(int(v) for v in args.k.split(","))
    ns = spec.n_grid or (spec.n,)
    if args.draws is not None:
        spec = spec.with_(lambda_draws=args.draws)
    for k in ks:
        if not 1 <= k <= 8:
            raise InputError(f"k must lie in [1, 8], got {k}")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(["n", "k", "lambda", "bound", "method", "mc_se"])
    for n in ns:
        cov = design_covariance(spec, n)
        for k in ks:
            mode = args.mode
            if mode == "auto":
                mode = "exact" if n <= MAX_EXACT_N else "montecarlo"
            rng = RngStream.for_replication(spec.seed, 0, Purpose.LAMBDA).substream(n).substream(k)
            rep = lambda_k(cov, k, LambdaMethod(mode), rng=rng, num_draws=spec.lambda_draws)
            writer.writerow([n, k, f"{rep.lambda_value:.6g}", f"{rep.bound:.6g}",
                             rep.method.value, f"{rep.mc_se:.6g}"])
    _emit(out.getvalue(), args.out)
    return EXIT_OK


def _emit(text: str, out) -> None:
    if out and out != "-":
        Path(out).write_text(text, newline="")
    else:
        sys.stdout.write(text)


# -- argument parsing ---------------------------------------------------

def _positive_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError("must be finite")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randsub", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test hypothesized means on a CSV data matrix")
    t.add_argument("data", help="CSV file with one row per unit ('-' for stdin)")
    t.add_argument("--mu", action="append", help="hypothesized mean, comma-separated; repeatable")
    t.add_argument("--mu-grid", help="univariate grid start:stop:count")
    t.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    t.add_argument("--alpha", type=_positive_float, default=0.05)
    t.add_argument("--beta", type=_positive_float, default=0.005)
    t.add_argument("--R", type=int, default=None)
    t.add_argument("--b-n", dest="b_n", type=int, default=None)
    t.add_argument("--L", type=int, default=1000)
    t.add_argument("--S", type=int, default=1000)
    t.add_argument("--method", choices=("normal", "permutation"), default="permutation")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    t.add_argument("--out", help="output file (default stdout)")
    t.set_defaults(func=cmd_test)

    def experiment_args(p):
        p.add_argument("--spec", help="experiment file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one experiment key; repeatable")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output CSV (default stdout)")

    for name, curve in (("simulate", False), ("coverage-curve", True)):
        p = sub.add_parser(name, help=("coverage of the true mean" if not curve
                                       else "coverage over a grid of means"))
        experiment_args(p)
        p.add_argument("--threads", type=int, default=1, help="worker processes")
        p.add_argument("--mc-reps", dest="mc_reps", type=int, default=None)
        p.add_argument("--coverage-mode", dest="coverage_mode",
                       choices=[m.value for m in CoverageMode], default=None)
        p.add_argument("--dump-samples", help="write every generated sample to this CSV")
        p.add_argument("--graph-file", help="use this edge list instead of a generated graph")
        p.add_argument("--write-graph", help="save the graph used to this edge list")
        p.add_argument("--timing", action="store_true", help="add a wall_time_s column")
        if curve:
            p.add_argument("--mu-grid", dest="mu_grid", default=None,
                           help="comma list or start:stop:count")
        p.set_defaults(func=lambda a, curve=curve: cmd_simulate(a, curve))

    lam = sub.add_parser("lambda", help="restricted lambda-coefficient of a design")
    experiment_args(lam)
    lam.add_argument("--k", help="comma-separated set sizes (default from k_values)")
    lam.add_argument("--mode", choices=("auto", "exact", "montecarlo"), default="auto")
    lam.add_argument("--draws", type=int, default=None, help="Monte Carlo draws")
    lam.set_defaults(func=cmd_lambda)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except NotPositiveDefinite as err:
        print(f"randsub: degenerate covariance: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, SpecError, ValueError, OSError) as err:
        print(f"randsub: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
