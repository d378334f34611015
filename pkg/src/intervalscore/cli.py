"""Command line interface: ``intervalscore {interval,evaluate,rank,verify,table1}``.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 results written but a
quadrature warning occurred.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import __version__
from .asymptotics import asym_eis
from .evaluation import (
    DEFAULT_EPSILON,
    LevelWeights,
    coverage_probability,
    expected_interval_score,
    expected_width,
    smoothed_cp,
)
from .intervals import BinomialSetting, MethodId, compute_interval, hpd, parse_methods
from .numerics import QuadratureSpec, QuadratureWarning, beta_quantile
from .oracle import beta_quantile_bisect, hpd_grid_search, mc_measure, random_mc_configs
from .summaries import SCALES, prior_averaged_coverage, ranking_grid

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_WARN = 3

# Published 95% limits (percent) for the COVID-19 self-test data.
TABLE1 = [
    ("sensitivity", 29, 39, "wald", "60.7", "88.1"),
    ("sensitivity", 29, 39, "wilson", "58.9", "85.4"),
    ("sensitivity", 29, 39, "clopper-pearson", "57.9", "87.0"),
    ("specificity", 246, 248, "wald", "98.1", "100.3"),
    ("specificity", 246, 248, "wilson", "97.1", "99.8"),
    ("specificity", 246, 248, "clopper-pearson", "97.1", "99.9"),
]


class UsageError(Exception):
    pass


def percent(value: float) -> str:
    """Percent with one decimal, rounding halves away from zero."""
    d = Decimal(repr(float(value))) * 100
    return str(d.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def fmt(value: float) -> str:
    return f"{value:.12g}"


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _n_range(text: str) -> list[int]:
    """``10``, ``10,25,50`` or ``start:stop:step`` (inclusive stop)."""
    try:
        if ":" in text:
            parts = [int(t) for t in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            if step < 1:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(t) for t in text.split(",") if t.strip()]
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"bad n specification {text!r}")


def _read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_common(p: argparse.ArgumentParser, *, methods=True, out=True, workers=False, quad=False):
    if methods:
        p.add_argument("--methods", default=",".join(m.value for m in MethodId),
                       help="comma separated method names (default: all)")
    if out:
        p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    if workers:
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    if quad:
        p.add_argument("--rel-tol", type=float, default=1e-8)
        p.add_argument("--abs-tol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intervalscore",
        description="Binomial proportion intervals scored by the expected interval score.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", default=None, help="key=value file supplying defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = {}

    p = sub.add_parser("interval", help="compute intervals for one observation")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.95)
    _add_common(p)

    p = sub.add_parser("evaluate", help="CP, smoothed CP, EW, EIS on a grid of pi")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--grid", type=int, default=1999, help="number of interior grid points")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    _add_common(p, workers=True, quad=True)

    p = sub.add_parser("rank", help="rank methods by integrated EIS deficit")
    p.add_argument("--n", type=_n_range, default=_n_range("10:100:5"),
                   help="n, list a,b,c or range start:stop:step (default 10:100:5)")
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--levels", type=_float_list, default=None,
                   help="weighted interval score levels, e.g. 0.9,0.95,0.99")
    p.add_argument("--weights", type=_float_list, default=None)
    p.add_argument("--scales", default=",".join(SCALES))
    _add_common(p, workers=True, quad=True)

    p = sub.add_parser("verify", help="run the independent oracle checks")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--replications", type=int, default=200_000)
    p.add_argument("--configs", type=int, default=20)
    p.add_argument("--band", type=float, default=4.0,
                   help="allowed Monte Carlo deviation in standard errors")
    _add_common(p, methods=False, out=False)

    p = sub.add_parser("table1", help="recompute the COVID-19 self-test intervals")
    _add_common(p, methods=False, out=False)
    parser.subcommands.update(sub.choices)
    return parser


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    command = next((a for a in rest if a in COMMANDS), None)
    if known.config and command is not None:
        cfg = _read_config(known.config)
        subparser = parser.subcommands[command]
        dests = {a.dest: a for a in subparser._actions}
        converted = {}
        for key, raw in cfg.items():
            if key not in dests:
                raise UsageError(f"unknown config key {key!r} for {command}")
            action = dests[key]
            converted[key] = action.type(raw) if action.type else raw
            # required flags satisfied by the config file
            action.required = False
        subparser.set_defaults(**converted)
    return parser.parse_args(argv)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def _write_rows(header, rows, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _quad(args) -> QuadratureSpec:
    try:
        return QuadratureSpec(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    except ValueError as exc:
        raise UsageError(str(exc))


def _pool_map(func, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _check_setting(n, gamma):
    if n < 1:
        raise UsageError(f"--n must be >= 1, got {n}")
    if not (0.0 < gamma < 1.0):
        raise UsageError(f"--gamma must lie in (0, 1), got {gamma}")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_interval(args) -> int:
    _check_setting(args.n, args.gamma)
    if not (0 <= args.x <= args.n):
        raise UsageError(f"--x must lie in [0, n], got x={args.x}, n={args.n}")
    setting = BinomialSetting(args.n, args.gamma)
    rows = []
    for m in parse_methods(args.methods):
        e = compute_interval(m, args.x, setting)
        rows.append([m.value, repr(e.lower), repr(e.upper), repr(e.raw_lower),
                     repr(e.raw_upper), percent(e.raw_lower), percent(e.raw_upper)])
    _write_rows(["method", "lower", "upper", "raw_lower", "raw_upper", "lower_pct", "upper_pct"],
                rows, args.out)
    return EXIT_OK


def _evaluate_method(task):
    method, n, gamma, grid, epsilon, quad = task
    setting = BinomialSetting(n, gamma)
    pis = np.arange(1, grid + 1) / (grid + 1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", QuadratureWarning)
        cp = coverage_probability(method, setting, pis)
        ew = expected_width(method, setting, pis)
        eis = expected_interval_score(method, setting, pis)
        ref = asym_eis(pis, n, gamma)
        scp = [smoothed_cp(method, setting, float(p), epsilon, quad) for p in pis]
    rows = [
        [method.value, fmt(p), fmt(c), fmt(s), fmt(w), fmt(e), fmt(r), fmt(e - r)]
        for p, c, s, w, e, r in zip(pis, cp, scp, ew, eis, ref)
    ]
    msgs = [str(w.message) for w in caught if issubclass(w.category, QuadratureWarning)]
    return rows, msgs


def cmd_evaluate(args) -> int:
    _check_setting(args.n, args.gamma)
    if args.grid < 3:
        raise UsageError(f"--grid must be >= 3, got {args.grid}")
    if not args.epsilon > 0.0:
        raise UsageError(f"--epsilon must be > 0, got {args.epsilon}")
    methods = sorted(set(parse_methods(args.methods)), key=lambda m: m.value)
    quad = _quad(args)
    tasks = [(m, args.n, args.gamma, args.grid, args.epsilon, quad) for m in methods]
    results = _pool_map(_evaluate_method, tasks, args.workers)
    rows = [r for rs, _ in results for r in rs]
    msgs = [m for _, ms in results for m in ms]
    _write_rows(["method", "pi", "cp", "smoothed_cp", "ew", "eis", "asym_eis", "eis_deficit"],
                rows, args.out)
    return _report_warnings(msgs)


def _report_warnings(msgs) -> int:
    if not msgs:
        return EXIT_OK
    for m in msgs:
        print(f"warning: {m}", file=sys.stderr)
    return EXIT_WARN


def cmd_rank(args) -> int:
    methods = parse_methods(args.methods)
    if not args.n or any(n < 1 for n in args.n):
        raise UsageError("--n values must be >= 1")
    scales = [s.strip() for s in args.scales.split(",") if s.strip()]
    bad = [s for s in scales if s not in SCALES]
    if bad or not scales:
        raise UsageError(f"--scales must be drawn from {', '.join(SCALES)}")
    if args.weights is not None and args.levels is None:
        raise UsageError("--weights needs --levels")
    if args.levels is not None:
        weights = args.weights if args.weights is not None else [1.0] * len(args.levels)
        if len(weights) != len(args.levels):
            raise UsageError("--levels and --weights must have the same length")
        try:
            levels = LevelWeights.from_lists(args.levels, weights)
        except ValueError as exc:
            raise UsageError(str(exc))
    else:
        _check_setting(1, args.gamma)
        levels = args.gamma
    tables = ranking_grid(methods, args.n, levels, scales, _quad(args), args.workers)
    rows = []
    msgs = []
    for t in tables:
        for rank, (m, v) in enumerate(t.entries, 1):
            rows.append([m.value, t.n, t.scale, t.levels, fmt(v), rank])
        if t.ties:
            print(f"note: tie at n={t.n} ({t.scale}): {', '.join(m.value for m in t.ties)}",
                  file=sys.stderr)
        msgs.extend(t.warnings)
    _write_rows(["method", "n", "scale", "levels", "value", "rank"], rows, args.out)
    return _report_warnings(sorted(set(msgs)))


def run_verification(seed: int, replications: int, configs: int, band: float, emit=print) -> bool:
    """Oracle checks with one PASS/FAIL line each; True when all pass."""
    ok_all = True

    def report(ok, name, detail):
        nonlocal ok_all
        ok_all &= bool(ok)
        emit(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    exact = {"cp": coverage_probability, "ew": expected_width, "eis": expected_interval_score}
    for i, (method, n, gamma, pi) in enumerate(random_mc_configs(configs)):
        setting = BinomialSetting(n, gamma)
        for measure, f in exact.items():
            est = mc_measure(measure, method, setting, pi, replications, seed + i)
            value = f(method, setting, pi)
            # absolute slack covers round-off when every draw gives the same value
            dev = abs(est.mean - value)
            ok = dev <= band * est.std_error + 1e-12
            report(ok, f"mc {measure} {method.value} n={n} gamma={gamma:g} pi={pi:g}",
                   f"exact={value:.8f} mc={est.mean:.8f} se={est.std_error:.2e}")

    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for _ in range(200):
        a, b = rng.uniform(0.5, 60.0, size=2)
        p = float(rng.uniform(0.001, 0.999))
        worst = max(worst, abs(beta_quantile(a, b, p) - beta_quantile_bisect(a, b, p)))
    report(worst <= 1e-10, "beta quantile newton vs bisection", f"max diff {worst:.2e}")

    for n in (10, 50):
        for gamma in (0.9, 0.95):
            setting = BinomialSetting(n, gamma)
            for method, prior in (("uniform-et", "uniform"), ("uniform-hpd", "uniform"),
                                  ("jeffreys-et", "jeffreys"), ("jeffreys-hpd", "jeffreys")):
                mean_cp = prior_averaged_coverage(method, setting, prior)
                report(abs(mean_cp - gamma) <= 1e-6,
                       f"prior-averaged coverage {method} n={n} gamma={gamma:g}",
                       f"{mean_cp:.10f}")

    setting = BinomialSetting(10, 0.95)
    est = hpd(3, setting, "uniform")
    grid = hpd_grid_search(4.0, 8.0, 0.95, 401)
    ok = est.width <= (grid[1] - grid[0]) + 1e-12
    report(ok, "uniform hpd vs grid search x=3 n=10",
           f"width {est.width:.8f} grid {grid[1] - grid[0]:.8f}")
    return ok_all


def cmd_verify(args) -> int:
    if args.replications < 1 or args.configs < 1:
        raise UsageError("--replications and --configs must be >= 1")
    if not (0 <= args.seed < 2**64):
        raise UsageError("--seed must be a 64-bit unsigned integer")
    ok = run_verification(args.seed, args.replications, args.configs, args.band)
    print("ALL PASS" if ok else "SOME CHECKS FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def table1_rows() -> list[tuple]:
    rows = []
    for quantity, x, n, method, lo_pub, hi_pub in TABLE1:
        e = compute_interval(method, x, BinomialSetting(n, 0.95))
        lo, hi = percent(e.raw_lower), percent(e.raw_upper)
        match = Decimal(lo) == Decimal(lo_pub) and Decimal(hi) == Decimal(hi_pub)
        rows.append((quantity, method, x, n, lo, hi, lo_pub, hi_pub, match))
    return rows


def cmd_table1(args) -> int:
    rows = table1_rows()
    print(f"{'quantity':<12} {'method':<16} {'x/n':>8}  {'computed':>15}  {'published':>15}  flag")
    for quantity, method, x, n, lo, hi, plo, phi, match in rows:
        print(f"{quantity:<12} {method:<16} {f'{x}/{n}':>8}  {lo + ' to ' + hi:>15}  "
              f"{plo + ' to ' + phi:>15}  {'MATCH' if match else 'MISMATCH'}")
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_FAIL


COMMANDS = {
    "interval": cmd_interval,
    "evaluate": cmd_evaluate,
    "rank": cmd_rank,
    "verify": cmd_verify,
    "table1": cmd_table1,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # bad method names and other rejected inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
