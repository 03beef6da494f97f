"""Command-line front end.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import bounds, builders, chain, search, sim
from .errors import FinmemError
from .model import H0, H1, HypothesisPair, Machine, load_machine

SIG_DIGITS = 12


def _num(x):
    if x is None:
        return None
    if isinstance(x, bool) or isinstance(x, int):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return float(format(x, f".{SIG_DIGITS}g"))
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    return x


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, f".{SIG_DIGITS}g")
    return str(x)


def _emit(rows: list[dict], fmt: str, columns: list[str] | None = None) -> str:
    if fmt == "json":
        payload = rows[0] if len(rows) == 1 and columns is None else rows
        return json.dumps(_num(payload), indent=2)
    columns = columns or list(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r.get(c)) for c in columns])
    return buf.getvalue().rstrip("\n")


def _pair(args) -> HypothesisPair:
    return HypothesisPair(args.p, args.q)


BOUNDS_COLUMNS = [
    "S", "p", "q", "randomized_lb", "ergodic_lb", "run_pe_exact", "theorem2_ub", "d_exp", "r_exp", "s_star",
]


def cmd_bounds(args) -> str:
    pair = _pair(args)
    rows = []
    for S in range(args.s_min, args.s_max + 1):
        rep = bounds.bound_report(S, pair)
        rows.append(
            {
                "S": S,
                "p": pair.p,
                "q": pair.q,
                "randomized_lb": rep.randomized_lb,
                "ergodic_lb": rep.ergodic_lb,
                "run_pe_exact": rep.run_ub_exact,
                "theorem2_ub": rep.theorem2_ub,
                "d_exp": rep.d_exp,
                "r_exp": rep.r_exp,
                "s_star": rep.s_star,
                "log_base": bounds.LOG_BASE,
            }
        )
    if args.format == "csv":
        return _emit(rows, "csv", BOUNDS_COLUMNS)
    return json.dumps(_num(rows), indent=2)


def cmd_build(args) -> str:
    kind = args.kind
    if kind == "run-machine":
        if args.init == "auto":
            s = builders.s_star(args.states, _pair(args))
        else:
            s = int(args.init)
        m = builders.run_machine(args.states, s)
    elif kind == "count-ones":
        m = builders.count_ones_machine(args.k, args.t)
    elif kind == "store-bits":
        m = builders.store_bits_machine(args.k, _pair(args))
    else:
        m = builders.last_bit_machine()
    return json.dumps(m.to_dict())


def cmd_analyze(args) -> str:
    m = load_machine(args.machine)
    pair = _pair(args)
    if args.optimal:
        m = m.with_decision(chain.optimal_decision(m, pair))
    rep = chain.error_probability(m, pair)
    out = rep.to_dict()
    out["decision"] = list(m.decision)
    return json.dumps(_num(out), indent=2)


def cmd_diagnose(args) -> str:
    d = chain.structural_diagnostics(load_machine(args.machine), _pair(args))
    return json.dumps(_num(d.to_dict()), indent=2)


def cmd_search(args) -> str:
    res = search.optimal_error(args.states, _pair(args), workers=args.workers, limit=args.limit)
    return json.dumps(_num(res.to_dict()), indent=2)


def cmd_simulate(args) -> str:
    m = load_machine(args.machine)
    pair = _pair(args)
    if args.hypothesis == "bayes":
        rep = sim.simulate_bayes(m, pair, args.steps, args.trials, args.seed, workers=args.workers)
    else:
        h = H0 if args.hypothesis == "h0" else H1
        rep = sim.simulate_time_average(
            m, pair.theta(h), args.steps, args.trials, args.seed, hypothesis=h, workers=args.workers
        )
    return json.dumps(_num(rep.to_dict()), indent=2)


SWEEP_COLUMNS = [
    "S", "s_star", "run_pe", "log2_run_pe", "log2_theorem2_ub", "log2_randomized_lb", "ergodic_lb",
    "d_exp", "r_exp", "pstar",
]


def cmd_sweep(args) -> str:
    """Per-S table for plotting the run machine against the bounds."""
    pair = _pair(args)
    rows = []
    for S in range(max(args.s_min, 1), args.s_max + 1):
        row = {
            "S": S,
            "log2_randomized_lb": bounds.log2_randomized_lower_bound(S, pair),
            "ergodic_lb": bounds.ergodic_converse_bound(S, pair),
            "d_exp": bounds.d_exponent(pair),
            "r_exp": bounds.r_exponent(pair),
        }
        if S >= 3:
            ss = builders.s_star(S, pair)
            cf = bounds.run_machine_closed_form(S, ss, pair)
            row.update(
                s_star=ss,
                run_pe=cf.pe,
                log2_run_pe=cf.log2_pe,
                log2_theorem2_ub=bounds.log2_theorem2_upper_bound(S, pair),
            )
        if S <= args.search_max:
            row["pstar"] = search.optimal_error(S, pair, workers=args.workers).pstar
        rows.append(row)
    if args.format == "csv":
        return _emit(rows, "csv", SWEEP_COLUMNS)
    return json.dumps(_num(rows), indent=2)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="finmem", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def pq(p, required=True):
        p.add_argument("--p", type=float, required=required, help="Bernoulli parameter under H0")
        p.add_argument("--q", type=float, required=required, help="Bernoulli parameter under H1 (q < p)")

    def fmt(p):
        p.add_argument("--format", choices=["json", "csv"], default="json")

    b = sub.add_parser("bounds", help="closed-form bounds for S = s-min..s-max")
    pq(b)
    b.add_argument("--s-min", type=int, default=1)
    b.add_argument("--s-max", type=int, required=True)
    fmt(b)
    b.set_defaults(func=cmd_bounds)

    bd = sub.add_parser("build", help="emit a machine as JSON")
    bd.add_argument("kind", choices=["run-machine", "count-ones", "store-bits", "last-bit"])
    bd.add_argument("--states", type=int)
    bd.add_argument("--init", default="auto", help="1-indexed initial state or 'auto' for s_star")
    bd.add_argument("--k", type=int)
    bd.add_argument("--t", type=float)
    pq(bd, required=False)
    bd.set_defaults(func=cmd_build)

    an = sub.add_parser("analyze", help="exact asymptotic error of a machine")
    an.add_argument("--machine", required=True)
    pq(an)
    an.add_argument("--optimal", action="store_true", help="replace decisions by the optimal labelling")
    an.set_defaults(func=cmd_analyze)

    dg = sub.add_parser("diagnose", help="total distance / occupancy for a two-target machine")
    dg.add_argument("--machine", required=True)
    pq(dg)
    dg.set_defaults(func=cmd_diagnose)

    se = sub.add_parser("search", help="exhaustive optimum over S-state machines")
    se.add_argument("--states", type=int, required=True)
    pq(se)
    se.add_argument("--workers", type=int, default=1)
    se.add_argument("--limit", type=int, default=search.DEFAULT_MAX_STATES)
    se.set_defaults(func=cmd_search)

    sm = sub.add_parser("simulate", help="Monte Carlo time-average error")
    sm.add_argument("--machine", required=True)
    pq(sm)
    sm.add_argument("--steps", type=int, required=True)
    sm.add_argument("--trials", type=int, required=True)
    sm.add_argument("--seed", type=int, required=True)
    sm.add_argument("--hypothesis", choices=["bayes", "h0", "h1"], default="bayes")
    sm.add_argument("--workers", type=int, default=1)
    sm.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="per-S run-machine error against the bounds")
    pq(sw)
    sw.add_argument("--s-min", type=int, default=1)
    sw.add_argument("--s-max", type=int, required=True)
    sw.add_argument("--search-max", type=int, default=0, help="also compute exact P*_e(S) for S up to this")
    sw.add_argument("--workers", type=int, default=1)
    fmt(sw)
    sw.set_defaults(func=cmd_sweep)
    return ap


def _validate_build(ap, args):
    need = {
        "run-machine": ["states"] + (["p", "q"] if args.init == "auto" else []),
        "count-ones": ["k", "t"],
        "store-bits": ["k", "p", "q"],
        "last-bit": [],
    }[args.kind]
    missing = [f"--{n}" for n in need if getattr(args, n) is None]
    if missing:
        ap.error(f"build {args.kind} requires {', '.join(missing)}")


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command == "build":
            _validate_build(ap, args)
        if getattr(args, "search_max", 0) > search.DEFAULT_MAX_STATES:
            ap.error(f"--search-max must be <= {search.DEFAULT_MAX_STATES}")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = args.func(args)
    except (FinmemError, ValueError, OSError) as exc:
        print(f"finmem: error: {exc}", file=stderr)
        return 1
    print(out, file=stdout)
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
