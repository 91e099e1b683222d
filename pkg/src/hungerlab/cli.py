"""Command line front end.

Every subcommand reads a chain definition file, writes plot-ready CSV to
--output (or standard output) and a short human summary to standard
error. Exit codes: 0 success, 2 validation or usage error, 3 a cap or
memory limit was hit, 4 the operation does not support the chain's mode.
"""

import argparse
import csv
import sys
from contextlib import contextmanager
from fractions import Fraction

from .baselines import compare_two_state, engel_run, rotor_run
from .chain_model import (
    FLOAT,
    RATIONAL,
    MarkovChain,
    absorbing_states,
    fmt_scalar,
    hunger_matrix,
    is_irreducible,
    parse_chain,
)
from .errors import (
    CapExceeded,
    ChainFormatError,
    FloatModeUnsupported,
    HungerLabError,
    OrbitMemoryExceeded,
    Stabilized,
)
from .estimators import (
    absorption_profile,
    absorption_time,
    discrepancy_profile,
    escape_profile,
    hitting_distribution,
    hitting_profile,
    return_time_profile,
)
from .hunger_engine import DEFAULT_CAP, chip_add, run
from .recurrence import basin_scan, conjecture_reports, covering_detail, find_cycle

DEFAULT_N = 1000
DEFAULT_STEP = Fraction(1, 20)
DEFAULT_BOUNDS = (Fraction(-3, 2), Fraction(3, 2))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (Fraction, int)):
        return fmt_scalar(Fraction(x))
    return repr(float(x))


def _cell(x) -> str:
    if isinstance(x, (tuple, list)):
        return ";".join(_fmt(c) for c in x)
    return _fmt(x)


def _load_chain(args) -> MarkovChain:
    with open(args.chain, "r") as f:
        chain = parse_chain(f.read())
    mode = getattr(args, "mode", None)
    if mode is None or mode == chain.mode:
        return chain
    if mode == FLOAT:
        P = [[float(p) for p in row] for row in chain.P]
        return MarkovChain(P, chain.labels, FLOAT)
    raise ChainFormatError("cannot reinterpret a float chain as rational")


def _state_index(chain: MarkovChain, token: str) -> int:
    """Resolve a state reference: label first, then 1-based index."""
    if token in chain.labels:
        return chain.labels.index(token)
    try:
        k = int(token)
    except ValueError:
        raise ValueError(f"unknown state {token!r}") from None
    if not 1 <= k <= chain.n:
        raise ValueError(f"state index {k} out of range 1..{chain.n}")
    return k - 1


def _parse_hunger(chain: MarkovChain, text):
    if text is None:
        return None
    tokens = [t.strip() for t in text.split(",")]
    if chain.mode == RATIONAL:
        return tuple(Fraction(t) for t in tokens)
    return tuple(float(t) for t in tokens)


@contextmanager
def _out(args):
    if args.output:
        f = open(args.output, "w", newline="")
        try:
            yield f
        finally:
            f.close()
    else:
        yield sys.stdout


def _writer(f):
    return csv.writer(f, lineterminator="\n")


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    chain = _load_chain(args)
    absorbing = sorted(absorbing_states(chain))
    _say(f"mode: {chain.mode}")
    _say(f"states: {chain.n} ({', '.join(chain.labels)})")
    _say(
        "absorbing: "
        + (", ".join(chain.labels[i] for i in absorbing) if absorbing else "none")
    )
    _say(f"irreducible: {'yes' if is_irreducible(chain) else 'no'}")
    _say("ok")
    return 0


def _trace_rows(chain, h, fired, last_removed=None):
    """Replay a firing sequence into per-step hunger rows."""
    H = hunger_matrix(chain).H
    one = Fraction(1) if chain.mode == RATIONAL else 1.0
    rows = [(0, "", h)]
    for t, i in enumerate(fired, start=1):
        i = int(i)
        h = tuple(a + b for a, b in zip(h, H[i]))
        if last_removed and t == len(fired):
            h = tuple(a - one if j == i else a for j, a in enumerate(h))
        rows.append((t, chain.labels[i], h))
    return rows


def _write_trace(chain, rows, f):
    w = _writer(f)
    w.writerow(["step", "fired"] + [f"h_{k + 1}" for k in range(chain.n)])
    for step, fired, h in rows:
        w.writerow([step, fired] + [_fmt(x) for x in h])


def cmd_simulate(args) -> int:
    chain = _load_chain(args)
    h0 = _parse_hunger(chain, args.h0)
    trace = run(chain, h0, args.steps)
    start = trace.initial_h
    with _out(args) as f:
        _write_trace(chain, _trace_rows(chain, start, trace.fired), f)
    v = ", ".join(
        f"{chain.labels[i]}:{int(c)}" for i, c in enumerate(trace.v)
    )
    _say(f"fired {trace.steps} steps; v = ({v})")
    _say("final hunger: " + ",".join(_fmt(x) for x in trace.final_h))
    return 0


def cmd_chip_add(args) -> int:
    chain = _load_chain(args)
    h0 = _parse_hunger(chain, args.h0)
    i = _state_index(chain, args.at)
    result, trace = chip_add(chain, h0, i, args.cap)
    with _out(args) as f:
        _write_trace(
            chain,
            _trace_rows(chain, trace.initial_h, trace.fired, last_removed=True),
            f,
        )
    _say(
        "fired: "
        + " ".join(chain.labels[int(k)] for k in trace.fired)
        + f" ({trace.steps} steps)"
    )
    _say("final hunger: " + ",".join(_fmt(x) for x in result))
    return 0


def _write_profile(profile, f):
    w = _writer(f)
    w.writerow(["N", "estimate", "exact", "deviation", "N_times_deviation"])
    for (N, dev, nd), est in zip(profile.entries, profile.estimates):
        w.writerow([N, _cell(est), _cell(profile.exact), _fmt(dev), _fmt(nd)])


def cmd_stationary(args) -> int:
    chain = _load_chain(args)
    h0 = _parse_hunger(chain, args.h0)
    profile = discrepancy_profile(chain, h0, args.N)
    with _out(args) as f:
        _write_profile(profile, f)
    _say(f"stationary: {_cell(profile.exact)}")
    _say(f"sup of N times L1 deviation over N <= {args.N}: {_fmt(profile.sup_Nd)}")
    return 0


def cmd_hitting(args) -> int:
    chain = _load_chain(args)
    v = _state_index(chain, args.src)
    absorbing = sorted(absorbing_states(chain))
    if args.target is not None:
        u = _state_index(chain, args.target)
    else:
        if not absorbing:
            raise ValueError("chain has no absorbing states")
        u = absorbing[0]
        _say(f"no --target given; using {chain.labels[u]}")
    profile = hitting_profile(chain, v, u, args.N)
    with _out(args) as f:
        _write_profile(profile, f)
    for est in hitting_distribution(chain, v, args.N):
        _say(
            f"target {chain.labels[est.target]}: a_N = {_fmt(est.a_N)}"
            f" (exact {_fmt(est.exact)}, deviation {_fmt(est.deviation)})"
        )
    return 0


def cmd_absorb(args) -> int:
    chain = _load_chain(args)
    v = _state_index(chain, args.src)
    profile = absorption_profile(chain, v, args.N)
    with _out(args) as f:
        _write_profile(profile, f)
    est = absorption_time(chain, v, args.N)
    _say(
        f"b_N = {_fmt(est.b_N)} at N = {args.N}"
        f" (exact {_fmt(est.exact)}, deviation {_fmt(est.deviation)})"
    )
    return 0


def cmd_escape(args) -> int:
    chain = _load_chain(args)
    v = _state_index(chain, args.src)
    u = _state_index(chain, args.target)
    profile = escape_profile(chain, v, u, args.N)
    with _out(args) as f:
        _write_profile(profile, f)
    N, dev, _ = profile.entries[-1]
    _say(
        f"escape probability to {chain.labels[u]} before returning to "
        f"{chain.labels[v]}: {_fmt(profile.estimates[-1])} at N = {N}"
        f" (exact {_fmt(profile.exact)}, deviation {_fmt(dev)})"
    )
    return 0


def cmd_return_time(args) -> int:
    chain = _load_chain(args)
    v = _state_index(chain, args.src)
    profile = return_time_profile(chain, v, args.N)
    with _out(args) as f:
        _write_profile(profile, f)
    N, dev, _ = profile.entries[-1]
    _say(
        f"return time to {chain.labels[v]}: {_fmt(profile.estimates[-1])}"
        f" at N = {N} (exact {_fmt(profile.exact)}, deviation {_fmt(dev)})"
    )
    return 0


def cmd_cycle(args) -> int:
    chain = _load_chain(args)
    h0 = _parse_hunger(chain, args.h0)
    info = find_cycle(chain, h0, args.cap)
    with _out(args) as f:
        w = _writer(f)
        w.writerow(["entry_steps", "period", "order_class"])
        w.writerow([info.entry_steps, info.period, info.order_class])
    counts = info.firing_counts()
    counts = counts + (0,) * (chain.n - len(counts))
    _say(f"entry after {info.entry_steps} steps, period {info.period}")
    _say(
        "per-cycle firing counts: "
        + ", ".join(f"{chain.labels[i]}:{c}" for i, c in enumerate(counts))
    )
    _say("representative: " + ",".join(_fmt(x) for x in info.representative))
    return 0


def cmd_basin(args) -> int:
    chain = _load_chain(args)
    lo, hi = (Fraction(b) for b in args.bounds)
    scan = basin_scan(chain, (lo, hi), Fraction(args.step), args.cap)
    with _out(args) as f:
        w = _writer(f)
        w.writerow(["h1", "h2", "recurrent", "period", "order_class", "entry_steps"])
        for c in scan.cells:
            if c.period is None:
                w.writerow([_fmt(c.h1), _fmt(c.h2), "", "", "", ""])
            else:
                w.writerow(
                    [
                        _fmt(c.h1),
                        _fmt(c.h2),
                        _fmt(c.recurrent),
                        c.period,
                        c.class_id,
                        c.entry_steps,
                    ]
                )
    class_rows = [["order_class", "order"]] + [
        [k + 1, s] for k, s in enumerate(scan.classes)
    ]
    if args.output:
        with open(args.output + ".classes", "w", newline="") as f:
            _writer(f).writerows(class_rows)
        _say(f"classes written to {args.output}.classes")
    else:
        for row in class_rows[1:]:
            _say(f"class {row[0]}: {row[1]}")
    recurrent = sum(1 for c in scan.cells if c.recurrent)
    capped = sum(1 for c in scan.cells if c.period is None)
    _say(
        f"{len(scan.cells)} cells: {recurrent} recurrent, "
        f"{len(scan.classes)} order classes, {capped} capped"
    )
    return 0


def cmd_cover(args) -> int:
    chain = _load_chain(args)
    h0 = _parse_hunger(chain, args.h0)
    det = covering_detail(chain, h0, args.cap)
    with _out(args) as f:
        w = _writer(f)
        w.writerow(["steps", "member"])
        w.writerow([det.steps, _fmt(det.member)])
    verdict = "lies" if det.member else "DOES NOT lie"
    _say(
        f"after {det.steps} steps the displacement {verdict} in the "
        "firing-difference lattice"
    )
    return 0


def cmd_conjectures(args) -> int:
    chain = _load_chain(args)
    lo, hi = (Fraction(b) for b in args.bounds)
    reports = conjecture_reports(
        chain, args.samples, (lo, hi), Fraction(args.step), args.seed, args.cap
    )
    with _out(args) as f:
        w = _writer(f)
        w.writerow(["conjecture", "checked", "violations", "skipped"])
        for r in reports:
            w.writerow([r.name, r.checked, r.violations, r.skipped])
    for r in reports:
        _say(
            f"{r.name}: {r.checked} checked, {r.violations} violations, "
            f"{r.skipped} skipped"
        )
        for note in r.notes:
            _say(f"  {note}")
    return 0


def cmd_engel(args) -> int:
    chain = _load_chain(args)
    c0 = [int(t) for t in args.chips.split(",")]
    d = [int(t) for t in args.thresholds.split(",")] if args.thresholds else None
    try:
        rec = engel_run(chain, c0, d, args.cap)
    except Stabilized as s:
        with _out(args) as f:
            _writer(f).writerow(["state", "cycle_count"])
        _say(f"stabilized after {s.steps} firings")
        return 0
    with _out(args) as f:
        w = _writer(f)
        w.writerow(["state", "cycle_count"])
        for i, c in enumerate(rec.cycle_counts):
            w.writerow([chain.labels[i], c])
    _say(
        f"configuration repeated: entry after {rec.entry_steps} firings, "
        f"period {rec.period}"
    )
    _say(
        "per-cycle firing counts: "
        + ", ".join(f"{chain.labels[i]}:{c}" for i, c in enumerate(rec.cycle_counts))
    )
    return 0


def cmd_rotor(args) -> int:
    chain = _load_chain(args)
    start = _state_index(chain, args.start)
    rotors = (
        [int(t) for t in args.rotors.split(",")] if args.rotors else None
    )
    trace = rotor_run(chain, start, rotors, args.N)
    with _out(args) as f:
        w = _writer(f)
        w.writerow(["step", "state"])
        for t, x in enumerate(trace.itinerary):
            w.writerow([t, chain.labels[int(x)]])
    _say(
        "visits: "
        + ", ".join(
            f"{chain.labels[i]}:{int(c)}" for i, c in enumerate(trace.visits)
        )
    )
    return 0


def cmd_compare2(args) -> int:
    comp = compare_two_state(Fraction(args.q), args.N)
    with _out(args) as f:
        w = _writer(f)
        w.writerow(["N", "hunger_dev", "rotor_dev"])
        for N, hdev, rdev in comp.rows:
            w.writerow([N, _fmt(hdev), _fmt(rdev)])
    _say(
        f"max deviation over N in [2, {args.N}]: "
        f"hunger {_fmt(comp.hunger_max)}, rotor {_fmt(comp.rotor_max)}"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p, chain=True):
    if chain:
        p.add_argument("--chain", required=True, help="chain definition file")
        p.add_argument(
            "--mode",
            choices=[RATIONAL, FLOAT],
            help="override the file's mode (rational files may run as float)",
        )
    p.add_argument("--output", help="CSV output path (default: standard output)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hungerlab",
        description="deterministic chip-firing simulators and estimators "
        "for finite Markov chains",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="parse and describe a chain file")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run the greedy game, emit a trace")
    _add_common(p)
    p.add_argument("--h0", help="initial hunger, comma separated")
    p.add_argument("--steps", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("chip-add", help="insert a chip and fire to absorption")
    _add_common(p)
    p.add_argument("--at", required=True, help="state to insert the chip at")
    p.add_argument("--h0", help="initial hunger, comma separated")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_chip_add)

    p = sub.add_parser("stationary", help="stationary-distribution discrepancy sweep")
    _add_common(p)
    p.add_argument("--h0", help="initial hunger, comma separated")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("hitting", help="absorption-probability estimates")
    _add_common(p)
    p.add_argument("--from", dest="src", required=True, help="start state")
    p.add_argument("--target", help="absorbing state for the sweep")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_hitting)

    p = sub.add_parser("absorb", help="expected-absorption-time estimates")
    _add_common(p)
    p.add_argument("--from", dest="src", required=True, help="start state")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_absorb)

    p = sub.add_parser("escape", help="probability of reaching u before returning")
    _add_common(p)
    p.add_argument("--from", dest="src", required=True, help="home state v")
    p.add_argument("--target", required=True, help="target state u")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_escape)

    p = sub.add_parser("return-time", help="expected-return-time estimates")
    _add_common(p)
    p.add_argument("--from", dest="src", required=True, help="state to return to")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_return_time)

    p = sub.add_parser("cycle", help="detect the orbit cycle of one start")
    _add_common(p)
    p.add_argument("--h0", help="initial hunger, comma separated")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_cycle)

    p = sub.add_parser("basin", help="grid scan of recurrence on 3-state chains")
    _add_common(p)
    p.add_argument(
        "--bounds", nargs=2, default=DEFAULT_BOUNDS,
        help="grid bounds, low high (write negatives as decimals, e.g. -1.5)"
    )
    p.add_argument("--step", default=DEFAULT_STEP, help="grid step, e.g. 1/20")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("cover", help="push a start onto the recurrent set")
    _add_common(p)
    p.add_argument("--h0", help="initial hunger, comma separated")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("conjectures", help="empirical scans of the open conjectures")
    _add_common(p)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--bounds", nargs=2, default=DEFAULT_BOUNDS,
        help="sample bounds, low high (write negatives as decimals, e.g. -1.5)"
    )
    p.add_argument("--step", default=DEFAULT_STEP, help="tiling grid step")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_conjectures)

    p = sub.add_parser("engel", help="threshold chip-firing until a repeat")
    _add_common(p)
    p.add_argument("--chips", required=True, help="initial chips, comma separated")
    p.add_argument("--thresholds", help="per-state thresholds, comma separated")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_engel)

    p = sub.add_parser("rotor", help="rotor-router walk")
    _add_common(p)
    p.add_argument("--start", required=True, help="start state")
    p.add_argument("--rotors", help="initial rotor positions, comma separated")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_rotor)

    p = sub.add_parser("compare2", help="greedy game vs rotor walk, 2-state chain")
    _add_common(p, chain=False)
    p.add_argument("--q", default="1/10", help="crossing probability")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.set_defaults(func=cmd_compare2)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CapExceeded, OrbitMemoryExceeded) as exc:
        _say(f"error: {exc}")
        return 3
    except FloatModeUnsupported as exc:
        _say(f"error: {exc}")
        return 4
    except (HungerLabError, ValueError, OSError) as exc:
        _say(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
