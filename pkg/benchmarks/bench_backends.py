"""Time the firing kernels on both backends.

The kernels in hungerlab._kernels pick numba or plain numpy once, at
import, from HUNGERLAB_BACKEND. Each measurement therefore runs in a
fresh subprocess with the flag pinned, and this script is its own child:
invoked with --child it imports hungerlab under the inherited flag, warms
the kernels, times the run, and prints one JSON line.

Usage:
    python3 benchmarks/bench_backends.py [--steps N] [--repeats R] [--chain PATH]

Measures the plain greedy run in both scalar modes (int64-scaled exact
arithmetic and float64) and reports steps per second plus the speedup.
"""

import argparse
import json
import os
import pathlib
import subprocess
import sys
import time

HERE = pathlib.Path(__file__).resolve().parent
DEFAULT_CHAIN = HERE.parent / "chains" / "reflecting3.json"


def load_chains(path):
    import hungerlab

    rational = hungerlab.parse_chain(pathlib.Path(path).read_text())
    floated = hungerlab.MarkovChain(
        [[float(x) for x in row] for row in rational.P],
        labels=rational.labels,
        mode="float",
    )
    return {"int64": rational, "float64": floated}


def child(args):
    import hungerlab

    results = {"backend": hungerlab.active_backend(), "rates": {}}
    for name, chain in load_chains(args.chain).items():
        hungerlab.run(chain, None, 1_000)  # warm-up (numba compiles here)
        best = float("inf")
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            hungerlab.run(chain, None, args.steps)
            best = min(best, time.perf_counter() - t0)
        results["rates"][name] = args.steps / best
    print(json.dumps(results))


def measure(backend, args):
    env = dict(os.environ, HUNGERLAB_BACKEND=backend)
    cmd = [
        sys.executable, str(pathlib.Path(__file__).resolve()), "--child",
        "--steps", str(args.steps), "--repeats", str(args.repeats),
        "--chain", str(args.chain),
    ]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()
        reason = tail[-1] if tail else f"exit code {proc.returncode}"
        print(f"{backend}: skipped ({reason})")
        return None
    out = json.loads(proc.stdout)
    assert out["backend"] == backend, out
    return out["rates"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000,
                    help="firing steps per timed run (default 200000)")
    ap.add_argument("--repeats", type=int, default=3,
                    help="timed runs per backend, best one counts")
    ap.add_argument("--chain", default=str(DEFAULT_CHAIN),
                    help="chain definition to run (default chains/reflecting3.json)")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    if args.child:
        child(args)
        return 0

    rates = {}
    for backend in ("numba", "numpy"):
        r = measure(backend, args)
        if r is not None:
            rates[backend] = r

    if not rates:
        print("no backend produced a measurement", file=sys.stderr)
        return 1

    modes = ["int64", "float64"]
    print(f"\n{args.steps} steps on {args.chain}, best of {args.repeats}:\n")
    print(f"{'backend':<10}" + "".join(f"{m + ' steps/s':>18}" for m in modes))
    for backend, r in rates.items():
        print(f"{backend:<10}" + "".join(f"{r[m]:>18,.0f}" for m in modes))
    if len(rates) == 2:
        print(f"{'speedup':<10}" + "".join(
            f"{rates['numba'][m] / rates['numpy'][m]:>17.1f}x" for m in modes
        ))
    return 0


if __name__ == "__main__":
    sys.exit(main())
