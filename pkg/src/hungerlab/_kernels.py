"""Hot loops for the greedy firing process.

Every kernel is written as straight numpy so the same function body runs in
two ways: compiled by numba's @njit (default whenever numba imports), or as
the plain interpreted fallback. Set HUNGERLAB_BACKEND=numpy to force the
fallback, HUNGERLAB_BACKEND=numba to insist on compilation (ImportError if
numba is missing). benchmarks/bench_backends.py measures the difference.

Kernels take either int64 state (exact arithmetic, hunger scaled by a common
denominator) or float64 state; numba specializes per dtype. np.argmax
returns the first maximal index in both numpy and numba, which is exactly
the tie-breaking rule (fire the smallest hungriest index).
"""

import os

import numpy as np

_choice = os.environ.get("HUNGERLAB_BACKEND", "").strip().lower()
if _choice not in ("", "numba", "numpy"):
    raise ValueError(
        f"HUNGERLAB_BACKEND must be 'numba' or 'numpy', got {_choice!r}"
    )

if _choice == "numpy":
    _use_numba = False
else:
    try:
        from numba import njit

        _use_numba = True
    except ImportError:
        if _choice == "numba":
            raise
        _use_numba = False

if not _use_numba:

    def njit(*args, **kwargs):
        """No-op decorator standing in for numba.njit."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


BACKEND = "numba" if _use_numba else "numpy"


def active_backend() -> str:
    """Name of the backend the kernels run on ("numba" or "numpy")."""
    return BACKEND


@njit(cache=True)
def greedy_run(h, rows, steps, fired, v):
    """Fire the hungriest state `steps` times.

    h is mutated in place; rows is the (scaled) hunger matrix H. fired and v
    collect the firing sequence and per-state counts.
    """
    for t in range(steps):
        i = np.argmax(h)
        h += rows[i]
        fired[t] = i
        v[i] += 1


@njit(cache=True)
def greedy_advance(h, rows, steps):
    """Fire `steps` times without recording anything."""
    for _ in range(steps):
        i = np.argmax(h)
        h += rows[i]


@njit(cache=True)
def chip_add_count(h, rows, absorbing, cap):
    """Fire until the chip lands on an absorbing state.

    Mutates h (pass a scratch copy). Returns the number of fires including
    the absorbing arrival, or -1 if the cap ran out first. The hunger
    subtraction at the absorbed state is left to the caller.
    """
    for t in range(cap):
        i = np.argmax(h)
        h += rows[i]
        if absorbing[i]:
            return t + 1
    return -1


@njit(cache=True)
def brent_cycle(h0, rows, cap):
    """Brent's cycle detection on the firing orbit of h0.

    Returns (entry_steps, period), or (-1, -1) if either phase would pass
    `cap` iterations. O(1) memory; exact equality comparisons, so this is
    only meaningful for integer-scaled state.
    """
    n = h0.shape[0]
    power = 1
    lam = 1
    tortoise = h0.copy()
    hare = h0.copy()
    i = np.argmax(hare)
    hare += rows[i]
    while True:
        same = True
        for j in range(n):
            if tortoise[j] != hare[j]:
                same = False
                break
        if same:
            break
        if power == lam:
            tortoise[:] = hare
            power *= 2
            lam = 0
        i = np.argmax(hare)
        hare += rows[i]
        lam += 1
        if lam > cap:
            return -1, -1
    tortoise[:] = h0
    hare[:] = h0
    for _ in range(lam):
        i = np.argmax(hare)
        hare += rows[i]
    mu = 0
    while True:
        same = True
        for j in range(n):
            if tortoise[j] != hare[j]:
                same = False
                break
        if same:
            break
        i = np.argmax(tortoise)
        tortoise += rows[i]
        i = np.argmax(hare)
        hare += rows[i]
        mu += 1
        if mu > cap:
            return -1, -1
    return mu, lam


@njit(cache=True)
def reinsert_loop(h, rows, absorbing, one, schedule, steps, fired, v):
    """Combined fire / remove-and-reinsert walk for `steps` steps.

    A step either fires the hungriest state, or, when the previous fire
    landed on an absorbing state, removes the chip there (h[k] -= one) and
    reinserts it at the next schedule entry (h += P_s, done as rows[s] plus
    `one` at s) in a single operation. The very first step is the initial
    insertion. fired[t] is the fired index or -1 for insertion steps.

    Returns (insertions_used, min_hunger, max_hunger) where the extrema
    cover the initial state and every step.
    """
    n = h.shape[0]
    si = 0
    chip = -2  # -2 no chip yet, -1 in flight after insertion, >= 0 last fired
    lo = h[0]
    hi = h[0]
    for j in range(n):
        if h[j] < lo:
            lo = h[j]
        if h[j] > hi:
            hi = h[j]
    for t in range(steps):
        if chip == -2 or (chip >= 0 and absorbing[chip]):
            if chip >= 0:
                h[chip] -= one
            s = schedule[si]
            si += 1
            h += rows[s]
            h[s] += one
            fired[t] = -1
            chip = -1
        else:
            i = np.argmax(h)
            h += rows[i]
            fired[t] = i
            v[i] += 1
            chip = i
        for j in range(n):
            if h[j] < lo:
                lo = h[j]
            if h[j] > hi:
                hi = h[j]
    return si, lo, hi
