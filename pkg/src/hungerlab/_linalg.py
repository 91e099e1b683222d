"""Small dense Gaussian elimination, shared by the stationary solve, the
hitting-probability systems, and lattice membership.

Rational mode works on fractions.Fraction entries with exact pivoting (first
nonzero pivot). Float mode uses partial pivoting and a tolerance. Matrices
here are tiny (n up to a few dozen), so plain row lists beat any dependency.
"""

from fractions import Fraction


def _rref(M, tol):
    """Reduce M in place to reduced row echelon form.

    Args:
        M: list of row lists (Fractions, or floats when tol is not None).
        tol: None for exact arithmetic, else the pivot magnitude threshold.

    Returns:
        List of pivot column indices, one per pivot row.
    """
    nrows = len(M)
    ncols = len(M[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        if tol is None:
            pr = next((i for i in range(r, nrows) if M[i][c] != 0), None)
        else:
            pr = max(range(r, nrows), key=lambda i: abs(M[i][c]))
            if abs(M[pr][c]) <= tol:
                pr = None
        if pr is None:
            continue
        M[r], M[pr] = M[pr], M[r]
        piv = M[r][c]
        M[r] = [x / piv for x in M[r]]
        for i in range(nrows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    return pivots


def nullspace(A, tol=None):
    """Basis of {x : A x = 0} for a square or rectangular A.

    Returns a list of solution vectors (tuples), one per free column.
    """
    if not A:
        return []
    M = [list(row) for row in A]
    pivots = _rref(M, tol)
    ncols = len(M[0])
    free = [c for c in range(ncols) if c not in pivots]
    zero = Fraction(0) if tol is None else 0.0
    one = Fraction(1) if tol is None else 1.0
    basis = []
    for f in free:
        x = [zero] * ncols
        x[f] = one
        for r, c in enumerate(pivots):
            x[c] = -M[r][f]
        basis.append(tuple(x))
    return basis


def solve(A, b, tol=None):
    """One solution x of A x = b, or None if the system is inconsistent.

    Free variables, if any, are set to zero, so the caller gets a particular
    solution of an underdetermined system.
    """
    nrows = len(A)
    ncols = len(A[0]) if nrows else 0
    M = [list(row) + [bv] for row, bv in zip(A, b)]
    pivots = _rref(M, tol)
    for r, c in enumerate(pivots):
        if c == ncols:
            return None  # pivot in the augmented column
    # _rref never pivots past the first inconsistency, so re-check residual rows
    for i in range(len(pivots), nrows):
        if tol is None:
            if M[i][ncols] != 0:
                return None
        elif abs(M[i][ncols]) > tol:
            return None
    zero = Fraction(0) if tol is None else 0.0
    x = [zero] * ncols
    for r, c in enumerate(pivots):
        x[c] = M[r][ncols]
    return tuple(x)
