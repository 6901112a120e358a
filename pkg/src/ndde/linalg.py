"""Row reduction with an explicit pivot tolerance."""
import numpy as np


def inf_norm(M) -> float:
    """Operator norm induced by the max norm: largest absolute row sum."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(M), axis=1)))


def rref(M, rel_tol=1e-10):
    """Reduced row echelon form by Gauss-Jordan elimination with partial pivoting.

    Pivots smaller than ``rel_tol * ||M||_inf`` are treated as zero.
    Returns the reduced matrix and the list of pivot columns.
    """
    A = np.array(M, dtype=float, copy=True)
    A = np.atleast_2d(A)
    rows, cols = A.shape
    tol = rel_tol * inf_norm(A)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[p, c]) <= tol or A[p, c] == 0.0:
            A[r:, c] = 0.0
            continue
        A[[r, p]] = A[[p, r]]
        A[r] = A[r] / A[r, c]
        for i in range(rows):
            if i != r and A[i, c] != 0.0:
                A[i] -= A[i, c] * A[r]
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M, rel_tol=1e-10) -> int:
    return len(rref(M, rel_tol)[1])


def null_vector(M, rel_tol=1e-10):
    """A non-zero kernel vector read off the reduced form, or ``None``."""
    A, pivots = rref(M, rel_tol)
    cols = A.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    if not free:
        return None
    f = free[0]
    x = np.zeros(cols)
    x[f] = 1.0
    for row, pc in enumerate(pivots):
        x[pc] = -A[row, f]
    return x
