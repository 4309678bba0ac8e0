"""Sturm sequences for symmetric tridiagonal matrices.

Used as an independent check on the library eigensolver: the number of
eigenvalues below a shift is the number of negative pivots of the LDL^T
factorization of ``T - shift``.
"""

from __future__ import annotations

import numpy as np


def sturm_count(d: np.ndarray, e: np.ndarray, shift: float) -> int:
    """Number of eigenvalues of ``tridiag(e, d, e)`` strictly below ``shift``."""
    d = np.asarray(d, dtype=float)
    e2 = np.asarray(e, dtype=float) ** 2
    tiny = np.finfo(float).tiny
    count = 0
    q = d[0] - shift
    for i in range(len(d)):
        if i:
            q = d[i] - shift - e2[i - 1] / q
        if q == 0.0:
            q = -tiny
        if q < 0:
            count += 1
    return count


def bisect_eigenvalue(d: np.ndarray, e: np.ndarray, k: int, tol: float = 0.0) -> float:
    """The ``k``-th smallest eigenvalue (0-based) by bisection on Sturm counts.

    With the default ``tol=0`` the bracket is halved until it spans
    adjacent floats.
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    if not 0 <= k < len(d):
        raise IndexError(f"eigenvalue index {k} out of range for order {len(d)}")
    # Gershgorin bounds
    r = np.zeros_like(d)
    r[:-1] += np.abs(e)
    r[1:] += np.abs(e)
    lo, hi = float(np.min(d - r)), float(np.max(d + r))
    scale = max(abs(lo), abs(hi), 1.0)
    while hi - lo > tol * scale:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sturm_count(d, e, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
