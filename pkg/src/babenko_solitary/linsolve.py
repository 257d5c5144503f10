"""Preconditioned MINRES restricted to even grid functions."""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres

from .spectral import Grid


class LinearSolveError(RuntimeError):
    """The Krylov solve missed its tolerance (operator close to singular)."""


def solve_even(
    grid: Grid,
    apply_op: Callable[[np.ndarray], np.ndarray],
    precond_symbol: np.ndarray,
    rhs: np.ndarray,
    tol: float = 1e-12,
    maxiter: int = 400,
    max_sweeps: int = 6,
) -> np.ndarray:
    """Solve ``A w = rhs`` for even ``w`` with ``A`` symmetric.

    ``precond_symbol`` is a positive multiplier on the rfft wavenumbers whose
    reciprocal approximates ``|A|``.  Every operator application is projected
    onto the even subspace so odd kernel directions never enter the Krylov
    space.  MINRES is restarted on the true residual until
    ``||A w - rhs|| <= tol ||rhs||``.
    """
    n = grid.size_n
    even = grid.even_part
    inv_symbol = 1.0 / precond_symbol

    A = LinearOperator((n, n), matvec=lambda x: even(apply_op(even(np.ravel(x)))), dtype=float)
    M = LinearOperator((n, n), matvec=lambda x: even(grid.multiplier(np.ravel(x), inv_symbol)), dtype=float)

    b = even(np.asarray(rhs, dtype=float))
    bnorm = np.linalg.norm(b)
    w = np.zeros(n)
    if bnorm == 0:
        return w
    res = bnorm
    for _ in range(max_sweeps):
        r = b - A.matvec(w)
        res = np.linalg.norm(r)
        if res <= tol * bnorm:
            return even(w)
        dw, _info = minres(A, r, rtol=max(0.1 * tol * bnorm / res, 1e-15), maxiter=maxiter, M=M)
        w = w + dw
    r = b - A.matvec(w)
    res = np.linalg.norm(r)
    if res <= tol * bnorm:
        return even(w)
    raise LinearSolveError(f"relative residual {res / bnorm:.3e} above tolerance {tol:.1e}")
