"""Pure-Python/NumPy kernels.

Reference implementation of the hot loops; ``_kernels_c`` mirrors these
signatures and semantics exactly.  Subsets are visited in lexicographic order
so both backends report the same witnesses.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def topk_prefix_max(values: np.ndarray, depth: int) -> np.ndarray:
    """``out[t-1]`` = max over rows of the sum of that row's ``t`` largest entries."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    rows, cols = values.shape
    if depth < 0 or depth > cols:
        raise ValueError(f"depth {depth} outside [0, {cols}]")
    if depth == 0 or rows == 0:
        return np.zeros(depth)
    top = -np.sort(-values, axis=1)[:, :depth]
    return np.cumsum(top, axis=1).max(axis=0)


def first_dependent_subset(a: np.ndarray, k: int, rank_tol: float, budget: int):
    """First ``k``-column subset (lexicographic) that is numerically rank deficient.

    Returns ``(witness | None, examined, complete)``; ``complete`` is False when
    the budget ran out before all subsets were checked.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    m, n = a.shape
    examined = 0
    for combo in combinations(range(n), k):
        if examined >= budget:
            return None, examined, False
        examined += 1
        if k > m:
            return combo, examined, True
        s = np.linalg.svd(a[:, combo], compute_uv=False)
        if s[0] == 0.0 or s[-1] <= rank_tol * s[0]:
            return combo, examined, True
    return None, examined, True


def fitting_subsets(a: np.ndarray, b: np.ndarray, k: int, fit_tol: float, budget: int):
    """All ``k``-column subsets whose least-squares residual is at most ``fit_tol``.

    Returns ``(supports, examined, complete)``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    m, n = a.shape
    rcond = np.finfo(np.float64).eps * max(m, k)
    found = []
    examined = 0
    for combo in combinations(range(n), k):
        if examined >= budget:
            return found, examined, False
        examined += 1
        sub = a[:, combo]
        coef = np.linalg.lstsq(sub, b, rcond=rcond)[0]
        if np.linalg.norm(b - sub @ coef) <= fit_tol:
            found.append(combo)
    return found, examined, True
