"""Coherence quantities of a union-of-bases dictionary.

All cumulative (Babel-type) quantities use the per-reference-column form: for
each reference column, sort the absolute inner products against the candidate
columns in descending order and take prefix sums.  The maximum of the prefix
sums over reference columns equals the max-over-index-sets definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dictionary import Dictionary, gram
from .errors import BudgetExceededError, InputError

DEFAULT_RANK_TOL = 1e-10
DEFAULT_SPARK_BUDGET = 2_000_000


def _abs_offdiag_rows(g: np.ndarray) -> np.ndarray:
    """Row i holds |G[i, j]| for j != i (shape n x (n-1))."""
    n = g.shape[0]
    a = np.abs(g)
    mask = ~np.eye(n, dtype=bool)
    return a[mask].reshape(n, n - 1)


def mutual_coherence(d: Dictionary) -> float:
    if d.n < 2:
        raise InputError("mutual coherence needs at least two columns")
    return float(_abs_offdiag_rows(gram(d)).max())


def block_coherence(d: Dictionary, i: int, g: np.ndarray | None = None) -> float:
    """Largest |inner product| between distinct columns of block ``i`` (0 for width-1 blocks)."""
    r = d.partition.block_range(i)
    if len(r) < 2:
        return 0.0
    if g is None:
        g = gram(d)
    return float(_abs_offdiag_rows(g[r.start : r.stop, r.start : r.stop]).max())


def babel(d: Dictionary, s: int) -> float:
    if not 1 <= s <= d.n - 1:
        raise InputError(f"babel order s={s} outside [1, {d.n - 1}]")
    return float(babel_table(d, s)[s - 1])


def babel_table(d: Dictionary, depth: int, g: np.ndarray | None = None) -> np.ndarray:
    """``out[s-1]`` = Babel value at order ``s`` for ``s = 1..depth``."""
    if d.n < 2:
        raise InputError("Babel function needs at least two columns")
    if not 0 <= depth <= d.n - 1:
        raise InputError(f"babel depth {depth} outside [0, {d.n - 1}]")
    if g is None:
        g = gram(d)
    return kernels.topk_prefix_max(_abs_offdiag_rows(g), depth)


def cross_block_babel_table(d: Dictionary, i: int, j: int, depth: int, g: np.ndarray | None = None) -> np.ndarray:
    """``out[m-1]``: worst column of block ``j`` against its ``m`` best matches in block ``i``."""
    if i == j:
        raise InputError("cross-block cumulative coherence needs i != j; use within_block_babel")
    ri, rj = d.partition.block_range(i), d.partition.block_range(j)
    if not 0 <= depth <= len(ri):
        raise InputError(f"order {depth} outside [0, {len(ri)}] for block {i}")
    if g is None:
        g = gram(d)
    values = np.abs(g[rj.start : rj.stop, ri.start : ri.stop])
    return kernels.topk_prefix_max(values, depth)


def cross_block_babel(d: Dictionary, i: int, j: int, m: int) -> float:
    width = d.partition.widths[i] if 0 <= i < d.n_blocks else 0
    if not 1 <= m <= width:
        raise InputError(f"order m={m} outside [1, {width}] for block {i}")
    return float(cross_block_babel_table(d, i, j, m)[m - 1])


def within_block_babel_table(d: Dictionary, i: int, depth: int, g: np.ndarray | None = None) -> np.ndarray:
    r = d.partition.block_range(i)
    width = len(r)
    if not 0 <= depth <= width - 1:
        raise InputError(f"order {depth} outside [0, {width - 1}] for block {i}")
    if depth == 0:
        return np.zeros(0)
    if g is None:
        g = gram(d)
    return kernels.topk_prefix_max(_abs_offdiag_rows(g[r.start : r.stop, r.start : r.stop]), depth)


def within_block_babel(d: Dictionary, i: int, m: int) -> float:
    """Cumulative coherence inside block ``i``; order 0 is the empty sum."""
    if m == 0:
        d.partition.block_range(i)
        return 0.0
    return float(within_block_babel_table(d, i, m)[m - 1])


@dataclass(frozen=True)
class SparkResult:
    """Outcome of the exhaustive spark search.

    ``spark`` is None when no dependent subset exists up to ``max_card``.
    """

    spark: int | None
    witness: tuple[int, ...] | None
    max_card: int
    examined: int

    @property
    def exceeds(self) -> bool:
        return self.spark is None


def spark_bruteforce(
    d: Dictionary,
    max_card: int | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
    budget: int = DEFAULT_SPARK_BUDGET,
) -> SparkResult:
    if max_card is None:
        max_card = d.n
    if not 1 <= max_card <= d.n:
        raise InputError(f"max_card={max_card} outside [1, {d.n}]")
    a = np.ascontiguousarray(d.matrix)
    examined = 0
    for k in range(1, max_card + 1):
        witness, count, complete = kernels.first_dependent_subset(a, k, rank_tol, budget - examined)
        examined += count
        if witness is not None:
            return SparkResult(k, tuple(int(j) for j in witness), max_card, examined)
        if not complete:
            raise BudgetExceededError(
                f"spark search examined {examined} subsets without finishing cardinality {k}"
            )
    return SparkResult(None, None, max_card, examined)


def spark_lower_bound_piecewise(mu: float, alpha_max: float, n_blocks: int) -> float:
    """Lower bound on the spark of a union of ``n_blocks`` sub-bases; ``inf`` when ``mu == 0``."""
    if mu < 0:
        raise InputError(f"mu must be >= 0, got {mu}")
    if not 0.0 <= alpha_max <= 1.0:
        raise InputError(f"alpha_max must lie in [0, 1], got {alpha_max}")
    if n_blocks < 2:
        raise InputError(f"need at least two blocks, got {n_blocks}")
    if mu == 0:
        return math.inf
    return n_blocks * (1 + alpha_max * mu) / ((n_blocks - 1 + alpha_max) * mu)


@dataclass(frozen=True)
class CoherenceProfile:
    mu: float
    block_mu: tuple[float, ...]
    alpha: tuple[float, ...]
    alpha_max: float
    babel: dict[int, float] | None = None
    cross_babel: dict[tuple[int, int], dict[int, float]] | None = None
    within_babel: dict[int, dict[int, float]] | None = None
    widths: tuple[int, ...] = field(default=())

    @property
    def n_blocks(self) -> int:
        return len(self.block_mu)

    def to_dict(self) -> dict:
        out = {
            "mu": self.mu,
            "block_mu": list(self.block_mu),
            "alpha": list(self.alpha),
            "alpha_max": self.alpha_max,
            "widths": list(self.widths),
        }
        if self.babel is not None:
            out["babel"] = {str(s): v for s, v in self.babel.items()}
        if self.cross_babel is not None:
            out["cross_babel"] = {
                f"{i},{j}": {str(m): v for m, v in table.items()}
                for (i, j), table in self.cross_babel.items()
            }
        if self.within_babel is not None:
            out["within_babel"] = {
                str(i): {str(m): v for m, v in table.items()} for i, table in self.within_babel.items()
            }
        return out


def alpha_ratios(mu: float, block_mu) -> tuple[float, ...]:
    # alpha_i := 0 when the whole dictionary is orthonormal
    if mu == 0:
        return tuple(0.0 for _ in block_mu)
    return tuple(min(1.0, b / mu) for b in block_mu)


def coherence_profile(d: Dictionary, babel_depth: int | None = None) -> CoherenceProfile:
    g = gram(d)
    mu = float(_abs_offdiag_rows(g).max()) if d.n >= 2 else 0.0
    block_mu = tuple(block_coherence(d, i, g) for i in range(d.n_blocks))
    alpha = alpha_ratios(mu, block_mu)
    profile = dict(
        mu=mu,
        block_mu=block_mu,
        alpha=alpha,
        alpha_max=max(alpha),
        widths=d.partition.widths,
    )
    if babel_depth is not None:
        if babel_depth < 1:
            raise InputError(f"babel_depth must be >= 1, got {babel_depth}")
        widths = d.partition.widths
        depth = min(babel_depth, d.n - 1)
        table = babel_table(d, depth, g) if d.n >= 2 else np.zeros(0)
        profile["babel"] = {s + 1: float(v) for s, v in enumerate(table)}
        cross = {}
        for i in range(d.n_blocks):
            for j in range(d.n_blocks):
                if i != j:
                    t = cross_block_babel_table(d, i, j, min(babel_depth, widths[i]), g)
                    cross[(i, j)] = {m + 1: float(v) for m, v in enumerate(t)}
        profile["cross_babel"] = cross
        profile["within_babel"] = {
            i: {
                m + 1: float(v)
                for m, v in enumerate(within_block_babel_table(d, i, min(babel_depth, widths[i] - 1), g))
            }
            for i in range(d.n_blocks)
        }
    return CoherenceProfile(**profile)
