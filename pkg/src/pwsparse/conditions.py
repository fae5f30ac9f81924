"""Sufficient conditions for uniqueness and exact recovery.

Bound-type conditions return an upper limit on ``||x||_0`` (strict
inequality).  Pattern-type conditions take per-block sparsities and return a
:class:`Verdict`.  Strict inequalities are decided exactly: every float input
is a dyadic rational, so the comparison is carried out with
:class:`fractions.Fraction` and the reported slack is the correctly rounded
``rhs - lhs``.

Condition ids used in reports and CSV output:

========== ===================================================
cond1      general dictionary, ``(1 + 1/mu) / 2``
cond2      pair of orthogonal bases, uniqueness, ``1/mu``
cond3      pair of orthogonal bases, l1/l0 equivalence
cond4      union of orthogonal bases, ERC in the sparsities
omp_union  union of N orthogonal bases, greedy recovery bound
bp_union   union of N orthogonal bases, l1 recovery bound
cond5      union of general bases, piecewise uniqueness
cond6      union of general bases, piecewise ERC
========== ===================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .coherence import coherence_profile, spark_lower_bound_piecewise
from .dictionary import BlockPartition, Dictionary
from .errors import InputError, RankDeficientError

SQRT2 = math.sqrt(2.0)
ORTHO_TOL = 1e-10
ERC_RANK_TOL = 1e-10

FIG3_ALPHA_CASES = ((0.95, 0.1), (0.2, 0.15), (0.05, 0.02))

BOUND_IDS = ("cond1", "cond2", "cond3", "omp_union", "bp_union", "cond5")
PATTERN_IDS = ("cond4", "cond6")
CONDITION_IDS = ("cond1", "cond2", "cond3", "cond4", "omp_union", "bp_union", "cond5", "cond6")


@dataclass(frozen=True)
class SparsityPattern:
    s: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(v) for v in self.s)
        if not s:
            raise InputError("sparsity pattern is empty")
        if any(v < 0 for v in s):
            raise InputError(f"sparsities must be >= 0, got {list(s)}")
        object.__setattr__(self, "s", s)

    @property
    def total(self) -> int:
        return sum(self.s)

    @property
    def n_blocks(self) -> int:
        return len(self.s)

    def check_against(self, partition: BlockPartition) -> None:
        if len(self.s) != partition.n_blocks:
            raise InputError(f"pattern has {len(self.s)} entries, partition has {partition.n_blocks} blocks")
        for i, (si, ni) in enumerate(zip(self.s, partition.widths)):
            if si > ni:
                raise InputError(f"s_{i}={si} exceeds block width {ni}")


@dataclass(frozen=True)
class SupportPartition:
    """A global support split along the blocks; local indices are 0-based within each block."""

    partition: BlockPartition
    supports: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        supports = tuple(tuple(sorted(int(k) for k in b)) for b in self.supports)
        if len(supports) != self.partition.n_blocks:
            raise InputError("one local support per block is required")
        for i, (b, w) in enumerate(zip(supports, self.partition.widths)):
            if len(set(b)) != len(b):
                raise InputError(f"duplicate index in block {i} support")
            if b and (b[0] < 0 or b[-1] >= w):
                raise InputError(f"local index out of range in block {i} (width {w})")
        object.__setattr__(self, "supports", supports)

    @classmethod
    def from_global(cls, indices: Iterable[int], partition: BlockPartition) -> "SupportPartition":
        idx = [int(j) for j in indices]
        if len(set(idx)) != len(idx):
            raise InputError(f"duplicate index in support {idx}")
        return cls(partition, partition.split(idx))

    @property
    def support(self) -> tuple[int, ...]:
        out = []
        for off, b in zip(self.partition.offsets, self.supports):
            out.extend(off + k for k in b)
        return tuple(out)

    @property
    def complement(self) -> tuple[int, ...]:
        s = set(self.support)
        return tuple(j for j in range(self.partition.n) if j not in s)

    @property
    def pattern(self) -> SparsityPattern:
        return SparsityPattern(tuple(len(b) for b in self.supports))

    def to_dict(self) -> dict:
        return {
            "support": list(self.support),
            "per_block": [list(b) for b in self.supports],
            "sparsities": list(self.pattern.s),
        }


@dataclass(frozen=True)
class Verdict:
    satisfied: bool
    slack: float
    lhs: float
    rhs: float
    z: int | None = None
    order: tuple[int, ...] | None = None


def _q(x) -> Fraction:
    return Fraction(x)


def _check_mu(mu: float) -> None:
    if not mu >= 0:
        raise InputError(f"mu must be >= 0, got {mu}")


def _check_blocks(n_blocks: int) -> None:
    if n_blocks < 2:
        raise InputError(f"condition needs N >= 2 blocks, got {n_blocks}")


def _as_pattern(pattern) -> SparsityPattern:
    return pattern if isinstance(pattern, SparsityPattern) else SparsityPattern(tuple(pattern))


# Bound-type conditions.  mu == 0 means an orthonormal dictionary: unbounded.


def cond1_general(mu: float) -> float:
    _check_mu(mu)
    return math.inf if mu == 0 else (1 + 1 / mu) / 2


def cond2_pair_orthogonal_uniqueness(mu: float) -> float:
    _check_mu(mu)
    return math.inf if mu == 0 else 1 / mu


def cond3_pair_orthogonal_equivalence(mu: float) -> float:
    _check_mu(mu)
    return math.inf if mu == 0 else (SQRT2 - 0.5) / mu


def cond_orthogonal_union_omp(mu: float, n_blocks: int) -> float:
    _check_mu(mu)
    _check_blocks(n_blocks)
    return math.inf if mu == 0 else (0.5 + 1 / (2 * (n_blocks - 1))) / mu


def cond_orthogonal_union_bp(mu: float, n_blocks: int) -> float:
    _check_mu(mu)
    _check_blocks(n_blocks)
    return math.inf if mu == 0 else (SQRT2 - 1 + 1 / (2 * (n_blocks - 1))) / mu


def cond5_piecewise_uniqueness(mu: float, alpha_max: float, n_blocks: int) -> float:
    _check_mu(mu)
    return spark_lower_bound_piecewise(mu, alpha_max, n_blocks) / 2


def _exact_bound(cond_id: str, mu: float, alpha_max: float = 0.0, n_blocks: int = 2) -> Fraction | None:
    """Exact rational value of the bounds free of irrational constants."""
    if mu == 0:
        return None
    q = _q(mu)
    if cond_id == "cond1":
        return (1 + 1 / q) / 2
    if cond_id == "cond2":
        return 1 / q
    if cond_id == "omp_union":
        return (Fraction(1, 2) + Fraction(1, 2 * (n_blocks - 1))) / q
    if cond_id == "cond5":
        a = _q(alpha_max)
        return n_blocks * (1 + a * q) / (2 * (n_blocks - 1 + a) * q)
    return None


def bound_satisfied(cond_id: str, total: int, value: float, mu: float, alpha_max: float = 0.0, n_blocks: int = 2) -> bool:
    """Strict ``total < bound`` comparison, exact where the bound is rational."""
    if math.isinf(value):
        return True
    exact = _exact_bound(cond_id, mu, alpha_max, n_blocks)
    if exact is not None:
        return total < exact
    return total < value


# Pattern-type conditions.


def cond4_orthogonal_erc(mu: float, pattern) -> Verdict:
    """ERC for a union of orthogonal bases; the smallest sparsity plays the special role."""
    _check_mu(mu)
    s = _as_pattern(pattern).s
    order = tuple(int(i) for i in np.argsort(s, kind="stable"))
    ss = [s[i] for i in order]
    q = _q(mu)
    lhs = sum((q * sj / (1 + q * sj) for sj in ss[1:]), Fraction(0))
    rhs = 1 / (2 * (1 + q * ss[0]))
    return Verdict(lhs < rhs, float(rhs - lhs), float(lhs), float(rhs), order=order)


def select_z(mu: float, alpha: Sequence[float], s: Sequence[int]) -> int | None:
    """Block maximizing ``(1 + alpha_i mu) / ((1 - alpha_i) s_i)``.

    Empty blocks and blocks with ``alpha_i == 1`` have ratio +inf.  Ties go
    to the lowest block index.  Returns None when every block is empty.
    """
    if all(si == 0 for si in s):
        return None
    q = _q(mu)
    best, best_ratio = None, None
    for i, (ai, si) in enumerate(zip(alpha, s)):
        a = _q(ai)
        if si == 0 or a == 1:
            ratio = math.inf
        else:
            ratio = (1 + a * q) / ((1 - a) * si)
        if best is None or ratio > best_ratio:
            best, best_ratio = i, ratio
    return best


def cond6_piecewise_erc(mu: float, alpha: Sequence[float], pattern) -> Verdict:
    _check_mu(mu)
    s = _as_pattern(pattern).s
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != len(s):
        raise InputError(f"{len(alpha)} alpha values for {len(s)} blocks")
    for a in alpha:
        if not 0.0 <= a <= 1.0:
            raise InputError(f"alpha values must lie in [0, 1], got {a}")
    q = _q(mu)
    lhs = 2 * sum(
        (q * si / (1 + _q(ai) * q + (1 - _q(ai)) * q * si) for ai, si in zip(alpha, s)),
        Fraction(0),
    )
    z = select_z(mu, alpha, s)
    if z is None:
        rhs = Fraction(1)
    else:
        az, sz = _q(alpha[z]), s[z]
        rhs = (1 + az * q + 2 * (1 - az) * q * sz) / (1 + az * q + (1 - az) * q * sz)
    return Verdict(lhs < rhs, float(rhs - lhs), float(lhs), float(rhs), z=z)


# Exact ERC of a concrete dictionary and support.


@dataclass(frozen=True)
class ErcResult:
    value: float
    holds: bool
    worst_column: int | None


def erc_exact(d: Dictionary, support) -> ErcResult:
    """``max_{j not in S} ||(A_S^T A_S)^{-1} A_S^T a_j||_1`` via a QR factorization of ``A_S``."""
    if isinstance(support, SupportPartition):
        idx = list(support.support)
    else:
        idx = sorted(int(j) for j in support)
        if len(set(idx)) != len(idx):
            raise InputError(f"duplicate index in support {idx}")
    for j in idx:
        if not 0 <= j < d.n:
            raise InputError(f"support index {j} out of range [0, {d.n})")
    in_s = set(idx)
    rest = [j for j in range(d.n) if j not in in_s]
    if not idx or not rest:
        return ErcResult(0.0, True, None)
    a_s = d.matrix[:, idx]
    if len(idx) > d.m:
        raise RankDeficientError("support columns dependent: more columns than rows")
    sv = np.linalg.svd(a_s, compute_uv=False)
    if sv[-1] <= ERC_RANK_TOL * sv[0]:
        raise RankDeficientError("support columns dependent; ERC undefined")
    q, r = np.linalg.qr(a_s)
    coeffs = scipy.linalg.solve_triangular(r, q.T @ d.matrix[:, rest])
    norms = np.abs(coeffs).sum(axis=0)
    k = int(np.argmax(norms))
    value = float(norms[k])
    return ErcResult(value, value < 1.0, rest[k])


# Reports.


@dataclass
class ConditionEntry:
    id: str
    kind: str
    value: float | None
    satisfied: bool | None = None
    applicable: bool = True
    assumption: str | None = None
    note: str | None = None
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        value = self.value
        if value is not None and math.isinf(value):
            value = "unbounded"
        return {
            "id": self.id,
            "kind": self.kind,
            "value": value,
            "satisfied": self.satisfied,
            "applicable": self.applicable,
            "assumption": self.assumption,
            "note": self.note,
            "inputs": self.inputs,
        }


@dataclass
class ConditionReport:
    entries: list[ConditionEntry]
    mu: float
    alpha: tuple[float, ...]
    pattern: tuple[int, ...] | None = None

    def __getitem__(self, cond_id: str) -> ConditionEntry:
        for e in self.entries:
            if e.id == cond_id:
                return e
        raise KeyError(cond_id)

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "alpha": list(self.alpha),
            "pattern": None if self.pattern is None else list(self.pattern),
            "conditions": [e.to_dict() for e in self.entries],
        }


def evaluate_all(
    d: Dictionary | None = None,
    *,
    mu: float | None = None,
    alpha: Sequence[float] | None = None,
    pattern=None,
    support=None,
) -> ConditionReport:
    """Evaluate every condition that the inputs allow.

    Pass either a dictionary ``d`` or the raw coherence data ``mu`` and
    ``alpha`` (one ratio per block).  Conditions that only hold for unions of
    orthogonal bases are marked not applicable unless every block coherence
    is at most 1e-10.  ``support`` (global indices or a SupportPartition)
    requires ``d`` and adds the exact ERC value.
    """
    if d is not None:
        prof = coherence_profile(d)
        mu, alpha, block_mu = prof.mu, prof.alpha, prof.block_mu
    else:
        if mu is None or alpha is None:
            raise InputError("need a dictionary or both mu and alpha")
        _check_mu(mu)
        alpha = tuple(float(a) for a in alpha)
        block_mu = tuple(a * mu for a in alpha)
    if support is not None and d is None:
        raise InputError("the exact ERC needs the dictionary itself")
    n_blocks = len(alpha)
    alpha_max = max(alpha)
    orthogonal = max(block_mu) <= ORTHO_TOL
    if support is not None and pattern is None:
        sp = support if isinstance(support, SupportPartition) else SupportPartition.from_global(support, d.partition)
        pattern = sp.pattern
    pat = None if pattern is None else _as_pattern(pattern)
    if pat is not None:
        if pat.n_blocks != n_blocks:
            raise InputError(f"pattern has {pat.n_blocks} entries for {n_blocks} blocks")
        if d is not None:
            pat.check_against(d.partition)
    total = None if pat is None else pat.total
    base = {"mu": mu}
    ortho_tag = "assumption: orthogonal union"
    entries: list[ConditionEntry] = []

    def bound_entry(cond_id, value, applicable, assumption=None, note=None, inputs=None):
        sat = None
        if total is not None and applicable:
            sat = bound_satisfied(cond_id, total, value, mu, alpha_max, n_blocks)
        entries.append(
            ConditionEntry(cond_id, "bound", value, sat, applicable, assumption, note, inputs or dict(base))
        )

    if mu == 0:
        note0 = "mu = 0: orthonormal dictionary, bound unbounded"
    else:
        note0 = None
    bound_entry("cond1", cond1_general(mu), True, note=note0)

    pair_ok = orthogonal and n_blocks == 2
    pair_note = None if pair_ok else "not applicable: needs a pair of orthogonal bases"
    bound_entry("cond2", cond2_pair_orthogonal_uniqueness(mu), pair_ok, ortho_tag, pair_note)
    bound_entry("cond3", cond3_pair_orthogonal_equivalence(mu), pair_ok, ortho_tag, pair_note)

    piecewise = n_blocks >= 2
    union_ok = orthogonal and piecewise
    if not piecewise:
        union_note = "not applicable (N<2)"
    elif not orthogonal:
        union_note = "not applicable: blocks are not orthogonal"
    else:
        union_note = None

    if pat is not None and piecewise:
        v4 = cond4_orthogonal_erc(mu, pat)
        entries.append(
            ConditionEntry(
                "cond4", "boolean", v4.slack, v4.satisfied if union_ok else None, union_ok, ortho_tag,
                union_note, {**base, "s": list(pat.s), "order": list(v4.order)},
            )
        )
    else:
        entries.append(
            ConditionEntry(
                "cond4", "boolean", None, None, union_ok, ortho_tag,
                union_note or "needs a sparsity pattern", dict(base),
            )
        )

    if piecewise:
        inputs_n = {**base, "N": n_blocks}
        bound_entry("omp_union", cond_orthogonal_union_omp(mu, n_blocks), union_ok, ortho_tag, union_note, inputs_n)
        bound_entry("bp_union", cond_orthogonal_union_bp(mu, n_blocks), union_ok, ortho_tag, union_note, inputs_n)
        bound_entry(
            "cond5", cond5_piecewise_uniqueness(mu, alpha_max, n_blocks), True,
            inputs={**inputs_n, "alpha_max": alpha_max},
        )
        if pat is not None:
            v6 = cond6_piecewise_erc(mu, alpha, pat)
            entries.append(
                ConditionEntry(
                    "cond6", "boolean", v6.slack, v6.satisfied, True, None, None,
                    {**base, "alpha": list(alpha), "s": list(pat.s), "z": v6.z},
                )
            )
        else:
            entries.append(
                ConditionEntry("cond6", "boolean", None, None, True, None, "needs a sparsity pattern",
                               {**base, "alpha": list(alpha)})
            )
    else:
        for cond_id, kind in (("omp_union", "bound"), ("bp_union", "bound"), ("cond5", "bound"), ("cond6", "boolean")):
            entries.append(ConditionEntry(cond_id, kind, None, None, False, None, "not applicable (N<2)", dict(base)))

    if support is not None:
        erc = erc_exact(d, support)
        entries.append(
            ConditionEntry(
                "erc_exact", "exact", erc.value, erc.holds, True, None, None,
                {"support": list(support.support if isinstance(support, SupportPartition) else sorted(support)),
                 "worst_column": erc.worst_column},
            )
        )
    return ConditionReport(entries, mu, tuple(alpha), None if pat is None else pat.s)


# Figure data.

BOUND_HEADER = ("condition", "param1", "param2", "value", "satisfied")


def _grid(s_max: int) -> list[tuple[int, int]]:
    if s_max < 0:
        raise InputError("empty grid: s_max must be >= 0")
    return [(s1, s2) for s1 in range(s_max + 1) for s2 in range(s_max + 1)]


def _bound_rows(cond_id, bound, mu, grid, alpha_max=0.0, n_blocks=2):
    rows = [(cond_id, "", "", bound, "")]
    for s1, s2 in grid:
        total = s1 + s2
        sat = bound_satisfied(cond_id, total, bound, mu, alpha_max, n_blocks)
        rows.append((cond_id, s1, s2, bound - total, sat))
    return rows


def bound_table(
    mode: str,
    *,
    mus: Sequence[float] = (0.05,),
    mu: float = 0.1,
    alpha_max: float = 0.5,
    alpha: Sequence[float] = (0.2, 0.5),
    cases: Sequence[tuple[float, float]] = FIG3_ALPHA_CASES,
    s_max: int | None = None,
    conditions: Sequence[str] | None = None,
) -> list[tuple]:
    """Rows ``(condition, param1, param2, value, satisfied)`` for the figure modes.

    ``fig1``: cond1, cond2 and cond3 at each ``mu`` in ``mus`` (``param1`` = mu), plus
    cond4 slack on an ``(s1, s2)`` grid when ``s_max`` is given.
    ``fig2``: cond1, cond2, cond5 at ``mu``, ``alpha_max``, N = 2; a threshold
    row per condition followed by per-cell slack and feasibility.
    ``example2``: cond1, cond3, cond4, cond6 at ``mu`` and two-block ``alpha``.
    ``fig3``: cond6 per cell for each ``(alpha1, alpha2)`` case; the condition
    column reads ``cond6_case1`` and so on.
    """
    if conditions is not None:
        unknown = [c for c in conditions if c not in CONDITION_IDS]
        if unknown:
            raise InputError(f"unknown condition id(s): {', '.join(unknown)}")
    wanted = set(conditions) if conditions is not None else None

    def keep(cond_id: str) -> bool:
        return wanted is None or cond_id in wanted or cond_id.split("_case")[0] in wanted

    rows: list[tuple] = []
    if mode == "fig1":
        if not mus:
            raise InputError("empty grid: no mu values")
        grid = _grid(s_max) if s_max is not None else []
        for m in mus:
            rows.append(("cond1", m, "", cond1_general(m), ""))
            rows.append(("cond2", m, "", cond2_pair_orthogonal_uniqueness(m), ""))
            rows.append(("cond3", m, "", cond3_pair_orthogonal_equivalence(m), ""))
            for s1, s2 in grid:
                v = cond4_orthogonal_erc(m, (s1, s2))
                rows.append(("cond4", s1, s2, v.slack, v.satisfied))
    elif mode == "fig2":
        grid = _grid(20 if s_max is None else s_max)
        rows += _bound_rows("cond1", cond1_general(mu), mu, grid)
        rows += _bound_rows("cond2", cond2_pair_orthogonal_uniqueness(mu), mu, grid)
        rows += _bound_rows("cond5", cond5_piecewise_uniqueness(mu, alpha_max, 2), mu, grid, alpha_max, 2)
    elif mode == "example2":
        grid = _grid(20 if s_max is None else s_max)
        rows += _bound_rows("cond1", cond1_general(mu), mu, grid)
        rows += _bound_rows("cond3", cond3_pair_orthogonal_equivalence(mu), mu, grid)
        for s1, s2 in grid:
            v = cond4_orthogonal_erc(mu, (s1, s2))
            rows.append(("cond4", s1, s2, v.slack, v.satisfied))
        for s1, s2 in grid:
            v = cond6_piecewise_erc(mu, alpha, (s1, s2))
            rows.append(("cond6", s1, s2, v.slack, v.satisfied))
    elif mode == "fig3":
        grid = _grid(20 if s_max is None else s_max)
        if not cases:
            raise InputError("empty grid: no alpha cases")
        for k, case in enumerate(cases, start=1):
            for s1, s2 in grid:
                v = cond6_piecewise_erc(mu, case, (s1, s2))
                rows.append((f"cond6_case{k}", s1, s2, v.slack, v.satisfied))
    else:
        raise InputError(f"unknown bounds mode {mode!r}; expected fig1, fig2, example2 or fig3")
    return [r for r in rows if keep(r[0])]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def format_bound_rows(rows: Iterable[tuple]) -> str:
    lines = [",".join(BOUND_HEADER)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"
