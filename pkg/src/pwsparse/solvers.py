"""Recovery algorithms: OMP, Basis Pursuit and an exhaustive l0 oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from . import kernels
from .conditions import SupportPartition
from .dictionary import Dictionary
from .errors import BudgetExceededError, InfeasibleError, InputError, RankDeficientError

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-8
OPTIMALITY_TOL = 1e-7
OMP_RESIDUAL_TOL = 1e-8
SUPPORT_THRESHOLD = 1e-6
FIT_TOL = 1e-8
LS_RANK_TOL = 1e-10
L0_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class RecoveryProblem:
    dictionary: Dictionary
    b: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=np.float64, copy=True).ravel()
        if b.shape[0] != self.dictionary.m:
            raise InputError(f"measurement has length {b.shape[0]}, dictionary has {self.dictionary.m} rows")
        if not np.all(np.isfinite(b)):
            raise InputError("measurement contains non-finite entries")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)


@dataclass(eq=False)
class RecoveryResult:
    x: np.ndarray
    support: SupportPartition
    residual_norm: float
    iterations: int
    solver: str
    objective: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "converged": self.converged,
            "x": [float(v) for v in self.x],
            "support": self.support.to_dict(),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "objective": self.objective,
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def least_squares_on_support(d: Dictionary, support, b) -> tuple[np.ndarray, float]:
    """Coefficients on ``sorted(support)`` minimizing ``||A_S c - b||_2``, and the residual norm.

    Uses a Householder QR of ``A_S``; raises RankDeficientError when a
    diagonal entry of ``R`` falls below ``1e-10`` times the largest one.
    """
    idx = sorted(int(j) for j in support)
    b = np.asarray(b, dtype=np.float64)
    if not idx:
        return np.zeros(0), float(np.linalg.norm(b))
    if len(idx) > d.m:
        raise RankDeficientError(f"{len(idx)} support columns exceed the {d.m} rows")
    a_s = d.matrix[:, idx]
    q, r = np.linalg.qr(a_s)
    diag = np.abs(np.diag(r))
    if diag.min() <= LS_RANK_TOL * diag.max():
        raise RankDeficientError(f"support columns {idx} are numerically dependent")
    coef = scipy.linalg.solve_triangular(r, q.T @ b)
    return coef, float(np.linalg.norm(b - a_s @ coef))


def _finish(p: RecoveryProblem, x, support_idx, solver, iterations, objective, converged, diagnostics):
    d = p.dictionary
    return RecoveryResult(
        x=x,
        support=SupportPartition.from_global(support_idx, d.partition),
        residual_norm=float(np.linalg.norm(d.matrix @ x - p.b)),
        iterations=iterations,
        solver=solver,
        objective=float(objective),
        converged=converged,
        diagnostics=diagnostics,
    )


def omp(
    p: RecoveryProblem,
    max_sparsity: int | None = None,
    residual_tol: float = OMP_RESIDUAL_TOL,
) -> RecoveryResult:
    """Orthogonal Matching Pursuit.

    Each step adds the unselected column with the largest ``|<a_j, r>|``
    (lowest index on ties) and refits by least squares on the selection.
    Stops once ``||r|| <= residual_tol`` or ``max_sparsity`` columns are in.
    """
    d = p.dictionary
    a, b = d.matrix, p.b
    if max_sparsity is None:
        max_sparsity = min(d.m, d.n)
    if max_sparsity < 0:
        raise InputError(f"max_sparsity must be >= 0, got {max_sparsity}")
    selected: list[int] = []
    coef = np.zeros(0)
    r = b.copy()
    history = [float(np.linalg.norm(r))]
    converged = history[-1] <= residual_tol
    stop_reason = "residual_tol" if converged else None
    while not converged and len(selected) < max_sparsity:
        corr = np.abs(a.T @ r)
        corr[selected] = -1.0
        j = int(np.argmax(corr))
        if corr[j] <= 0.0:
            stop_reason = "residual orthogonal to every column"
            break
        trial = sorted(selected + [j])
        try:
            coef, _ = least_squares_on_support(d, trial, b)
        except RankDeficientError as exc:
            stop_reason = f"rank deficiency: {exc}"
            break
        selected.append(j)
        r = b - a[:, trial] @ coef
        history.append(float(np.linalg.norm(r)))
        converged = history[-1] <= residual_tol
    if stop_reason is None:
        stop_reason = "residual_tol" if converged else "max_sparsity"
    support = sorted(selected)
    x = np.zeros(d.n)
    x[support] = coef if support else 0.0
    diagnostics = {"selection_order": selected, "residual_history": history, "stop_reason": stop_reason}
    return _finish(p, x, support, "omp", len(selected), len(support), converged, diagnostics)


def basis_pursuit(
    p: RecoveryProblem,
    feasibility: float = FEASIBILITY_TOL,
    optimality: float = OPTIMALITY_TOL,
    support_threshold: float = SUPPORT_THRESHOLD,
    max_iter: int | None = None,
) -> RecoveryResult:
    """Minimize ``||x||_1`` subject to ``Ax = b``.

    Solved as the linear program over ``x = u - v`` with ``u, v >= 0`` by the
    HiGHS dual simplex.  The equality-constraint multipliers ``y`` give the
    dual certificate: after scaling so that ``||A^T y||_inf <= 1``, the gap
    ``||x||_1 - b^T y`` bounds the distance to the optimum.  A least-squares
    refit on the detected support removes solver round-off when it keeps the
    signs and does not increase the residual.
    """
    d = p.dictionary
    a, b = d.matrix, p.b
    n = d.n
    options = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
    if max_iter is not None:
        options["maxiter"] = max_iter
    res = linprog(
        np.ones(2 * n),
        A_eq=np.hstack([a, -a]),
        b_eq=b,
        bounds=(0, None),
        method="highs-ds",
        options=options,
    )
    if res.status == 2:
        raise InfeasibleError("b is not in the range of A")
    if res.x is None:
        raise InfeasibleError(f"LP solver returned no iterate: {res.message}")
    x = res.x[:n] - res.x[n:]
    resid = float(np.linalg.norm(a @ x - b))

    polished = False
    idx = np.flatnonzero(np.abs(x) > support_threshold)
    if 0 < idx.size <= d.m:
        try:
            coef, ls_resid = least_squares_on_support(d, idx, b)
        except RankDeficientError:
            pass
        else:
            if ls_resid <= max(resid, feasibility) and np.all(np.sign(coef) == np.sign(x[idx])):
                x = np.zeros(n)
                x[idx] = coef
                resid = float(np.linalg.norm(a @ x - b))
                polished = True
    if resid > feasibility:
        if res.status == 0:
            raise InfeasibleError(f"residual {resid:.3e} above feasibility tolerance {feasibility:.1e}")
        log.warning("basis pursuit stopped early: %s", res.message)

    y = np.asarray(res.eqlin.marginals, dtype=np.float64) if res.eqlin is not None else np.zeros(d.m)
    scale = max(1.0, float(np.max(np.abs(a.T @ y)))) if n else 1.0
    y = y / scale
    l1 = float(np.abs(x).sum())
    dual_obj = float(b @ y)
    dual_inf = float(np.max(np.abs(a.T @ y))) if n else 0.0
    gap = l1 - dual_obj
    certified = dual_inf <= 1 + optimality and gap <= optimality * max(1.0, l1)
    converged = res.status == 0 and resid <= feasibility and certified
    support = np.flatnonzero(np.abs(x) > support_threshold).tolist()
    diagnostics = {
        "lp_status": int(res.status),
        "lp_message": str(res.message),
        "polished": polished,
        "certificate": {
            "y": y,
            "dual_objective": dual_obj,
            "dual_infeasibility": dual_inf,
            "duality_gap": gap,
            "certified": certified,
        },
    }
    return _finish(p, x, support, "bp", int(getattr(res, "nit", 0) or 0), l1, converged, diagnostics)


def l0_bruteforce(
    p: RecoveryProblem,
    s_max: int,
    fit_tol: float = FIT_TOL,
    budget: int = L0_BUDGET,
) -> RecoveryResult | None:
    """Sparsest exact representation by exhaustive search over supports.

    Cardinalities are tried in increasing order.  At the first cardinality
    admitting a fit with residual ``<= fit_tol`` every fitting support is
    collected into ``diagnostics["minimizers"]``; the result itself uses the
    lexicographically first one.  Returns None when nothing fits up to
    ``s_max``.
    """
    d = p.dictionary
    if not 0 <= s_max <= d.n:
        raise InputError(f"s_max={s_max} outside [0, {d.n}]")
    if np.linalg.norm(p.b) <= fit_tol:
        diag = {"minimizers": [[]], "unique": True, "examined": 1, "per_block": [[0] * d.n_blocks]}
        return _finish(p, np.zeros(d.n), [], "l0", 0, 0, True, diag)
    a = np.ascontiguousarray(d.matrix)
    examined = 0
    for k in range(1, s_max + 1):
        found, count, complete = kernels.fitting_subsets(a, p.b, k, fit_tol, budget - examined)
        examined += count
        if not complete:
            raise BudgetExceededError(f"l0 search examined {examined} supports without finishing cardinality {k}")
        if found:
            first = list(found[0])
            coef, _ = least_squares_on_support(d, first, p.b)
            x = np.zeros(d.n)
            x[first] = coef
            minimizers = [list(map(int, s)) for s in found]
            per_block = [
                [len(blk) for blk in SupportPartition.from_global(s, d.partition).supports] for s in minimizers
            ]
            diag = {"minimizers": minimizers, "unique": len(found) == 1, "examined": examined, "per_block": per_block}
            return _finish(p, x, first, "l0", k, k, True, diag)
    return None
