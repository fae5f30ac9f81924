"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Expected values are recomputed here from closed forms, independent of the
library code paths, and compared at the stated tolerances.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE_LINES, random_union
from pwsparse import cli
from pwsparse.coherence import (
    babel_table,
    coherence_profile,
    cross_block_babel_table,
    spark_bruteforce,
    spark_lower_bound_piecewise,
    within_block_babel_table,
)
from pwsparse.conditions import (
    FIG3_ALPHA_CASES,
    cond1_general,
    cond2_pair_orthogonal_uniqueness,
    cond3_pair_orthogonal_equivalence,
    cond4_orthogonal_erc,
    cond5_piecewise_uniqueness,
    cond6_piecewise_erc,
    cond_orthogonal_union_omp,
    erc_exact,
)
from pwsparse.dictionary import BlockPartition, Dictionary, gram
from pwsparse.generators import (
    SignalSpec,
    derive_seed,
    identity_hadamard,
    piecewise_sparse_signal,
    union_general,
    union_orthogonal,
)
from pwsparse.solvers import RecoveryProblem, basis_pursuit, l0_bruteforce, omp

README = Path(__file__).resolve().parents[1] / "README.md"


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# 1. Bounds at mu = 0.05


def test_criterion_01_bounds_at_mu_005(capsys):
    mu = 0.05
    expected = {
        "cond1": 0.5 * (1.0 + 1.0 / mu),
        "cond2": 1.0 / mu,
        "cond3": (math.sqrt(2.0) - 0.5) / mu,
    }
    got = {
        "cond1": cond1_general(mu),
        "cond2": cond2_pair_orthogonal_uniqueness(mu),
        "cond3": cond3_pair_orthogonal_equivalence(mu),
    }
    # the same numbers as emitted by the CLI
    assert cli.main(["bounds", "--mode", "fig1", "--mu", "0.05"]) == 0
    emitted = {}
    for line in capsys.readouterr().out.splitlines()[1:]:
        cond, p1, _, value, _ = line.split(",")
        if p1 == "0.05":
            emitted[cond] = float(value)
    literal = {"cond1": 10.5, "cond2": 20.0, "cond3": 18.2842712}
    errs = [abs(got[k] - expected[k]) for k in expected] + [abs(emitted[k] - expected[k]) for k in expected]
    ok = max(errs) <= 1e-9 and all(abs(expected[k] - literal[k]) <= 1e-7 for k in literal)
    report(1, ok, f"cond1={got['cond1']!r} cond2={got['cond2']!r} cond3={got['cond3']!r} max err {max(errs):.1e}")


# 2. Worked example at mu = 0.1, alpha_max = 0.5, N = 2


def test_criterion_02_worked_example():
    c5 = cond5_piecewise_uniqueness(0.1, 0.5, 2)
    c1 = cond1_general(0.1)
    c2 = cond2_pair_orthogonal_uniqueness(0.1)
    documented = README.exists() and "off-by-one" in README.read_text(encoding="utf-8")
    ok = abs(c5 - 7.0) <= 1e-12 and abs(c1 - 5.5) <= 1e-12 and abs(c2 - 10.0) <= 1e-12 and documented
    report(2, ok, f"cond5={c5!r} cond1={c1!r} cond2={c2!r} prose note documented={documented}")


# 3. Reduction identities


def test_criterion_03_reductions():
    worst = 0.0
    for k in range(1, 51):
        mu = k / 100
        for n_blocks in range(2, 11):
            worst = max(
                worst,
                abs(cond5_piecewise_uniqueness(mu, 0.0, n_blocks) - cond_orthogonal_union_omp(mu, n_blocks)),
                abs(cond5_piecewise_uniqueness(mu, 1.0, n_blocks) - cond1_general(mu)),
            )
    disagreements = cells = 0
    for k in range(1, 21):
        mu = k / 100
        for s in itertools.product(range(31), repeat=2):
            cells += 1
            if cond6_piecewise_erc(mu, (0.0, 0.0), s).satisfied != cond4_orthogonal_erc(mu, s).satisfied:
                disagreements += 1
    ok = worst <= 1e-12 and disagreements == 0
    report(3, ok, f"bound reductions max err {worst:.1e}; cond6(alpha=0) vs cond4: {disagreements}/{cells} disagree")


# 4. Coherence property suite


def test_criterion_04_coherence_properties():
    violations = []
    for seed in range(100):
        d = random_union(seed, m_max=16, n_blocks_max=3)
        prof = coherence_profile(d)
        mu = prof.mu
        g = gram(d)
        table = babel_table(d, d.n - 1, g)
        if table[0] != mu:
            violations.append((seed, "babel(1) != mu"))
        if np.any(np.diff(table) < 0):
            violations.append((seed, "babel decreasing"))
        if np.any(table > np.arange(1, d.n) * mu):
            violations.append((seed, "babel(s) > s mu"))
        for i in range(d.n_blocks):
            ni = d.partition.widths[i]
            if prof.block_mu[i] > mu + 1e-12:
                violations.append((seed, f"block {i} coherence > mu"))
            for j in range(d.n_blocks):
                if i == j:
                    continue
                cross = cross_block_babel_table(d, i, j, ni, g)
                if np.any(cross > np.arange(1, ni + 1) * mu):
                    violations.append((seed, f"cross ({i},{j}) > m mu"))
            within = within_block_babel_table(d, i, ni - 1, g)
            if np.any(within > np.arange(1, ni) * prof.alpha[i] * mu + 1e-12):
                violations.append((seed, f"within {i} > m alpha mu"))
    report(4, not violations, f"100 dictionaries, {len(violations)} violations {violations[:3]}")


# 5. Babel oracle by exhaustive set enumeration


def _oracle_babel(absg, refs, cands, s):
    best = 0.0
    for subset in itertools.combinations(cands, s):
        for r in refs:
            if r in subset:
                continue
            best = max(best, sum(absg[r, j] for j in subset))
    return best


def test_criterion_05_babel_oracle():
    worst = 0.0
    checked = 0
    for seed in range(20):
        rng = np.random.default_rng(derive_seed(5, seed))
        m = int(rng.integers(3, 6))
        widths = [int(w) for w in rng.integers(2, m + 1, size=2)]
        d = union_general(m, 2, float(rng.uniform(0, 1)), rng, widths)
        assert d.n <= 10
        absg = np.abs(d.matrix.T @ d.matrix)
        allcols = list(range(d.n))
        table = babel_table(d, d.n - 1)
        for s in range(1, d.n):
            # reference column must lie outside the subset
            oracle = max(
                sum(absg[r, j] for j in sub)
                for r in allcols
                for sub in itertools.combinations([c for c in allcols if c != r], s)
            )
            worst = max(worst, abs(table[s - 1] - oracle))
            checked += 1
        blocks = [list(d.partition.block_range(i)) for i in range(2)]
        for i, j in ((0, 1), (1, 0)):
            cross = cross_block_babel_table(d, i, j, len(blocks[i]))
            for mm in range(1, len(blocks[i]) + 1):
                worst = max(worst, abs(cross[mm - 1] - _oracle_babel(absg, blocks[j], blocks[i], mm)))
                checked += 1
        for i in range(2):
            within = within_block_babel_table(d, i, len(blocks[i]) - 1)
            for mm in range(1, len(blocks[i])):
                worst = max(worst, abs(within[mm - 1] - _oracle_babel(absg, blocks[i], blocks[i], mm)))
                checked += 1
    report(5, worst <= 1e-12, f"{checked} values against exhaustive enumeration, max err {worst:.1e}")


# 6. Spark versus its piecewise lower bound


def test_criterion_06_spark_lower_bound():
    violations = []
    mixes = (0.0, 0.25, 0.5, 0.75, 1.0)
    for seed in range(50):
        d = union_general(6, 2, mixes[seed % 5], seed)
        prof = coherence_profile(d)
        if prof.mu == 0:
            continue
        spark = spark_bruteforce(d).spark
        bound = spark_lower_bound_piecewise(prof.mu, prof.alpha_max, 2)
        spark = d.n + 1 if spark is None else spark
        if spark < math.ceil(bound) - 1e-9:
            violations.append((seed, spark, bound))
    report(6, not violations, f"50 unions m=6 N=2, {len(violations)} violations")


# 7-9. Recovery runs shared between criteria


@lru_cache(maxsize=None)
def _erc_runs():
    runs = []
    for seed in range(200):
        rng = np.random.default_rng(derive_seed(7, seed))
        m = (16, 24, 32)[seed % 3]
        mixing = (0.0, 0.3, 0.6, 1.0)[seed % 4]
        d = union_general(m, 2, mixing, rng)
        s = (int(rng.integers(0, 4)), int(rng.integers(1, 4)))
        x, sp = piecewise_sparse_signal(SignalSpec(d.partition, s), rng)
        if not erc_exact(d, sp).value < 1:
            continue
        p = RecoveryProblem(d, d.matrix @ x)
        runs.append((seed, x, sp, omp(p), basis_pursuit(p)))
    return runs


@lru_cache(maxsize=None)
def _uniqueness_runs():
    h = identity_hadamard(8).matrix
    runs = []
    for seed in range(50):
        rng = np.random.default_rng(derive_seed(8, seed))
        kind = seed % 3
        if kind == 0:
            cols = np.sort(np.r_[rng.choice(8, 7, replace=False), 8 + rng.choice(8, 7, replace=False)])
            d = Dictionary(h[:, cols], BlockPartition((7, 7)))
        elif kind == 1:
            d = union_general(7, 2, float(rng.uniform(0, 1)), rng)
        else:
            d = union_orthogonal(7, 2, rng)
        prof = coherence_profile(d)
        bound = cond5_piecewise_uniqueness(prof.mu, prof.alpha_max, 2)
        top = math.ceil(bound) - 1
        assert top >= 1 and d.n <= 14
        total = int(rng.integers(1, top + 1))
        s1 = int(rng.integers(0, total + 1))
        x, sp = piecewise_sparse_signal(SignalSpec(d.partition, (s1, total - s1)), rng)
        assert total < bound
        p = RecoveryProblem(d, d.matrix @ x)
        runs.append((seed, sp, l0_bruteforce(p, total), basis_pursuit(p)))
    return runs


def test_criterion_07_erc_implies_recovery():
    runs = _erc_runs()
    failures = []
    for seed, x, sp, o, b in runs:
        omp_ok = o.support.support == sp.support and o.iterations == sp.pattern.total
        bp_ok = np.linalg.norm(b.x - x) <= 1e-6 * np.linalg.norm(x)
        if not (omp_ok and bp_ok):
            failures.append((seed, omp_ok, bp_ok))
    ok = len(runs) > 0 and not failures
    report(7, ok, f"{len(runs)} of 200 instances kept by the exact ERC, {len(failures)} recovery failures")


def test_criterion_08_uniqueness_oracle():
    runs = _uniqueness_runs()
    failures = [
        seed
        for seed, sp, r, _ in runs
        if r is None or not r.diagnostics["unique"] or tuple(r.diagnostics["minimizers"][0]) != sp.support
    ]
    report(8, not failures, f"{len(runs)} instances below the piecewise uniqueness bound, failures {failures}")


def test_criterion_09_bp_certificates():
    results = [b for *_, b in _erc_runs()] + [b for *_, b in _uniqueness_runs()]
    converged = [b for b in results if b.converged]
    bad = []
    worst_inf = worst_gap = 0.0
    for b in converged:
        c = b.diagnostics["certificate"]
        scale = max(1.0, float(np.abs(b.x).sum()))
        worst_inf = max(worst_inf, c["dual_infeasibility"])
        worst_gap = max(worst_gap, c["duality_gap"] / scale)
        if c["dual_infeasibility"] > 1 + 1e-7 or c["duality_gap"] > 1e-7 * scale:
            bad.append(c)
    ok = len(converged) > 0 and not bad
    report(
        9, ok,
        f"{len(converged)}/{len(results)} converged runs, max ||A^T y||_inf={worst_inf:.12g}, "
        f"max relative gap={worst_gap:.1e}",
    )


# 10. Piecewise ERC grids for the three alpha cases


def _cond6_independent(mu: Fraction, a1: Fraction, a2: Fraction, s1: int, s2: int) -> bool:
    d1 = 1 + a1 * mu + (1 - a1) * mu * s1
    d2 = 1 + a2 * mu + (1 - a2) * mu * s2
    if a1 >= a2 and s1 <= s2:
        # expanded two-block form with the first block as the limiting one
        return d2 * (2 * a1 * mu * s1 - a1 * mu - 1) + 2 * mu * s2 * d1 < 0
    g = mu * s1 / d1 + mu * s2 / d2
    f = min((1 - a1) * mu * s1 / d1, (1 - a2) * mu * s2 / d2)
    return 2 * g < 1 + f


def test_criterion_10_fig3_grids(capsys):
    assert cli.main(["bounds", "--mode", "fig3", "--mu", "0.1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "condition,param1,param2,value,satisfied"
    mu = Fraction(0.1)
    mismatches = cells = 0
    seen = set()
    for line in lines[1:]:
        cond, s1, s2, _, sat = line.split(",")
        k = int(cond.removeprefix("cond6_case")) - 1
        a1, a2 = (Fraction(a) for a in FIG3_ALPHA_CASES[k])
        s1, s2 = int(s1), int(s2)
        seen.add((k, s1, s2))
        cells += 1
        if (sat == "true") != _cond6_independent(mu, a1, a2, s1, s2):
            mismatches += 1
    complete = seen == {(k, a, b) for k in range(3) for a in range(21) for b in range(21)}
    report(10, complete and mismatches == 0, f"{cells} cells over 3 cases, {mismatches} mismatches")


# 11. Determinism of the experiment runner


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        '{"schema_version": 1, "seed": 99, "trials": 3,'
        ' "dictionary": {"generator": "union_general", "m": 10, "N": 2, "mixing": 0.4, "per_trial": true},'
        ' "grid": {"ranges": [[0, 2], [1, 2]]}, "solvers": ["omp", "bp", "l0"]}'
    )
    outs = []
    for run in ("a", "b"):
        assert cli.main(["experiment", str(cfg), "--out", str(tmp_path / run)]) == 0
        outs.append((tmp_path / run / "experiment.csv").read_bytes())
    report(11, outs[0] == outs[1] and len(outs[0]) > 0, f"two runs, {len(outs[0])} bytes, identical={outs[0] == outs[1]}")
