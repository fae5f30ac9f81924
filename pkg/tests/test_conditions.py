from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwsparse.conditions import (
    SupportPartition,
    bound_satisfied,
    bound_table,
    cond1_general,
    cond4_orthogonal_erc,
    cond5_piecewise_uniqueness,
    cond6_piecewise_erc,
    cond_orthogonal_union_bp,
    erc_exact,
    evaluate_all,
    format_bound_rows,
    select_z,
)
from pwsparse.dictionary import BlockPartition, Dictionary
from pwsparse.errors import InputError, RankDeficientError
from pwsparse.generators import union_general, union_orthogonal


def test_mu_zero_is_unbounded():
    assert cond1_general(0.0) == math.inf
    assert cond5_piecewise_uniqueness(0.0, 0.0, 3) == math.inf


def test_negative_mu_rejected():
    with pytest.raises(InputError):
        cond1_general(-0.1)


def test_bp_union_value():
    assert cond_orthogonal_union_bp(0.1, 2) == pytest.approx((math.sqrt(2) - 0.5) / 0.1)


def test_bound_satisfied_is_exact_at_threshold():
    # cond5 at (0.1, 0.5, 2) is 7 exactly in rationals but 6.999... in floats
    v = cond5_piecewise_uniqueness(0.1, 0.5, 2)
    q = Fraction(0.1)
    exact = 2 * (1 + Fraction(0.5) * q) / (2 * (1 + Fraction(0.5)) * q)
    assert bound_satisfied("cond5", 6, v, 0.1, 0.5, 2) == (6 < exact)
    assert bound_satisfied("cond1", 5, cond1_general(0.1), 0.1) is True


def test_cond4_known_cells():
    assert cond4_orthogonal_erc(0.1, (2, 3)).satisfied
    assert not cond4_orthogonal_erc(0.1, (9, 9)).satisfied
    assert cond4_orthogonal_erc(0.1, (3, 2)).order == (1, 0)


def test_cond6_known_cells():
    assert cond6_piecewise_erc(0.1, (0.2, 0.5), (1, 1)).satisfied
    assert not cond6_piecewise_erc(0.1, (0.2, 0.5), (8, 8)).satisfied


def test_select_z_empty_blocks_have_infinite_ratio():
    assert select_z(0.1, (0.9, 0.1), (0, 3)) == 0
    assert select_z(0.1, (0.3, 1.0), (2, 2)) == 1
    assert select_z(0.1, (0.3, 0.3), (0, 0)) is None
    # ties go to the lowest index
    assert select_z(0.1, (0.3, 0.3), (2, 2)) == 0


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.001, 0.5),
    st.tuples(st.floats(0, 1), st.floats(0, 1)),
    st.tuples(st.integers(0, 30), st.integers(0, 30)),
)
def test_cond6_matches_minimum_form(mu, alpha, s):
    # the chosen block minimizes f_i = (1 - a_i) mu s_i / D_i
    q = Fraction(mu)
    a = [Fraction(x) for x in alpha]
    dd = [1 + ai * q + (1 - ai) * q * si for ai, si in zip(a, s)]
    g = sum(q * si / di for si, di in zip(s, dd))
    f = min((1 - ai) * q * si / di for ai, si, di in zip(a, s, dd))
    assert cond6_piecewise_erc(mu, alpha, s).satisfied == (2 * g < 1 + f)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.001, 0.3), st.tuples(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30)))
def test_cond6_alpha_zero_is_cond4(mu, s):
    assert cond6_piecewise_erc(mu, (0.0,) * 3, s).satisfied == cond4_orthogonal_erc(mu, s).satisfied


def test_cond6_validates_alpha():
    with pytest.raises(InputError):
        cond6_piecewise_erc(0.1, (0.2,), (1, 1))
    with pytest.raises(InputError):
        cond6_piecewise_erc(0.1, (0.2, 1.5), (1, 1))


def _erc_oracle(a, idx):
    rest = [j for j in range(a.shape[1]) if j not in idx]
    a_s = a[:, idx]
    coeffs = np.linalg.solve(a_s.T @ a_s, a_s.T @ a[:, rest])
    return np.abs(coeffs).sum(axis=0).max()


@pytest.mark.parametrize("seed", range(10))
def test_erc_matches_normal_equations(seed):
    d = union_general(8, 2, 0.5, seed)
    rng = np.random.default_rng(seed)
    idx = sorted(rng.choice(d.n, 3, replace=False).tolist())
    assert erc_exact(d, idx).value == pytest.approx(_erc_oracle(d.matrix, idx), abs=1e-10)


def test_erc_edge_cases(ih4):
    assert erc_exact(ih4, []).value == 0.0
    assert erc_exact(ih4, range(8)).holds
    a = np.hstack([ih4.matrix, ih4.matrix[:, :1]])
    d = Dictionary(a, BlockPartition((4, 5)))
    with pytest.raises(RankDeficientError):
        erc_exact(d, [0, 8])


def test_support_partition_roundtrip():
    part = BlockPartition((3, 4))
    sp = SupportPartition.from_global([5, 1], part)
    assert sp.supports == ((1,), (2,))
    assert sp.support == (1, 5)
    assert sp.pattern.s == (1, 1)
    assert sp.complement == (0, 2, 3, 4, 6)


def test_evaluate_all_orthogonal_union():
    d = union_orthogonal(6, 2, 0)
    rep = evaluate_all(d, pattern=(1, 1), support=[0, 6])
    assert rep["cond2"].applicable and rep["cond4"].applicable
    assert rep["erc_exact"].satisfied == erc_exact(d, [0, 6]).holds


def test_evaluate_all_general_union_marks_orthogonal_only():
    rep = evaluate_all(union_general(6, 2, 0.5, 0), pattern=(1, 1))
    for cid in ("cond2", "cond3", "cond4", "omp_union", "bp_union"):
        assert rep[cid].satisfied is None and not rep[cid].applicable
    assert rep["cond5"].applicable and rep["cond6"].applicable


def test_evaluate_all_single_block():
    rep = evaluate_all(mu=0.1, alpha=(1.0,), pattern=(2,))
    for cid in ("omp_union", "bp_union", "cond5", "cond6"):
        assert rep[cid].note == "not applicable (N<2)"


def test_bound_table_modes():
    fig2 = bound_table("fig2", mu=0.1, alpha_max=0.5, s_max=3)
    assert fig2[0][:2] == ("cond1", "")
    assert len([r for r in fig2 if r[0] == "cond5"]) == 1 + 16
    fig3 = bound_table("fig3", s_max=2)
    assert {r[0] for r in fig3} == {"cond6_case1", "cond6_case2", "cond6_case3"}
    ex2 = bound_table("example2", s_max=1, conditions=["cond6"])
    assert {r[0] for r in ex2} == {"cond6"}
    with pytest.raises(InputError):
        bound_table("fig9")
    with pytest.raises(InputError):
        bound_table("fig1", conditions=["nope"])


def test_format_bound_rows():
    text = format_bound_rows([("cond1", 0.05, "", 10.5, ""), ("cond4", 1, 2, 0.25, True)])
    assert text == "condition,param1,param2,value,satisfied\ncond1,0.05,,10.5,\ncond4,1,2,0.25,true\n"


def test_fig3_documented_cell():
    rows = {(r[0], r[1], r[2]): r[4] for r in bound_table("fig3", s_max=1)}
    assert rows[("cond6_case3", 1, 1)] is True


def test_cond4_two_block_closed_form():
    # with s1 <= s2 the test reduces to 2 mu^2 s1 s2 + mu s2 < 1
    for s1 in range(12):
        for s2 in range(s1, 12):
            q = Fraction(0.1)
            assert cond4_orthogonal_erc(0.1, (s1, s2)).satisfied == (2 * q * q * s1 * s2 + q * s2 < 1)
