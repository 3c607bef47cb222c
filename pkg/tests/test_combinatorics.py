# -*- coding: utf-8 -*-
"""错排、匹配矩、配置模型混合矩与 Laplace 主项的精确对照"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, seed
from hypothesis import strategies as st

import combinatorics as cb
from models import SubgraphWithMultiplicities


# 错排与 Girko 闭式

def test_derangement_values():
    assert cb.derangements(0) == 1
    assert cb.derangements(1) == 0
    assert cb.derangements(3) == 2
    assert cb.derangements(9) == 133496


def test_derangement_recurrence_matches_inclusion_exclusion():
    for k in range(101):
        assert cb.derangements(k) == cb.derangements_inclusion_exclusion(k)


def test_derangement_negative():
    with pytest.raises(ValueError):
        cb.derangements(-1)


def test_girko_closed_form_small():
    assert cb.girko_closed_form_exact(1, 4) == 1
    # n=2：唯一的错排贡献 (2τ²)^{-2}
    tau2 = Fraction(9, 4)
    assert cb.girko_closed_form_exact(2, tau2) == 1 + 1 / (4 * tau2 ** 2)
    assert cb.girko_closed_form(2, 1.5) == pytest.approx(1 + 1 / (4 * 1.5 ** 4), rel=1e-15)


def test_girko_closed_form_below_geometric_bound():
    value = cb.girko_closed_form_exact(20, Fraction(9, 4))
    assert value <= cb.girko_geometric_bound(Fraction(9, 4))
    assert cb.girko_geometric_bound(Fraction(9, 4)) == Fraction(9, 5)


@seed(7)
@settings(max_examples=40, deadline=None)
@given(n=st.integers(min_value=1, max_value=60),
       tau_num=st.integers(min_value=11, max_value=40))
def test_girko_closed_form_bounded(n, tau_num):
    tau2 = Fraction(tau_num, 10) ** 2
    assert cb.girko_closed_form_exact(n, tau2) <= cb.girko_geometric_bound(tau2)


@pytest.mark.slow
@pytest.mark.parametrize("tau", [Fraction(21, 20), Fraction(11, 10), Fraction(3, 2), Fraction(2), Fraction(4)])
def test_girko_closed_form_bounded_full_grid(tau):
    tau2 = tau ** 2
    bound = cb.girko_geometric_bound(tau2)
    for n in range(1, 201):
        assert cb.girko_closed_form_exact(n, tau2) <= bound


def test_girko_closed_form_nonincreasing_in_tau():
    taus = [Fraction(21, 20), Fraction(11, 10), Fraction(3, 2), Fraction(2), Fraction(4)]
    for n in (1, 2, 5, 20, 60):
        values = [cb.girko_closed_form_exact(n, tau ** 2) for tau in taus]
        assert all(a >= b for a, b in zip(values, values[1:]))
    floats = [cb.girko_closed_form(20, tau) for tau in np.linspace(1.01, 5.0, 50)]
    assert all(a >= b for a, b in zip(floats, floats[1:]))


def test_girko_closed_form_rejects_small_tau():
    with pytest.raises(ValueError):
        cb.girko_closed_form(5, 1.0)
    with pytest.raises(ValueError):
        cb.girko_closed_form(5, -2.0)
    # 和式本身对任意 τ>0 成立
    assert cb.girko_closed_form(5, 0.9, allow_any_tau=True) > 0


# 双阶乘与匹配

def test_double_factorial():
    assert cb.double_factorial(-1) == 1
    assert cb.double_factorial(5) == 15
    assert cb.double_factorial(9) == 945
    with pytest.raises(ValueError):
        cb.double_factorial(4)


def test_matching_inclusion_prob():
    assert cb.matching_inclusion_prob(4, 1) == Fraction(1, 3)
    assert cb.matching_inclusion_prob(4, 0) == 1
    assert cb.matching_inclusion_prob(8, 1) == Fraction(1, 7)
    with pytest.raises(ValueError):
        cb.matching_inclusion_prob(5, 1)
    with pytest.raises(ValueError):
        cb.matching_inclusion_prob(4, 3)


def test_all_perfect_matchings_count():
    for N in (2, 4, 6, 8):
        P = cb.all_perfect_matchings(N)
        assert P.shape == (cb.double_factorial(N - 1), N)
        # 伙伴数组是对合且无不动点
        rows = np.arange(len(P))[:, None]
        np.testing.assert_array_equal(P[rows, P], np.broadcast_to(np.arange(N), P.shape))
        assert not np.any(P == np.arange(N))


def test_partner_probabilities_sum_to_one():
    for N in (2, 4, 6, 8, 10):
        P = cb.all_perfect_matchings(N)
        counts = np.bincount(P[:, 0], minlength=N)
        assert counts[0] == 0
        probs = [Fraction(int(c), len(P)) for c in counts[1:]]
        assert all(p == Fraction(1, N - 1) for p in probs)
        assert sum(probs) == 1


@pytest.mark.slow
def test_matching_inclusion_prob_by_enumeration():
    for N in range(2, cb.MAX_ENUM_N + 1, 2):
        P = cb.all_perfect_matchings(N)
        for t in range(N // 2 + 1):
            # T = {(0,1), (2,3), ..., (2t-2, 2t-1)}
            hit = np.all(P[:, 0:2 * t:2] == np.arange(1, 2 * t, 2), axis=1)
            assert Fraction(int(hit.sum()), len(P)) == cb.matching_inclusion_prob(N, t)


def test_all_perfect_matchings_size_cap():
    with pytest.raises(ValueError):
        cb.all_perfect_matchings(cb.MAX_ENUM_N + 2)


def test_matching_moment_exact_values():
    assert cb.matching_moment_exact(4, 1, 1) == Fraction(1, 12)
    for N in (2, 6, 10, 40):
        assert cb.matching_moment_exact(N, 0, 3) == 1
    with pytest.raises(ValueError):
        cb.matching_moment_exact(4, 3, 1)
    with pytest.raises(ValueError):
        cb.matching_moment_exact(4, 1, Fraction(1, 2))


def test_matching_moment_enumerated_values():
    assert cb.matching_moment_enumerated(4, 1, 1) == Fraction(1, 12)
    assert cb.matching_moment_enumerated(8, 0, 2) == 1
    assert cb.matching_moment_enumerated(6, 3, 1) == cb.matching_moment_exact(6, 3, 1)
    assert cb.matching_moment_enumerated(12, 2, 2) == cb.matching_moment_exact(12, 2, 2)


@seed(11)
@settings(max_examples=30, deadline=None)
@given(half=st.integers(min_value=1, max_value=5),
       k=st.integers(min_value=0, max_value=5),
       beta=st.fractions(min_value=1, max_value=5, max_denominator=7))
def test_matching_moment_exact_equals_enumeration(half, k, beta):
    N = 2 * half
    if 2 * k > N:
        return
    assert cb.matching_moment_exact(N, k, beta) == cb.matching_moment_enumerated(N, k, beta)


@pytest.mark.slow
@pytest.mark.parametrize("beta", [Fraction(1), Fraction(3, 2), Fraction(2)])
def test_matching_moment_exact_equals_enumeration_full_grid(beta):
    for N in range(2, cb.MAX_ENUM_N + 1, 2):
        for k in range(1, N // 4 + 1):
            assert cb.matching_moment_exact(N, k, beta) == cb.matching_moment_enumerated(N, k, beta)


def test_subgraph_moment_examples():
    empty = SubgraphWithMultiplicities()
    assert cb.subgraph_moment_enumerated(8, empty, Fraction(1, 8)) == 1

    one = SubgraphWithMultiplicities.from_edges([(0, 1)])
    for N in (4, 6, 8):
        expected = cb.matching_inclusion_prob(N, 1) - Fraction(1, N)
        assert cb.subgraph_moment_enumerated(N, one, Fraction(1, N)) == expected


def test_subgraph_moment_path_of_two_edges():
    # 共享顶点的两条边不可能同时出现
    path = SubgraphWithMultiplicities.from_edges([(0, 1), (1, 2)])
    c = Fraction(1, 8)
    p = Fraction(1, 7)
    expected = 2 * p * (1 - c) * (-c) + (1 - 2 * p) * c * c
    value = cb.subgraph_moment_enumerated(8, path, c)
    assert value == expected
    report = cb.subgraph_moment_report(8, path, c)
    assert report["exact"] == str(expected)
    assert math.isfinite(report["ratio"])
    assert abs(value) <= cb.trivial_bound_terms(8, path)


def test_subgraph_moment_matches_matching_moment():
    S = SubgraphWithMultiplicities.from_edges([(0, 1), (2, 3)])
    assert cb.subgraph_moment_enumerated(8, S, Fraction(1, 16)) == cb.matching_moment_exact(8, 2, 2)


def test_subgraph_moment_out_of_range():
    S = SubgraphWithMultiplicities.from_edges([(0, 9)])
    with pytest.raises(ValueError):
        cb.subgraph_moment_enumerated(8, S, Fraction(1, 8))


# 配置模型混合矩

DREG_SHAPES = [
    {(0, 1): 1},
    {(0, 1): 2},
    {(0, 1): 3},
    {(0, 1): 2, (2, 3): 2},
    {(0, 1): 1, (1, 2): 1},
    {(0, 1): 2, (1, 2): 1},
    {(0, 1): 1, (1, 2): 1, (0, 2): 1},
]


@pytest.mark.parametrize("n,d", [(4, 2), (6, 2), (4, 3), (3, 2)])
@pytest.mark.parametrize("mult", DREG_SHAPES)
def test_dreg_exact_matches_enumeration(n, d, mult):
    if max(v for e in mult for v in e) >= n:
        pytest.skip("子图顶点超出 n")
    S = SubgraphWithMultiplicities(mult=mult)
    assert cb.dreg_raw_moment_exact(n, d, S) == cb.dreg_raw_moment_enumerated(n, d, S)


@pytest.mark.parametrize("mult", [{(0, 1): 1}, {(0, 1): 2}, {(0, 1): 2, (1, 2): 1}, {(0, 1): 1, (2, 3): 1}])
def test_dreg_exact_matches_cloud_expansion(mult):
    S = SubgraphWithMultiplicities(mult=mult)
    assert cb.dreg_raw_moment_exact(4, 2, S) == cb.cloud_expanded_moment(4, 2, S)


def test_dreg_single_edge_mean_is_zero():
    # E A_uv = d²/(nd-1)，减去 d/n 后是 O(1/n²) 的小量
    S = SubgraphWithMultiplicities.from_edges([(0, 1)])
    n, d = 16, 4
    raw = cb.dreg_raw_moment_exact(n, d, S)
    assert raw == Fraction(d * d, n * d - 1) - Fraction(d, n)


def test_dreg_moment_scaling_and_methods():
    S = SubgraphWithMultiplicities(mult={(0, 1): 2, (2, 3): 2})
    raw = cb.dreg_raw_moment_exact(6, 2, S)
    assert cb.dreg_moment(6, 2, S) == pytest.approx(float(raw) / 4, rel=1e-15)
    assert cb.dreg_moment_exact(6, 2, S) == pytest.approx(cb.dreg_moment_enumerated(6, 2, S), rel=1e-15)
    with pytest.raises(ValueError):
        cb.dreg_moment(6, 2, S, method="monte-carlo")


def test_dreg_invalid_parameters():
    S = SubgraphWithMultiplicities.from_edges([(0, 1)])
    with pytest.raises(ValueError):
        cb.dreg_raw_moment_exact(5, 3, S)
    with pytest.raises(ValueError):
        cb.dreg_raw_moment_exact(4, 2, SubgraphWithMultiplicities.from_edges([(0, 4)]))


def test_cloud_expansion_size_cap():
    S = SubgraphWithMultiplicities(mult={(0, 1): 4, (1, 2): 4})
    with pytest.raises(ValueError):
        cb.cloud_expanded_moment(4, 3, S)


# Laplace 方法

def test_laplace_tstar_examples():
    for beta in (1.0, 2.0, 7.5):
        assert cb.laplace_tstar(0.0, beta) == 1.0
    assert cb.laplace_tstar(0.5, 1.0) == pytest.approx(1 - 1 / math.sqrt(2), rel=1e-14)


def test_laplace_tstar_is_concave_critical_point():
    for alpha in np.linspace(0.0, 0.5, 20):
        for beta in np.linspace(1.0, 10.0, 20):
            t = cb.laplace_tstar(alpha, beta)
            assert 0 < t <= 1
            assert t < beta or alpha == 0
            assert abs(cb.laplace_g_prime(t, alpha, beta)) < 1e-9
            assert cb.laplace_g_second(t, alpha, beta) < 0


def test_laplace_g_second_matches_finite_difference():
    alpha, beta = 0.3, 2.5
    t = cb.laplace_tstar(alpha, beta)
    h = 1e-4
    numeric = (cb.laplace_g(t + h, alpha, beta) - 2 * cb.laplace_g(t, alpha, beta)
               + cb.laplace_g(t - h, alpha, beta)) / (h * h)
    assert numeric == pytest.approx(cb.laplace_g_second(t, alpha, beta), rel=1e-4)


def test_laplace_invalid_parameters():
    with pytest.raises(ValueError):
        cb.laplace_tstar(0.6, 2.0)
    with pytest.raises(ValueError):
        cb.laplace_tstar(0.2, 0.5)
    with pytest.raises(ValueError):
        cb.laplace_g(0.0, 0.2, 2.0)


def test_laplace_bound_bracket():
    assert cb.laplace_bound_bracket(12, 0, 3) == 1.0
    N, k = 16, 3
    assert cb.laplace_bound_bracket(N, k, 1) == pytest.approx((2 * k / N) ** (k / 2) / N ** k, rel=1e-13)
    with pytest.raises(ValueError):
        cb.laplace_bound_bracket(12, 4, 1)


def test_matching_moment_grid():
    df = cb.matching_moment_grid([12, 40], [0, 1, 2], [1, 2])
    assert list(df.columns) == ["N", "k", "beta", "exact", "exact_rational",
                                "enumerated_equal", "bracket", "ratio"]
    assert len(df) == 12
    small = df[df["N"] == 12]
    assert small["enumerated_equal"].all()
    assert df[df["N"] == 40]["enumerated_equal"].isna().all()
    row = df[(df["N"] == 12) & (df["k"] == 2) & (df["beta"] == "1")].iloc[0]
    assert math.isfinite(row["ratio"])
