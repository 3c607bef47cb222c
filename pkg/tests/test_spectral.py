# -*- coding: utf-8 -*-
"""稠密谱计算测试"""

import math
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, seed
from hypothesis import strategies as st

import spectral
from ensembles import remark_triangle_matrix, sample_config_model, sample_girko, sample_wigner
from models import ConfigGraph, EnsembleSpec


def _leibniz_det(A: np.ndarray) -> complex:
    n = A.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        term = (-1) ** inversions
        for i, j in enumerate(perm):
            term *= A[i, j]
        total += term
    return total


def complete_graph(d: int) -> ConfigGraph:
    """K_{d+1}：顶点 u 的第 slot 个半边连向第 slot 个邻居"""
    n = d + 1

    def slot(u, v):
        return v if v < u else v - 1

    pairs = [(u * d + slot(u, v), v * d + slot(v, u)) for u in range(n) for v in range(u + 1, n)]
    A = np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)
    return ConfigGraph(n=n, d=d, matching=np.array(pairs), adjacency=A, loops=np.zeros(n, dtype=np.int64))


def cycle_graph(n: int) -> ConfigGraph:
    """n-圈：顶点 i 的半边 1 连向顶点 i+1 的半边 0"""
    pairs = [(2 * i + 1, 2 * ((i + 1) % n)) for i in range(n)]
    A = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        A[i, (i + 1) % n] += 1
        A[(i + 1) % n, i] += 1
    return ConfigGraph(n=n, d=2, matching=np.array(pairs), adjacency=A, loops=np.zeros(n, dtype=np.int64))


# 特征值

def test_eigenvalues_nilpotent():
    s = spectral.eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_allclose(s.eigenvalues, [0, 0], atol=1e-14)
    assert s.source_dim == 2
    assert not s.hermitian


def test_eigenvalues_diagonal():
    s = spectral.eigenvalues(np.diag([2.0, 0.5]))
    assert s.hermitian
    np.testing.assert_allclose(s.eigenvalues, [2.0, 0.5], rtol=1e-14)


def test_eigenvalues_golden_ratio_companion():
    phi = (1 + math.sqrt(5)) / 2
    s = spectral.eigenvalues(np.array([[1.0, 1.0], [1.0, 0.0]]), hermitian=False)
    got = np.sort(s.eigenvalues.real)
    np.testing.assert_allclose(got, [1 - phi, phi], rtol=1e-13)
    np.testing.assert_allclose(s.eigenvalues.imag, 0, atol=1e-13)


def test_eigenvalues_empty_and_invalid():
    assert spectral.eigenvalues(np.zeros((0, 0))).source_dim == 0
    with pytest.raises(ValueError):
        spectral.eigenvalues(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        spectral.eigenvalues(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_hermitian_spectrum_is_real_and_sums_to_trace(rng):
    n = 40
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = X + X.conj().T
    s = spectral.eigenvalues(H)
    assert s.hermitian
    assert np.max(np.abs(s.eigenvalues.imag)) <= 1e-9
    assert abs(np.sum(s.eigenvalues) - np.trace(H)) <= 1e-8 * n
    # 降序
    assert np.all(np.diff(s.eigenvalues.real) <= 0)


# 谱半径与离群计数

def test_spectral_radius_examples():
    assert spectral.spectral_radius(spectral.eigenvalues(np.diag([2.0, 0.5]))) == pytest.approx(2.0)
    assert spectral.spectral_radius(spectral.eigenvalues(np.zeros((4, 4)))) == 0.0
    rho = spectral.spectral_radius(spectral.eigenvalues(remark_triangle_matrix(10 ** 6)))
    assert rho == pytest.approx(math.sqrt(2), abs=1e-5)


def test_outlier_count_strict():
    s = spectral.eigenvalues(np.diag([2.0, 0.5]))
    assert spectral.outlier_count(s, 1.0) == 1
    assert spectral.outlier_count(s, 2.0) == 0
    with pytest.raises(ValueError):
        spectral.outlier_count(s, 0.0)


def test_outlier_count_near_threshold_flag():
    s = spectral.eigenvalues(np.diag([2.0, 0.5]))
    count, flagged = spectral.outlier_count_flagged(s, 2.0 + 1e-12)
    assert count == 0
    assert flagged
    count, flagged = spectral.outlier_count_flagged(s, 1.0)
    assert (count, flagged) == (1, False)


def test_outlier_count_matches_direct_scan():
    M = sample_girko(EnsembleSpec(kind="girko", n=200, entry_law="gaussian"), seed=3)
    s = spectral.eigenvalues(M)
    direct = sum(1 for lam in s.eigenvalues if abs(lam) > 1.2)
    assert spectral.outlier_count(s, 1.2) == direct


@seed(5)
@settings(max_examples=25, deadline=None)
@given(t1=st.floats(min_value=0.05, max_value=3.0), t2=st.floats(min_value=0.05, max_value=3.0))
def test_outlier_count_monotone(t1, t2):
    M = sample_girko(EnsembleSpec(kind="girko", n=30, entry_law="complex_phase"), seed=1)
    s = spectral.eigenvalues(M)
    lo, hi = min(t1, t2), max(t1, t2)
    assert spectral.outlier_count(s, hi) <= spectral.outlier_count(s, lo)


# 行范数与对数行列式

def test_max_row_norm():
    assert spectral.max_row_norm(np.eye(5)) == pytest.approx(1.0)
    assert spectral.max_row_norm(np.zeros((5, 5))) == 0.0
    assert spectral.max_row_norm(np.ones((7, 7))) == pytest.approx(math.sqrt(7))


def test_hermitian_radius_dominates_row_norm():
    for trial in range(5):
        M = sample_wigner(EnsembleSpec(kind="wigner", n=60, entry_law="gaussian"), seed=8, trial=trial)
        rho = spectral.spectral_radius(spectral.eigenvalues(M))
        assert rho >= spectral.max_row_norm(M) - 1e-12


def test_log_abs_det_examples():
    assert spectral.log_abs_det(np.eye(6)) == pytest.approx(0.0, abs=1e-15)
    assert spectral.log_abs_det(np.diag([2.0, 3.0])) == pytest.approx(math.log(6))
    assert spectral.log_abs_det(np.zeros((3, 3))) == -math.inf


def test_log_abs_det_matches_leibniz(rng):
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    expected = math.log(abs(_leibniz_det(A)))
    assert spectral.log_abs_det(A) == pytest.approx(expected, rel=1e-10)


def test_lu_pivots_match_eigenvalue_product(rng):
    for n in (1, 5, 17, 32):
        M = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2 * n)
        z = 0.7 * np.exp(0.3j)
        lam = spectral.eigenvalues(M).eigenvalues
        via_eigs = float(np.sum(np.log(np.abs(1 - z * lam))))
        via_lu = spectral.log_abs_det(np.eye(n) - z * M)
        assert via_lu == pytest.approx(via_eigs, abs=1e-8)


def test_log_abs_det_batch_matches_single(rng):
    stack = rng.standard_normal((4, 5, 5))
    stack[2] = 0.0
    got = spectral.log_abs_det_batch(stack)
    expected = [spectral.log_abs_det(A) for A in stack]
    np.testing.assert_allclose(got, expected, rtol=1e-12)


# 正则图的第二特征值

@pytest.mark.parametrize("d", [2, 3, 5])
def test_complete_graph_second_eigenvalue(d):
    g = complete_graph(d)
    lam1, lam2, lamn = spectral.regular_extremes_dense(g)
    assert lam1 == pytest.approx(d)
    assert lam2 == pytest.approx(-1.0)
    assert lamn == pytest.approx(-1.0)
    assert spectral.regular_second_eigenvalue(g) == pytest.approx(1.0)
    assert spectral.regular_second_eigenvalue(g, dense_cap=0) == pytest.approx(1.0, rel=1e-8)


def test_sampled_graph_top_eigenvalue_is_degree():
    for trial in range(5):
        g = sample_config_model(30, 4, seed=2, trial=trial)
        lam1, lam2, _ = spectral.regular_extremes_dense(g)
        assert lam1 == pytest.approx(4.0, abs=1e-9)
        assert lam2 <= lam1 + 1e-9


def test_power_iteration_matches_dense_on_cycle():
    g = cycle_graph(7)
    expected = 2 * abs(math.cos(6 * math.pi / 7))
    assert spectral.regular_second_eigenvalue(g) == pytest.approx(expected, rel=1e-12)
    assert spectral.regular_second_eigenvalue(g, dense_cap=0) == pytest.approx(expected, rel=1e-6)


def test_power_iteration_failure_raises():
    g = cycle_graph(7)
    with pytest.raises(spectral.NumericFailure):
        spectral.regular_second_eigenvalue(g, dense_cap=0, tol=0.0, max_iter=3)


@pytest.mark.slow
def test_random_regular_second_eigenvalue_window():
    ratios = []
    for trial in range(50):
        g = sample_config_model(1000, 4, seed=0, trial=trial)
        ratios.append(spectral.regular_second_eigenvalue(g) / math.sqrt(3))
    assert 1.8 <= float(np.median(ratios)) <= 3.0
