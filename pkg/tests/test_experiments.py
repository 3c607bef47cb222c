# -*- coding: utf-8 -*-
"""Monte Carlo 实验的小规模运行"""

import math
import os

import numpy as np
import pandas as pd
import pytest

import experiments as ex
import jensen
from ensembles import sample
from models import EnsembleSpec


def test_mean_stderr():
    mean, se = ex.mean_stderr([])
    assert math.isnan(mean) and math.isnan(se)
    assert ex.mean_stderr([2.5]) == (2.5, 0.0)
    mean, se = ex.mean_stderr([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert se == pytest.approx(1 / math.sqrt(3))


def test_run_trials_ordered_and_validated():
    assert ex.run_trials(lambda t: {"t": t * t}, 6, threads=3) == [{"t": t * t} for t in range(6)]
    with pytest.raises(ValueError):
        ex.run_trials(lambda t: {}, 0, threads=1)
    with pytest.raises(ValueError):
        ex.run_trials(lambda t: {}, 3, threads=0)


def test_build_meta_records_partitioning():
    meta = ex.build_meta("girko", {"n": 4}, seed=9, threads=2)
    assert meta["seed"] == 9
    assert meta["threads"] == 2
    assert meta["params"] == {"n": 4}
    assert "partitioning" in meta


# Girko

def test_girko_experiment_small():
    report = ex.run_girko_experiment(n=12, trials=60, tau=1.5, delta=0.2, seed=3, K=64, threads=1)
    agg = report.aggregates
    assert len(report.trials) == 60
    assert agg["jensen_violations"] == 0
    assert agg["certificate_violations"] == 0
    assert agg["outlier_expectation_holds"]
    assert agg["radius_expectation_holds"]
    assert agg["closed_form"] <= agg["closed_form_bound"]
    assert math.isfinite(agg["closed_form_z"])
    assert report.meta["params"]["K"] == 64


def test_girko_experiment_thread_invariance():
    kwargs = dict(n=10, trials=16, tau=1.2, delta=0.3, seed=5, K=64)
    one = ex.run_girko_experiment(threads=1, **kwargs)
    four = ex.run_girko_experiment(threads=4, **kwargs)
    pd.testing.assert_frame_equal(one.trials, four.trials)
    assert one.aggregates == four.aggregates


def test_girko_experiment_lu_matches_spectrum():
    a = ex.run_girko_experiment(n=8, trials=5, tau=1.3, delta=0.2, seed=1, K=64, threads=1, method="lu")
    b = ex.run_girko_experiment(n=8, trials=5, tau=1.3, delta=0.2, seed=1, K=64, threads=1, method="spectrum")
    np.testing.assert_allclose(a.trials["log_rhs"], b.trials["log_rhs"], atol=1e-9)


def test_girko_experiment_sparse_spike_is_mostly_zero():
    report = ex.run_girko_experiment(n=30, trials=20, tau=1.1, delta=0.2, seed=0, kind="sparse_spike",
                                     K=64, threads=2)
    assert report.aggregates["zero_radius_fraction"] == 1.0
    assert "closed_form" not in report.aggregates


def test_girko_experiment_rejects_bad_parameters():
    with pytest.raises(ValueError):
        ex.run_girko_experiment(n=1, trials=2, tau=1.5, delta=0.2, seed=0)
    with pytest.raises(ValueError):
        ex.run_girko_experiment(n=5, trials=2, tau=1.5, delta=0.2, seed=0, kind="wigner")
    with pytest.raises(ValueError):
        ex.run_girko_experiment(n=5, trials=2, tau=-1.0, delta=0.2, seed=0)


def test_girko_trials_carry_certificate_and_warnings():
    report = ex.run_girko_experiment(n=10, trials=6, tau=1.3, delta=0.2, seed=8, K=64, threads=1)
    df = report.trials
    assert {"certified_bound", "radius_bound", "near_circle_warning", "threshold_warning"} <= set(df.columns)
    M, _ = sample(EnsembleSpec(kind="girko", n=10), 8, 0)
    cert = jensen.certify(M, 1.3, 64, 0.2, method="spectrum")
    assert df["certified_bound"].iloc[0] == cert.outlier_count_bound
    assert df["log_rhs"].iloc[0] == pytest.approx(cert.log_mean_sq_det, abs=1e-12)
    assert df["radius_bound"].iloc[0] == pytest.approx(cert.spectral_radius_bound, rel=1e-12)
    assert report.aggregates["threshold_warning_trials"] == int(df["threshold_warning"].sum())


# Wigner

def test_wigner_experiment_small():
    report = ex.run_wigner_experiment(n=8, trials=12, seed=2, threads=2)
    agg = report.aggregates
    assert agg["nonbacktracking_computed"]
    assert agg["ihara_bass_violations"] == 0
    assert agg["row_norm_violations"] == 0
    assert {"rho_b", "ihara_bass_bound"} <= set(report.trials.columns)


def test_wigner_experiment_zero_matrix_sampler():
    report = ex.run_wigner_experiment(n=4, trials=3, seed=0, threads=1, sampler=lambda t: np.zeros((4, 4)))
    assert report.aggregates["median_rho"] == 0.0
    assert report.aggregates["max_ratio"] == 0.0
    assert report.aggregates["ihara_bass_violations"] == 0
    assert report.meta["params"]["custom_sampler"]


def test_wigner_experiment_skips_nonbacktracking_above_cap():
    report = ex.run_wigner_experiment(n=12, trials=2, seed=0, nb_cap=8, threads=1)
    assert not report.aggregates["nonbacktracking_computed"]
    assert "rho_b" not in report.trials.columns


def test_wigner_experiment_matrix_free_matches_dense():
    def positive(t):
        A = np.random.default_rng(t).uniform(0.5, 1.5, size=(6, 6))
        A = (A + A.T) / 2
        np.fill_diagonal(A, 0.0)
        return A

    dense = ex.run_wigner_experiment(n=6, trials=3, seed=0, threads=1, sampler=positive)
    free = ex.run_wigner_experiment(n=6, trials=3, seed=0, threads=1, sampler=positive, nb_cap=4,
                                    nb_matrix_free=True)
    assert free.aggregates["nonbacktracking_computed"]
    assert free.aggregates["ihara_bass_violations"] == 0
    assert free.meta["params"]["nb_matrix_free"]
    np.testing.assert_allclose(free.trials["rho_b"], dense.trials["rho_b"], rtol=1e-6)


# d-正则

def test_dreg_experiment_small():
    report = ex.run_dreg_experiment(n=40, d=3, trials=8, seed=1, threads=2)
    agg = report.aggregates
    assert agg["max_lambda1_deviation"] < 1e-9
    assert agg["alon_boppana_reference"] == pytest.approx(2 * math.sqrt(2))
    assert 0 <= agg["fraction_below_2"] <= 1
    assert len(report.trials) == 8


def test_dreg_experiment_certifies_nonbacktracking():
    report = ex.run_dreg_experiment(n=6, d=3, trials=4, seed=2, certify_below=6, K=64, threads=1)
    assert report.aggregates["nb_certificate_violations"] == 0
    assert (report.trials["nb_outlier_bound"] >= report.trials["nb_outliers"]).all()


def test_dreg_experiment_invalid():
    with pytest.raises(ValueError):
        ex.run_dreg_experiment(n=5, d=3, trials=1, seed=0)
    with pytest.raises(ValueError):
        ex.run_dreg_experiment(n=6, d=1, trials=1, seed=0)


@pytest.mark.slow
@pytest.mark.parametrize("d,n", [(4, 1000), (9, 1000), (16, 500)])
def test_dreg_experiment_full_scale(d, n):
    report = ex.run_dreg_experiment(n=n, d=d, trials=50, seed=0)
    assert report.aggregates["window_1_8_to_3_0"]
    assert 1.8 <= report.aggregates["median_ratio"] <= 3.0


# 混合矩网格

def test_subgraph_catalog():
    names = [name for name, _ in ex.subgraph_catalog(4, 2)]
    assert names == ["empty", "edge", "path2", "matching2"]
    assert all(len(edges) <= 3 for _, edges in ex.subgraph_catalog(16, 3))


def test_assumption_grid_small():
    report = ex.run_assumption_grid(n=8, d=2, max_edges=2, trials=600, seed=4, mults=(1, 2), threads=2)
    df = report.trials
    assert len(df) == 1 + 2 + 4 + 4
    assert {"shape", "mult", "estimate", "stderr", "exact", "z", "within_3se", "scale_bound"} <= set(df.columns)
    empty = df[df["shape"] == "empty"].iloc[0]
    assert empty["exact"] == 1.0 and empty["estimate"] == 1.0
    assert report.aggregates["within_3se_fraction"] >= 0.7
    assert report.aggregates["fitted_C"] > 0


def test_assumption_grid_rejects_large_n():
    with pytest.raises(ValueError):
        ex.run_assumption_grid(n=20, d=2, max_edges=1, trials=10, seed=0)
    with pytest.raises(ValueError):
        ex.run_assumption_grid(n=8, d=2, max_edges=1, trials=10, seed=0, mults=(5,))


# 反例与散点

def test_remark_counterexamples():
    report = ex.run_remark_counterexamples(n_spike=30, trials=50, seed=0, n_triangle=10000, threads=2)
    agg = report.aggregates
    assert agg["spike_zero_matrix_fraction"] >= 0.98
    assert agg["spike_zero_radius_fraction"] >= 0.98
    assert agg["spike_expected_zero_fraction"] > 0.999
    assert agg["triangle_radius_error"] < 1e-3


def test_eigenvalue_scatter_writes_files(tmp_path):
    out = str(tmp_path / "scatter.csv")
    s = ex.eigenvalue_scatter(EnsembleSpec(kind="wigner", n=10, entry_law="gaussian"), seed=3, out=out)
    assert s.source_dim == 10
    assert s.hermitian
    assert os.path.exists(out)
    assert os.path.exists(out + ".json")
    df = pd.read_csv(out)
    np.testing.assert_allclose(np.sort(df["re"].to_numpy()), np.sort(s.eigenvalues.real), rtol=1e-15)


# 完整规模

@pytest.mark.slow
def test_girko_experiment_full_scale():
    report = ex.run_girko_experiment(n=100, trials=500, tau=math.sqrt(1.2), delta=0.2, seed=0)
    agg = report.aggregates
    combined = math.sqrt(agg["stderr_pow_k"] ** 2 + agg["stderr_rhs"] ** 2)
    assert agg["mean_pow_k"] <= agg["mean_rhs"] + 3 * combined
    assert agg["outlier_expectation_holds"]
    assert agg["certificate_violations"] == 0


@pytest.mark.slow
def test_wigner_experiment_full_scale():
    report = ex.run_wigner_experiment(n=500, trials=50, seed=0, entry_law="gaussian")
    assert 1.9 <= report.aggregates["median_rho"] <= 2.2
    assert report.aggregates["row_norm_violations"] == 0


@pytest.mark.slow
def test_remark_counterexamples_full_scale():
    report = ex.run_remark_counterexamples(n_spike=30, trials=10000, seed=0, n_triangle=10000)
    agg = report.aggregates
    assert agg["spike_zero_radius_fraction"] >= 0.99
    assert abs(agg["triangle_radius"] - math.sqrt(2)) <= 1e-2
