#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
可复现的 Monte Carlo 实验

1. Girko 类矩阵：谱半径、离群计数与 Jensen 圆周均值（含精确闭式对照）
2. Wigner 矩阵：非回溯谱半径与 ρ(M) <= 2ρ(B_M) + 9·max 行范数 的逐次检验
3. 随机 d-正则图：max(λ2, -λn)/√(d-1) 的分布
4. d-正则中心化矩阵的混合矩网格
5. 反例：sparse_spike 的零矩阵比例与孤立三角形子矩阵的谱半径

每次试验的随机流由 (seed, 试验编号) 决定，线程池按试验编号顺序收集结果，
因此汇总结果与线程数无关。
"""

import math
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import config
from combinatorics import dreg_raw_moment_exact, girko_closed_form
from ensembles import (centered_adjacency, remark_triangle_matrix, sample,
                       sample_config_model, sample_sparse_spike)
from jensen import certify, jensen_lhs_from_spectrum, true_outlier_count
from models import EnsembleSpec, Spectrum, SubgraphWithMultiplicities
from nonbacktracking import build_nb_matrix, nb_spectral_radius
from report_storage import ExperimentReport, write_spectrum
from spectral import (eigenvalues, max_row_norm, near_threshold, outlier_count, regular_extremes_dense,
                      regular_second_eigenvalue, spectral_radius)

logger = logging.getLogger("spectra-experiments")

# 期望形式推论允许的噪声倍数
STDERR_MULTIPLIER = 3.0
# 确定性不等式的数值余量
QUADRATURE_SLACK = 1e-7
# 逐矩阵 Jensen 检验时排除谱离圆太近的试验（相对 τ）
CIRCLE_EXCLUSION_REL = 1e-2


def _resolve_threads(threads: Optional[int]) -> int:
    threads = config.DEFAULT_THREADS if threads is None else threads
    if threads < 1:
        raise ValueError(f"线程数必须 >= 1: {threads}")
    return threads


def run_trials(fn: Callable[[int], Dict], trials: int, threads: Optional[int] = None) -> List[Dict]:
    """按试验编号并发执行，结果按编号排序返回"""
    if trials < 1:
        raise ValueError(f"trials 必须 >= 1: {trials}")
    threads = _resolve_threads(threads)
    if threads == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, range(trials)))


def mean_stderr(values) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) == 0:
        return math.nan, math.nan
    if len(arr) == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(len(arr)))


def build_meta(name: str, params: Dict, seed: int, threads: int) -> Dict:
    return {
        "experiment": name,
        "app": config.APP_NAME,
        "version": config.describe_version(),
        "params": params,
        "seed": seed,
        "threads": threads,
        "partitioning": "one task per trial, results ordered by trial index",
    }


# Girko 类矩阵

def run_girko_experiment(n: int, trials: int, tau: float, delta: float, seed: int,
                         kind: str = "girko", entry_law: str = "rademacher",
                         K: Optional[int] = None, eps: Optional[float] = None,
                         threads: Optional[int] = None, method: str = "spectrum") -> ExperimentReport:
    """
    逐次试验记录 ρ(M)^2、离群计数与圆周均值 RHS，并检验期望形式：
        E (1+δ)^{k_M} <= E RHS,   E ρ(M)^2 <= τ^2 · E RHS
    kind 为 girko 时另与精确闭式比较。
    """
    if n < 2:
        raise ValueError(f"n 必须 >= 2: {n}")
    if kind not in ("girko", "sparse_spike", "centered_er"):
        raise ValueError(f"Girko 实验不支持系综 {kind}")
    if not tau > 0 or not delta > 0:
        raise ValueError(f"tau 与 delta 必须为正: tau={tau}, delta={delta}")
    K = config.DEFAULT_K if K is None else K
    eps = tau * math.sqrt(1 + delta) - 1 if eps is None else eps
    threads = _resolve_threads(threads)
    spec = EnsembleSpec(kind=kind, n=n, entry_law=entry_law)
    threshold = tau * math.sqrt(1 + delta)

    def one_trial(t: int) -> Dict:
        M, _ = sample(spec, seed, t)
        s = eigenvalues(M, hermitian=False)
        rho = spectral_radius(s)
        cert = certify(M, tau, K, delta, method=method, spectrum=s)
        log_rhs = cert.log_mean_sq_det
        lhs = jensen_lhs_from_spectrum(s, tau)
        k = true_outlier_count(s, tau, delta)
        near = bool(np.any(np.abs(s.moduli - tau) <= CIRCLE_EXCLUSION_REL * tau))
        return {
            "trial": t,
            "rho": rho,
            "rho2": rho * rho,
            "outliers": k,
            "outliers_eps": outlier_count(s, 1 + eps) if 1 + eps > 0 else n,
            "log_rhs": log_rhs,
            "rhs": float(np.exp(log_rhs)),
            "log_lhs": lhs,
            "pow_k": (1 + delta) ** k,
            "certified_bound": cert.outlier_count_bound,
            "certificate_ok": cert.outlier_count_bound >= k,
            "radius_bound": cert.spectral_radius_bound,
            "near_circle": near,
            "near_circle_warning": cert.near_circle_warning,
            "threshold_warning": near_threshold(s, threshold),
            "jensen_ok": near or lhs <= log_rhs + QUADRATURE_SLACK,
        }

    rows = run_trials(one_trial, trials, threads)
    df = pd.DataFrame(rows)

    rho2_mean, rho2_se = mean_stderr(df["rho2"])
    pow_mean, pow_se = mean_stderr(df["pow_k"])
    rhs_mean, rhs_se = mean_stderr(df["rhs"])
    combined13 = math.sqrt(pow_se ** 2 + rhs_se ** 2)
    combined12 = math.sqrt(rho2_se ** 2 + (tau ** 2 * rhs_se) ** 2)
    aggregates = {
        "mean_rho2": rho2_mean,
        "stderr_rho2": rho2_se,
        "mean_outliers": float(df["outliers"].mean()),
        "mean_outliers_eps": float(df["outliers_eps"].mean()),
        "eps": eps,
        "outlier_threshold": threshold,
        "mean_pow_k": pow_mean,
        "stderr_pow_k": pow_se,
        "mean_rhs": rhs_mean,
        "stderr_rhs": rhs_se,
        "outlier_expectation_holds": pow_mean <= rhs_mean + STDERR_MULTIPLIER * combined13,
        "radius_expectation_holds": rho2_mean <= tau ** 2 * rhs_mean + STDERR_MULTIPLIER * combined12,
        "jensen_violations": int((~df["jensen_ok"]).sum()),
        "certificate_violations": int((~df["certificate_ok"]).sum()),
        "near_circle_trials": int(df["near_circle"].sum()),
        "threshold_warning_trials": int(df["threshold_warning"].sum()),
        "zero_radius_fraction": float((df["rho"] == 0).mean()),
    }
    if kind == "girko" and tau > 1:
        closed = girko_closed_form(n, tau)
        aggregates["closed_form"] = closed
        aggregates["closed_form_bound"] = tau ** 2 / (tau ** 2 - 1)
        z = abs(rhs_mean - closed) / rhs_se if rhs_se > 0 else (0.0 if abs(rhs_mean - closed) < 1e-12 else math.inf)
        aggregates["closed_form_z"] = z
        aggregates["closed_form_within_3se"] = z <= STDERR_MULTIPLIER
    if aggregates["jensen_violations"]:
        logger.error(f"逐矩阵 Jensen 不等式被违反 {aggregates['jensen_violations']} 次")

    params = {"n": n, "trials": trials, "tau": tau, "delta": delta, "kind": kind,
              "entry_law": entry_law, "K": K, "eps": eps, "method": method}
    logger.info(f"Girko 实验完成: n={n}, trials={trials}, E rho^2={rho2_mean:.6g}")
    return ExperimentReport(name="girko", meta=build_meta("girko", params, seed, threads),
                            aggregates=aggregates, trials=df)


# Wigner 矩阵

def run_wigner_experiment(n: int, trials: int, seed: int, entry_law: str = "gaussian",
                          nb_cap: Optional[int] = None, threads: Optional[int] = None,
                          sampler: Optional[Callable[[int], np.ndarray]] = None,
                          nb_matrix_free: bool = False) -> ExperimentReport:
    """
    ρ(M)、最大行范数及 ρ(B_M)

    n <= nb_cap 时 ρ(B_M) 用稠密分解；超过 nb_cap 时只有 nb_matrix_free 才计算（ARPACK）。

    sampler 可替换采样器（按试验编号返回矩阵），用于注入特殊矩阵。
    """
    nb_cap = config.NB_EIG_CAP if nb_cap is None else nb_cap
    threads = _resolve_threads(threads)
    spec = EnsembleSpec(kind="wigner", n=n, entry_law=entry_law)
    with_nb = n >= 2 and (n <= nb_cap or nb_matrix_free)

    def one_trial(t: int) -> Dict:
        M = sampler(t) if sampler is not None else sample(spec, seed, t)[0]
        s = eigenvalues(M, hermitian=True)
        rho = spectral_radius(s)
        row = max_row_norm(M)
        record = {
            "trial": t,
            "rho": rho,
            "max_row_norm": row,
            "ratio": rho / (1 + row),
            "row_norm_ok": rho >= row - 1e-9 * max(1.0, row),
        }
        if with_nb:
            rho_b = nb_spectral_radius(M, nb_cap, matrix_free=nb_matrix_free)
            bound = 2 * rho_b + 9 * row
            record.update({
                "rho_b": rho_b,
                "rho_b2": rho_b * rho_b,
                "ihara_bass_bound": bound,
                "ihara_bass_ok": rho <= bound + 1e-9 * max(1.0, bound),
            })
        return record

    df = pd.DataFrame(run_trials(one_trial, trials, threads))
    aggregates = {
        "median_rho": float(df["rho"].median()),
        "mean_rho": float(df["rho"].mean()),
        "mean_ratio": float(df["ratio"].mean()),
        "max_ratio": float(df["ratio"].max()),
        "row_norm_violations": int((~df["row_norm_ok"]).sum()),
        "nonbacktracking_computed": with_nb,
    }
    if with_nb:
        mean_b2, se_b2 = mean_stderr(df["rho_b2"])
        aggregates.update({
            "mean_rho_b2": mean_b2,
            "stderr_rho_b2": se_b2,
            "ihara_bass_violations": int((~df["ihara_bass_ok"]).sum()),
        })
        if aggregates["ihara_bass_violations"]:
            logger.error(f"ρ(M) <= 2ρ(B_M) + 9·max 行范数 被违反 {aggregates['ihara_bass_violations']} 次")
    params = {"n": n, "trials": trials, "entry_law": entry_law, "nb_cap": nb_cap, "nb_matrix_free": nb_matrix_free,
              "custom_sampler": sampler is not None}
    return ExperimentReport(name="wigner", meta=build_meta("wigner", params, seed, threads),
                            aggregates=aggregates, trials=df)


# 随机 d-正则图

def run_dreg_experiment(n: int, d: int, trials: int, seed: int, certify_below: int = 0,
                        tau: float = 2.0, delta: float = 0.2, K: Optional[int] = None,
                        threads: Optional[int] = None) -> ExperimentReport:
    """
    max(λ2, -λn)/√(d-1) 的分布、中心化矩阵的最大行范数，
    n <= certify_below 时另对 B_M 做 Jensen 证书
    """
    if d < 2:
        raise ValueError(f"d 必须 >= 2: {d}")
    if (n * d) % 2:
        raise ValueError("n*d 为奇数，不存在完美匹配")
    K = config.DEFAULT_K if K is None else K
    threads = _resolve_threads(threads)
    scale = math.sqrt(d - 1)

    def one_trial(t: int) -> Dict:
        g = sample_config_model(n, d, seed, t)
        if n <= config.DENSE_EIG_CAP:
            lam1, lam2, lamn = regular_extremes_dense(g)
            second = max(lam2, -lamn)
            lam1_dev = abs(lam1 - d)
        else:
            second = regular_second_eigenvalue(g, seed=seed + t)
            lam1_dev = float(np.max(np.abs(g.multigraph_adjacency().sum(axis=1) - d)))
        M = centered_adjacency(g)
        record = {
            "trial": t,
            "second_eigenvalue": second,
            "ratio": second / scale,
            "lambda1_deviation": lam1_dev,
            "loops": int(g.loops.sum()),
            "max_row_norm": max_row_norm(M),
        }
        if n <= certify_below:
            B = build_nb_matrix(M)
            s = eigenvalues(B, hermitian=False)
            cert = certify(B, tau, K, delta, method="spectrum", spectrum=s)
            record.update({
                "rho_b": spectral_radius(s),
                "nb_log_mean_sq_det": cert.log_mean_sq_det,
                "nb_outlier_bound": cert.outlier_count_bound,
                "nb_outliers": true_outlier_count(s, tau, delta),
            })
        return record

    df = pd.DataFrame(run_trials(one_trial, trials, threads))
    median = float(df["ratio"].median())
    aggregates = {
        "median_ratio": median,
        "mean_ratio": float(df["ratio"].mean()),
        "q10_ratio": float(df["ratio"].quantile(0.1)),
        "q90_ratio": float(df["ratio"].quantile(0.9)),
        "alon_boppana_reference": 2 * scale,
        "alon_boppana_ratio": 2.0,
        "fraction_below_2": float((df["ratio"] < 2.0).mean()),
        "window_1_8_to_3_0": 1.8 <= median <= 3.0,
        "max_lambda1_deviation": float(df["lambda1_deviation"].max()),
        "mean_max_row_norm": float(df["max_row_norm"].mean()),
        "mean_loops": float(df["loops"].mean()),
    }
    if n <= certify_below:
        aggregates["nb_certificate_violations"] = int((df["nb_outlier_bound"] < df["nb_outliers"]).sum())
        aggregates["mean_rho_b"] = float(df["rho_b"].mean())
    params = {"n": n, "d": d, "trials": trials, "certify_below": certify_below,
              "tau": tau, "delta": delta, "K": K}
    logger.info(f"d-正则实验完成: n={n}, d={d}, 中位比值 {median:.4f}")
    return ExperimentReport(name="dreg", meta=build_meta("dreg", params, seed, threads),
                            aggregates=aggregates, trials=df)


# 混合矩网格

def subgraph_catalog(n: int, max_edges: int) -> List[Tuple[str, List[Tuple[int, int]]]]:
    """不超过 max_edges 条边、顶点落在 [0, n) 内的小子图形状"""
    shapes = [
        ("empty", []),
        ("edge", [(0, 1)]),
        ("path2", [(0, 1), (1, 2)]),
        ("matching2", [(0, 1), (2, 3)]),
        ("triangle", [(0, 1), (1, 2), (0, 2)]),
        ("path3", [(0, 1), (1, 2), (2, 3)]),
        ("star3", [(0, 1), (0, 2), (0, 3)]),
        ("path_edge", [(0, 1), (1, 2), (3, 4)]),
        ("matching3", [(0, 1), (2, 3), (4, 5)]),
        ("cycle4", [(0, 1), (1, 2), (2, 3), (0, 3)]),
        ("path4", [(0, 1), (1, 2), (2, 3), (3, 4)]),
        ("matching4", [(0, 1), (2, 3), (4, 5), (6, 7)]),
    ]
    out = []
    for name, edges in shapes:
        if len(edges) > max_edges:
            continue
        if edges and max(max(e) for e in edges) >= n:
            continue
        out.append((name, edges))
    return out


def run_assumption_grid(n: int, d: int, max_edges: int, trials: int, seed: int,
                        mults: Sequence[int] = (1, 2, 3, 4),
                        threads: Optional[int] = None) -> ExperimentReport:
    """
    对目录中每个子图与重数组合，比较 Monte Carlo 估计与精确值，
    并拟合 |E Π M^m| <= (C/n)^{|S|} 中的 C（只报告）
    """
    if n > 16:
        raise ValueError(f"混合矩网格要求 n <= 16（实际 n={n}）")
    spec = EnsembleSpec(kind="dreg_centered", n=n, d=d)
    threads = _resolve_threads(threads)
    if any(not 1 <= m <= 4 for m in mults):
        raise ValueError(f"重数必须在 1..4 之间: {mults}")

    samples = np.stack(run_trials(lambda t: sample(spec, seed, t)[0].real, trials, threads))
    rows = []
    for name, edges in subgraph_catalog(n, max_edges):
        for ms in itertools.product(mults, repeat=len(edges)):
            S = SubgraphWithMultiplicities(mult=dict(zip(edges, ms)))
            values = np.ones(trials)
            for (i, j), m in zip(edges, ms):
                values = values * samples[:, i, j] ** m
            est, se = mean_stderr(values)
            exact = float(dreg_raw_moment_exact(n, d, S)) * d ** (-S.total_multiplicity / 2)
            if se > 0:
                z = abs(est - exact) / se
            else:
                z = 0.0 if abs(est - exact) < 1e-12 else math.inf
            rows.append({
                "shape": name,
                "edges": len(edges),
                "mult": "-".join(map(str, ms)),
                "estimate": est,
                "stderr": se,
                "exact": exact,
                "z": z,
                "within_3se": z <= STDERR_MULTIPLIER,
            })
    df = pd.DataFrame(rows)
    nonempty = df[(df["edges"] > 0) & (df["exact"] != 0)]
    fitted_c = float((n * nonempty["exact"].abs() ** (1.0 / nonempty["edges"])).max()) if len(nonempty) else 0.0
    df["scale_bound"] = (fitted_c / n) ** df["edges"]
    aggregates = {
        "entries": len(df),
        "fitted_C": fitted_c,
        "within_3se_fraction": float(df["within_3se"].mean()) if len(df) else 1.0,
    }
    params = {"n": n, "d": d, "max_edges": max_edges, "trials": trials, "mults": list(mults)}
    return ExperimentReport(name="assumption_grid", meta=build_meta("assumption_grid", params, seed, threads),
                            aggregates=aggregates, trials=df)


# 反例

def run_remark_counterexamples(n_spike: int = 30, trials: int = 10000, seed: int = 0,
                               n_triangle: int = 10000, threads: Optional[int] = None) -> ExperimentReport:
    """
    sparse_spike：绝大多数试验中 M = 0，ρ = 0；
    centered_er 的孤立三角形主子矩阵：谱半径约 √2
    """
    threads = _resolve_threads(threads)

    def one_trial(t: int) -> Dict:
        M = sample_sparse_spike(n_spike, seed, t)
        nonzero = int(np.count_nonzero(M))
        rho = 0.0 if nonzero == 0 else spectral_radius(eigenvalues(M, hermitian=False))
        return {"trial": t, "nonzero_entries": nonzero, "rho": rho}

    df = pd.DataFrame(run_trials(one_trial, trials, threads))
    tri_rho = spectral_radius(eigenvalues(remark_triangle_matrix(n_triangle)))
    aggregates = {
        "spike_zero_matrix_fraction": float((df["nonzero_entries"] == 0).mean()),
        "spike_zero_radius_fraction": float((df["rho"] == 0).mean()),
        "spike_expected_zero_fraction": float((1 - 2.0 ** (-n_spike)) ** (n_spike * n_spike)),
        "triangle_radius": tri_rho,
        "triangle_radius_error": abs(tri_rho - math.sqrt(2.0)),
    }
    params = {"n_spike": n_spike, "trials": trials, "n_triangle": n_triangle}
    return ExperimentReport(name="remark", meta=build_meta("remark", params, seed, threads),
                            aggregates=aggregates, trials=df)


def eigenvalue_scatter(spec: EnsembleSpec, seed: int, out: Optional[str] = None, trial: int = 0) -> Spectrum:
    """单个样本的全部特征值，给出 out 时导出为散点文件（圆律 / 半圆律作图用）"""
    M, meta = sample(spec, seed, trial)
    s = eigenvalues(M)
    if out:
        write_spectrum(s, out, {"ensemble": meta, "version": config.describe_version()})
    return s
