#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Jensen 圆周证书

对 f(z) = det(I - zM) 在半径 1/τ 的圆上做等距梯形求积，得到
    E_θ |det(I - e^{iθ}M/τ)|^2 >= prod_{|λ|>τ} (|λ|/τ)^2
由此给出每个矩阵的离群特征值个数上界与谱半径上界。
全部行列式幅值在对数域处理，均值用 log-sum-exp 求得。
"""

import math
import logging
from typing import Literal, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

import config
from models import JensenCertificate, Spectrum, as_square
from spectral import eigenvalues, log_abs_det_batch, outlier_count

logger = logging.getLogger("spectra-jensen")

NodeMethod = Literal["lu", "spectrum"]

# 每批构造的节点矩阵个数上限（按元素数折算）
_CHUNK_ENTRIES = 1 << 22
# certify 的近圆告警带宽（相对 τ）
NEAR_CIRCLE_REL = 1e-3
# jensen_formula_check 要求零点与圆周的最小距离
ZERO_CLEARANCE = 1e-6


def circle_nodes(K: int) -> np.ndarray:
    """单位圆上 K 个等距节点 e^{2πij/K}"""
    if K < 1:
        raise ValueError(f"节点数必须 >= 1: {K}")
    return np.exp(2j * np.pi * np.arange(K) / K)


def _check_params(tau: float, K: int):
    if not tau > 0:
        raise ValueError(f"tau 必须为正: {tau}")
    if K < 8:
        raise ValueError(f"求积节点数 K 必须 >= 8: {K}")


def node_log_abs_dets(M, scale: complex, K: int, method: NodeMethod = "lu",
                      spectrum: Optional[Spectrum] = None) -> np.ndarray:
    """
    log|det(I - scale·z_j·M)|，z_j 为 K 个单位根

    method="lu" 逐节点做 LU；method="spectrum" 用 Σ log|1 - scale·z_j·λ|。
    """
    A = as_square(M)
    n = A.shape[0]
    nodes = circle_nodes(K) * scale
    if n == 0:
        return np.zeros(K)
    if method == "spectrum":
        lam = (spectrum if spectrum is not None else eigenvalues(A)).eigenvalues
        with np.errstate(divide="ignore"):
            return np.sum(np.log(np.abs(1.0 - np.outer(nodes, lam))), axis=1)
    if method != "lu":
        raise ValueError(f"未知的节点计算方式: {method}")

    out = np.empty(K)
    chunk = max(1, _CHUNK_ENTRIES // (n * n))
    eye = np.eye(n, dtype=np.complex128)
    for start in range(0, K, chunk):
        z = nodes[start:start + chunk]
        stack = eye[None, :, :] - z[:, None, None] * A[None, :, :]
        out[start:start + chunk] = log_abs_det_batch(stack)
    return out


def log_mean_sq_from_nodes(log_dets: np.ndarray) -> float:
    """log((1/K) Σ exp(2·log|det|))，-inf 项自然被忽略"""
    K = len(log_dets)
    return float(logsumexp(2.0 * log_dets) - math.log(K))


def mean_sq_det_on_circle(M, tau: float, K: Optional[int] = None, method: NodeMethod = "lu",
                          spectrum: Optional[Spectrum] = None) -> float:
    """log E_θ|det(I - e^{iθ}M/τ)|^2 的 K 点梯形求积"""
    K = config.DEFAULT_K if K is None else K
    _check_params(tau, K)
    return log_mean_sq_from_nodes(node_log_abs_dets(M, 1.0 / tau, K, method, spectrum))


def mean_sq_det_exact(M, tau: float) -> float:
    """
    Parseval 精确值：det(I - zM) = Σ c_k z^k 时均值为 Σ |c_k|^2 τ^{-2k}

    次数为 n 的三角多项式，K > n 时求积与之精确相等，用作对照。
    """
    A = as_square(M)
    if not tau > 0:
        raise ValueError(f"tau 必须为正: {tau}")
    if A.shape[0] == 0:
        return 0.0
    coeffs = np.poly(A)
    k = np.arange(len(coeffs))
    with np.errstate(divide="ignore"):
        logs = 2.0 * np.log(np.abs(coeffs)) - 2.0 * k * math.log(tau)
    finite = np.isfinite(logs)
    return float(logsumexp(logs[finite]))


def jensen_lhs_from_spectrum(s: Spectrum, tau: float) -> float:
    """Σ_{|λ|>τ} 2·log(|λ|/τ)"""
    if not tau > 0:
        raise ValueError(f"tau 必须为正: {tau}")
    mod = s.moduli
    out = mod[mod > tau]
    return float(np.sum(2.0 * np.log(out / tau))) if len(out) else 0.0


def jensen_formula_check(M, r: float, K: int = 2048) -> Tuple[float, float]:
    """
    Jensen 公式的两侧

    f(z) = det(I - zM) 的零点为 a = 1/λ（λ != 0），f(0) = 1，
        (1/2π)∫ log|f(re^{iθ})| dθ = Σ_{|a|<r} log(r/|a|)

    Returns:
        (求积得到的左侧, 由谱得到的右侧)
    """
    A = as_square(M)
    if not r > 0:
        raise ValueError(f"半径 r 必须为正: {r}")
    if K < 8:
        raise ValueError(f"求积节点数 K 必须 >= 8: {K}")
    spec = eigenvalues(A)
    lam = spec.eigenvalues[spec.moduli > 0]
    zeros_mod = 1.0 / np.abs(lam)
    if np.any(np.abs(zeros_mod - r) < ZERO_CLEARANCE):
        raise ValueError(f"det(I - zM) 在半径 {r} 的圆周 {ZERO_CLEARANCE:g} 邻域内有零点")
    lhs = float(np.mean(node_log_abs_dets(A, r, K, "lu")))
    inside = zeros_mod[zeros_mod < r]
    rhs = float(np.sum(np.log(r / inside))) if len(inside) else 0.0
    return lhs, rhs


def spectral_radius_bound(M, tau: float, K: Optional[int] = None, method: NodeMethod = "lu") -> float:
    """ρ(M) <= τ·sqrt(E_θ|det(I - e^{iθ}M/τ)|^2)，均值下限为 1"""
    log_mean = mean_sq_det_on_circle(M, tau, K, method)
    return tau * math.exp(0.5 * max(log_mean, 0.0))


def certify(M, tau: float, K: Optional[int] = None, delta: float = 0.2,
            method: NodeMethod = "lu", spectrum: Optional[Spectrum] = None) -> JensenCertificate:
    """
    单个矩阵的离群证书

    (1+δ)^{k} <= E_θ|det(I - e^{iθ}M/τ)|^2，其中 k 为 |λ| > τ√(1+δ) 的特征值个数，
    因此 floor(log_mean / log(1+δ)) 是 k 的上界。
    """
    K = config.DEFAULT_K if K is None else K
    _check_params(tau, K)
    if not delta > 0:
        raise ValueError(f"delta 必须为正: {delta}")
    A = as_square(M)
    if K <= A.shape[0]:
        logger.warning(f"K={K} 不大于维数 n={A.shape[0]}，求积不再精确等于圆周均值")
    spec = spectrum if spectrum is not None else eigenvalues(A)
    log_mean = mean_sq_det_on_circle(A, tau, K, method, spec)

    bound = max(0, math.floor(log_mean / math.log1p(delta))) if np.isfinite(log_mean) else 0
    mod = spec.moduli
    near = bool(np.any((mod >= tau * (1 - NEAR_CIRCLE_REL)) & (mod <= tau * (1 + NEAR_CIRCLE_REL))))
    if near:
        logger.warning(f"存在模长接近 τ={tau:.6g} 的特征值，求积误差可能增大")
    return JensenCertificate(
        tau=tau,
        K=K,
        delta=delta,
        log_mean_sq_det=log_mean,
        outlier_count_bound=bound,
        near_circle_warning=near,
        spectral_radius_bound=tau * math.exp(0.5 * max(log_mean, 0.0)),
        method=method,
    )


def true_outlier_count(s: Spectrum, tau: float, delta: float) -> int:
    """阈值 τ√(1+δ) 下的真实离群个数"""
    return outlier_count(s, tau * math.sqrt(1.0 + delta))
