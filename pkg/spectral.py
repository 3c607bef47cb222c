#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
稠密谱计算

特征值、谱半径、离群计数、行范数、对数行列式，以及 d-正则图的第二特征值。
"""

import math
import logging
import warnings
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

import config
from models import ConfigGraph, Spectrum, as_square

logger = logging.getLogger("spectra-spectral")

# 离群阈值附近的告警带宽
THRESHOLD_WARN_TOL = 1e-9


class NumericFailure(RuntimeError):
    """数值计算失败（特征值求解不收敛、出现非有限值等）"""


def is_hermitian(M: np.ndarray, rtol: float = 1e-12) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 0.0)
    return bool(np.all(np.abs(M - M.conj().T) <= rtol * scale))


def eigenvalues(M, hermitian: Optional[bool] = None) -> Spectrum:
    """
    全部特征值（含重数）

    Hermitian 输入走对称求解器，返回降序排列的实特征值；
    其余走一般复矩阵求解器（Hessenberg 约化 + 隐式位移 QR）。

    Args:
        M: 方阵
        hermitian: None 表示自动判断
    """
    A = as_square(M)
    n = A.shape[0]
    if n == 0:
        return Spectrum(eigenvalues=np.zeros(0, dtype=np.complex128), source_dim=0, hermitian=True)
    if hermitian is None:
        hermitian = is_hermitian(A)
    try:
        if hermitian:
            w = scipy.linalg.eigvalsh(A, check_finite=False)[::-1]
            vals = w.astype(np.complex128)
        else:
            vals = scipy.linalg.eigvals(A, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericFailure(f"特征值求解失败 (n={n}): {e}")
    if not np.all(np.isfinite(vals)):
        raise NumericFailure(f"特征值求解得到非有限值 (n={n})")
    return Spectrum(eigenvalues=vals, source_dim=n, hermitian=bool(hermitian))


def spectral_radius(s: Spectrum) -> float:
    if s.source_dim == 0:
        return 0.0
    return float(np.max(s.moduli))


def outlier_count(s: Spectrum, threshold: float) -> int:
    """|λ| 严格大于 threshold 的特征值个数"""
    if threshold <= 0:
        raise ValueError(f"threshold 必须为正: {threshold}")
    return int(np.count_nonzero(s.moduli > threshold))


def near_threshold(s: Spectrum, threshold: float, tol: float = THRESHOLD_WARN_TOL) -> bool:
    """是否有特征值的模落在 threshold 的 tol 邻域内（严格比较可能受舍入影响）"""
    return bool(np.any(np.abs(s.moduli - threshold) <= tol))


def outlier_count_flagged(s: Spectrum, threshold: float) -> Tuple[int, bool]:
    count = outlier_count(s, threshold)
    flagged = near_threshold(s, threshold)
    if flagged:
        logger.warning(f"存在模长距阈值 {threshold:.12g} 不超过 {THRESHOLD_WARN_TOL:g} 的特征值，离群计数可能受舍入影响")
    return count, flagged


def max_row_norm(M) -> float:
    A = as_square(M)
    if A.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(A, axis=1)))


def log_abs_det(M) -> float:
    """
    log|det M|，由部分主元 LU 的主元求和

    存在零主元时返回 -inf。
    """
    A = as_square(M)
    if A.shape[0] == 0:
        return 0.0
    with warnings.catch_warnings():
        # 奇异矩阵时 lu_factor 会发出 LinAlgWarning，这里用 -inf 表达
        warnings.simplefilter("ignore")
        lu, _ = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.any(pivots == 0):
        return -math.inf
    return float(np.sum(np.log(pivots)))


def log_abs_det_batch(stack: np.ndarray) -> np.ndarray:
    """对形状 (K, n, n) 的矩阵栈逐个求 log|det|（同样基于 LU），奇异时为 -inf"""
    stack = np.asarray(stack)
    if stack.shape[-1] == 0:
        return np.zeros(stack.shape[0])
    _, logabs = np.linalg.slogdet(stack)
    return logabs


def regular_extremes_dense(g: ConfigGraph) -> Tuple[float, float, float]:
    """稠密分解得到 (λ1, λ2, λn)"""
    A = g.multigraph_adjacency()
    try:
        w = scipy.linalg.eigvalsh(A, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NumericFailure(f"正则图特征值求解失败: {e}")
    if g.n == 1:
        return float(w[0]), float(w[0]), float(w[0])
    return float(w[-1]), float(w[-2]), float(w[0])


def _deflated_power_iteration(g: ConfigGraph, tol: float, max_iter: int, seed: int) -> float:
    """
    对 A - (d/n)J 做幂迭代，直接由半边配对计算矩阵向量积

    全 1 向量是 A 的精确特征向量，每步再投影掉其分量以抑制舍入漂移。
    用 ‖Bx‖ 估计最大模特征值，±λ 成对出现时同样收敛。
    """
    pairs = g.vertex_pairs()
    u, v = pairs[:, 0], pairs[:, 1]
    n = g.n
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, n, g.d])))
    x = rng.standard_normal(n)
    x -= x.mean()
    x /= np.linalg.norm(x)

    estimate = 0.0
    for it in range(max_iter):
        y = np.zeros(n)
        np.add.at(y, u, x[v])
        np.add.at(y, v, x[u])
        y -= y.mean()
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        if abs(norm - estimate) <= tol * norm:
            logger.debug(f"幂迭代收敛: {it + 1} 步, 估计值 {norm:.12g}")
            return norm
        estimate = norm
        x = y / norm
    raise NumericFailure(f"收缩幂迭代在 {max_iter} 步内未收敛 (n={n}, d={g.d})")


def regular_second_eigenvalue(g: ConfigGraph, dense_cap: Optional[int] = None,
                              tol: float = 1e-9, max_iter: int = 20000, seed: int = 0) -> float:
    """
    max(λ2, -λn)，多重图邻接矩阵中自环按 2 计

    n <= dense_cap 时用稠密 Hermitian 分解，否则用收缩幂迭代。
    """
    dense_cap = config.DENSE_EIG_CAP if dense_cap is None else dense_cap
    if g.n <= dense_cap:
        _, lam2, lamn = regular_extremes_dense(g)
        return max(lam2, -lamn)
    return _deflated_power_iteration(g, tol, max_iter, seed)
