#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
随机矩阵系综采样器

功能：
1. Girko / Wigner / sparse_spike / centered_er / 配置模型 d-正则图 的采样
2. 逐元素精确矩 E X^m
3. 混合矩 E prod M_ij^{m(ij)} 的 Monte Carlo 检验

所有采样器只依赖 (spec, seed, trial)，使用计数器型随机数生成器 Philox，
同一组参数得到逐位相同的样本，并发调用互不干扰。
"""

import math
import logging
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

import config
from combinatorics import dreg_moment
from models import ConfigGraph, EnsembleSpec, SubgraphWithMultiplicities

logger = logging.getLogger("spectra-ensembles")


def trial_generator(seed: int, trial: int = 0) -> np.random.Generator:
    """按 (基准种子, 试验编号) 构造独立的 Philox 随机流"""
    if seed < 0 or trial < 0:
        raise ValueError(f"种子与试验编号必须非负: seed={seed}, trial={trial}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


def _law_entries(law: str, size, rng: np.random.Generator) -> np.ndarray:
    """均值 0、二阶绝对矩 1 的单位元素"""
    if law == "rademacher":
        return (2.0 * rng.integers(0, 2, size=size) - 1.0).astype(np.complex128)
    if law == "gaussian":
        return rng.standard_normal(size).astype(np.complex128)
    if law == "complex_phase":
        return np.exp(2j * np.pi * rng.random(size))
    raise ValueError(f"未知的元素分布: {law}")


def _require_kind(spec: EnsembleSpec, kind: str):
    if spec.kind != kind:
        raise ValueError(f"系综类型不符: 需要 {kind}，实际 {spec.kind}")


def sample_girko(spec: EnsembleSpec, seed: int, trial: int = 0) -> np.ndarray:
    """非渐近 Girko 矩阵：独立元素按 1/√n 缩放，对角为 0"""
    _require_kind(spec, "girko")
    n = spec.n
    rng = trial_generator(seed, trial)
    M = _law_entries(spec.entry_law, (n, n), rng) / math.sqrt(n)
    np.fill_diagonal(M, 0.0)
    return M


def sample_wigner(spec: EnsembleSpec, seed: int, trial: int = 0) -> np.ndarray:
    """非渐近 Wigner 矩阵：上三角独立，下三角取共轭，对角为 0"""
    _require_kind(spec, "wigner")
    n = spec.n
    rng = trial_generator(seed, trial)
    iu = np.triu_indices(n, k=1)
    upper = _law_entries(spec.entry_law, len(iu[0]), rng) / math.sqrt(n)
    M = np.zeros((n, n), dtype=np.complex128)
    M[iu] = upper
    M[(iu[1], iu[0])] = np.conj(upper)
    return M


def sparse_spike_magnitude(n: int, cap: Optional[float] = None) -> Tuple[float, bool]:
    """
    sparse_spike 非零元素的幅值 2^{n/2}/√n

    Returns:
        (幅值, 是否被截断)
    """
    cap = config.SPIKE_CAP if cap is None else cap
    log_mag = 0.5 * n * math.log(2.0) - 0.5 * math.log(n)
    if log_mag > math.log(cap):
        return float(cap), True
    return math.exp(log_mag), False


def sample_sparse_spike(n: int, seed: int, trial: int = 0, cap: Optional[float] = None) -> np.ndarray:
    """每个元素独立：以 1-2^{-n} 概率为 0，否则等概率取 ±2^{n/2}/√n"""
    if n < 1:
        raise ValueError("sparse_spike 要求 n >= 1")
    magnitude, capped = sparse_spike_magnitude(n, cap)
    if capped:
        logger.debug(f"sparse_spike 幅值已截断为 {magnitude:g} (n={n})")
    rng = trial_generator(seed, trial)
    u = rng.random((n, n))
    p = 2.0 ** (-n)
    M = np.zeros((n, n), dtype=np.complex128)
    M[u < p / 2] = magnitude
    M[(u >= p / 2) & (u < p)] = -magnitude
    return M


def centered_er_values(n: int) -> Tuple[float, float, float]:
    """centered_er 的两点分布: (p, 大值, 小值)"""
    p = 1.0 / (2 * n)
    return p, math.sqrt(2.0) * (1.0 - p), -math.sqrt(2.0) * p


def sample_centered_er(n: int, seed: int, trial: int = 0) -> np.ndarray:
    """有向 Erdős–Rényi 图的中心化邻接矩阵（按 √2 缩放），对角为 0"""
    if n < 2:
        raise ValueError("centered_er 要求 n >= 2")
    p, high, low = centered_er_values(n)
    rng = trial_generator(seed, trial)
    M = np.where(rng.random((n, n)) < p, high, low).astype(np.complex128)
    np.fill_diagonal(M, 0.0)
    return M


def remark_triangle_matrix(n: int) -> np.ndarray:
    """孤立三角形 abc 对应的 3x3 主子矩阵，n 较大时谱半径约为 √2"""
    p = 1.0 / (2 * n)
    T = np.array([
        [0.0, 1.0 - p, -p],
        [-p, 0.0, 1.0 - p],
        [1.0 - p, -p, 0.0],
    ])
    return (math.sqrt(2.0) * T).astype(np.complex128)


def sample_config_model(n: int, d: int, seed: int, trial: int = 0) -> ConfigGraph:
    """
    配置模型：[n]x[d] 上均匀随机的完美匹配，按顶点云折叠为多重图

    半边 (i, s) 编号为 i*d + s。均匀洗牌后相邻配对即得到
    (nd-1)!! 个完美匹配上的均匀分布。保留自环与重边。
    """
    if d < 1 or n < 1:
        raise ValueError(f"配置模型要求 n, d >= 1: n={n}, d={d}")
    N = n * d
    if N % 2 != 0:
        raise ValueError("no perfect matching exists (n*d 为奇数)")
    rng = trial_generator(seed, trial)
    pairs = rng.permutation(N).reshape(-1, 2)
    pairs.sort(axis=1)

    clouds = pairs // d
    u, v = clouds[:, 0], clouds[:, 1]
    is_loop = u == v
    A = np.zeros((n, n), dtype=np.int64)
    np.add.at(A, (u[~is_loop], v[~is_loop]), 1)
    np.add.at(A, (v[~is_loop], u[~is_loop]), 1)
    loops = np.bincount(u[is_loop], minlength=n).astype(np.int64)
    return ConfigGraph(n=n, d=d, matching=pairs, adjacency=A, loops=loops)


def centered_adjacency(g: ConfigGraph) -> np.ndarray:
    """M_ij = (A_ij - d/n)/√d (i != j)，M_ii = 0"""
    M = (g.adjacency.astype(np.float64) - g.d / g.n) / math.sqrt(g.d)
    np.fill_diagonal(M, 0.0)
    return M.astype(np.complex128)


def sample(spec: EnsembleSpec, seed: int, trial: int = 0) -> Tuple[np.ndarray, Dict]:
    """
    统一的采样入口

    Returns:
        (矩阵, 元数据)；元数据记录系综参数、种子以及 sparse_spike 是否截断
    """
    meta = {"kind": spec.kind, "n": spec.n, "seed": seed, "trial": trial}
    if spec.kind == "girko":
        meta["entry_law"] = spec.entry_law
        return sample_girko(spec, seed, trial), meta
    if spec.kind == "wigner":
        meta["entry_law"] = spec.entry_law
        return sample_wigner(spec, seed, trial), meta
    if spec.kind == "sparse_spike":
        magnitude, capped = sparse_spike_magnitude(spec.n)
        meta.update({"spike_magnitude": magnitude, "spike_capped": capped, "spike_cap": config.SPIKE_CAP})
        return sample_sparse_spike(spec.n, seed, trial), meta
    if spec.kind == "centered_er":
        return sample_centered_er(spec.n, seed, trial), meta
    g = sample_config_model(spec.n, spec.d, seed, trial)
    meta["d"] = spec.d
    meta["loops"] = int(g.loops.sum())
    return centered_adjacency(g), meta


def entry_moment(spec: EnsembleSpec, m: int) -> Optional[float]:
    """
    单个非对角元素的精确矩 E X^m（注意不是 E|X|^m）

    dreg_centered 的元素不独立，返回 None。
    """
    if m < 0:
        raise ValueError("矩的阶数必须非负")
    if m == 0:
        return 1.0
    n = spec.n
    if spec.kind in ("girko", "wigner"):
        if spec.entry_law == "complex_phase" or m % 2 == 1:
            return 0.0
        scale = n ** (-m / 2)
        if spec.entry_law == "rademacher":
            return scale
        return float(math.prod(range(m - 1, 0, -2))) * scale
    if spec.kind == "sparse_spike":
        if m % 2 == 1:
            return 0.0
        magnitude, _ = sparse_spike_magnitude(n)
        return 2.0 ** (-n) * magnitude ** m
    if spec.kind == "centered_er":
        p, high, low = centered_er_values(n)
        return p * high ** m + (1 - p) * low ** m
    return None


# 混合矩检验结果
class MomentEstimate(BaseModel):
    estimate: float = Field(..., description="Monte Carlo 估计（实部）")
    estimate_imag: float = Field(0.0, description="Monte Carlo 估计（虚部）")
    stderr: float = Field(..., ge=0, description="标准误")
    exact: Optional[float] = Field(None, description="精确值（可计算时）")
    trials: int = Field(..., ge=1)

    def z_score(self) -> Optional[float]:
        if self.exact is None:
            return None
        if self.stderr == 0:
            return 0.0 if abs(self.estimate - self.exact) < 1e-12 else math.inf
        return abs(complex(self.estimate, self.estimate_imag) - self.exact) / self.stderr


def exact_subgraph_moment(spec: EnsembleSpec, S: SubgraphWithMultiplicities) -> Optional[float]:
    """独立元素系综按逐元素矩相乘；d-正则系综走组合精确公式"""
    if spec.kind == "dreg_centered":
        try:
            return dreg_moment(spec.n, spec.d, S)
        except ValueError as e:
            logger.warning(f"d-正则精确矩无法计算: {e}")
            return None
    value = 1.0
    for m in S.mult.values():
        value *= entry_moment(spec, m)
    return value


def empirical_moment_check(spec: EnsembleSpec, S: SubgraphWithMultiplicities,
                           trials: int, seed: int) -> MomentEstimate:
    """
    Monte Carlo 估计 E prod_{ij in S} M_ij^{m(ij)}

    每条边 (i, j) 按 i < j 取 M[i, j]；每次试验使用独立的 (seed, t) 随机流。
    """
    if trials < 1:
        raise ValueError("trials 必须 >= 1")
    if S.vertices and S.vertices[-1] >= spec.n:
        raise ValueError(f"子图顶点 {S.vertices[-1]} 超出范围 [0, {spec.n})")
    rows = np.array([e[0] for e in S.edges], dtype=np.int64)
    cols = np.array([e[1] for e in S.edges], dtype=np.int64)
    powers = np.array([S.mult[e] for e in S.edges], dtype=np.int64)

    values = np.empty(trials, dtype=np.complex128)
    for t in range(trials):
        M, _ = sample(spec, seed, t)
        values[t] = np.prod(M[rows, cols] ** powers) if len(rows) else 1.0

    mean = values.mean()
    stderr = float(np.sqrt(np.mean(np.abs(values - mean) ** 2) / max(trials - 1, 1))) if trials > 1 else 0.0
    return MomentEstimate(
        estimate=float(mean.real),
        estimate_imag=float(mean.imag),
        stderr=stderr,
        exact=exact_subgraph_moment(spec, S),
        trials=trials,
    )
