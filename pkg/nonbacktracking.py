#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
完全图上的非回溯矩阵 B_M

有向边按 (i, j) 字典序编号（跳过 i == j），
B[ij, kl] = M_kl 当且仅当 j == k 且 i != l。
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs

import config
from models import as_square
from spectral import NumericFailure, eigenvalues, is_hermitian, max_row_norm, spectral_radius

logger = logging.getLogger("spectra-nonbacktracking")


class EdgeIndex:
    """完全有向图 K_n 的边编号: (i, j) <-> i*(n-1) + (j if j < i else j-1)"""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"顶点数必须 >= 1: {n}")
        self.n = n
        self.size = n * (n - 1)
        heads = np.repeat(np.arange(n), max(n - 1, 0))
        offsets = np.tile(np.arange(max(n - 1, 0)), n)
        tails = offsets + (offsets >= heads)
        self.edges = np.stack([heads, tails], axis=1) if self.size else np.zeros((0, 2), dtype=np.int64)

    def index(self, i: int, j: int) -> int:
        if i == j or not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"无效的有向边 ({i}, {j})")
        return i * (self.n - 1) + (j if j < i else j - 1)

    def index_array(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return i * (self.n - 1) + j - (j > i)

    def edge(self, k: int) -> Tuple[int, int]:
        if not 0 <= k < self.size:
            raise ValueError(f"边编号超出范围: {k}")
        i, j = self.edges[k]
        return int(i), int(j)

    def legend(self) -> Dict[int, Tuple[int, int]]:
        """导出文件旁注用的编号对照表"""
        return {k: self.edge(k) for k in range(self.size)}


def nb_structure(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    B 的结构非零位置，只依赖 n

    Returns:
        (行号, 列号, 源矩阵行 k, 源矩阵列 l)，每行恰有 n-2 个位置
    """
    idx = EdgeIndex(n)
    I, J = idx.edges[:, 0], idx.edges[:, 1]
    L = np.arange(n)
    mask = (L[None, :] != J[:, None]) & (L[None, :] != I[:, None])
    rows = np.nonzero(mask)[0]
    src_k = J[rows]
    src_l = np.broadcast_to(L, mask.shape)[mask]
    cols = idx.index_array(src_k, src_l)
    return rows, cols, src_k, src_l


def build_nb_matrix(M) -> np.ndarray:
    A = as_square(M)
    n = A.shape[0]
    if n < 2:
        raise ValueError(f"非回溯矩阵要求 n >= 2，实际 n={n}")
    size = n * (n - 1)
    B = np.zeros((size, size), dtype=np.complex128)
    rows, cols, src_k, src_l = nb_structure(n)
    B[rows, cols] = A[src_k, src_l]
    return B


def nb_matvec(M, x: np.ndarray) -> np.ndarray:
    """
    不显式构造 B_M 的矩阵向量积

    (Bx)[ij] = sum_{l != i, l != j} M_jl x[jl]
    """
    A = as_square(M)
    n = A.shape[0]
    if n < 2:
        raise ValueError(f"非回溯矩阵要求 n >= 2，实际 n={n}")
    idx = EdgeIndex(n)
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (idx.size,):
        raise ValueError(f"向量长度应为 {idx.size}，实际 {x.shape}")
    X = np.zeros((n, n), dtype=np.complex128)
    X[idx.edges[:, 0], idx.edges[:, 1]] = x
    P = A * X
    row_sums = P.sum(axis=1)
    I, J = idx.edges[:, 0], idx.edges[:, 1]
    return row_sums[J] - P[J, I]


def nb_spectral_radius_matrix_free(M, tol: float = 1e-10, maxiter: Optional[int] = None, seed: int = 0) -> float:
    """
    ARPACK 求 ρ(B_M)，只调用 nb_matvec，不构造 n(n-1) 维稠密矩阵

    n < 3 时 Krylov 子空间维数不够，直接用稠密分解。
    """
    A = as_square(M)
    n = A.shape[0]
    if n < 2:
        raise ValueError(f"非回溯矩阵要求 n >= 2，实际 n={n}")
    if n < 3:
        return spectral_radius(eigenvalues(build_nb_matrix(A), hermitian=False))
    if not np.any(A):
        return 0.0
    size = n * (n - 1)
    op = LinearOperator((size, size), matvec=lambda x: nb_matvec(A, np.ravel(x)), dtype=np.complex128)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    try:
        vals = eigs(op, k=1, which="LM", v0=v0, tol=tol, maxiter=maxiter, return_eigenvectors=False)
    except ArpackNoConvergence as e:
        raise NumericFailure(f"ARPACK 求 ρ(B_M) 不收敛: {e}")
    return float(np.max(np.abs(vals)))


def nb_spectral_radius(M, cap: int = None, matrix_free: bool = False) -> float:
    """n <= cap 时稠密分解；超过 cap 时 matrix_free 走 ARPACK，否则报错"""
    A = as_square(M)
    cap = config.NB_EIG_CAP if cap is None else cap
    if A.shape[0] > cap:
        if matrix_free:
            return nb_spectral_radius_matrix_free(A)
        raise ValueError(f"B_M 稠密特征分解超过规模上限 n <= {cap}（实际 n={A.shape[0]}）")
    return spectral_radius(eigenvalues(build_nb_matrix(A), hermitian=False))


def ihara_bass_upper(M, cap: int = None, matrix_free: bool = False) -> float:
    """ρ(M) 的上界 2ρ(B_M) + 9·max_i ‖M_i‖，只对 Hermitian M 成立"""
    A = as_square(M)
    if not is_hermitian(A):
        raise ValueError("ihara_bass_upper 只接受 Hermitian 矩阵")
    return 2.0 * nb_spectral_radius(A, cap, matrix_free) + 9.0 * max_row_norm(A)
