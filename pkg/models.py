#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
数据模型 - 各模块共用的类型定义

矩阵本身统一用 numpy 的二维 complex128 数组（CMat）承载，
其余带约束的记录用 pydantic 模型，构造时即完成校验。
"""

from typing import Dict, FrozenSet, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

EnsembleKind = Literal["girko", "wigner", "sparse_spike", "centered_er", "dreg_centered"]
EntryLaw = Literal["rademacher", "gaussian", "complex_phase"]


def as_cmat(M, name: str = "M") -> np.ndarray:
    """把输入转换为二维 complex128 矩阵，并检查有限性"""
    arr = np.asarray(M, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} 必须是二维矩阵，实际维度: {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} 含有 NaN 或 Inf")
    return arr


def as_square(M, name: str = "M") -> np.ndarray:
    arr = as_cmat(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} 必须是方阵，实际形状: {arr.shape}")
    return arr


def edge_key(i: int, j: int) -> Tuple[int, int]:
    """无向边的规范写法 (小, 大)"""
    return (i, j) if i < j else (j, i)


# 随机矩阵系综描述
class EnsembleSpec(BaseModel):
    kind: EnsembleKind = Field(..., description="系综类型")
    n: int = Field(..., ge=1, description="维数/顶点数")
    d: Optional[int] = Field(None, ge=1, description="度数（仅 dreg_centered）")
    entry_law: EntryLaw = Field("rademacher", description="元素分布（仅 girko/wigner）")

    @model_validator(mode="after")
    def check_kind_params(self):
        if self.kind == "dreg_centered":
            if self.d is None:
                raise ValueError("dreg_centered 需要给出度数 d")
            if not (2 <= self.d < self.n):
                raise ValueError(f"dreg_centered 要求 2 <= d < n，实际 d={self.d}, n={self.n}")
            if (self.n * self.d) % 2 != 0:
                raise ValueError("n*d 为奇数，不存在完美匹配")
        if self.kind == "centered_er" and self.n < 2:
            raise ValueError("centered_er 要求 n >= 2")
        return self


# 配置模型采样结果
class ConfigGraph(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int = Field(..., ge=1, description="顶点数")
    d: int = Field(..., ge=1, description="度数")
    matching: np.ndarray = Field(..., description="半边配对，形状 (nd/2, 2)，半边编号 i*d+s")
    adjacency: np.ndarray = Field(..., description="非对角重数 A_ij，对角为 0")
    loops: np.ndarray = Field(..., description="每个顶点的自环数")

    @model_validator(mode="after")
    def check_matching(self):
        N = self.n * self.d
        pairs = np.asarray(self.matching)
        if pairs.shape != (N // 2, 2) or N % 2 != 0:
            raise ValueError(f"matching 形状不符: {pairs.shape}")
        seen = np.bincount(pairs.ravel(), minlength=N)
        if len(seen) != N or not np.all(seen == 1):
            raise ValueError("matching 不是 [n]x[d] 上的完美匹配")
        A = np.asarray(self.adjacency)
        if A.shape != (self.n, self.n) or not np.array_equal(A, A.T):
            raise ValueError("adjacency 必须是对称的 n x n 矩阵")
        if np.any(np.diag(A) != 0):
            raise ValueError("自环只记录在 loops 中，adjacency 对角必须为 0")
        degrees = A.sum(axis=1) + 2 * np.asarray(self.loops)
        if not np.all(degrees == self.d):
            raise ValueError("度数恒等式 sum_j A_ij + 2*loops(i) = d 不成立")
        return self

    @property
    def num_half_edges(self) -> int:
        return self.n * self.d

    def multigraph_adjacency(self) -> np.ndarray:
        """半边约定下的多重图邻接矩阵：自环在对角上计 2"""
        return self.adjacency.astype(np.float64) + np.diag(2.0 * self.loops)

    def vertex_pairs(self) -> np.ndarray:
        """每条匹配边对应的顶点对，形状 (nd/2, 2)"""
        return np.asarray(self.matching) // self.d


# 带重数的子图（Assumption 中的 m(ij)）
class SubgraphWithMultiplicities(BaseModel):
    mult: Dict[Tuple[int, int], int] = Field(default_factory=dict, description="边 -> 重数")

    @field_validator("mult")
    @classmethod
    def normalize_edges(cls, v):
        normalized = {}
        for (i, j), m in v.items():
            if i == j:
                raise ValueError(f"子图不允许自环: ({i}, {j})")
            if i < 0 or j < 0:
                raise ValueError(f"顶点编号必须非负: ({i}, {j})")
            key = edge_key(int(i), int(j))
            if key in normalized:
                raise ValueError(f"重复的边: {key}")
            if not 1 <= int(m) <= 4:
                raise ValueError(f"重数必须在 1..4 之间: {key} -> {m}")
            normalized[key] = int(m)
        return normalized

    @classmethod
    def from_edges(cls, edges, m: int = 1) -> "SubgraphWithMultiplicities":
        return cls(mult={tuple(e): m for e in edges})

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return sorted(self.mult)

    @property
    def vertices(self) -> List[int]:
        return sorted({v for e in self.mult for v in e})

    @property
    def total_multiplicity(self) -> int:
        return sum(self.mult.values())

    def __len__(self) -> int:
        return len(self.mult)


# 特征值多重集
class Spectrum(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: np.ndarray = Field(..., description="复特征值（含重数）")
    source_dim: int = Field(..., ge=0, description="来源矩阵维数")
    hermitian: bool = Field(False, description="来源是否为 Hermitian 矩阵")

    @model_validator(mode="after")
    def check_size(self):
        if len(self.eigenvalues) != self.source_dim:
            raise ValueError(f"特征值个数 {len(self.eigenvalues)} 与维数 {self.source_dim} 不符")
        return self

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)


# Jensen 证书
class JensenCertificate(BaseModel):
    tau: float = Field(..., gt=0, description="圆周半径的倒数参数 τ")
    K: int = Field(..., ge=8, description="求积节点数")
    delta: float = Field(..., gt=0, description="离群阈值参数 δ")
    log_mean_sq_det: float = Field(..., description="log E_θ|det(I - e^{iθ}M/τ)|^2")
    outlier_count_bound: int = Field(..., ge=0, description="|λ| > τ√(1+δ) 的特征值个数上界")
    near_circle_warning: bool = Field(False, description="存在 |λ| 接近 τ 的特征值")
    spectral_radius_bound: float = Field(..., ge=0, description="ρ(M) 的上界 τ·sqrt(mean)")
    method: Literal["lu", "spectrum"] = Field("lu", description="节点行列式的计算方式")


# 有向子图 H
class DirectedSubgraph(BaseModel):
    n: int = Field(..., ge=1, description="顶点数")
    edges: FrozenSet[Tuple[int, int]] = Field(default_factory=frozenset, description="有向边集合")

    @model_validator(mode="after")
    def check_edges(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"有向边不能是自环: ({i}, {j})")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"有向边 ({i}, {j}) 超出顶点范围 [0, {self.n})")
        return self

    def is_doubleton(self, e: Tuple[int, int]) -> bool:
        return (e[1], e[0]) in self.edges

    def in_edges(self, v: int) -> List[Tuple[int, int]]:
        return sorted(e for e in self.edges if e[1] == v)

    def out_edges(self, v: int) -> List[Tuple[int, int]]:
        return sorted(e for e in self.edges if e[0] == v)

    def degree(self, v: int) -> int:
        return len(self.in_edges(v))

    def is_balanced(self) -> bool:
        return all(len(self.in_edges(v)) == len(self.out_edges(v)) for v in range(self.n))
