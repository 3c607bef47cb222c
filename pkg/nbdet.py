#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
非回溯行列式展开的穷举验证

det(I - zB_M) = Σ_{H} z^{e(H)} Π_{e∈H} M_e Σ_{π∈NBP(H)} (-1)^{NTCyc(π)}

其中 NBP(H) 由每个顶点上的局部双射 In_H(v) -> Out_H(v)（不允许回到反向边）拼成，
只有 H̃ 中的子图贡献非零项。另含局部 R 矩阵（全 1 矩阵每行每列至多一个 0）的行列式分类。
"""

import math
import itertools
import logging
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np
from sympy import Matrix

from ensembles import trial_generator
from models import DirectedSubgraph, as_square
from nonbacktracking import EdgeIndex, build_nb_matrix

logger = logging.getLogger("spectra-nbdet")

# 穷举上限
MAX_SIGN_SUM_N = 5
MAX_EXPANSION_N = 4

Pattern = Sequence[Optional[int]]


def htilde_membership(H: DirectedSubgraph) -> bool:
    """每个顶点至多一条入向单边、至多一条出向单边"""
    singles_in = [0] * H.n
    singles_out = [0] * H.n
    for e in H.edges:
        if not H.is_doubleton(e):
            singles_out[e[0]] += 1
            singles_in[e[1]] += 1
    return max(singles_in, default=0) <= 1 and max(singles_out, default=0) <= 1


def local_bijections(H: DirectedSubgraph, v: int) -> List[Dict[Tuple[int, int], Tuple[int, int]]]:
    """顶点 v 上全部非回溯的局部双射 uv -> vw（w != u）"""
    ins = H.in_edges(v)
    outs = H.out_edges(v)
    if len(ins) != len(outs):
        return []
    result = []
    for image in itertools.permutations(outs):
        if all(o[1] != i[0] for i, o in zip(ins, image)):
            result.append(dict(zip(ins, image)))
    return result


def _count_cycles(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
    return cycles


def enumerate_nbp_sign_sum(H: DirectedSubgraph) -> int:
    """
    Σ_{π∈NBP(H)} (-1)^{NTCyc(π)}

    π 在 H 的每条边上都不动点自由（uv 总被映到 vw），故全部循环长度 >= 2。
    """
    if H.n > MAX_SIGN_SUM_N:
        raise ValueError(f"NBP 穷举规模上限为 n <= {MAX_SIGN_SUM_N}（实际 n={H.n}）")
    if not H.edges:
        return 1
    if not H.is_balanced():
        return 0
    edges = sorted(H.edges)
    position = {e: k for k, e in enumerate(edges)}
    per_vertex = []
    for v in range(H.n):
        if H.degree(v) == 0:
            continue
        options = local_bijections(H, v)
        if not options:
            return 0
        per_vertex.append(options)

    total = 0
    for family in itertools.product(*per_vertex):
        perm = [0] * len(edges)
        for local in family:
            for src, dst in local.items():
                perm[position[src]] = position[dst]
        total += -1 if _count_cycles(perm) % 2 else 1
    return total


def nbp_magnitude_bound(H: DirectedSubgraph) -> int:
    """Π_v d_v^H"""
    return math.prod(max(H.degree(v), 1) for v in range(H.n))


def _all_subgraphs(n: int) -> Iterator[DirectedSubgraph]:
    idx = EdgeIndex(n)
    all_edges = [idx.edge(k) for k in range(idx.size)]
    for mask in range(1 << idx.size):
        yield DirectedSubgraph(n=n, edges=frozenset(e for k, e in enumerate(all_edges) if mask >> k & 1))


@lru_cache(maxsize=None)
def _sign_table(n: int) -> Tuple[Tuple[Tuple[Tuple[int, int], ...], int], ...]:
    """H̃ 中符号和非零的全部 (边集, 符号和)"""
    if n > MAX_EXPANSION_N:
        raise ValueError(f"行列式展开规模上限为 n <= {MAX_EXPANSION_N}（实际 n={n}）")
    table = []
    for H in _all_subgraphs(n):
        if not htilde_membership(H):
            continue
        sign = enumerate_nbp_sign_sum(H)
        if sign:
            table.append((tuple(sorted(H.edges)), sign))
    logger.debug(f"n={n} 的符号表共 {len(table)} 项")
    return tuple(table)


def nb_det_expansion(M, z: complex) -> complex:
    """按子图展开计算 det(I - zB_M)"""
    A = as_square(M)
    n = A.shape[0]
    if n > MAX_EXPANSION_N:
        raise ValueError(f"行列式展开规模上限为 n <= {MAX_EXPANSION_N}（实际 n={n}）")
    if n < 2:
        return 1.0 + 0j
    total = 0j
    for edges, sign in _sign_table(n):
        weight = 1.0 + 0j
        for i, j in edges:
            weight *= A[i, j]
        total += sign * z ** len(edges) * weight
    return complex(total)


def off_htilde_total(n: int) -> Tuple[int, int]:
    """
    H̃ 之外全部子图的符号和

    Returns:
        (总和, 符号和非零的子图个数)，两者都应为 0
    """
    if n > MAX_EXPANSION_N:
        raise ValueError(f"穷举规模上限为 n <= {MAX_EXPANSION_N}（实际 n={n}）")
    total = 0
    nonzero = 0
    for H in _all_subgraphs(n):
        if htilde_membership(H):
            continue
        sign = enumerate_nbp_sign_sum(H)
        total += sign
        nonzero += sign != 0
    return total, nonzero


def nb_det_direct(M, z: complex) -> complex:
    """LU 求 det(I - zB_M)"""
    B = build_nb_matrix(M)
    return complex(np.linalg.det(np.eye(B.shape[0]) - z * B))


def verify_expansion(n: int, trials: int, seed: int, full_points: bool = False,
                     radius: float = 0.5) -> Dict:
    """
    随机复矩阵上比较子图展开与直接行列式

    默认每个矩阵取 7 个 z；full_points 时取 n(n-1)+1 个，超过多项式次数。
    """
    if not 2 <= n <= MAX_EXPANSION_N:
        raise ValueError(f"verify_expansion 要求 2 <= n <= {MAX_EXPANSION_N}（实际 n={n}）")
    if trials < 1:
        raise ValueError("trials 必须 >= 1")
    points = n * (n - 1) + 1 if full_points else 7
    max_rel = 0.0
    for t in range(trials):
        rng = trial_generator(seed, t)
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        zs = radius * np.sqrt(rng.random(points)) * np.exp(2j * np.pi * rng.random(points))
        for z in zs:
            expected = nb_det_direct(M, z)
            got = nb_det_expansion(M, z)
            rel = abs(got - expected) / max(abs(expected), 1e-300)
            max_rel = max(max_rel, rel)
    off_total, off_nonzero = off_htilde_total(n)
    bound_ok = all(abs(sign) <= nbp_magnitude_bound(DirectedSubgraph(n=n, edges=frozenset(edges)))
                   for edges, sign in _sign_table(n))
    report = {
        "n": n,
        "trials": trials,
        "seed": seed,
        "z_points": points,
        "radius": radius,
        "max_relative_error": max_rel,
        "off_htilde_total": off_total,
        "off_htilde_nonzero": off_nonzero,
        "htilde_terms": len(_sign_table(n)),
        "magnitude_bound_holds": bound_ok,
    }
    report["passed"] = bool(max_rel <= 1e-9 and off_total == 0 and off_nonzero == 0 and bound_ok)
    logger.info(f"展开验证 n={n}: 最大相对误差 {max_rel:.3e}, H̃ 外总和 {off_total}")
    return report


# 局部 R 矩阵

def validate_pattern(d: int, pattern: Pattern) -> List[Optional[int]]:
    """每行至多一个 0（列号或 None），且各列至多一个 0"""
    if d < 1:
        raise ValueError(f"d 必须 >= 1: {d}")
    if len(pattern) != d:
        raise ValueError(f"pattern 长度应为 {d}，实际 {len(pattern)}")
    cols = [c for c in pattern if c is not None]
    for c in cols:
        if not 0 <= c < d:
            raise ValueError(f"零元素列号超出范围: {c}")
    if len(set(cols)) != len(cols):
        raise ValueError("某一列含有多于一个 0")
    return [None if c is None else int(c) for c in pattern]


def r_matrix(d: int, pattern: Pattern) -> np.ndarray:
    cols = validate_pattern(d, pattern)
    R = np.ones((d, d), dtype=np.int64)
    for row, c in enumerate(cols):
        if c is not None:
            R[row, c] = 0
    return R


def bareiss_det_batch(stack: np.ndarray) -> np.ndarray:
    """
    整数矩阵栈的 Bareiss 无分数消元行列式

    中间量都是原矩阵的子式，0/1 矩阵在 d <= 8 时远小于 int64 范围，除法均为整除。
    """
    A = np.array(stack, dtype=np.int64, copy=True)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"需要形状 (m, d, d) 的矩阵栈，实际 {A.shape}")
    m, d, _ = A.shape
    if d == 0:
        return np.ones(m, dtype=np.int64)
    sign = np.ones(m, dtype=np.int64)
    alive = np.ones(m, dtype=bool)
    prev = np.ones(m, dtype=np.int64)
    idx = np.arange(m)
    for k in range(d):
        nonzero = A[:, k:, k] != 0
        has = nonzero.any(axis=1)
        alive &= has
        A[~alive] = 0
        piv = k + nonzero.argmax(axis=1)
        swap = alive & (piv != k)
        if np.any(swap):
            s = idx[swap]
            row_k = A[s, k].copy()
            A[s, k] = A[s, piv[swap]]
            A[s, piv[swap]] = row_k
            sign[swap] *= -1
        p = np.where(alive, A[:, k, k], 1)
        if k + 1 < d:
            sub = A[:, k + 1:, k + 1:]
            A[:, k + 1:, k + 1:] = (sub * p[:, None, None]
                                    - A[:, k + 1:, k][:, :, None] * A[:, k, k + 1:][:, None, :]) // prev[:, None, None]
        prev = p
    return np.where(alive, sign * A[:, d - 1, d - 1], 0)


def r_matrix_det(d: int, pattern: Pattern) -> int:
    """R 矩阵的精确整数行列式"""
    return int(bareiss_det_batch(r_matrix(d, pattern)[None])[0])


def r_matrix_det_sympy(d: int, pattern: Pattern) -> int:
    """通用整数行列式（sympy），用作对照"""
    return int(Matrix(r_matrix(d, pattern).tolist()).det(method="bareiss"))


def _permutation_sign(perm: Sequence[int]) -> int:
    return -1 if (len(perm) - _count_cycles(perm)) % 2 else 1


def r_matrix_case(d: int, pattern: Pattern) -> Tuple[str, Set[int]]:
    """
    三种情形的预测值

    两行以上全 1：重复行，行列式为 0；恰一行全 1：±1；
    置换型 J - P：det = sgn(P)·det(J - I) = sgn(P)·(-1)^{d-1}(d-1)。
    """
    cols = validate_pattern(d, pattern)
    full_rows = sum(c is None for c in cols)
    if full_rows >= 2:
        return "repeated_rows", {0}
    if full_rows == 1:
        return "one_full_row", {-1, 1}
    value = _permutation_sign(cols) * (-1) ** (d - 1) * (d - 1)
    return "permutation", {value}


def r_matrix_patterns(d: int) -> Iterator[Tuple[Optional[int], ...]]:
    """全部合法 pattern：行到列的部分单射，共 Σ_r C(d,r)^2 r! 个"""
    if d < 1:
        raise ValueError(f"d 必须 >= 1: {d}")
    for r in range(d + 1):
        for rows in itertools.combinations(range(d), r):
            for cols in itertools.permutations(range(d), r):
                pattern: List[Optional[int]] = [None] * d
                for row, c in zip(rows, cols):
                    pattern[row] = c
                yield tuple(pattern)


def _sampled_patterns(d: int, count: int, seed: int) -> Iterator[Tuple[Optional[int], ...]]:
    rng = trial_generator(seed, d)
    for _ in range(count):
        r = int(rng.integers(0, d + 1))
        rows = rng.choice(d, size=r, replace=False)
        cols = rng.choice(d, size=r, replace=False)
        pattern: List[Optional[int]] = [None] * d
        for row, c in zip(rows, cols):
            pattern[int(row)] = int(c)
        yield tuple(pattern)


def verify_r_matrix_casework(d: int, max_patterns: Optional[int] = None, seed: int = 0,
                             batch: int = 65536) -> Dict:
    """
    对全部（或随机抽取的 max_patterns 个）pattern 比较行列式与三情形预测

    计数与置换符号都按批向量化处理。
    """
    patterns = r_matrix_patterns(d) if max_patterns is None else _sampled_patterns(d, max_patterns, seed)
    case_counts = {"repeated_rows": 0, "one_full_row": 0, "permutation": 0}
    checked = 0
    mismatches: List[Tuple[Optional[int], ...]] = []
    perm_value = (-1) ** (d - 1) * (d - 1)

    while True:
        chunk = list(itertools.islice(patterns, batch))
        if not chunk:
            break
        P = np.array([[-1 if c is None else c for c in p] for p in chunk], dtype=np.int64).reshape(len(chunk), d)
        R = np.ones((len(chunk), d, d), dtype=np.int64)
        b, row = np.nonzero(P >= 0)
        R[b, row, P[b, row]] = 0
        dets = bareiss_det_batch(R)

        full_rows = np.sum(P < 0, axis=1)
        ok = np.zeros(len(chunk), dtype=bool)
        rep = full_rows >= 2
        one = full_rows == 1
        perm = full_rows == 0
        ok[rep] = dets[rep] == 0
        ok[one] = np.abs(dets[one]) == 1
        if np.any(perm):
            Q = P[perm]
            inversions = np.sum(Q[:, :, None] > Q[:, None, :], axis=(1, 2), where=np.triu(np.ones((d, d), dtype=bool), 1)[None])
            signs = np.where(inversions % 2, -1, 1)
            ok[perm] = dets[perm] == signs * perm_value
        case_counts["repeated_rows"] += int(rep.sum())
        case_counts["one_full_row"] += int(one.sum())
        case_counts["permutation"] += int(perm.sum())
        checked += len(chunk)
        mismatches.extend(chunk[i] for i in np.nonzero(~ok)[0][:10])

    return {
        "d": d,
        "patterns_checked": checked,
        "exhaustive": max_patterns is None,
        "case_counts": case_counts,
        "mismatches": [list(m) for m in mismatches[:10]],
        "passed": not mismatches,
    }
