#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
精确组合对照

1. 错排数与 Girko 闭式和
2. 双阶乘与均匀完美匹配的包含概率
3. 匹配矩（精确求和 / 全枚举）以及带重数子图的枚举矩
4. 配置模型中心化邻接矩阵的精确混合矩
5. Laplace 方法中的极大点 t* 与界的主项

所有恒等式先在有理数上精确计算，只在输出时转为浮点。
"""

import math
import itertools
import logging
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sympy.functions.combinatorial.numbers import stirling

from models import SubgraphWithMultiplicities, edge_key

logger = logging.getLogger("spectra-combinatorics")

Rational = Union[int, float, str, Fraction]

# 全枚举的规模上限：11!! = 10395 个完美匹配
MAX_ENUM_N = 12
# 半边展开的元组个数上限
MAX_CLOUD_TUPLES = 200000


def as_fraction(x: Rational, name: str = "value") -> Fraction:
    try:
        return Fraction(x)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ValueError(f"{name} 不是合法的有理数: {x} ({e})")


# 错排与 Girko 闭式

def derangements(k: int) -> int:
    """D_k = (k-1)(D_{k-1} + D_{k-2})，D_0 = 1，D_1 = 0"""
    if k < 0:
        raise ValueError(f"k 必须非负: {k}")
    prev, cur = 1, 0
    if k == 0:
        return 1
    for i in range(2, k + 1):
        prev, cur = cur, (i - 1) * (cur + prev)
    return cur


def derangements_inclusion_exclusion(k: int) -> int:
    """k! Σ_i (-1)^i / i!，逐项为整数 k!/i!"""
    if k < 0:
        raise ValueError(f"k 必须非负: {k}")
    total = 0
    term = 1  # k!/k!
    for i in range(k, -1, -1):
        total += (-1) ** i * term
        term *= i if i > 0 else 1
    return total


def girko_closed_form_exact(n: int, tau2: Rational) -> Fraction:
    """Σ_{k=0}^{n} (τ²n)^{-k} C(n,k) D_k，τ² 为有理数"""
    if n < 1:
        raise ValueError(f"n 必须 >= 1: {n}")
    t2 = as_fraction(tau2, "tau^2")
    if t2 <= 0:
        raise ValueError(f"tau^2 必须为正: {tau2}")
    base = t2 * n
    total = Fraction(1)
    d_prev, d_cur = 1, 0  # D_0, D_1
    for k in range(2, n + 1):
        d_prev, d_cur = d_cur, (k - 1) * (d_cur + d_prev)
        total += Fraction(math.comb(n, k) * d_cur) / base ** k
    return total


def girko_closed_form(n: int, tau: float, allow_any_tau: bool = False) -> float:
    """
    Girko 矩阵 E|det(I - e^{iθ}M/τ)|^2 的精确值

    τ <= 1 时和式仍然成立但几何上界发散，默认拒绝；allow_any_tau=True 时直接给出和式。
    """
    if not tau > 0:
        raise ValueError(f"tau 必须为正: {tau}")
    if tau <= 1 and not allow_any_tau:
        raise ValueError(f"girko_closed_form 要求 tau > 1（实际 {tau}），τ<=1 时上界 τ²/(τ²-1) 不成立")
    return float(girko_closed_form_exact(n, Fraction(tau) ** 2))


def girko_geometric_bound(tau2: Rational) -> Fraction:
    """τ²/(τ²-1)"""
    t2 = as_fraction(tau2, "tau^2")
    if t2 <= 1:
        raise ValueError(f"几何上界要求 tau^2 > 1: {tau2}")
    return t2 / (t2 - 1)


# 双阶乘与匹配概率

def double_factorial(m: int) -> int:
    """m!! (m 为 >= -1 的奇数，(-1)!! = 1)"""
    if m < -1 or m % 2 == 0:
        raise ValueError(f"double_factorial 只接受 >= -1 的奇数: {m}")
    return math.prod(range(m, 0, -2))


def _check_matching_size(N: int):
    if N < 0 or N % 2 != 0:
        raise ValueError(f"N 必须是非负偶数: {N}")


def matching_inclusion_prob(N: int, t: int) -> Fraction:
    """t 条互不相交的给定配对全部出现在均匀完美匹配中的概率 (N-2t-1)!!/(N-1)!!"""
    _check_matching_size(N)
    if t < 0 or 2 * t > N:
        raise ValueError(f"要求 0 <= 2t <= N: N={N}, t={t}")
    return Fraction(double_factorial(N - 2 * t - 1), double_factorial(N - 1))


def matching_moment_exact(N: int, k: int, beta: Rational) -> Fraction:
    """
    E Π_{e∈S}(1_{e∈G} - 1/(βN))，S 为 k 条边的匹配

    = (1/(N-1)!!) Σ_r C(k,r) (N-2r-1)!! (-1/(βN))^{k-r}
    """
    _check_matching_size(N)
    if N < 2:
        raise ValueError(f"N 必须 >= 2: {N}")
    if k < 0 or 2 * k > N:
        raise ValueError(f"要求 0 <= 2k <= N: N={N}, k={k}")
    b = as_fraction(beta, "beta")
    if b < 1:
        raise ValueError(f"beta 必须 >= 1: {beta}")
    s = -1 / (b * N)
    total = sum(math.comb(k, r) * double_factorial(N - 2 * r - 1) * s ** (k - r) for r in range(k + 1))
    return Fraction(total) / double_factorial(N - 1)


def _gen_matchings(points: Tuple[int, ...]):
    if not points:
        yield []
        return
    first = points[0]
    for idx in range(1, len(points)):
        rest = points[1:idx] + points[idx + 1:]
        for tail in _gen_matchings(rest):
            yield [(first, points[idx])] + tail


@lru_cache(maxsize=None)
def all_perfect_matchings(N: int) -> np.ndarray:
    """
    [N] 上全部完美匹配的伙伴数组，形状 ((N-1)!!, N)

    第 r 行第 x 列为匹配 r 中 x 的伙伴。
    """
    _check_matching_size(N)
    if N > MAX_ENUM_N:
        raise ValueError(f"完美匹配全枚举规模上限为 N <= {MAX_ENUM_N}（实际 N={N}）")
    rows = []
    for matching in _gen_matchings(tuple(range(N))):
        partner = [0] * N
        for a, b in matching:
            partner[a], partner[b] = b, a
        rows.append(partner)
    out = np.array(rows, dtype=np.int64).reshape(len(rows), N)
    out.setflags(write=False)
    return out


def matching_moment_enumerated(N: int, k: int, beta: Rational) -> Fraction:
    """对全部完美匹配平均 Π_{e∈S}(1_{e∈G} - 1/(βN))，S = {(0,1), (2,3), ...}"""
    _check_matching_size(N)
    if N < 2:
        raise ValueError(f"N 必须 >= 2: {N}")
    if k < 0 or 2 * k > N:
        raise ValueError(f"要求 0 <= 2k <= N: N={N}, k={k}")
    b = as_fraction(beta, "beta")
    if b < 1:
        raise ValueError(f"beta 必须 >= 1: {beta}")
    P = all_perfect_matchings(N)
    included = np.zeros(len(P), dtype=np.int64)
    for i in range(k):
        included += P[:, 2 * i] == 2 * i + 1
    counts = np.bincount(included, minlength=k + 1)
    s = 1 / (b * N)
    total = sum(int(counts[r]) * (1 - s) ** r * (-s) ** (k - r) for r in range(k + 1))
    return Fraction(total) / len(P)


def _edge_indicators(N: int, edges: Sequence[Tuple[int, int]]) -> np.ndarray:
    P = all_perfect_matchings(N)
    if not edges:
        return np.zeros((len(P), 0), dtype=bool)
    return np.stack([P[:, a] == b for a, b in edges], axis=1)


def subgraph_moment_enumerated(N: int, S: SubgraphWithMultiplicities, shift: Rational) -> Fraction:
    """
    全枚举得到 E Π_{e∈S}(1_{e∈G} - shift)^{m_e}

    按边的包含模式分组，每种模式只算一次乘积。
    """
    _check_matching_size(N)
    if S.vertices and S.vertices[-1] >= N:
        raise ValueError(f"子图顶点超出 [0, {N})")
    if N > MAX_ENUM_N:
        raise ValueError(f"完美匹配全枚举规模上限为 N <= {MAX_ENUM_N}（实际 N={N}）")
    c = as_fraction(shift, "shift")
    edges = S.edges
    if not edges:
        return Fraction(1)
    indicators = _edge_indicators(N, edges)
    patterns, counts = np.unique(indicators, axis=0, return_counts=True)
    powers = [S.mult[e] for e in edges]
    total = Fraction(0)
    for pattern, count in zip(patterns, counts):
        term = Fraction(int(count))
        for bit, m in zip(pattern, powers):
            term *= (int(bit) - c) ** m
        total += term
    return total / len(indicators)


def _is_partial_matching(pairs: Iterable[Tuple[int, int]]) -> bool:
    seen = set()
    for a, b in pairs:
        if a in seen or b in seen:
            return False
        seen.update((a, b))
    return True


def trivial_bound_terms(N: int, S: SubgraphWithMultiplicities) -> Fraction:
    """展开乘积后逐项取绝对值的上界 Σ_{R⊆S} N^{-|S∖R|} Pr[R ⊆ G]"""
    _check_matching_size(N)
    edges = S.edges
    if len(edges) > 16:
        raise ValueError(f"子图边数过多: {len(edges)}")
    total = Fraction(0)
    for r in range(len(edges) + 1):
        for R in itertools.combinations(edges, r):
            if 2 * r > N or not _is_partial_matching(R):
                continue
            total += matching_inclusion_prob(N, r) / Fraction(N) ** (len(edges) - r)
    return total


def subgraph_moment_report(N: int, S: SubgraphWithMultiplicities, shift: Rational) -> Dict:
    """精确矩与 (1/N)^{|S|} 的比值，常数只报告不断言"""
    exact = subgraph_moment_enumerated(N, S, shift)
    scale = Fraction(1, N) ** len(S)
    return {
        "N": N,
        "edges": [list(e) for e in S.edges],
        "mult": [S.mult[e] for e in S.edges],
        "shift": str(as_fraction(shift)),
        "exact": str(exact),
        "exact_float": float(exact),
        "trivial_bound": float(trivial_bound_terms(N, S)),
        "ratio": float(abs(exact) / scale),
    }


# 配置模型中心化矩阵的混合矩

def _check_dreg(n: int, d: int, S: SubgraphWithMultiplicities):
    if n < 1 or d < 1 or (n * d) % 2 != 0:
        raise ValueError(f"配置模型参数无效: n={n}, d={d}")
    if S.vertices and S.vertices[-1] >= n:
        raise ValueError(f"子图顶点超出 [0, {n})")


@lru_cache(maxsize=4096)
def _stirling2(j: int, r: int) -> int:
    return int(stirling(j, r))


def _joint_power_moment(n: int, d: int, edges: Sequence[Tuple[int, int]], powers: Sequence[int]) -> Fraction:
    """
    E Π_e A_e^{j_e}

    A_uv 是 u、v 两个云之间被配对的半边对个数。把 A_e^{j} 展开为 j 个半边对的有序元组，
    元组中不同半边对组成的集合大小为 r 时，该集合被覆盖 r!·S(j, r) 次；
    跨边的半边对必须两两不交，计数为 Π_v d!/(d - s_v)! / Π_e r_e!，
    s_v 为顶点 v 上用掉的半边数。包含概率只依赖总对数 t。
    """
    N = n * d
    ranges = [range(1, j + 1) if j > 0 else range(0, 1) for j in powers]
    total = Fraction(0)
    for sizes in itertools.product(*ranges):
        t = sum(sizes)
        if 2 * t > N:
            continue
        used: Counter = Counter()
        for (u, v), r in zip(edges, sizes):
            used[u] += r
            used[v] += r
        if any(s > d for s in used.values()):
            continue
        ways = 1
        for j, r in zip(powers, sizes):
            ways *= _stirling2(j, r)
        for s in used.values():
            ways *= math.perm(d, s)
        total += ways * matching_inclusion_prob(N, t)
    return total


def dreg_raw_moment_exact(n: int, d: int, S: SubgraphWithMultiplicities) -> Fraction:
    """E Π_{e∈S} (A_e - d/n)^{m_e}，二项展开后逐项调用半边计数公式"""
    _check_dreg(n, d, S)
    edges = S.edges
    mults = [S.mult[e] for e in edges]
    c = Fraction(d, n)
    total = Fraction(0)
    for js in itertools.product(*[range(m + 1) for m in mults]):
        coeff = Fraction(1)
        for m, j in zip(mults, js):
            coeff *= math.comb(m, j) * (-c) ** (m - j)
        if coeff == 0:
            continue
        total += coeff * _joint_power_moment(n, d, edges, js)
    return total


def dreg_raw_moment_enumerated(n: int, d: int, S: SubgraphWithMultiplicities) -> Fraction:
    """对 [n]x[d] 上全部完美匹配精确平均 Π (A_e - d/n)^{m_e}（nd <= 12）"""
    _check_dreg(n, d, S)
    N = n * d
    P = all_perfect_matchings(N)
    edges = S.edges
    if not edges:
        return Fraction(1)
    partner_cloud = P // d
    counts = []
    for u, v in edges:
        cols = np.arange(u * d, (u + 1) * d)
        counts.append(np.sum(partner_cloud[:, cols] == v, axis=1))
    table = np.stack(counts, axis=1)
    patterns, freq = np.unique(table, axis=0, return_counts=True)
    c = Fraction(d, n)
    total = Fraction(0)
    for pattern, f in zip(patterns, freq):
        term = Fraction(int(f))
        for a, e in zip(pattern, edges):
            term *= (int(a) - c) ** S.mult[e]
        total += term
    return total / len(P)


def _half_edge_tuples(d: int, S: SubgraphWithMultiplicities):
    edges = S.edges
    slots = []
    for (u, v) in edges:
        pairs = [(u * d + a, v * d + b) for a in range(d) for b in range(d)]
        slots.extend([pairs] * S.mult[(u, v)])
    return slots


def cloud_expanded_moment(n: int, d: int, S: SubgraphWithMultiplicities) -> Fraction:
    """
    A_uv - d/n = Σ_{a,b} (1[(u,a)(v,b) ∈ G] - 1/(nd))，
    展开后每一项是 [nd] 上带重数的子图，逐项用 subgraph_moment_enumerated 求值
    """
    _check_dreg(n, d, S)
    N = n * d
    slots = _half_edge_tuples(d, S)
    n_tuples = (d * d) ** len(slots)
    if n_tuples > MAX_CLOUD_TUPLES:
        raise ValueError(f"半边展开项数 {n_tuples} 超过上限 {MAX_CLOUD_TUPLES}")
    shapes: Counter = Counter()
    for choice in itertools.product(*slots):
        mult = Counter(edge_key(a, b) for a, b in choice)
        shapes[tuple(sorted(mult.items()))] += 1
    shift = Fraction(1, N)
    total = Fraction(0)
    for shape, count in shapes.items():
        total += count * subgraph_moment_enumerated(N, SubgraphWithMultiplicities(mult=dict(shape)), shift)
    return total


def dreg_moment(n: int, d: int, S: SubgraphWithMultiplicities, method: str = "exact") -> float:
    """中心化矩阵 M = (A - d/n)/√d 的混合矩 E Π M_e^{m_e}"""
    if method == "exact":
        raw = dreg_raw_moment_exact(n, d, S)
    elif method == "enumerated":
        raw = dreg_raw_moment_enumerated(n, d, S)
    else:
        raise ValueError(f"未知的计算方式: {method}")
    return float(raw) * d ** (-S.total_multiplicity / 2)


def dreg_moment_exact(n: int, d: int, S: SubgraphWithMultiplicities) -> float:
    return dreg_moment(n, d, S, "exact")


def dreg_moment_enumerated(n: int, d: int, S: SubgraphWithMultiplicities) -> float:
    return dreg_moment(n, d, S, "enumerated")


# Laplace 方法

def _check_laplace(alpha: float, beta: float):
    if not 0 <= alpha <= 0.5:
        raise ValueError(f"alpha 必须在 [0, 1/2] 内: {alpha}")
    if not beta >= 1:
        raise ValueError(f"beta 必须 >= 1: {beta}")


def laplace_tstar(alpha: float, beta: float) -> float:
    """g 的局部极大点，即 t² - (β+1)t + β(1-α) = 0 的较小根"""
    _check_laplace(alpha, beta)
    if alpha == 0:
        return 1.0
    # (β+1)²/4 - β(1-α) 写成 (β-1)²/4 + αβ，避免相消
    disc = (beta - 1) ** 2 / 4 + alpha * beta
    return (beta + 1) / 2 - math.sqrt(disc)


def laplace_g(t: float, alpha: float, beta: float) -> float:
    """g(t) = -t/2 + ((1-α)/2) log t + (α/2) log|1 - t/β|"""
    _check_laplace(alpha, beta)
    if t <= 0:
        raise ValueError(f"t 必须为正: {t}")
    value = -t / 2 + (1 - alpha) / 2 * math.log(t)
    if alpha:
        value += alpha / 2 * math.log(abs(1 - t / beta))
    return value


def laplace_g_prime(t: float, alpha: float, beta: float) -> float:
    _check_laplace(alpha, beta)
    value = -0.5 + (1 - alpha) / (2 * t)
    if alpha:
        value -= alpha / (2 * (beta - t))
    return value


def laplace_g_second(t: float, alpha: float, beta: float) -> float:
    _check_laplace(alpha, beta)
    value = -(1 - alpha) / (2 * t * t)
    if alpha:
        value -= alpha / (2 * (beta - t) ** 2)
    return value


def laplace_bound_bracket(N: int, k: int, beta: Rational) -> float:
    """((β-1)/β + sqrt(2k/(βN)))^k / N^k，不含绝对常数"""
    _check_matching_size(N)
    if N < 2:
        raise ValueError(f"N 必须 >= 2: {N}")
    if k < 0 or 4 * k > N:
        raise ValueError(f"要求 0 <= k <= N/4: N={N}, k={k}")
    b = float(as_fraction(beta, "beta"))
    if b < 1:
        raise ValueError(f"beta 必须 >= 1: {beta}")
    if k == 0:
        return 1.0
    return ((b - 1) / b + math.sqrt(2 * k / (b * N))) ** k / float(N) ** k


def matching_moment_grid(Ns: Sequence[int], ks: Sequence[int], betas: Sequence[Rational]) -> pd.DataFrame:
    """(N, k, beta, exact, enumerated, bracket, ratio) 网格，跳过不合法的组合"""
    rows: List[Dict] = []
    for N in Ns:
        for k in ks:
            if N < 2 or N % 2 or k < 0 or 4 * k > N:
                continue
            for beta in betas:
                exact = matching_moment_exact(N, k, beta)
                enumerated: Optional[Fraction] = matching_moment_enumerated(N, k, beta) if N <= MAX_ENUM_N else None
                bracket = laplace_bound_bracket(N, k, beta)
                rows.append({
                    "N": N,
                    "k": k,
                    "beta": str(as_fraction(beta)),
                    "exact": float(exact),
                    "exact_rational": str(exact),
                    "enumerated_equal": None if enumerated is None else enumerated == exact,
                    "bracket": bracket,
                    "ratio": float(abs(exact)) / bracket if bracket > 0 else math.inf,
                })
    return pd.DataFrame(rows, columns=["N", "k", "beta", "exact", "exact_rational",
                                       "enumerated_equal", "bracket", "ratio"])
