#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
命令行入口

    python cli.py certify --ensemble girko --n 50 --tau 1.2 --delta 0.2 --seed 7
    python cli.py girko-closed-form --n 20 --tau 1.5
    python cli.py matching-moments --N 12 --k 2 --beta 2

退出码：0 成功，1 参数无效，2 数值计算失败。
机器可读结果（JSON/CSV）写到 stdout 或 --out，日志与彩色摘要写到 stderr。
"""

import sys
import math
import argparse
import logging
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import pandas as pd
from colorama import Fore, Style, just_fix_windows_console

import config
import combinatorics
import experiments
import jensen
import nbdet
from ensembles import sample, sample_config_model
from models import EnsembleSpec, SubgraphWithMultiplicities
from report_storage import (ExperimentReport, load_matrix_dump, resolve_data_path, write_config_graph, write_csv,
                            write_json, write_matrix_dump, write_nb_matrix, write_report)
from spectral import NumericFailure, eigenvalues, max_row_norm, outlier_count_flagged, spectral_radius

logger = logging.getLogger("spectra-cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2

ENSEMBLES = ["girko", "wigner", "sparse_spike", "centered_er", "dreg_centered"]
LAWS = ["rademacher", "gaussian", "complex_phase"]


def _parse_bool(value: Union[str, bool]) -> bool:
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"无法解析为布尔值: {value}")


def _choice(options: List[str]) -> Callable[[str], str]:
    def cast(value: str) -> str:
        if value not in options:
            raise ValueError(f"取值必须是 {options} 之一: {value}")
        return value
    cast.__name__ = "choice"
    return cast


# 选项定义：名称 -> (类型, 说明)；布尔开关类型为 None
OPTIONS: Dict[str, Tuple[Optional[Callable], str]] = {
    "n": (int, "维数/顶点数"),
    "d": (int, "度数"),
    "N": (int, "半边总数（匹配矩）"),
    "k": (int, "匹配边数"),
    "beta": (Fraction, "β（有理数，如 3/2）"),
    "tau": (float, "圆周参数 τ"),
    "delta": (float, "离群参数 δ"),
    "r": (float, "Jensen 公式半径"),
    "K": (int, "求积节点数"),
    "trials": (int, "试验次数"),
    "seed": (int, "基准种子（缺省读取 SPECTRA_SEED）"),
    "threads": (int, "线程数"),
    "out": (str, "输出路径（缺省为 stdout）"),
    "format": (_choice(["json", "csv"]), "输出格式 json/csv"),
    "matrix": (str, "从 CSV 矩阵导出文件读取矩阵"),
    "ensemble": (_choice(ENSEMBLES), "系综类型"),
    "law": (_choice(LAWS), "元素分布"),
    "method": (_choice(["lu", "spectrum"]), "节点行列式计算方式"),
    "max_edges": (int, "子图最多边数"),
    "certify_below": (int, "n 不超过该值时对 B_M 做证书"),
    "r_matrix_d": (int, "同时检验 R 矩阵三情形的最大 d"),
    "n_triangle": (int, "三角形子矩阵对应的 n"),
    "allow_any_tau": (None, "允许 τ <= 1，直接给出和式"),
    "full_points": (None, "使用 n(n-1)+1 个 z 点"),
    "grid": (None, "输出 (N, k, β) 网格"),
    "nb_out": (str, "同时导出 B_M（CSV + 边编号旁注）"),
    "scatter": (str, "导出特征值散点"),
    "nb_matrix_free": (None, "n 超过 B_M 稠密上限时用 ARPACK 计算 ρ(B_M)"),
    "mult": (int, "子图每条边的重数"),
}

# 各子命令的选项及缺省值
COMMANDS: Dict[str, Dict[str, Any]] = {
    "sample": {"ensemble": "girko", "n": 50, "d": None, "law": "rademacher", "nb_out": None, "scatter": None},
    "certify": {"ensemble": "girko", "n": 50, "d": None, "law": "rademacher", "tau": 1.2,
                "delta": 0.2, "K": None, "method": "lu", "matrix": None},
    "girko-closed-form": {"n": 20, "tau": 1.5, "allow_any_tau": False},
    "nbdet-verify": {"n": 3, "trials": 20, "full_points": False, "r_matrix_d": 0},
    "dreg": {"n": 1000, "d": 4, "trials": 50, "certify_below": 0, "tau": 2.0, "delta": 0.2, "K": None},
    "wigner": {"n": 24, "trials": 100, "law": "gaussian", "nb_matrix_free": False},
    "girko": {"ensemble": "girko", "n": 100, "law": "rademacher", "trials": 500, "tau": 1.2 ** 0.5,
              "delta": 0.2, "K": None, "method": "spectrum"},
    "assumption-grid": {"n": 6, "d": 2, "max_edges": 2, "trials": 20000},
    "matching-moments": {"N": 12, "k": 2, "beta": Fraction(2), "grid": False},
    "subgraph-moments": {"N": 8, "max_edges": 2, "beta": Fraction(1), "mult": 1},
    "jensen-check": {"ensemble": "girko", "n": 8, "d": None, "law": "gaussian", "r": 1.3,
                     "K": 2048, "matrix": None},
    "remark": {"n": 30, "trials": 10000, "n_triangle": 10000},
}

COMMON = {"seed": None, "threads": None, "out": None, "format": "json"}

# 相对路径按数据目录解析
PATH_OPTIONS = ("out", "matrix", "nb_out", "scatter")


class SpectraArgumentParser(argparse.ArgumentParser):
    """参数错误时以退出码 1 结束"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: 错误: {message}\n")


def _argparse_type(cast: Callable) -> Callable:
    def wrapped(value: str):
        try:
            return cast(value)
        except (TypeError, ValueError, ZeroDivisionError) as e:
            raise argparse.ArgumentTypeError(str(e))
    wrapped.__name__ = getattr(cast, "__name__", "value")
    return wrapped


def build_parser() -> SpectraArgumentParser:
    parser = SpectraArgumentParser(prog="spectra", description="零点自由性方法的谱证书与数值验证工具")
    parser.add_argument("--version", action="version", version=f"{config.APP_NAME} {config.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, defaults in COMMANDS.items():
        p = sub.add_parser(name, help=f"{name} 子命令")
        p.add_argument("--config", default=None, help="扁平 key=value 配置文件")
        for key in list(defaults) + list(COMMON):
            cast, help_text = OPTIONS[key]
            flag = f"--{key.replace('_', '-')}"
            if cast is None:
                p.add_argument(flag, dest=key, action="store_true", default=None, help=help_text)
            else:
                p.add_argument(flag, dest=key, type=_argparse_type(cast), default=None, help=help_text)
    return parser


def resolve_options(args: argparse.Namespace) -> Dict[str, Any]:
    """命令行 > 配置文件 > 环境变量 > 内置缺省"""
    defaults = dict(COMMANDS[args.command])
    defaults.update(COMMON)
    flags = {key: getattr(args, key) for key in defaults}
    casts = {key: (OPTIONS[key][0] or _parse_bool) for key in defaults}
    merged = config.merge_options(flags, config.load_config_file(args.config), casts)
    for key, value in defaults.items():
        if merged.get(key) is None:
            merged[key] = value
    if merged["seed"] is None:
        merged["seed"] = config.env_seed(0)
    if merged["threads"] is None:
        merged["threads"] = config.DEFAULT_THREADS
    if merged.get("K", 0) is None:
        merged["K"] = config.DEFAULT_K
    for key in PATH_OPTIONS:
        if merged.get(key):
            merged[key] = resolve_data_path(merged[key])
    merged["command"] = args.command
    return merged


def setup_logging():
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.LOG_FILE:
        handlers.append(logging.FileHandler(config.LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, str(config.LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


def _spec_from(opts: Dict) -> EnsembleSpec:
    return EnsembleSpec(kind=opts["ensemble"], n=opts["n"], d=opts.get("d"), entry_law=opts.get("law") or "rademacher")


def _matrix_from(opts: Dict) -> Tuple[Any, Dict]:
    if opts.get("matrix"):
        M, meta = load_matrix_dump(opts["matrix"])
        meta = dict(meta)
        meta["source"] = opts["matrix"]
        return M, meta
    return sample(_spec_from(opts), opts["seed"], 0)


# 子命令

def cmd_sample(opts: Dict) -> Tuple[Dict, str]:
    spec = _spec_from(opts)
    M, meta = sample(spec, opts["seed"], 0)
    out = opts["out"]
    if out:
        write_matrix_dump(M, out, meta)
        if spec.kind == "dreg_centered":
            write_config_graph(sample_config_model(spec.n, spec.d, opts["seed"], 0), out + ".edges.csv", meta)
    if opts["nb_out"]:
        write_nb_matrix(M, opts["nb_out"], meta)
    if opts["scatter"]:
        s = experiments.eigenvalue_scatter(spec, opts["seed"], out=opts["scatter"])
    else:
        s = eigenvalues(M)
    payload = {
        "meta": meta,
        "shape": list(M.shape),
        "spectral_radius": spectral_radius(s),
        "max_row_norm": max_row_norm(M),
        "dump": out,
        "nb_dump": opts["nb_out"],
        "scatter": opts["scatter"],
        "version": config.describe_version(),
    }
    return payload, f"采样完成: {spec.kind} n={spec.n}, ρ={payload['spectral_radius']:.6g}"


def cmd_certify(opts: Dict) -> Tuple[Dict, str]:
    M, meta = _matrix_from(opts)
    s = eigenvalues(M)
    cert = jensen.certify(M, opts["tau"], opts["K"], opts["delta"], method=opts["method"], spectrum=s)
    threshold = opts["tau"] * math.sqrt(1.0 + opts["delta"])
    true_count, flagged = outlier_count_flagged(s, threshold)
    payload = cert.model_dump()
    payload.update({
        "true_outlier_count": true_count,
        "outlier_threshold": threshold,
        "threshold_warning": flagged,
        "spectral_radius": spectral_radius(s),
        "source": meta,
        "version": config.describe_version(),
    })
    return payload, f"证书: 离群上界 {cert.outlier_count_bound}，真实个数 {true_count}"


def cmd_girko_closed_form(opts: Dict) -> Tuple[Dict, str]:
    n, tau = opts["n"], opts["tau"]
    value = combinatorics.girko_closed_form(n, tau, allow_any_tau=opts["allow_any_tau"])
    exact = combinatorics.girko_closed_form_exact(n, Fraction(tau) ** 2)
    payload: Dict[str, Any] = {"n": n, "tau": tau, "exact": str(exact), "value": value}
    if tau > 1:
        bound = combinatorics.girko_geometric_bound(Fraction(tau) ** 2)
        payload.update({"bound": str(bound), "bound_value": float(bound), "within_bound": exact <= bound})
    return payload, f"闭式值 {value:.17g}"


def cmd_nbdet_verify(opts: Dict) -> Tuple[Dict, str]:
    report = nbdet.verify_expansion(opts["n"], opts["trials"], opts["seed"], full_points=opts["full_points"])
    if opts["r_matrix_d"]:
        report["r_matrix"] = [nbdet.verify_r_matrix_casework(d) for d in range(1, opts["r_matrix_d"] + 1)]
    report["version"] = config.describe_version()
    return report, f"展开验证 n={opts['n']}: 最大相对误差 {report['max_relative_error']:.3e}"


def cmd_dreg(opts: Dict) -> ExperimentReport:
    return experiments.run_dreg_experiment(opts["n"], opts["d"], opts["trials"], opts["seed"],
                                           certify_below=opts["certify_below"], tau=opts["tau"],
                                           delta=opts["delta"], K=opts["K"], threads=opts["threads"])


def cmd_wigner(opts: Dict) -> ExperimentReport:
    return experiments.run_wigner_experiment(opts["n"], opts["trials"], opts["seed"],
                                             entry_law=opts["law"], threads=opts["threads"],
                                             nb_matrix_free=opts["nb_matrix_free"])


def cmd_girko(opts: Dict) -> ExperimentReport:
    return experiments.run_girko_experiment(opts["n"], opts["trials"], opts["tau"], opts["delta"], opts["seed"],
                                            kind=opts["ensemble"], entry_law=opts["law"], K=opts["K"],
                                            threads=opts["threads"], method=opts["method"])


def cmd_assumption_grid(opts: Dict) -> ExperimentReport:
    return experiments.run_assumption_grid(opts["n"], opts["d"], opts["max_edges"], opts["trials"],
                                           opts["seed"], threads=opts["threads"])


def cmd_matching_moments(opts: Dict):
    N, k, beta = opts["N"], opts["k"], opts["beta"]
    if opts["grid"]:
        table = combinatorics.matching_moment_grid(range(2, N + 1, 2), range(0, k + 1), [1, Fraction(3, 2), 2])
        return table, f"网格共 {len(table)} 行"
    exact = combinatorics.matching_moment_exact(N, k, beta)
    payload: Dict[str, Any] = {"N": N, "k": k, "beta": str(beta), "exact": str(exact), "exact_value": float(exact)}
    if N <= combinatorics.MAX_ENUM_N:
        enumerated = combinatorics.matching_moment_enumerated(N, k, beta)
        payload.update({"enumerated": str(enumerated), "equal": enumerated == exact})
    if 4 * k <= N:
        bracket = combinatorics.laplace_bound_bracket(N, k, beta)
        payload.update({"bracket": bracket, "ratio": abs(float(exact)) / bracket})
    return payload, f"精确值 {exact}"


def cmd_subgraph_moments(opts: Dict):
    """小子图在均匀完美匹配下的精确矩、逐项上界与 N^{|S|} 缩放比"""
    N, beta, m = opts["N"], opts["beta"], opts["mult"]
    if N > combinatorics.MAX_ENUM_N:
        raise ValueError(f"完美匹配全枚举规模上限为 N <= {combinatorics.MAX_ENUM_N}（实际 N={N}）")
    if beta < 1:
        raise ValueError(f"beta 必须 >= 1: {beta}")
    shift = 1 / (Fraction(beta) * N)
    rows = []
    for name, edges in experiments.subgraph_catalog(N, opts["max_edges"]):
        S = SubgraphWithMultiplicities.from_edges(edges, m)
        rows.append({"shape": name, **combinatorics.subgraph_moment_report(N, S, shift)})
    table = pd.DataFrame(rows)
    return table, f"子图矩共 {len(table)} 种形状，shift = {shift}"


def cmd_jensen_check(opts: Dict) -> Tuple[Dict, str]:
    M, meta = _matrix_from(opts)
    lhs, rhs = jensen.jensen_formula_check(M, opts["r"], opts["K"])
    payload = {"r": opts["r"], "K": opts["K"], "lhs": lhs, "rhs": rhs, "abs_diff": abs(lhs - rhs),
               "passed": abs(lhs - rhs) <= 1e-6, "source": meta, "version": config.describe_version()}
    return payload, f"Jensen 公式: |lhs - rhs| = {abs(lhs - rhs):.3e}"


def cmd_remark(opts: Dict) -> ExperimentReport:
    return experiments.run_remark_counterexamples(opts["n"], opts["trials"], opts["seed"],
                                                  n_triangle=opts["n_triangle"], threads=opts["threads"])


HANDLERS: Dict[str, Callable[[Dict], Any]] = {
    "sample": cmd_sample,
    "certify": cmd_certify,
    "girko-closed-form": cmd_girko_closed_form,
    "nbdet-verify": cmd_nbdet_verify,
    "dreg": cmd_dreg,
    "wigner": cmd_wigner,
    "girko": cmd_girko,
    "assumption-grid": cmd_assumption_grid,
    "matching-moments": cmd_matching_moments,
    "subgraph-moments": cmd_subgraph_moments,
    "jensen-check": cmd_jensen_check,
    "remark": cmd_remark,
}


def emit(result: Any, opts: Dict) -> str:
    """按 --format 输出结果，返回摘要文字"""
    if isinstance(result, ExperimentReport):
        write_report(result, opts["out"], opts["format"])
        return f"{result.name} 实验完成，共 {len(result.trials)} 次试验"
    payload, summary = result
    if isinstance(payload, pd.DataFrame):
        if opts["format"] == "csv":
            write_csv(payload, opts["out"])
        else:
            write_json(payload, opts["out"])
        return summary
    if opts["command"] == "sample":
        # sample 的 --out 已用于矩阵导出，摘要总是写到 stdout
        write_json(payload, None)
    elif opts["format"] == "csv":
        write_csv(pd.DataFrame([{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]), opts["out"])
    else:
        write_json(payload, opts["out"])
    return summary


def main(argv: Optional[List[str]] = None) -> int:
    just_fix_windows_console()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_INVALID

    setup_logging()
    try:
        opts = resolve_options(args)
        logger.debug(f"运行参数: {opts}")
        summary = emit(HANDLERS[args.command](opts), opts)
    except NumericFailure as e:
        logger.error(f"数值计算失败: {e}")
        sys.stderr.write(f"{Fore.RED}数值计算失败: {e}{Style.RESET_ALL}\n")
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        logger.error(f"参数无效: {e}")
        sys.stderr.write(f"{Fore.RED}错误: {e}{Style.RESET_ALL}\n")
        return EXIT_INVALID

    sys.stderr.write(f"{Fore.GREEN}{summary}{Style.RESET_ALL}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
