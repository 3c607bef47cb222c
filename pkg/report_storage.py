#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
报告与数据导出模块 - 基于文件的结果存储

功能：
1. 实验报告（JSON 汇总 + CSV 逐次试验）
2. 矩阵导出（CSV "re,im" + JSON 旁注）及重新加载
3. 配置模型的边表导出
4. 特征值散点导出
5. 非回溯矩阵 B_M 导出（旁注附边编号对照表）

相对路径统一放到数据目录 SPECTRA_DATA_DIR 下。
"""

import os
import io
import sys
import json
import math
import logging
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

import config
from models import ConfigGraph, Spectrum, as_cmat
from nonbacktracking import EdgeIndex, build_nb_matrix

logger = logging.getLogger("spectra-storage")

FLOAT_FORMAT = "%.17g"


# 实验报告
class ExperimentReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = Field(..., description="实验名称")
    meta: Dict[str, Any] = Field(default_factory=dict, description="版本、参数、种子、线程数")
    aggregates: Dict[str, Any] = Field(default_factory=dict, description="汇总统计")
    trials: pd.DataFrame = Field(default_factory=pd.DataFrame, description="逐次试验记录")

    def summary(self) -> Dict[str, Any]:
        return {"name": self.name, "meta": self.meta, "aggregates": self.aggregates}


def init_storage(data_dir: Optional[str] = None) -> str:
    """创建数据目录"""
    data_dir = data_dir or config.DATA_DIR
    try:
        if not os.path.exists(data_dir):
            os.makedirs(data_dir)
            logger.info(f"创建数据目录: {data_dir}")
        return data_dir
    except Exception as e:
        logger.error(f"创建数据目录失败: {e}")
        raise


def resolve_data_path(path: Optional[str]) -> Optional[str]:
    """相对路径落在数据目录（SPECTRA_DATA_DIR）下，绝对路径原样返回"""
    if not path or os.path.isabs(path):
        return path
    return os.path.join(init_storage(), path)


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(parent):
        os.makedirs(parent)


def to_jsonable(obj: Any) -> Any:
    """把 numpy 标量/数组、Fraction、复数与 pydantic 模型转换为 JSON 可序列化对象"""
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, pd.DataFrame):
        return to_jsonable(obj.to_dict(orient="records"))
    return obj


def dumps_json(obj: Any) -> str:
    # repr 级别的浮点输出即 17 位有效数字内的最短精确表示
    return json.dumps(to_jsonable(obj), ensure_ascii=False, indent=2)


def write_json(obj: Any, path: Optional[str] = None):
    """写 JSON；path 为 None 时输出到 stdout"""
    text = dumps_json(obj)
    if path is None:
        sys.stdout.write(text + "\n")
        return
    try:
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        logger.info(f"已写入 JSON: {path}")
    except Exception as e:
        logger.error(f"写入 JSON 失败: {e}")
        raise


def write_csv(df: pd.DataFrame, path: Optional[str] = None):
    """写 CSV（17 位有效数字）；path 为 None 时输出到 stdout"""
    if path is None:
        buf = io.StringIO()
        df.to_csv(buf, index=False, float_format=FLOAT_FORMAT)
        sys.stdout.write(buf.getvalue())
        return
    try:
        _ensure_parent(path)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"已写入 CSV: {path} ({len(df)} 行)")
    except Exception as e:
        logger.error(f"写入 CSV 失败: {e}")
        raise


def write_report(report: ExperimentReport, out: Optional[str] = None, fmt: str = "json"):
    """
    输出实验报告

    json: 汇总写入 out（或 stdout）；给出 out 时逐次试验另写 <out 去后缀>.trials.csv
    csv:  逐次试验写入 out（或 stdout）；给出 out 时汇总另写 <out 去后缀>.json
    """
    if fmt not in ("json", "csv"):
        raise ValueError(f"未知的输出格式: {fmt}")
    stem = os.path.splitext(out)[0] if out else None
    if fmt == "json":
        write_json(report.summary(), out)
        if stem and not report.trials.empty:
            write_csv(report.trials, stem + ".trials.csv")
    else:
        write_csv(report.trials, out)
        if stem:
            write_json(report.summary(), stem + ".json")


def write_matrix_dump(M, path: str, meta: Optional[Dict] = None):
    """矩阵按行主序写成 "re,im" 两列 CSV，形状与元数据写入 path + ".json" 旁注"""
    A = as_cmat(M)
    flat = A.ravel()
    df = pd.DataFrame({"re": flat.real, "im": flat.imag})
    write_csv(df, path)
    sidecar = {"rows": A.shape[0], "cols": A.shape[1], "version": config.describe_version()}
    sidecar.update(meta or {})
    write_json(sidecar, path + ".json")


def write_nb_matrix(M, path: str, meta: Optional[Dict] = None):
    """导出 B_M：格式同 write_matrix_dump，旁注中附边编号对照表 edge_index"""
    B = build_nb_matrix(M)
    sidecar: Dict[str, Any] = {"edge_index": EdgeIndex(as_cmat(M).shape[0]).legend()}
    sidecar.update(meta or {})
    write_matrix_dump(B, path, sidecar)


def load_matrix_dump(path: str) -> Tuple[np.ndarray, Dict]:
    """重新加载 write_matrix_dump 的输出；没有旁注时按方阵推断形状"""
    if not os.path.exists(path):
        raise ValueError(f"矩阵文件不存在: {path}")
    try:
        df = pd.read_csv(path)
    except Exception as e:
        logger.error(f"读取矩阵文件失败: {e}")
        raise ValueError(f"无法解析矩阵文件 {path}: {e}")
    if list(df.columns) != ["re", "im"]:
        raise ValueError(f"矩阵文件列名应为 re,im，实际 {list(df.columns)}")
    meta: Dict = {}
    sidecar = path + ".json"
    if os.path.exists(sidecar):
        with open(sidecar, "r", encoding="utf-8") as f:
            meta = json.load(f)
        rows, cols = int(meta["rows"]), int(meta["cols"])
    else:
        rows = cols = int(round(math.sqrt(len(df))))
    if rows * cols != len(df):
        raise ValueError(f"矩阵元素个数 {len(df)} 与形状 {rows}x{cols} 不符")
    values = df["re"].to_numpy(dtype=np.float64) + 1j * df["im"].to_numpy(dtype=np.float64)
    return as_cmat(values.reshape(rows, cols)), meta


def write_config_graph(g: ConfigGraph, path: str, meta: Optional[Dict] = None):
    """边表 CSV：i,j,multiplicity（i<j），自环记为 i,i,loops(i)"""
    iu, ju = np.nonzero(np.triu(g.adjacency, k=1))
    rows = [{"i": int(i), "j": int(j), "multiplicity": int(g.adjacency[i, j])} for i, j in zip(iu, ju)]
    rows += [{"i": int(v), "j": int(v), "multiplicity": int(c)} for v, c in enumerate(g.loops) if c]
    write_csv(pd.DataFrame(rows, columns=["i", "j", "multiplicity"]), path)
    sidecar = {"n": g.n, "d": g.d, "version": config.describe_version()}
    sidecar.update(meta or {})
    write_json(sidecar, path + ".json")


def write_spectrum(s: Spectrum, path: str, header: Optional[Dict] = None):
    """特征值散点：CSV "re,im" + JSON 头（来源系综、种子、维数）"""
    df = pd.DataFrame({"re": s.eigenvalues.real, "im": s.eigenvalues.imag})
    write_csv(df, path)
    sidecar = {"source_dim": s.source_dim, "hermitian": s.hermitian, "version": config.describe_version()}
    sidecar.update(header or {})
    write_json(sidecar, path + ".json")
