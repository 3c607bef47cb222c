#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
配置模块 - 环境变量与配置文件

所有可调参数先从 .env / 环境变量读取默认值，命令行再覆盖。
配置文件为扁平的 key=value 格式，键名与命令行参数同名（如 n=50、tau=1.2）。
"""

import os
import subprocess
import logging
from typing import Any, Dict, Optional

from dotenv import load_dotenv, dotenv_values

# 加载环境变量
load_dotenv()

logger = logging.getLogger("spectra-config")

APP_NAME = "zerofree-spectra"
APP_VERSION = "1.2.0"

# 配置参数
DEFAULT_SEED = os.getenv("SPECTRA_SEED")  # 未设置时为 None，由调用方决定
DEFAULT_K = int(os.getenv("SPECTRA_K", "1024"))
DEFAULT_THREADS = int(os.getenv("SPECTRA_THREADS", str(os.cpu_count() or 1)))
DATA_DIR = os.getenv("SPECTRA_DATA_DIR", "data")

# sparse_spike 幅值上限，超过后截断并在元数据中记录
SPIKE_CAP = float(os.getenv("SPECTRA_SPIKE_CAP", "1e8"))

# B_M 稠密特征分解的默认规模上限（n(n-1) 维）
NB_EIG_CAP = int(os.getenv("SPECTRA_NB_EIG_CAP", "32"))

# 正则图第二特征值：不超过该规模用稠密 Hermitian 分解，否则用收缩幂迭代
DENSE_EIG_CAP = int(os.getenv("SPECTRA_DENSE_EIG_CAP", "4096"))

LOG_LEVEL = os.getenv("SPECTRA_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("SPECTRA_LOG_FILE")


def env_seed(default: int = 0) -> int:
    """读取 SPECTRA_SEED 作为基准种子，缺失或非法时回退到 default"""
    raw = os.getenv("SPECTRA_SEED", DEFAULT_SEED)
    if raw is None or str(raw).strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"SPECTRA_SEED 不是整数，已忽略: {raw}")
        return default


def load_config_file(path: Optional[str]) -> Dict[str, str]:
    """
    读取扁平配置文件

    Args:
        path: 配置文件路径，None 表示不使用配置文件

    Returns:
        键名去掉前导 "--"、其余 "-" 替换为 "_" 的字典（区分大小写，N 与 n 不同）
    """
    if not path:
        return {}
    if not os.path.exists(path):
        raise ValueError(f"配置文件不存在: {path}")
    values = dotenv_values(path)
    cleaned = {}
    for key, value in values.items():
        if value is None:
            continue
        cleaned[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    logger.info(f"已加载配置文件: {path} ({len(cleaned)} 项)")
    return cleaned


def merge_options(flags: Dict[str, Any], file_values: Dict[str, str],
                  casts: Dict[str, Any]) -> Dict[str, Any]:
    """
    合并命令行参数与配置文件：命令行显式给出的值优先

    Args:
        flags: argparse 解析结果（未给出的参数为 None）
        file_values: load_config_file 的结果
        casts: 参数名 -> 类型转换函数

    Returns:
        合并后的参数字典
    """
    merged = dict(flags)
    for key, raw in file_values.items():
        if key not in casts:
            logger.warning(f"配置文件中存在未知参数，已忽略: {key}")
            continue
        if merged.get(key) is not None:
            continue
        try:
            merged[key] = casts[key](raw)
        except (TypeError, ValueError) as e:
            raise ValueError(f"配置项 {key}={raw} 无法解析: {e}")
    return merged


def describe_version() -> str:
    """返回 git describe 结果，不在仓库中时回退到 APP_VERSION"""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{APP_VERSION}+{out.stdout.strip()}"
    except Exception:
        pass
    return APP_VERSION
