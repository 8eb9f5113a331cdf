#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置文件
Configuration for the clique-width homomorphism toolkit

Version: 1.0
"""

import os
import logging
from datetime import datetime
from multiprocessing import cpu_count
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# 加载环境变量
load_dotenv()


class HomcwConfig:
    """运行时配置类（环境变量覆盖）"""

    LOG_LEVEL = os.getenv('HOMCW_LOG_LEVEL', 'INFO')
    LOG_DIR = os.getenv('HOMCW_LOG_DIR', '')
    THREADS = int(os.getenv('HOMCW_THREADS', '0') or 0)


# 日志配置
LOGGING_CONFIG = {
    'level': 'INFO',
    'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    'file_encoding': 'utf-8',
    'file_prefix': 'homcw',
}

# 图结构配置
GRAPH_CONFIG = {
    # 签名集合用一个机器字存储
    'dp_target_vertex_cap': 63,
    'isomorphism_vertex_cap': 20,
    'vertex_id_pattern': r'[A-Za-z0-9_.][A-Za-z0-9_.#]*',
    'loop_vertex': 'w',
}

# 暴力求解器配置
ORACLE_CONFIG = {
    'core_vertex_cap': 12,
    'factor_vertex_cap': 10,
    'projective_vertex_cap': 2200,
    'enumeration_cap': 100000,
    'witness_vertex_cap': 400,
}

# 动态规划配置
DP_CONFIG = {
    'check_table_bound': True,
    'trivial_fast_path': True,
}

# 实例生成配置
GEN_CONFIG = {
    'hat_prefix': 'hat',
}

# 基准测试配置
BENCH_CONFIG = {
    'clique_sizes': [3, 4],
    'widths': [2, 3, 4, 5, 6],
    'path_length': 24,
    'csv_name': 'bench_results.csv',
}

# 输出配置
OUTPUT_CONFIG = {
    'encoding': 'utf-8',
    'graph_file': 'G.graph',
    'map_file': 'G.map',
    'expr_file': 'G.cwexpr',
    'meta_file': 'meta.json',
}

# 错误处理配置
ERROR_HANDLING = {
    'exit_yes': 0,
    'exit_no': 1,
    'exit_error': 2,
}


def default_workers(max_workers: Optional[int] = None) -> int:
    """自动检测最佳进程数"""
    if max_workers:
        return max(1, max_workers)
    if HomcwConfig.THREADS:
        return HomcwConfig.THREADS
    cpu_cores = cpu_count()
    if cpu_cores >= 8:
        return min(cpu_cores - 2, 6)  # 留2个核心，最多6个进程
    elif cpu_cores >= 4:
        return min(cpu_cores - 1, 4)
    return max(1, cpu_cores // 2)


def setup_logger(name: str = 'homcw', log_dir: Optional[str] = None,
                 level: Optional[str] = None) -> logging.Logger:
    """
    设置日志

    Args:
        name: logger 名称
        log_dir: 日志目录，为空时只输出到控制台
        level: 日志级别

    Returns:
        配置好的 logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, (level or HomcwConfig.LOG_LEVEL).upper(), logging.INFO))

    # 避免重复添加handler
    if not logger.handlers:
        formatter = logging.Formatter(LOGGING_CONFIG['format'])

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        log_dir = log_dir or HomcwConfig.LOG_DIR
        if log_dir:
            log_path = Path(log_dir)
            log_path.mkdir(parents=True, exist_ok=True)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            log_file = log_path / f"{LOGGING_CONFIG['file_prefix']}_{timestamp}.log"
            file_handler = logging.FileHandler(log_file, encoding=LOGGING_CONFIG['file_encoding'])
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger
