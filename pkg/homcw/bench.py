# -*- coding: utf-8 -*-
"""
规模探测
Scaling sweep: DP table sizes on synthetic width-w expressions
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import BENCH_CONFIG, default_workers
from .cwexpr import DisjointUnion, Intro, Join, KExpression, Relabel, clique_expression, union_all
from .dp_solver import solve
from .errors import PreconditionError
from .graph_core import complete_graph
from .signatures import signature_number

logger = logging.getLogger(__name__)


def layer_chain_expression(width: int, layers: int) -> KExpression:
    """
    由独立层组成的链，相邻两层完全连接；每层 width-2 个顶点，宽度 width

    新层的每个顶点单独占一个标签，上一层共用标签 width-1，其余顶点为 width。
    """
    size = width - 2
    if size < 1 or layers < 1:
        raise PreconditionError("layer chain needs width >= 3 and at least one layer")
    prev, dead = width - 1, width
    root = None
    for layer in range(layers):
        part = union_all([Intro(i + 1, f"L{layer}.{i + 1}") for i in range(size)])
        if root is None:
            root = part
        else:
            root = DisjointUnion(root, part)
            for i in range(size):
                root = Join(i + 1, prev, root)
            root = Relabel(prev, dead, root)
        for i in range(size):
            root = Relabel(i + 1, prev, root)
    return KExpression(root)


def synthetic_expression(width: int, length: int) -> KExpression:
    if width == 2:
        return clique_expression(['1', '2'])
    return layer_chain_expression(width, max(2, length // (width - 2)))


def bench_task(c: int, width: int, length: int) -> Dict:
    """单个 (K_c, w) 组合：运行一次动态规划并记录峰值表大小"""
    expr = synthetic_expression(width, length)
    target = complete_graph(c)
    started = time.perf_counter()
    report = solve(expr, target)
    elapsed = (time.perf_counter() - started) * 1000
    s = signature_number(target)
    return {
        'target': target.name,
        'c': c,
        'cw': expr.width,
        's_H': s,
        'peak_records': report.per_node_max_records,
        'bound': s ** expr.width,
        'log2_naive_bound': float(2 ** c * expr.width),
        'answer': 'yes' if report.answer else 'no',
        'time_ms': round(elapsed, 3),
    }


def run_sweep(clique_sizes: Optional[Sequence[int]] = None, widths: Optional[Sequence[int]] = None,
              length: Optional[int] = None, max_workers: Optional[int] = None) -> pd.DataFrame:
    """
    扫描 K_c × 宽度，返回按 (c, cw) 排序的结果表

    Args:
        clique_sizes: 目标 K_c 的 c 值
        widths: 表达式宽度
        length: 合成图的规模参数
        max_workers: 进程数，None 为自动检测
    """
    clique_sizes = list(clique_sizes or BENCH_CONFIG['clique_sizes'])
    widths = list(widths or BENCH_CONFIG['widths'])
    length = length or BENCH_CONFIG['path_length']
    workers = default_workers(max_workers)
    jobs = [(c, w) for c in clique_sizes for w in widths]
    logger.info(f"bench: {len(jobs)} runs on {workers} processes")

    started = time.time()
    rows: List[Dict] = []
    if workers == 1:
        for c, w in jobs:
            rows.append(bench_task(c, w, length))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            future_to_job = {executor.submit(bench_task, c, w, length): (c, w) for c, w in jobs}
            for i, future in enumerate(as_completed(future_to_job), 1):
                c, w = future_to_job[future]
                try:
                    rows.append(future.result())
                    logger.info(f"✅ [{i}/{len(jobs)}] K{c}, width {w}")
                except Exception as e:
                    logger.error(f"❌ [{i}/{len(jobs)}] K{c}, width {w}: {e}")
                    raise

    logger.info(f"📊 bench finished in {time.time() - started:.1f}s")
    return pd.DataFrame(rows).sort_values(['c', 'cw']).reset_index(drop=True)


def check_monotone_growth(df: pd.DataFrame) -> Dict[str, Dict]:
    """
    每个目标：峰值不超过 (2^c−2)^w，严格低于朴素界 2^(2^c·w)，且随宽度单调不减

    同时给出 log(peak) 对 w 的线性拟合斜率，与 log(2^c−2) 比较。
    """
    result = {}
    for target, group in df.groupby('target'):
        group = group.sort_values('cw')
        widths = group['cw'].to_numpy()
        peaks = group['peak_records'].to_numpy()
        bounds = group['bound'].to_numpy()
        c = int(group['c'].iloc[0])
        naive = (2 ** c) * widths
        slope = None
        if len(widths) >= 2:
            slope = float(np.polyfit(widths, np.log(np.maximum(peaks, 1)), 1)[0])
        result[target] = {
            'within_bound': bool(np.all(peaks <= bounds)),
            'monotone': bool(np.all(np.diff(peaks) >= 0)),
            'below_naive': bool(np.all(np.log2(np.maximum(peaks, 1)) < naive)),
            'growth_rate': slope,
            'bound_rate': math.log(2 ** c - 2),
        }
        if not result[target]['within_bound']:
            logger.error(f"{target}: peak table size exceeds (2^c-2)^w")
        elif not result[target]['below_naive']:
            logger.error(f"{target}: peak table size reaches the naive 2^(2^c*w) bound")
        elif not result[target]['monotone']:
            logger.error(f"{target}: peak table sizes are not monotone in the width")
    return result


def write_csv(df: pd.DataFrame, outdir: str, name: Optional[str] = None) -> str:
    path = Path(outdir)
    path.mkdir(parents=True, exist_ok=True)
    csv_file = path / (name or BENCH_CONFIG['csv_name'])
    df.to_csv(csv_file, index=False, encoding='utf-8-sig')
    logger.info(f"Results saved to CSV: {csv_file}")
    return str(csv_file)
