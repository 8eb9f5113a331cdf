# -*- coding: utf-8 -*-
import math

import pandas as pd
import pytest

from homcw.bench import (
    bench_task, check_monotone_growth, layer_chain_expression, run_sweep, synthetic_expression, write_csv,
)
from homcw.cwexpr import evaluate
from homcw.errors import PreconditionError


def test_layer_chain():
    expr = layer_chain_expression(4, 3)
    g = evaluate(expr).graph
    assert g.n == 6 and g.edge_count == 8
    assert expr.width == 4
    assert not g.has_edge('L0.1', 'L0.2')
    assert g.has_edge('L0.1', 'L1.2') and not g.has_edge('L0.1', 'L2.1')


def test_synthetic_widths():
    assert synthetic_expression(2, 10).width == 2
    assert synthetic_expression(3, 6).width == 3
    assert synthetic_expression(6, 24).width == 6
    with pytest.raises(PreconditionError):
        layer_chain_expression(2, 3)


def test_single_task_within_bound():
    row = bench_task(3, 3, 6)
    assert row['target'] == 'K3' and row['s_H'] == 6
    assert row['peak_records'] <= row['bound'] == 6 ** 3
    assert row['answer'] == 'yes'


def test_growth_check():
    df = pd.DataFrame([
        {'target': 'K3', 'c': 3, 'cw': 2, 'peak_records': 6, 'bound': 36},
        {'target': 'K3', 'c': 3, 'cw': 3, 'peak_records': 30, 'bound': 216},
        {'target': 'K3', 'c': 3, 'cw': 4, 'peak_records': 100, 'bound': 1296},
        {'target': 'K4', 'c': 4, 'cw': 2, 'peak_records': 20, 'bound': 196},
        {'target': 'K4', 'c': 4, 'cw': 3, 'peak_records': 5, 'bound': 2744},
    ])
    growth = check_monotone_growth(df)
    assert growth['K3']['within_bound'] and growth['K3']['monotone']
    assert growth['K3']['below_naive']
    assert growth['K3']['growth_rate'] > 0
    assert growth['K3']['bound_rate'] == pytest.approx(math.log(6))
    assert growth['K4']['within_bound'] and not growth['K4']['monotone']


def test_sweep_and_csv(tmp_path):
    df = run_sweep([3], [2, 3], length=6, max_workers=1)
    assert list(df['cw']) == [2, 3]
    assert (df['peak_records'] <= df['bound']).all()
    path = write_csv(df, str(tmp_path))
    back = pd.read_csv(path, encoding='utf-8-sig')
    assert len(back) == 2 and 'time_ms' in back.columns


@pytest.mark.slow
def test_default_sweep(tmp_path):
    df = run_sweep(max_workers=2)
    assert sorted(set(df['cw'])) == [2, 3, 4, 5, 6]
    assert sorted(set(df['c'])) == [3, 4]
    assert (df['peak_records'] <= df['bound']).all()
    assert (df['peak_records'].clip(lower=1).map(math.log2) < df['log2_naive_bound']).all()
    growth = check_monotone_growth(df)
    for target, item in growth.items():
        assert item['within_bound'], target
        assert item['below_naive'], target
        assert item['monotone'], target
    assert write_csv(df, str(tmp_path)).endswith('.csv')
