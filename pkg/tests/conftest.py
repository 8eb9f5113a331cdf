# -*- coding: utf-8 -*-
"""共享测试夹具"""

import random

import pytest

from homcw.graph_core import Graph, complete_graph, cycle_graph, wheel_graph


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def c5():
    return cycle_graph(5)


@pytest.fixture
def w6():
    return wheel_graph(6)


@pytest.fixture
def loop_edge():
    """两个顶点：0 带自环，0–1 一条边"""
    return Graph('L', ['0', '1'], [('0', '0'), ('0', '1')], loops_allowed=True)


@pytest.fixture
def rng():
    return random.Random(0)
