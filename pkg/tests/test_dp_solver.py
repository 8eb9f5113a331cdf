# -*- coding: utf-8 -*-
import random

import pytest

from homcw.cwexpr import (
    clique_expression, cycle_expression, evaluate, parse_kexpr, random_expression, trivial_expression,
)
from homcw.dp_solver import (
    RecordTable, dp_intro, dp_join, dp_relabel, dp_union, solve, solve_via_factors, trivial_answer,
)
from homcw.errors import InvalidGraphError
from homcw.graph_core import Graph, complete_graph, cycle_graph, loop_graph, named_graph, random_graph
from homcw.hom_oracle import PartialMapping, find_homomorphism, is_homomorphism
from homcw.signatures import build_family, vertex_mask


def test_intro_tables(k3, c5):
    assert len(dp_intro(1, 'x', build_family(k3))) == 6
    assert len(dp_intro(1, 'x', build_family(k3), prescribed='1')) == 3
    assert len(dp_intro(1, 'x', build_family(c5))) == 10
    assert dp_intro(1, 'x', build_family(k3), live=False).records == {()}
    with pytest.raises(InvalidGraphError):
        dp_intro(1, 'x', build_family(k3), prescribed='9')


def test_relabel_onto_live_label_keeps_agreeing_records():
    child = RecordTable((1, 2), {(0, 0), (0, 1), (3, 3)})
    table = dp_relabel(1, 2, child)
    assert table.labels == (2,)
    assert table.records == {(0,), (3,)}


def test_relabel_onto_fresh_label_renames():
    child = RecordTable((1, 3), {(0, 4)})
    table = dp_relabel(1, 2, child)
    assert table.labels == (2, 3) and table.records == {(0, 4)}


def test_union_joins_on_shared_labels():
    left = RecordTable((1,), {(0,), (1,)})
    right = RecordTable((1, 2), {(0, 5), (3, 4)})
    table = dp_union(left, right)
    assert table.labels == (1, 2) and table.records == {(0, 5)}


def test_join_filters_by_signature(k3):
    family = build_family(k3)
    one = family.index_of(vertex_mask(k3, ['1']))
    two = family.index_of(vertex_mask(k3, ['2']))
    # p(a) = {1}: S({2}) = {1,3} 不包含于 {1}
    table = dp_join(1, 2, RecordTable((1, 2), {(one, two)}), family)
    assert len(table) == 0
    both = family.index_of(vertex_mask(k3, ['2', '3']))
    table = dp_join(1, 2, RecordTable((1, 2), {(both, one)}), family, live_after=frozenset())
    assert table.labels == () and table.records == {()}


def test_project_drops_dead_labels():
    table = RecordTable((1, 2), {(0, 1), (0, 2)}).project([1])
    assert table.labels == (1,) and table.records == {(0,)}


def test_clique_and_cycle_against_triangle(k3):
    assert not solve(clique_expression(['a', 'b', 'c', 'd']), k3).answer
    assert solve(cycle_expression(['a', 'b', 'c', 'd', 'e']), k3).answer
    assert not solve(cycle_expression(['a', 'b', 'c', 'd', 'e']), complete_graph(2)).answer


def test_prescription_can_block(k3):
    expr = parse_kexpr("e(1,2){(v(1,a)+v(2,b))}")
    assert not solve(expr, k3, PartialMapping({'a': '1', 'b': '1'})).answer
    assert solve(expr, k3, PartialMapping({'a': '1', 'b': '3'})).answer


def test_solver_agrees_with_oracle(rng):
    targets = [complete_graph(3), cycle_graph(5), complete_graph(2)]
    for seed in range(45):
        g = random_graph(rng.randint(1, 5), rng.choice([0.3, 0.5, 0.7]), seed=seed)
        h = targets[seed % len(targets)]
        partial = None
        if seed % 3 == 0:
            partial = PartialMapping({v: rng.choice(h.vertices) for v in rng.sample(g.vertices, min(2, g.n))})
        expr = trivial_expression(g)
        report = solve(expr, h, partial)
        assert report.answer == (find_homomorphism(g, h, partial) is not None)
        assert all(st.records <= st.bound for st in report.node_stats)


@pytest.mark.slow
@pytest.mark.parametrize('name', ['K3', 'K4', 'C5', 'C7', 'W6'])
def test_solver_agrees_with_oracle_on_low_width_graphs(name):
    h = named_graph(name)
    rng = random.Random(name)
    for seed in range(100):
        expr = random_expression(rng.randint(1, 10), rng.randint(2, 3), seed=seed)
        g = evaluate(expr).graph
        partial = None
        if seed % 2:
            partial = PartialMapping({v: rng.choice(h.vertices) for v in rng.sample(g.vertices, min(2, g.n))})
        report = solve(expr, h, partial)
        assert report.answer == (find_homomorphism(g, h, partial) is not None), (name, seed)
        assert all(st.records <= st.bound for st in report.node_stats), (name, seed)


def test_witness_is_a_homomorphism(k3):
    expr = cycle_expression(['a', 'b', 'c', 'd', 'e'])
    report = solve(expr, k3, want_witness=True)
    g = cycle_graph(5).relabeled(dict(zip('01234', 'abcde')))
    assert is_homomorphism(g, k3, report.witness)


def test_report_export(k3):
    report = solve(cycle_expression(['a', 'b', 'c']), k3)
    data = report.to_dict()
    assert data['answer'] == 'yes' and data['complexity_base'] == 6
    assert data['peak_bound'] == 6 ** 4
    table = report.node_table()
    assert list(table.columns) == ['index', 'kind', 'live_labels', 'records', 'bound']
    assert (table['records'] <= table['bound']).all()


def test_isolated_vertices_need_a_nonempty_target(k3):
    expr = parse_kexpr("(v(1,a)+v(2,b))")
    assert solve(expr, k3).answer


def test_trivial_targets_skip_the_dp(k3):
    g = cycle_graph(5)
    assert trivial_answer(g, loop_graph()) is True
    assert trivial_answer(g, cycle_graph(6)) is False
    assert trivial_answer(cycle_graph(6), complete_graph(2)) is True
    assert trivial_answer(g, k3) is None
    report = solve_via_factors(cycle_expression([str(i) for i in range(5)]), cycle_graph(6))
    assert report.strategy == 'trivial' and not report.answer


def test_factor_driver_matches_direct_solve(k3, w6):
    for seed in range(12):
        g = random_graph(6, 0.45, seed=seed)
        expr = trivial_expression(g)
        via = solve_via_factors(expr, w6)
        assert via.answer == solve(expr, k3).answer
        if via.strategy != 'trivial':
            assert via.complexity_base == 6


@pytest.mark.slow
def test_factor_driver_on_random_graphs(k3, w6):
    rng = random.Random(6)
    for seed in range(100):
        expr = random_expression(rng.randint(2, 10), 3, seed=seed)
        via = solve_via_factors(expr, w6)
        assert via.answer == solve(expr, k3).answer, seed


def test_disconnected_core_components():
    # C7 → K3，所以 K3 ⊎ C7 的核为 K3
    target = Graph('T', ['a1', 'a2', 'a3', 'b1', 'b2', 'b3', 'b4', 'b5', 'b6', 'b7'],
                   [('a1', 'a2'), ('a2', 'a3'), ('a3', 'a1')] +
                   [(f"b{i}", f"b{i % 7 + 1}") for i in range(1, 8)])
    report = solve_via_factors(clique_expression(['x', 'y', 'z']), target)
    assert report.answer
