# -*- coding: utf-8 -*-
import itertools
import json
import random

import pytest

from homcw.cwexpr import evaluate, parse_kexpr, trivial_expression
from homcw.dp_solver import solve
from homcw.errors import CSPFormatError, CapExceededError, PreconditionError
from homcw.graph_core import Graph, complete_graph, loop_graph, parse_graph, random_graph
from homcw.hardness_gen import (
    CSPInstance, Constraint, SplitTarget, build_forward_witness, homext_to_hom, implication_gadget,
    implication_pairs, or_chain_pairs, or_gadget, parse_csp, prime_split, reduce_csp, s_gadget,
    serialize_csp, verify_or_gadget, verify_s_gadget, write_reduction,
)
from homcw.hom_oracle import (
    Factorization, PartialMapping, factorize_prime, find_homomorphism, is_homomorphism, parse_mapping,
)


@pytest.fixture
def k3_factors(k3):
    return factorize_prime(k3)


# ----------------------------------------------------------------------
# 目标拆分
# ----------------------------------------------------------------------

def test_split_of_a_prime_target(k3_factors):
    ctx = SplitTarget.from_factorization(k3_factors)
    assert ctx.h1.name == 'K3'
    assert ctx.w_graph.vertices == ('w',)
    assert ctx.join('2', 'w') == '2.w'
    assert ctx.split('3.w') == ('3', 'w')


def test_prime_split_keeps_target_names(c5):
    ctx = prime_split(c5)
    assert ctx.target is c5
    assert ctx.join('4', 'w') == '4'
    assert ctx.h1_of('0') == '0'


def test_loop_factor_cannot_be_chosen(k3_factors):
    with pytest.raises(PreconditionError):
        SplitTarget.from_factorization(k3_factors, index=1)


# ----------------------------------------------------------------------
# gadget
# ----------------------------------------------------------------------

def test_relation_sizes(k3):
    assert len(implication_pairs(k3, '1', '2')) == 7
    assert or_chain_pairs(2, 'a', 'b', 'c') == [[('a', 'b'), ('b', 'a'), ('a', 'a')]]
    chain = or_chain_pairs(5, 'a', 'b', 'c')
    assert [len(part) for part in chain] == [5, 7, 7, 5]


def test_single_pair_gadget_is_fully_prescribed(k3_factors):
    gadget = s_gadget(k3_factors, [('1', '2')], 'w', 'w')
    assert gadget.graph.n == 3
    assert gadget.p == '1.w' and gadget.q == '2.w'
    assert len(gadget.partial) == 3
    result = verify_s_gadget(gadget)
    assert result['s1'] and result['s2'] and not result['violations']


def test_two_pair_gadget_by_enumeration(k3_factors):
    gadget = s_gadget(k3_factors, [('1', '2'), ('2', '1')], 'w', 'w')
    assert gadget.graph.n == 9
    result = verify_s_gadget(gadget, method='enumerate')
    assert result['s1'] and result['s2']
    assert result['extension_count'] == 2
    assert result['observed'] == [['1', '2'], ['2', '1']]


def test_gadget_with_coinciding_ends(k3_factors):
    gadget = s_gadget(k3_factors, [('1', '1')], 'w', 'w')
    assert gadget.p == gadget.q
    result = verify_s_gadget(gadget)
    assert result['s1'] and result['s2']


def _assert_gadget_properties(factors, relations):
    for relation in relations:
        gadget = s_gadget(factors, list(relation), 'w', 'w')
        result = verify_s_gadget(gadget)
        assert result['s1'] and result['s2'], relation


@pytest.mark.parametrize('size', [1, 2, pytest.param(3, marks=pytest.mark.slow)])
def test_every_small_relation_over_triangle(k3_factors, k3, size):
    pairs = list(itertools.product(k3.vertices, repeat=2))
    _assert_gadget_properties(k3_factors, itertools.combinations(pairs, size))


def test_gadget_over_five_cycle(c5):
    factors = factorize_prime(c5)
    gadget = s_gadget(factors, [('0', '2'), ('1', '1')], 'w', 'w')
    result = verify_s_gadget(gadget)
    assert result['s1'] and result['s2']
    pairs = list(itertools.product(c5.vertices, repeat=2))
    _assert_gadget_properties(factors, itertools.combinations(pairs, 1))


@pytest.mark.slow
def test_relations_over_five_cycle(c5):
    factors = factorize_prime(c5)
    pairs = list(itertools.product(c5.vertices, repeat=2))
    _assert_gadget_properties(factors, itertools.combinations(pairs, 2))
    # 2300 个三元关系中按固定种子抽 60 个
    rng = random.Random(5)
    triples = list(itertools.combinations(pairs, 3))
    _assert_gadget_properties(factors, rng.sample(triples, 60))


def test_gadget_rejects_bad_input(k3_factors):
    with pytest.raises(PreconditionError):
        s_gadget(k3_factors, [], 'w', 'w')
    with pytest.raises(PreconditionError):
        s_gadget(k3_factors, [('1', '9')], 'w', 'w')
    with pytest.raises(PreconditionError):
        s_gadget(k3_factors, [('1', '2')], 'w', 'z')


@pytest.mark.parametrize('t', [1, 2])
def test_small_or_gadgets(k3_factors, t):
    gadget = or_gadget(k3_factors, '1', '2', '3', 'w', t)
    assert len(gadget.roots) == t
    result = verify_or_gadget(gadget)
    assert result['o1'] and result['o2']


@pytest.mark.slow
@pytest.mark.parametrize('t', [3, 4])
def test_longer_or_gadgets(k3_factors, t):
    gadget = or_gadget(k3_factors, '1', '2', '3', 'w', t)
    result = verify_or_gadget(gadget)
    assert result['o1'] and result['o2']


@pytest.mark.slow
def test_implication_gadget(k3_factors):
    gadget = implication_gadget(k3_factors, '1', '2', 'w', 'w')
    assert gadget.graph.n == 3 ** 7
    result = verify_s_gadget(gadget)
    assert result['s1'] and result['s2']


def test_or_gadget_needs_distinct_vertices(k3_factors):
    with pytest.raises(PreconditionError):
        or_gadget(k3_factors, '1', '1', '3', 'w', 2)


# ----------------------------------------------------------------------
# 扩展 → 同态
# ----------------------------------------------------------------------

def test_wrapper_preserves_answers(rng, k3, c5):
    for seed in range(30):
        h = k3 if seed % 2 else c5
        g = random_graph(rng.randint(2, 6), 0.4, seed=seed)
        picked = rng.sample(g.vertices, min(2, g.n))
        partial = PartialMapping({v: rng.choice(h.vertices) for v in picked})
        expr = trivial_expression(g)
        wrapped = homext_to_hom(g, partial, h, expr)
        expected = find_homomorphism(g, h, partial) is not None
        assert (find_homomorphism(wrapped.graph, h) is not None) == expected
        assert wrapped.strategy == 'spine'
        assert wrapped.expr.width == expr.width + h.n
        assert evaluate(wrapped.expr).graph.same_structure(wrapped.graph)


def test_wrapper_width_with_dp(k3):
    expr = parse_kexpr("e(1,2){(v(1,a)+v(2,b))}")
    g = evaluate(expr).graph
    wrapped = homext_to_hom(g, PartialMapping({'a': '1', 'b': '1'}), k3, expr)
    assert not solve(wrapped.expr, k3).answer
    wrapped = homext_to_hom(g, PartialMapping({'a': '1'}), k3, expr)
    assert solve(wrapped.expr, k3).answer


def test_wrapper_falls_back_on_mixed_classes(k3):
    expr = parse_kexpr("(v(1,a)+(v(2,b)+v(2,c)))")
    g = evaluate(expr).graph
    wrapped = homext_to_hom(g, PartialMapping({'b': '1', 'c': '2'}), k3, expr)
    assert wrapped.strategy == 'trivial-fallback'
    assert evaluate(wrapped.expr).graph.same_structure(wrapped.graph)


def test_wrapper_without_expression(k3):
    g = Graph('G', ['hat.1', 'x'], [('hat.1', 'x')])
    wrapped = homext_to_hom(g, PartialMapping({'x': '2'}), k3)
    assert wrapped.expr is None and wrapped.strategy == 'none'
    assert wrapped.hat['1'] == 'hat1.1'
    assert wrapped.graph.vertices[:3] == ('hat1.1', 'hat1.2', 'hat1.3')
    assert wrapped.graph.neighbors('x') >= {'hat1.1', 'hat1.3'}


def test_wrapper_needs_nontrivial_core(k3, w6):
    g = Graph('G', ['x'])
    with pytest.raises(PreconditionError):
        homext_to_hom(g, PartialMapping(), complete_graph(2))
    with pytest.raises(PreconditionError):
        homext_to_hom(g, PartialMapping(), w6)


# ----------------------------------------------------------------------
# CSP
# ----------------------------------------------------------------------

CSP_TEXT = """\
csp 2 6  # two variables
constraint x1 x2
allow 1 2
allow 3 3
constraint x1 x1
allow 1 1
allow 1 2
"""


def test_parse_csp():
    csp = parse_csp(CSP_TEXT)
    assert (csp.n, csp.B, csp.q) == (2, 6, 2)
    assert csp.constraints[0].allowed == [(1, 2), (3, 3)]
    assert csp.constraints[1].distinct_variables() == [1]
    assert csp.constraints[1].assignments() == [{1: 1}]
    assert parse_csp(serialize_csp(csp)) == csp


def test_csp_solving():
    csp = parse_csp(CSP_TEXT)
    assert csp.solve() == {1: 1, 2: 2}
    assert not csp.is_satisfied_by({1: 3, 2: 3})
    with pytest.raises(CapExceededError):
        CSPInstance(9, 2).solve()


@pytest.mark.parametrize('text, line', [
    ("cspx 1 2\n", 1),
    ("csp 1 2\nconstraint y1\n", 2),
    ("csp 1 2\nconstraint x2\n", 2),
    ("csp 1 2\nallow 1\n", 2),
    ("csp 1 2\nconstraint x1\nallow 1 1\n", 3),
    ("csp 1 2\nconstraint x1\nallow 3\n", 3),
    ("csp 1 2\nconstraint x1\nallow a\n", 3),
    ("csp 1 2\nforbid 1\n", 2),
])
def test_csp_format_errors(text, line):
    with pytest.raises(CSPFormatError) as exc:
        parse_csp(text)
    assert exc.value.line == line


# ----------------------------------------------------------------------
# 归约
# ----------------------------------------------------------------------

def test_empty_constraint_gives_canonical_no_instance(k3_factors, k3, tmp_path):
    csp = CSPInstance(1, 6, [Constraint((1,), [])])
    out = reduce_csp(csp, k3_factors)
    assert out.meta['trivially_unsatisfiable']
    assert out.graph.n == 2 and out.graph.edge_count == 1
    assert not solve(out.expr, out.context.target, out.partial).answer

    files = write_reduction(out, str(tmp_path))
    assert parse_graph((tmp_path / 'G.graph').read_text(encoding='utf-8')).same_structure(out.graph)
    assert parse_mapping((tmp_path / 'G.map').read_text(encoding='utf-8')) == out.partial
    expr = parse_kexpr((tmp_path / 'G.cwexpr').read_text(encoding='utf-8'))
    assert evaluate(expr).graph.same_structure(out.graph)
    meta = json.loads((tmp_path / 'meta.json').read_text(encoding='utf-8'))
    assert meta['trivially_unsatisfiable'] is True
    assert set(files) == {'graph', 'map', 'expr', 'meta'}


def test_canonical_no_instance_as_plain_homomorphism(k3_factors):
    csp = CSPInstance(1, 6, [Constraint((1,), [])])
    out = reduce_csp(csp, k3_factors, to_hom=True)
    assert len(out.partial) == 0
    assert out.meta['width'] == 2 + 3
    assert not solve(out.expr, out.context.target).answer


def test_no_constraints_is_satisfiable(k3_factors):
    out = reduce_csp(CSPInstance(2, 6), k3_factors)
    assert out.meta['trivially_satisfiable']
    mapping = build_forward_witness(out, {1: 1, 2: 1})
    assert mapping == {'x1': '1.w'}


def test_domain_size_must_match(k3_factors):
    with pytest.raises(PreconditionError):
        reduce_csp(CSPInstance(1, 3, [Constraint((1,), [(1,)])]), k3_factors)


def test_bipartite_factor_rejected():
    k2 = complete_graph(2)
    factors = Factorization([k2, loop_graph()], {v: (v, 'w') for v in k2.vertices})
    with pytest.raises(PreconditionError):
        reduce_csp(CSPInstance(1, 2), factors)


def test_projectivity_is_recorded(k3_factors):
    out = reduce_csp(CSPInstance(1, 6, [Constraint((1,), [])]), k3_factors, projectivity_ell=2)
    assert out.meta['lower_bound']['projectivity'] == 'verified up to ell=2'
    out = reduce_csp(CSPInstance(1, 6, [Constraint((1,), [])]), k3_factors, projectivity_ell=None)
    assert out.meta['lower_bound']['projectivity'] == 'assumed'


@pytest.mark.slow
@pytest.mark.parametrize('blocks, to_hom', [(1, False), (2, False), (1, True)])
def test_reduction_fidelity(k3_factors, blocks, to_hom):
    csp = parse_csp("csp 1 6\nconstraint x1\nallow 1\n")
    out = reduce_csp(csp, k3_factors, blocks_override=blocks, to_hom=to_hom)
    assert out.forward_only
    assert out.meta['full_blocks'] == 4
    assert out.meta['lambda']['1'] == ['1']
    assert evaluate(out.expr).graph.same_structure(out.graph)
    if to_hom:
        assert len(out.partial) == 0 and len(out.hat) == 3
        if out.meta['expression_strategy'] == 'spine':
            assert out.meta['width'] <= out.meta['label_budget']['total'] + 3
    else:
        assert out.meta['width'] <= out.meta['label_budget']['total']
    witness = build_forward_witness(out, {1: 1})
    assert is_homomorphism(out.graph, out.context.target, witness)


SMALL_CSPS = [
    "csp 2 6\nconstraint x1 x2\nallow 1 2\nallow 3 3\n",
    "csp 2 6\nconstraint x1 x2\nallow 6 5\nconstraint x2\nallow 5\n",
    "csp 2 6\nconstraint x1\nallow 2\nconstraint x2\nallow 4\n",
    "csp 2 6\nconstraint x2 x1\nallow 1 1\n",
    "csp 2 6\nconstraint x1 x2\nallow 2 3\nallow 4 5\nconstraint x1 x2\nallow 4 5\n",
    "csp 2 6\nconstraint x1 x2\nallow 1 2\nconstraint x1 x2\nallow 2 1\n",
    "csp 2 6\nconstraint x1\nallow 3\nallow 6\n",
    "csp 2 6\nconstraint x1 x2\nallow 5 6\nallow 6 5\nallow 1 1\nconstraint x2\nallow 6\n",
    "csp 1 6\nconstraint x1\nallow 2\nconstraint x1\nallow 2\nallow 3\n",
    "csp 2 6\nconstraint x1 x2\n",
]


@pytest.mark.slow
@pytest.mark.parametrize('text', SMALL_CSPS)
def test_reduction_fidelity_on_small_instances(k3_factors, text):
    csp = parse_csp(text)
    out = reduce_csp(csp, k3_factors, blocks_override=len(csp.constraints))
    assert evaluate(out.expr).graph.same_structure(out.graph)
    if out.meta['trivially_unsatisfiable']:
        assert csp.solve() is None
        return
    assert out.meta['label_budget']['main'] == csp.n
    assert out.meta['width'] <= out.meta['label_budget']['total']
    gamma = csp.solve()
    if gamma is None:
        return
    witness = build_forward_witness(out, gamma)
    assert is_homomorphism(out.graph, out.context.target, witness)
    assert all(witness[v] == x for v, x in out.partial.items())


@pytest.mark.slow
def test_later_blocks_wire_to_earlier_vertices(k3_factors):
    csp = parse_csp("csp 1 6\nconstraint x1\nallow 1\n")
    out = reduce_csp(csp, k3_factors, blocks_override=2)
    first, second = out.blocks
    earlier = set(first.incidences[0].v_names)
    for u in second.incidences[0].u_names:
        assert earlier <= out.graph.neighbors(u)
    for u in first.incidences[0].u_names:
        assert not earlier & out.graph.neighbors(u)
