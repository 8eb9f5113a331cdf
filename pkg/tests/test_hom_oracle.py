# -*- coding: utf-8 -*-
import pytest

from homcw.errors import CapExceededError, MappingFormatError, PreconditionError
from homcw.graph_core import (
    are_isomorphic, complete_graph, cycle_graph, direct_product, is_loop_graph, random_graph,
)
from homcw.hom_oracle import (
    PartialMapping, check_projective, check_projective_upto, compute_core, count_colorings,
    enumerate_extensions, factorize_prime, family_by_enumeration, find_homomorphism,
    homomorphically_equivalent, incomparable, is_core, is_homomorphism, is_trivial,
    parse_mapping, projectivity_precheck, serialize_mapping,
)
from homcw.signatures import build_family


def test_find_homomorphism_basic(k3, c5):
    mapping = find_homomorphism(c5, k3)
    assert mapping is not None and is_homomorphism(c5, k3, mapping)
    assert find_homomorphism(complete_graph(4), k3) is None


def test_partial_mapping_is_respected(k3):
    path = complete_graph(2)
    assert find_homomorphism(path, k3, PartialMapping({'1': '2', '2': '2'})) is None
    mapping = find_homomorphism(path, k3, PartialMapping({'1': '3'}))
    assert mapping['1'] == '3' and mapping['2'] != '3'


def test_enumeration_is_complete_and_ordered(k3):
    result = enumerate_extensions(k3, k3)
    assert len(result) == 6 and not result.truncated
    assert result.mappings[0] == {'1': '1', '2': '2', '3': '3'}
    capped = enumerate_extensions(k3, k3, cap=2)
    assert len(capped) == 2 and capped.truncated


def test_counting_agrees_with_enumeration(k3, c5):
    assert count_colorings(c5, 3) == 30
    assert count_colorings(c5, 3) == len(enumerate_extensions(c5, k3))
    with pytest.raises(CapExceededError):
        count_colorings(cycle_graph(11), 3)


def test_mapping_files():
    mapping = parse_mapping("map a 1\n# comment\nmap b 2\n")
    assert dict(mapping.items()) == {'a': '1', 'b': '2'}
    assert parse_mapping(serialize_mapping(mapping)) == mapping
    with pytest.raises(MappingFormatError) as exc:
        parse_mapping("map a 1\nmap a 2\n")
    assert exc.value.line == 2


def test_partial_mapping_union_conflicts():
    left = PartialMapping({'a': '1'})
    assert left.union(PartialMapping({'b': '2'})).domain == {'a', 'b'}
    with pytest.raises(PreconditionError):
        left.union(PartialMapping({'a': '2'}))


def test_core_of_wheel_is_triangle(k3, w6):
    result = compute_core(w6)
    assert result.graph.n == 3
    assert are_isomorphic(result.graph, k3)
    assert is_homomorphism(w6, result.graph, result.retraction)
    assert all(result.retraction[v] == v for v in result.graph.vertices)


def test_cores_and_triviality(k3, c5, w6):
    assert is_core(k3) and is_core(c5)
    assert not is_core(w6)
    assert compute_core(cycle_graph(6)).graph.n == 2
    assert is_trivial(cycle_graph(6))
    assert not is_trivial(k3)
    assert homomorphically_equivalent(w6, k3)
    assert not incomparable(c5, k3)


def test_prime_graph_factorizes_with_loop_graph(k3):
    factorization = factorize_prime(k3)
    assert factorization.is_prime
    assert factorization.factors[0] is k3 and is_loop_graph(factorization.factors[1])
    assert factorization.embedding['2'] == ('2', 'w')


@pytest.mark.parametrize('left, right', [
    ('K3', 'K3'), ('K3', 'L'), ('K4', 'L'), ('C5', 'L'), ('L', 'L'),
])
def test_factorization_recovers_factors(left, right, k3, c5, loop_edge):
    pool = {'K3': k3, 'K4': complete_graph(4), 'C5': c5, 'L': loop_edge}
    product = direct_product([pool[left], pool[right]])
    factorization = factorize_prime(product)
    assert not factorization.is_prime
    assert factorization.verify(product)
    found = list(factorization.factors)
    for expected in (pool[left], pool[right]):
        match = next(f for f in found if are_isomorphic(f, expected))
        found.remove(match)
    assert not found


def test_factorization_preconditions():
    with pytest.raises(PreconditionError):
        factorize_prime(cycle_graph(6))
    with pytest.raises(CapExceededError):
        factorize_prime(complete_graph(11))


def test_triangle_is_projective(k3):
    factorization = factorize_prime(k3)
    square = check_projective(factorization, 0, 2)
    assert square.holds and square.extension_count == 2
    assert sorted(square.projections) == [0, 1]
    cube = check_projective(factorization, 0, 3)
    assert cube.holds and cube.extension_count == 3
    assert check_projective_upto(factorization, 0, 3).verified_up_to_ell == 3


def test_c5_is_projective(c5):
    result = check_projective(factorize_prime(c5), 0, 2)
    assert result.holds and result.extension_count == 2


def test_projectivity_precheck(k3):
    assert projectivity_precheck(k3) == {
        'connected': True, 'ramified': True, 'non_bipartite': True, 'prime': True}
    assert projectivity_precheck(cycle_graph(6))['non_bipartite'] is False


def test_oracle_agrees_with_counting_on_random_graphs(k3):
    for seed in range(20):
        g = random_graph(8, 0.35, seed=seed)
        assert (find_homomorphism(g, k3) is not None) == (count_colorings(g, 3) > 0)


def test_enumerated_family_matches_closure(k3, c5):
    assert family_by_enumeration(k3) == build_family(k3).sets
    assert family_by_enumeration(c5) == build_family(c5).sets
