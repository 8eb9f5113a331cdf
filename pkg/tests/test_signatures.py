# -*- coding: utf-8 -*-
import random

import pytest

from homcw.graph_core import complete_graph, cycle_graph, direct_product, is_bipartite, is_connected, random_graph
from homcw.hom_oracle import family_by_enumeration
from homcw.signatures import (
    build_family, mask_vertices, signature_number, signature_of, vertex_mask,
)


def test_triangle_has_six_signature_sets(k3):
    family = build_family(k3)
    assert family.count == 6
    # 升序位集：{1},{2},{1,2},{3},{1,3},{2,3}
    assert [family.ordered_vertices(i) for i in range(6)] == [
        ['1'], ['2'], ['1', '2'], ['3'], ['1', '3'], ['2', '3']]


@pytest.mark.parametrize('c', [3, 4, 5])
def test_cliques_meet_the_loopless_bound(c):
    assert signature_number(complete_graph(c)) == 2 ** c - 2


def test_c5_and_w6(c5, w6):
    assert signature_number(c5) == 10
    assert signature_number(w6) >= 7


def test_signature_of_is_common_neighbourhood(k3):
    assert signature_of(k3, ['1', '2']) == frozenset({'3'})
    assert signature_of(k3, ['1']) == frozenset({'2', '3'})


def test_masks_round_trip(k3):
    assert mask_vertices(k3, vertex_mask(k3, ['1', '3'])) == frozenset({'1', '3'})


def test_closure_matches_subset_enumeration():
    for seed in range(40):
        h = random_graph(7, 0.45, seed=seed)
        assert build_family(h).sets == family_by_enumeration(h)


def test_dual_is_an_involution():
    for seed in range(40):
        h = random_graph(8, 0.4, seed=seed)
        family = build_family(h)
        for idx in range(family.count):
            assert family.dual(family.dual(idx)) == idx


def test_witness_is_maximal(c5):
    family = build_family(c5)
    for idx in range(family.count):
        members = mask_vertices(c5, family.witness[idx])
        assert all(family.vertex_set(idx) <= c5.neighbors(v) for v in members)


def test_signature_number_is_multiplicative(k3, c5):
    assert signature_number(direct_product([k3, k3])) == 36
    assert signature_number(direct_product([k3, c5])) == 60


def test_bounds_hold_for_cores(k3, c5):
    build_family(k3).check_bounds(is_core=True)
    build_family(c5).check_bounds(is_core=True)


def test_neighbourhood_queries(k3):
    family = build_family(k3)
    assert all(family.within_some_neighborhood(i) for i in range(family.count))
    inside = [i for i in range(family.count) if family.within_neighborhood_of(i, '1')]
    assert len(inside) == 3
    full = family.index_of(vertex_mask(k3, ['2', '3']))
    assert set(family.subset_indices(full)) == {
        family.index_of(vertex_mask(k3, s)) for s in (['2'], ['3'], ['2', '3'])}


@pytest.mark.slow
def test_family_identities_on_random_graphs():
    rng = random.Random(12)
    for seed in range(200):
        h = random_graph(rng.randint(1, 12), rng.choice([0.2, 0.4, 0.6]), seed=seed)
        family = build_family(h)
        assert family.sets == family_by_enumeration(h), seed
        # 𝒮(H) = ℳ(H)，且 S(S(A)) = A
        assert set(family.witness) == set(family.sets), seed
        for idx in range(family.count):
            assert family.dual(family.dual(idx)) == idx, seed


def _random_connected_non_bipartite(rng):
    while True:
        h = random_graph(rng.randint(3, 5), 0.6, seed=rng.randrange(10 ** 6))
        if is_connected(h) and not is_bipartite(h):
            return h


@pytest.mark.slow
def test_signature_family_of_a_product():
    rng = random.Random(44)
    for _ in range(50):
        h1 = _random_connected_non_bipartite(rng)
        h2 = _random_connected_non_bipartite(rng)
        product = direct_product([h1, h2])
        f1, f2, fp = build_family(h1), build_family(h2), build_family(product)
        assert fp.count == f1.count * f2.count
        expected = {
            frozenset(f"{a}.{b}" for a in left for b in right)
            for left in f1.as_vertex_sets() for right in f2.as_vertex_sets()
        }
        assert set(fp.as_vertex_sets()) == expected
