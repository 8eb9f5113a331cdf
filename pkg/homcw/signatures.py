# -*- coding: utf-8 -*-
"""
签名集合模块
Signature sets S(T), the family 𝒮(H), maximal witnesses M(S) and s(H)

签名集合用位集表示，位序即目标图的顶点声明顺序。
"""

import logging
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Tuple

from .config import GRAPH_CONFIG
from .errors import CapExceededError, InvalidGraphError, PreconditionError
from .graph_core import Graph, has_loop, neighborhood_mask

logger = logging.getLogger(__name__)


def vertex_mask(h: Graph, vertices: Iterable[str]) -> int:
    mask = 0
    for v in vertices:
        if v not in h:
            raise InvalidGraphError(f"unknown vertex {v!r} in graph {h.name!r}")
        mask |= 1 << h.index_of(v)
    return mask


def mask_vertices(h: Graph, mask: int) -> FrozenSet[str]:
    return frozenset(v for i, v in enumerate(h.vertices) if mask >> i & 1)


def signature_mask(neighborhoods: List[int], t_mask: int) -> int:
    """S(T) 的位集形式：T 中各顶点邻域的交"""
    if t_mask == 0:
        raise PreconditionError("signature of an empty vertex set is undefined")
    result = -1
    i = 0
    while t_mask:
        if t_mask & 1:
            result &= neighborhoods[i]
        t_mask >>= 1
        i += 1
    return result


def signature_of(h: Graph, t: Iterable[str]) -> FrozenSet[str]:
    """
    计算 S(T) = ⋂_{t∈T} N(t)

    Args:
        h: 目标图
        t: 非空顶点集合

    Returns:
        邻域交集（可能为空）
    """
    t_mask = vertex_mask(h, t)
    neighborhoods = [neighborhood_mask(h, v) for v in h.vertices]
    return mask_vertices(h, signature_mask(neighborhoods, t_mask))


class SignatureFamily:
    """𝒮(H)：按位集数值升序排列的签名集合族"""

    def __init__(self, target: Graph, sets: Tuple[int, ...], neighborhoods: Tuple[int, ...]):
        self.target = target
        self.sets = sets
        self.neighborhoods = neighborhoods
        self.index: Dict[int, int] = {mask: i for i, mask in enumerate(sets)}
        self.witness: Tuple[int, ...] = tuple(self._maximal_witness(mask) for mask in sets)

    @property
    def count(self) -> int:
        return len(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def _maximal_witness(self, mask: int) -> int:
        # M(S) = {v : S ⊆ N(v)}
        result = 0
        for i, nb in enumerate(self.neighborhoods):
            if mask & ~nb == 0:
                result |= 1 << i
        return result

    def index_of(self, mask: int) -> int:
        try:
            return self.index[mask]
        except KeyError:
            raise InvalidGraphError(f"{sorted(mask_vertices(self.target, mask))} is not a signature set") from None

    def vertex_set(self, idx: int) -> FrozenSet[str]:
        return mask_vertices(self.target, self.sets[idx])

    def as_vertex_sets(self) -> List[FrozenSet[str]]:
        return [self.vertex_set(i) for i in range(len(self.sets))]

    def ordered_vertices(self, idx: int) -> List[str]:
        """集合中的顶点，按声明顺序"""
        mask = self.sets[idx]
        return [v for i, v in enumerate(self.target.vertices) if mask >> i & 1]

    def signature(self, t_mask: int) -> int:
        return signature_mask(list(self.neighborhoods), t_mask)

    def dual(self, idx: int) -> int:
        """S(S) 在族中的下标；S(S) = M(S)"""
        return self.index[self.witness[idx]]

    def subset_indices(self, idx: int) -> Tuple[int, ...]:
        return _subset_indices(self.sets, self.sets[idx])

    def within_some_neighborhood(self, idx: int) -> bool:
        mask = self.sets[idx]
        return any(mask & ~nb == 0 for nb in self.neighborhoods)

    def within_neighborhood_of(self, idx: int, vertex: str) -> bool:
        nb = self.neighborhoods[self.target.index_of(vertex)]
        return self.sets[idx] & ~nb == 0

    def check_bounds(self, is_core: bool = False) -> None:
        """断言计数界：无环图 s(H) ≤ 2^ν − 2；非 K1 的核 s(H) ≥ ν"""
        nu = self.target.n
        if not has_loop(self.target):
            if self.count > 2 ** nu - 2:
                raise PreconditionError(f"s(H)={self.count} exceeds 2^{nu}-2")
            full = (1 << nu) - 1
            if full in self.index or 0 in self.index:
                raise PreconditionError("signature family contains V(H) or the empty set")
        if is_core and nu > 1 and self.count < nu:
            raise PreconditionError(f"core with s(H)={self.count} < |V(H)|={nu}")

    def __repr__(self) -> str:
        return f"SignatureFamily({self.target.name!r}, s={self.count})"


@lru_cache(maxsize=None)
def _subset_indices(sets: Tuple[int, ...], mask: int) -> Tuple[int, ...]:
    return tuple(i for i, s in enumerate(sets) if s & ~mask == 0)


def build_family(h: Graph) -> SignatureFamily:
    """
    构造 𝒮(H)：从各顶点邻域出发，对交运算求闭包

    S(A ∪ B) = S(A) ∩ S(B)，因此闭包恰好给出全部非空签名集合，
    不必枚举 2^|V| 个子集。
    """
    cap = GRAPH_CONFIG['dp_target_vertex_cap']
    if h.n > cap:
        raise CapExceededError(f"signature family limited to {cap} target vertices, got {h.n}")

    neighborhoods = tuple(neighborhood_mask(h, v) for v in h.vertices)
    seeds = {nb for nb in neighborhoods if nb}
    seen = set(seeds)
    frontier = list(seeds)
    while frontier:
        next_frontier = []
        for s in frontier:
            for nb in seeds:
                t = s & nb
                if t and t not in seen:
                    seen.add(t)
                    next_frontier.append(t)
        frontier = next_frontier

    family = SignatureFamily(h, tuple(sorted(seen)), neighborhoods)
    logger.debug(f"signature family of {h.name}: s(H) = {family.count}")
    return family


def signature_number(h: Graph) -> int:
    return build_family(h).count
