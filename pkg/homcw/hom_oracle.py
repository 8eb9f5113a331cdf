# -*- coding: utf-8 -*-
"""
暴力求解模块
Brute-force ground truth: homomorphism search and enumeration, cores,
prime factorization and bounded projectivity checks

搜索使用位集候选域 + 弧相容传播 + 最少剩余值（MRV）选点，
候选值按目标图顶点声明顺序尝试，因此枚举顺序是确定的。
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .config import ORACLE_CONFIG
from .errors import CapExceededError, InvalidGraphError, MappingFormatError, PreconditionError
from .graph_core import (
    Graph, strip_comment, direct_product, has_loop, induced_subgraph, is_bipartite,
    is_connected, is_loop_graph, is_ramified, loop_graph, neighborhood_mask,
)

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# 部分映射
# ----------------------------------------------------------------------

@dataclass
class PartialMapping:
    """部分映射 h': V' → V(H)"""
    image: Dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.image)

    def __contains__(self, v) -> bool:
        return v in self.image

    def __getitem__(self, v: str) -> str:
        return self.image[v]

    def get(self, v: str, default=None):
        return self.image.get(v, default)

    def items(self):
        return self.image.items()

    @property
    def domain(self) -> Set[str]:
        return set(self.image)

    def validate(self, g: Graph, h: Graph) -> None:
        for gv, hv in self.image.items():
            if gv not in g:
                raise InvalidGraphError(f"mapping source {gv!r} is not a vertex of {g.name!r}")
            if hv not in h:
                raise InvalidGraphError(f"mapping image {hv!r} is not a vertex of {h.name!r}")

    def union(self, other: 'PartialMapping') -> 'PartialMapping':
        merged = dict(self.image)
        for gv, hv in other.image.items():
            if merged.get(gv, hv) != hv:
                raise PreconditionError(f"conflicting prescriptions for {gv!r}: {merged[gv]} vs {hv}")
            merged[gv] = hv
        return PartialMapping(merged)

    def renamed(self, renaming: Dict[str, str]) -> 'PartialMapping':
        return PartialMapping({renaming.get(gv, gv): hv for gv, hv in self.image.items()})


def parse_mapping(text: str) -> PartialMapping:
    """解析 `map <g-vertex> <h-vertex>` 行"""
    image: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != 'map':
            raise MappingFormatError("expected 'map <g-vertex> <h-vertex>'", lineno)
        if parts[1] in image:
            raise MappingFormatError(f"vertex {parts[1]!r} mapped twice", lineno)
        image[parts[1]] = parts[2]
    return PartialMapping(image)


def serialize_mapping(mapping: PartialMapping) -> str:
    return ''.join(f"map {gv} {hv}\n" for gv, hv in mapping.items())


# ----------------------------------------------------------------------
# 回溯搜索
# ----------------------------------------------------------------------

class _HomSearch:
    """g → h 的回溯搜索，候选域为目标顶点下标的位集"""

    def __init__(self, g: Graph, h: Graph, partial: Optional[PartialMapping] = None):
        self.g = g
        self.h = h
        g_index = {v: i for i, v in enumerate(g.vertices)}
        self.g_nb = [sorted(g_index[u] for u in g.neighbors(v)) for v in g.vertices]
        self.h_nb = [neighborhood_mask(h, x) for x in h.vertices]
        self._support_cache: Dict[int, int] = {}

        full = (1 << h.n) - 1
        loop_mask = 0
        for i, x in enumerate(h.vertices):
            if self.h_nb[i] >> i & 1:
                loop_mask |= 1 << i
        domains = [full] * g.n
        for i, v in enumerate(g.vertices):
            if v in g.neighbors(v):
                domains[i] &= loop_mask
        if partial is not None:
            partial.validate(g, h)
            for gv, hv in partial.items():
                domains[g_index[gv]] &= 1 << h.index_of(hv)
        self.initial = domains

    def _support(self, mask: int) -> int:
        # 候选域中任一顶点的邻域并集
        cached = self._support_cache.get(mask)
        if cached is None:
            cached = 0
            rest = mask
            while rest:
                low = rest & -rest
                cached |= self.h_nb[low.bit_length() - 1]
                rest ^= low
            self._support_cache[mask] = cached
        return cached

    def _propagate(self, domains: List[int], queue: Set[int]) -> bool:
        g_nb = self.g_nb
        while queue:
            u = queue.pop()
            support = self._support(domains[u])
            for v in g_nb[u]:
                current = domains[v]
                narrowed = current & support
                if narrowed != current:
                    if not narrowed:
                        return False
                    domains[v] = narrowed
                    queue.add(v)
        return True

    @staticmethod
    def _select(domains: List[int]) -> int:
        best, best_count = -1, 0
        for i, d in enumerate(domains):
            count = d.bit_count()
            if count > 1 and (best < 0 or count < best_count):
                best, best_count = i, count
                if count == 2:
                    break
        return best

    @staticmethod
    def _values(mask: int) -> List[int]:
        # 降序，pop() 取最小下标
        return [i for i in range(mask.bit_length() - 1, -1, -1) if mask >> i & 1]

    def _mapping(self, domains: List[int]) -> Dict[str, str]:
        hv = self.h.vertices
        return {v: hv[d.bit_length() - 1] for v, d in zip(self.g.vertices, domains)}

    def solutions(self) -> Iterator[Dict[str, str]]:
        domains = list(self.initial)
        if any(d == 0 for d in domains):
            return
        if not self._propagate(domains, set(range(len(domains)))):
            return
        var = self._select(domains)
        if var < 0:
            yield self._mapping(domains)
            return
        stack = [(domains, var, self._values(domains[var]))]
        while stack:
            domains, var, values = stack[-1]
            if not values:
                stack.pop()
                continue
            x = values.pop()
            trial = list(domains)
            trial[var] = 1 << x
            if not self._propagate(trial, {var}):
                continue
            nxt = self._select(trial)
            if nxt < 0:
                yield self._mapping(trial)
                continue
            stack.append((trial, nxt, self._values(trial[nxt])))


def is_homomorphism(g: Graph, h: Graph, mapping: Dict[str, str]) -> bool:
    """逐边检查映射是否保持邻接"""
    if set(mapping) != set(g.vertices):
        return False
    for u, v in g.edges():
        if not h.has_edge(mapping[u], mapping[v]):
            return False
    return True


def find_homomorphism(g: Graph, h: Graph,
                      partial: Optional[PartialMapping] = None) -> Optional[Dict[str, str]]:
    """
    寻找 g → h 的同态（可带预设部分映射）

    Args:
        g: 输入图
        h: 目标图
        partial: 预设映射，结果必须扩展它

    Returns:
        同态映射，不存在时返回 None
    """
    for mapping in _HomSearch(g, h, partial).solutions():
        return mapping
    return None


@dataclass
class ExtensionEnumeration:
    mappings: List[Dict[str, str]]
    truncated: bool

    def __len__(self) -> int:
        return len(self.mappings)


def enumerate_extensions(g: Graph, h: Graph, partial: Optional[PartialMapping] = None,
                         cap: Optional[int] = None) -> ExtensionEnumeration:
    """按规范顺序枚举 partial 的全部扩展，最多 cap 个"""
    cap = cap or ORACLE_CONFIG['enumeration_cap']
    mappings = []
    for mapping in _HomSearch(g, h, partial).solutions():
        if len(mappings) >= cap:
            logger.warning(f"extension enumeration {g.name} -> {h.name} truncated at {cap}")
            return ExtensionEnumeration(mappings, True)
        mappings.append(mapping)
    return ExtensionEnumeration(mappings, False)


def count_colorings(g: Graph, c: int) -> int:
    """直接计数 g 的正常 c-着色（小图用）"""
    if g.n > 10:
        raise CapExceededError(f"coloring counter limited to 10 vertices, got {g.n}")
    index = {v: i for i, v in enumerate(g.vertices)}
    edges = [(index[u], index[v]) for u, v in g.edges()]
    if any(u == v for u, v in edges):
        return 0
    total = 0
    for colors in itertools.product(range(c), repeat=g.n):
        if all(colors[u] != colors[v] for u, v in edges):
            total += 1
    return total


# ----------------------------------------------------------------------
# 核与平凡性
# ----------------------------------------------------------------------

@dataclass
class CoreResult:
    graph: Graph
    retraction: Dict[str, str]


def compute_core(h: Graph, cap: Optional[int] = None) -> CoreResult:
    """
    反复寻找到 H − v 的同态，直到没有真收缩为止

    Returns:
        核（原图的导出子图）与从 h 到核的收缩映射（在核上为恒等）
    """
    cap = cap or ORACLE_CONFIG['core_vertex_cap']
    if h.n > cap:
        raise CapExceededError(f"core computation limited to {cap} vertices, got {h.n}")

    current = h
    retraction = {v: v for v in h.vertices}
    shrinking = True
    while shrinking and current.n > 1:
        shrinking = False
        for v in current.vertices:
            smaller = induced_subgraph(current, [u for u in current.vertices if u != v])
            hom = find_homomorphism(current, smaller)
            if hom is not None:
                retraction = {x: hom[retraction[x]] for x in h.vertices}
                current = smaller
                shrinking = True
                break

    # 收缩在核上是一个自同构，用其逆修正为恒等
    automorphism = {c: retraction[c] for c in current.vertices}
    inverse = {image: c for c, image in automorphism.items()}
    retraction = {x: inverse[retraction[x]] for x in h.vertices}
    core = current.renamed(f"core({h.name})")
    logger.debug(f"core of {h.name}: {core.n} of {h.n} vertices")
    return CoreResult(core, retraction)


def is_core(h: Graph) -> bool:
    return compute_core(h).graph.n == h.n


def is_trivial(h: Graph) -> bool:
    """核至多两个顶点：含自环或为二部图"""
    return has_loop(h) or is_bipartite(h)


def incomparable(g: Graph, h: Graph) -> bool:
    return find_homomorphism(g, h) is None and find_homomorphism(h, g) is None


# ----------------------------------------------------------------------
# 素因子分解
# ----------------------------------------------------------------------

@dataclass
class Factorization:
    """H ≅ H_1 × … × H_m，embedding 给出每个顶点的坐标"""
    factors: List[Graph]
    embedding: Dict[str, Tuple[str, ...]]

    @property
    def is_prime(self) -> bool:
        return len(self.factors) == 2 and is_loop_graph(self.factors[1])

    def nontrivial_factors(self) -> List[Graph]:
        return [f for f in self.factors if not is_loop_graph(f)]

    def product(self) -> Graph:
        return direct_product(self.factors)

    def verify(self, h: Graph) -> bool:
        """检查 embedding 是 h 到因子直积的同构"""
        product = self.product()
        names = {v: '.'.join(coords) for v, coords in self.embedding.items()}
        if len(set(names.values())) != h.n or set(names) != set(h.vertices) or product.n != h.n:
            return False
        if any(name not in product for name in names.values()):
            return False
        if product.edge_count != h.edge_count:
            return False
        return all(product.has_edge(names[u], names[v]) for u, v in h.edges())


def _equal_partitions(items: Sequence[str], size: int) -> Iterator[List[Tuple[str, ...]]]:
    """把 items 分成若干个大小为 size 的块（首元素固定在首块以去重）"""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for combo in itertools.combinations(rest, size - 1):
        chosen = set(combo)
        remaining = [x for x in rest if x not in chosen]
        for tail in _equal_partitions(remaining, size):
            yield [(first,) + combo] + tail


def _relation_graph(name: str, size: int, relation: Set[Tuple[int, int]]) -> Graph:
    vs = [str(i + 1) for i in range(size)]
    edges = [(vs[r], vs[s]) for r, s in relation if r <= s]
    return Graph(name, vs, edges, loops_allowed=any(r == s for r, s in relation))


def _split_once(h: Graph) -> Optional[Tuple[Graph, Graph, Dict[str, Tuple[int, int]]]]:
    arcs = [(u, v) for u in h.vertices for v in h.neighbors(u)]
    n = h.n
    for a in range(2, n):
        if n % a or n // a < a:
            continue
        b = n // a
        for blocks in _equal_partitions(list(h.vertices), b):
            for perms in itertools.product(*(itertools.permutations(block) for block in blocks[1:])):
                coord: Dict[str, Tuple[int, int]] = {v: (0, col) for col, v in enumerate(blocks[0])}
                for row, perm in enumerate(perms, 1):
                    for col, v in enumerate(perm):
                        coord[v] = (row, col)
                rel_a = {(coord[u][0], coord[v][0]) for u, v in arcs}
                rel_b = {(coord[u][1], coord[v][1]) for u, v in arcs}
                if len(rel_a) * len(rel_b) == len(arcs):
                    return (_relation_graph(f"{h.name}_a", a, rel_a),
                            _relation_graph(f"{h.name}_b", b, rel_b), coord)
    return None


def _factor_recursive(h: Graph) -> Tuple[List[Graph], Dict[str, Tuple[str, ...]]]:
    split = _split_once(h)
    if split is None:
        return [h], {v: (v,) for v in h.vertices}
    left, right, coord = split
    left_factors, left_emb = _factor_recursive(left)
    right_factors, right_emb = _factor_recursive(right)
    embedding = {v: left_emb[str(r + 1)] + right_emb[str(c + 1)] for v, (r, c) in coord.items()}
    return left_factors + right_factors, embedding


def factorize_prime(h: Graph, cap: Optional[int] = None) -> Factorization:
    """
    素因子分解（枚举双射到 [a]×[b]）

    素图返回 H × K_1^*。
    """
    cap = cap or ORACLE_CONFIG['factor_vertex_cap']
    if h.n > cap:
        raise CapExceededError(f"factorization limited to {cap} vertices, got {h.n}")
    if h.n < 2 or not is_connected(h) or is_bipartite(h):
        raise PreconditionError(f"factorization needs a connected non-bipartite graph, got {h.name!r}")

    factors, embedding = _factor_recursive(h)
    if len(factors) == 1:
        w = loop_graph()
        return Factorization([h, w], {v: (v, w.vertices[0]) for v in h.vertices})
    renamed = []
    for k, factor in enumerate(factors, 1):
        renamed.append(factor.renamed(f"{h.name}_f{k}"))
    logger.info(f"{h.name} factorizes into {len(renamed)} prime factors: "
                f"{[f.n for f in renamed]} vertices")
    return Factorization(renamed, embedding)


# ----------------------------------------------------------------------
# 投影性
# ----------------------------------------------------------------------

@dataclass
class ProjectivityResult:
    holds: bool
    ell: int
    factor_index: int
    extension_count: int
    projections: List[int] = field(default_factory=list)
    counterexample: Optional[Dict[str, str]] = None
    truncated: bool = False

    @property
    def verified_up_to_ell(self) -> Optional[int]:
        return self.ell if self.holds else None

    def to_dict(self) -> Dict:
        return {
            'holds': self.holds,
            'ell': self.ell,
            'factor_index': self.factor_index,
            'extension_count': self.extension_count,
            'projections': self.projections,
            'counterexample': self.counterexample,
            'truncated': self.truncated,
            'verified_up_to_ell': self.verified_up_to_ell,
        }


def check_projective(factorization: Factorization, i: int, ell: int,
                     cap: Optional[int] = None) -> ProjectivityResult:
    """
    有界检查 H_i-投影性：枚举 H_1×…×H_i^ℓ×…×H_m → H_i 的全部 H_i-幂等同态，
    验证每个都是某个坐标投影。只对给定的 ℓ 成立。

    Args:
        factorization: H 的因子分解
        i: 因子下标（从 0 开始）
        ell: 重复次数 ℓ ≥ 2
    """
    factors = factorization.factors
    if not 0 <= i < len(factors):
        raise PreconditionError(f"factor index {i} out of range")
    if ell < 2:
        raise PreconditionError("projectivity is checked for ell >= 2")
    target = factors[i]
    if is_trivial(target):
        raise PreconditionError(f"factor {target.name!r} is trivial")

    cap = cap or ORACLE_CONFIG['projective_vertex_cap']
    layout = factors[:i] + [target] * ell + factors[i + 1:]
    size = 1
    for f in layout:
        size *= f.n
    if size > cap:
        raise CapExceededError(f"projectivity product has {size} vertices, cap is {cap}")

    domain = direct_product(layout, name=f"{target.name}^{ell}")
    coords = list(itertools.product(*(f.vertices for f in layout)))
    diagonal = {}
    for v, combo in zip(domain.vertices, coords):
        block = combo[i:i + ell]
        if all(x == block[0] for x in block):
            diagonal[v] = block[0]

    enumeration = enumerate_extensions(domain, target, PartialMapping(diagonal))
    projections: List[int] = []
    counterexample = None
    for mapping in enumeration.mappings:
        matched = None
        for q in range(i, i + ell):
            if all(mapping[v] == combo[q] for v, combo in zip(domain.vertices, coords)):
                matched = q
                break
        if matched is None:
            counterexample = mapping
            break
        projections.append(matched)

    holds = counterexample is None and not enumeration.truncated
    logger.info(f"projectivity of {target.name} (ell={ell}): {len(enumeration)} idempotent "
                f"extensions, {'all projections' if holds else 'counterexample found'}")
    return ProjectivityResult(holds, ell, i, len(enumeration), projections,
                              counterexample, enumeration.truncated)


def check_projective_upto(factorization: Factorization, i: int, max_ell: int,
                          cap: Optional[int] = None) -> ProjectivityResult:
    """依次检查 ℓ = 2..max_ell，返回第一个失败或最后一个结果"""
    result = None
    for ell in range(2, max_ell + 1):
        result = check_projective(factorization, i, ell, cap)
        if not result.holds:
            break
    if result is None:
        raise PreconditionError("max_ell must be at least 2")
    return result


def projectivity_precheck(h: Graph) -> Dict[str, Optional[bool]]:
    """投影图（≥3 顶点）的必要条件：连通、分叉、非二部、素"""
    prime: Optional[bool] = None
    connected = is_connected(h)
    non_bipartite = not is_bipartite(h)
    if connected and non_bipartite and h.n >= 2:
        if h.n <= ORACLE_CONFIG['factor_vertex_cap']:
            prime = factorize_prime(h).is_prime
        else:
            logger.warning(f"{h.name} too large for the primality check")
    return {
        'connected': connected,
        'ramified': is_ramified(h),
        'non_bipartite': non_bipartite,
        'prime': prime,
    }


# ----------------------------------------------------------------------
# 签名集合的枚举验证
# ----------------------------------------------------------------------

def family_by_enumeration(h: Graph, cap: int = 16) -> Tuple[int, ...]:
    """对全部 2^|V| 个非空子集计算 S(T)，返回升序位集"""
    if h.n > cap:
        raise CapExceededError(f"subset enumeration limited to {cap} vertices, got {h.n}")
    neighborhoods = [neighborhood_mask(h, v) for v in h.vertices]
    found = set()
    for t_mask in range(1, 1 << h.n):
        s = -1
        for k in range(h.n):
            if t_mask >> k & 1:
                s &= neighborhoods[k]
        if s:
            found.add(s)
    return tuple(sorted(found))


def homomorphically_equivalent(g: Graph, h: Graph) -> bool:
    return find_homomorphism(g, h) is not None and find_homomorphism(h, g) is not None
