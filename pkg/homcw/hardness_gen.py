# -*- coding: utf-8 -*-
"""
下界实例生成模块
Lower-bound artifacts: S-gadgets, implication and or-gadgets, the
extension-to-homomorphism wrapper and the CSP reduction with an emitted
clique-width expression

目标图 H 视为 H_1 × W。gadget 内部顶点的名字是积顶点坐标，
嵌入到实例时加上前缀 `<prefix>#`。
"""

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .config import GEN_CONFIG, OUTPUT_CONFIG
from .cwexpr import (
    DisjointUnion, Intro, Join, KExpression, Relabel, print_kexpr, trivial_expression, union_all,
)
from .errors import (
    CapExceededError, ConstructionError, CSPFormatError, PreconditionError,
)
from .graph_core import (
    Graph, direct_product, is_loop_graph, loop_graph, serialize_graph, strip_comment,
)
from .hom_oracle import (
    Factorization, PartialMapping, check_projective, enumerate_extensions, find_homomorphism,
    is_core, is_homomorphism, is_trivial, serialize_mapping,
)
from .signatures import SignatureFamily, build_family

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# 目标图 H = H_1 × W
# ----------------------------------------------------------------------

class SplitTarget:
    """把目标图顶点拆成 (H_1 坐标, W 坐标)"""

    def __init__(self, h1: Graph, w_graph: Graph, target: Graph, pairs: Dict[Tuple[str, str], str]):
        self.h1 = h1
        self.w_graph = w_graph
        self.target = target
        self._join = pairs
        self._split = {v: pair for pair, v in pairs.items()}

    def join(self, x: str, y: str) -> str:
        return self._join[(x, y)]

    def split(self, v: str) -> Tuple[str, str]:
        return self._split[v]

    def h1_of(self, v: str) -> str:
        return self._split[v][0]

    @classmethod
    def from_factorization(cls, factorization: Factorization, index: int = 0,
                           target: Optional[Graph] = None) -> 'SplitTarget':
        factors = factorization.factors
        if not 0 <= index < len(factors):
            raise PreconditionError(f"factor index {index} out of range")
        h1 = factors[index]
        if is_loop_graph(h1):
            raise PreconditionError("the chosen factor is K1*")
        rest = [k for k, f in enumerate(factors) if k != index and not is_loop_graph(f)]
        if not rest:
            w_graph = loop_graph()
        elif len(rest) == 1:
            w_graph = factors[rest[0]]
        else:
            w_graph = direct_product([factors[k] for k in rest], name='W')

        def w_coord(coords: Tuple[str, ...]) -> str:
            return '.'.join(coords[k] for k in rest) if rest else w_graph.vertices[0]

        if target is None:
            target = direct_product([h1, w_graph])
            names = iter(target.vertices)
            pairs = {(x, y): next(names) for x in h1.vertices for y in w_graph.vertices}
        else:
            pairs = {}
            for v in target.vertices:
                coords = factorization.embedding[v]
                pairs[(coords[index], w_coord(coords))] = v
        return cls(h1, w_graph, target, pairs)


def prime_split(h: Graph) -> SplitTarget:
    """素目标 H = H × K_1^*"""
    w = loop_graph()
    factorization = Factorization([h, w], {v: (v, w.vertices[0]) for v in h.vertices})
    return SplitTarget.from_factorization(factorization, 0, h)


# ----------------------------------------------------------------------
# gadget
# ----------------------------------------------------------------------

Pair = Tuple[str, str]


@dataclass
class BaseGadget:
    """(S,w,w')-gadget 的原型：F = H_1^ℓ × W，对角顶点预设"""
    graph: Graph
    coords: Dict[str, Tuple[str, ...]]
    pairs: Tuple[Pair, ...]
    w: str
    w2: str
    p: str
    q: str
    partial: Dict[str, str]

    @property
    def interior(self) -> List[str]:
        return [v for v in self.graph.vertices if v not in (self.p, self.q)]

    def projection(self, k: int, ctx: SplitTarget) -> Dict[str, str]:
        """第 k 个坐标投影 h(x) = (π_k(x), π_W(x))"""
        return {v: ctx.join(c[k], c[-1]) for v, c in self.coords.items()}


@dataclass
class GadgetInstance:
    graph: Graph
    partial: PartialMapping
    kind: str
    context: SplitTarget
    p: Optional[str] = None
    q: Optional[str] = None
    roots: List[str] = field(default_factory=list)
    meta: Dict = field(default_factory=dict)


class GadgetFactory:
    """按 (S, w, w') 缓存 gadget 原型"""

    def __init__(self, ctx: SplitTarget):
        self.ctx = ctx
        self._cache: Dict[Tuple, BaseGadget] = {}

    def s_gadget(self, pairs: Sequence[Pair], w: str, w2: str) -> BaseGadget:
        pairs = tuple(pairs)
        key = (pairs, w, w2)
        if key in self._cache:
            return self._cache[key]
        ctx = self.ctx
        if not pairs:
            raise PreconditionError("S-gadget needs a nonempty relation S")
        for s1, s2 in pairs:
            if s1 not in ctx.h1 or s2 not in ctx.h1:
                raise PreconditionError(f"pair ({s1},{s2}) is not in V(H1)^2")
        for y in (w, w2):
            if y not in ctx.w_graph:
                raise PreconditionError(f"{y!r} is not a vertex of W")

        ell = len(pairs)
        layout = [ctx.h1] * ell + [ctx.w_graph]
        graph = direct_product(layout, name=f"F{ell}")
        combos = itertools.product(*(f.vertices for f in layout))
        coords = dict(zip(graph.vertices, combos))
        by_coords = {c: v for v, c in coords.items()}
        p = by_coords[tuple(s[0] for s in pairs) + (w,)]
        q = by_coords[tuple(s[1] for s in pairs) + (w2,)]
        partial = {}
        for v, c in coords.items():
            if all(x == c[0] for x in c[:ell]):
                partial[v] = ctx.join(c[0], c[-1])
        gadget = BaseGadget(graph, coords, pairs, w, w2, p, q, partial)
        self._cache[key] = gadget
        logger.debug(f"S-gadget with |S|={ell}: {graph.n} vertices, {graph.edge_count} edges")
        return gadget


@dataclass
class _Placement:
    """gadget 原型在实例中的一个副本：p、q 与给定顶点重合"""
    base: BaseGadget
    prefix: str
    p_name: str
    q_name: str

    def name(self, v: str) -> str:
        if v == self.base.p:
            return self.p_name
        if v == self.base.q:
            return self.q_name
        return f"{self.prefix}#{v}"

    def interior_names(self) -> List[str]:
        return [self.name(v) for v in self.base.interior]

    def edges(self) -> List[Pair]:
        return [(self.name(u), self.name(v)) for u, v in self.base.graph.edges()]

    def partial(self) -> Dict[str, str]:
        return {self.name(v): image for v, image in self.base.partial.items()}


def _place(base: BaseGadget, prefix: str, p_name: str, q_name: str) -> _Placement:
    if base.p == base.q and p_name != q_name:
        raise ConstructionError("gadget has p = q but is attached to two distinct vertices")
    return _Placement(base, prefix, p_name, q_name)


def implication_pairs(h1: Graph, a: str, b: str) -> List[Pair]:
    """S_{a,b} = {(a',b') : a' ≠ a} ∪ {(a,b)}"""
    pairs = [(x, y) for x in h1.vertices if x != a for y in h1.vertices]
    pairs.append((a, b))
    return pairs


def or_chain_pairs(t: int, a: str, b: str, c: str) -> List[List[Pair]]:
    """t-或 gadget 链上每一段的关系"""
    if t == 2:
        return [[(a, b), (b, a), (a, a)]]
    left = [(a, a), (a, b), (a, c), (c, a), (c, c)]
    middle = [(x, y) for x in (a, b, c) for y in (a, b, c) if (x, y) not in ((b, c), (c, b))]
    right = [(a, a), (a, b), (b, a), (b, b), (c, a)]
    return [left] + [middle] * (t - 3) + [right]


@dataclass
class _OrStructure:
    roots: List[str]
    links: List[_Placement]
    vertices: List[str]
    edges: List[Pair]
    partial: Dict[str, str]


def _build_or(factory: GadgetFactory, t: int, a: str, b: str, c: str, w: str, prefix: str) -> _OrStructure:
    if t < 1:
        raise PreconditionError("or-gadget needs t >= 1")
    if len({a, b, c}) != 3:
        raise PreconditionError("or-gadget needs three distinct vertices a, b, c")
    sep = '.' if prefix else ''
    roots = [f"{prefix}{sep}r{k}" for k in range(1, t + 1)]
    if t == 1:
        return _OrStructure(roots, [], list(roots), [], {roots[0]: factory.ctx.join(a, w)})
    links = []
    vertices = list(roots)
    edges: List[Pair] = []
    partial: Dict[str, str] = {}
    for k, pairs in enumerate(or_chain_pairs(t, a, b, c), 1):
        base = factory.s_gadget(pairs, w, w)
        link = _place(base, f"{prefix}{sep}g{k}", roots[k - 1], roots[k])
        links.append(link)
        vertices.extend(link.interior_names())
        edges.extend(link.edges())
        partial.update(link.partial())
    return _OrStructure(roots, links, vertices, edges, partial)


def _graph_from(name: str, vertices: Sequence[str], edges: Sequence[Pair]) -> Graph:
    adjacency: Dict[str, Set[str]] = {v: set() for v in vertices}
    for u, v in edges:
        adjacency[u].add(v)
        adjacency[v].add(u)
    return Graph.from_adjacency(name, vertices, adjacency)


def s_gadget(factorization: Factorization, pairs: Sequence[Pair], w: str, w2: str,
             factor_index: int = 0, target: Optional[Graph] = None) -> GadgetInstance:
    """
    (S,w,w')-gadget：F = H_1^|S| × W，对角顶点 (x,…,x,y) ↦ (x,y)

    Args:
        factorization: H 的因子分解
        pairs: 关系 S（H_1 顶点对的列表）
        w, w2: W 中的顶点
    """
    ctx = SplitTarget.from_factorization(factorization, factor_index, target)
    base = GadgetFactory(ctx).s_gadget(pairs, w, w2)
    return GadgetInstance(base.graph, PartialMapping(dict(base.partial)), 's', ctx, base.p, base.q,
                          meta={'S': [list(s) for s in base.pairs], 'w': w, 'w2': w2,
                                'projectivity': 'assumed'})


def implication_gadget(factorization: Factorization, a: str, b: str, w: str, w2: str,
                       factor_index: int = 0, target: Optional[Graph] = None) -> GadgetInstance:
    """((a,b),w,w')-蕴含 gadget：h_1(p) = a 时 h_1(q) = b"""
    ctx = SplitTarget.from_factorization(factorization, factor_index, target)
    for x in (a, b):
        if x not in ctx.h1:
            raise PreconditionError(f"{x!r} is not a vertex of H1")
    gadget = s_gadget(factorization, implication_pairs(ctx.h1, a, b), w, w2, factor_index, target)
    gadget.kind = 'implication'
    gadget.meta.update({'a': a, 'b': b, 'reading': f"h1(p) = {a} implies h1(q) = {b}"})
    return gadget


def or_gadget(factorization: Factorization, a: str, b: str, c: str, w: str, t: int,
              factor_index: int = 0, target: Optional[Graph] = None) -> GadgetInstance:
    """t-或 gadget，定义域 ((a,b,c),w)"""
    ctx = SplitTarget.from_factorization(factorization, factor_index, target)
    structure = _build_or(GadgetFactory(ctx), t, a, b, c, w, '')
    graph = _graph_from(f"or{t}", structure.vertices, structure.edges)
    return GadgetInstance(graph, PartialMapping(structure.partial), 'or', ctx,
                          roots=structure.roots,
                          meta={'t': t, 'a': a, 'b': b, 'c': c, 'w': w})


def _with_prescriptions(partial: PartialMapping, extra: Sequence[Tuple[str, str]]) -> Optional[PartialMapping]:
    merged = dict(partial.image)
    # p = q 时两条预设落在同一顶点
    for v, image in extra:
        if merged.get(v, image) != image:
            return None
        merged[v] = image
    return PartialMapping(merged)


def verify_s_gadget(gadget: GadgetInstance, pairs: Optional[Sequence[Pair]] = None,
                    method: str = 'pairs') -> Dict:
    """
    检查 S1/S2

    method='pairs' 对每个不在 S 中的像对单独求解；method='enumerate' 枚举全部扩展。
    """
    ctx = gadget.context
    relation = [tuple(s) for s in (pairs or gadget.meta['S'])]
    allowed = set(relation)
    w, w2 = gadget.meta['w'], gadget.meta['w2']
    result = {'s1': True, 's2': True, 'method': method, 'violations': []}

    if method == 'enumerate':
        enumeration = enumerate_extensions(gadget.graph, ctx.target, gadget.partial)
        observed = sorted({(ctx.h1_of(m[gadget.p]), ctx.h1_of(m[gadget.q])) for m in enumeration.mappings})
        result.update({'extension_count': len(enumeration), 'observed': [list(o) for o in observed],
                       'truncated': enumeration.truncated})
        bad = [o for o in observed if o not in allowed]
        if bad:
            result['s1'] = False
            result['violations'].extend([list(o) for o in bad])
    else:
        for x in ctx.h1.vertices:
            for y in ctx.h1.vertices:
                if (x, y) in allowed:
                    continue
                for u in ctx.w_graph.vertices:
                    for u2 in ctx.w_graph.vertices:
                        trial = _with_prescriptions(gadget.partial, [(gadget.p, ctx.join(x, u)),
                                                                     (gadget.q, ctx.join(y, u2))])
                        if trial is not None and find_homomorphism(gadget.graph, ctx.target, trial) is not None:
                            result['s1'] = False
                            result['violations'].append([x, y])

    for s1, s2 in relation:
        trial = _with_prescriptions(gadget.partial, [(gadget.p, ctx.join(s1, w)), (gadget.q, ctx.join(s2, w2))])
        if trial is None or find_homomorphism(gadget.graph, ctx.target, trial) is None:
            result['s2'] = False
            result['violations'].append(['missing', s1, s2])
    return result


def verify_or_gadget(gadget: GadgetInstance) -> Dict:
    """用全部扩展检查 O1/O2"""
    ctx = gadget.context
    a, b, c, w = (gadget.meta[k] for k in ('a', 'b', 'c', 'w'))
    enumeration = enumerate_extensions(gadget.graph, ctx.target, gadget.partial)
    roots = gadget.roots
    o1 = True
    realized = set()
    for mapping in enumeration.mappings:
        firsts = [ctx.h1_of(mapping[r]) for r in roots]
        if any(x not in (a, b, c) for x in firsts) or a not in firsts:
            o1 = False
        for k, r in enumerate(roots):
            others_ok = all(mapping[u] in (ctx.join(b, w), ctx.join(c, w)) for u in roots if u != r)
            if mapping[r] == ctx.join(a, w) and others_ok:
                realized.add(k)
    return {
        'o1': o1 and len(enumeration) > 0,
        'o2': realized == set(range(len(roots))),
        'extension_count': len(enumeration),
        'truncated': enumeration.truncated,
    }


# ----------------------------------------------------------------------
# 扩展问题 → 同态问题
# ----------------------------------------------------------------------

_MIXED = object()


@dataclass
class WrappedInstance:
    graph: Graph
    expr: Optional[KExpression]
    hat: Dict[str, str]
    strategy: str


def _free_prefix(g: Graph) -> str:
    base = GEN_CONFIG['hat_prefix']
    prefix = base
    k = 0
    while any(v.startswith(prefix + '.') for v in g.vertices):
        k += 1
        prefix = f"{base}{k}"
    if prefix != base:
        logger.warning(f"vertex names collide with '{base}.*', using prefix '{prefix}'")
    return prefix


def _merge_requirements(r1, r2):
    if r1 is _MIXED or r2 is _MIXED or r1 != r2:
        return _MIXED
    return r1


def _merge_summary(big: Dict[int, list], small: Dict[int, list]) -> Dict[int, list]:
    if len(big) < len(small):
        big, small = small, big
    for label, entry in small.items():
        mine = big.get(label)
        if mine is None:
            big[label] = entry
        else:
            big[label] = [_merge_requirements(mine[0], entry[0]), mine[1] + entry[1]]
    return big


def _wrap_expression(expr: KExpression, partial: PartialMapping, h: Graph,
                     hat: Dict[str, str]) -> Optional[KExpression]:
    """
    把 Ĥ 放在最左叶子，沿最左路径在标签类同质时插入预设边

    无法插入（某个待连接的类混入了需求不同的顶点）时返回 None。
    """
    top = max(expr.labels)
    hat_label = {x: top + 1 + k for k, x in enumerate(h.vertices)}
    hat_node = union_all([Intro(hat_label[x], hat[x]) for x in h.vertices])
    for x, y in h.edges():
        hat_node = Join(hat_label[x], hat_label[y], hat_node)

    spine = set()
    node = expr.root
    while True:
        spine.add(id(node))
        if isinstance(node, Intro):
            break
        node = node.left if isinstance(node, DisjointUnion) else node.child

    empty = frozenset()
    summaries: List[Optional[Dict[int, list]]] = [None] * len(expr.nodes)
    built: List[object] = [None] * len(expr.nodes)
    for i, node in enumerate(expr.nodes):
        kids = expr.children[i]
        on_spine = id(node) in spine
        touched: Tuple[int, ...] = ()
        if isinstance(node, Intro):
            v = node.vertex
            need = frozenset(h.neighbors(partial[v])) if v in partial else empty
            summary = {node.label: [need, 1 if need else 0]}
            new = DisjointUnion(hat_node, node) if on_spine else node
            touched = (node.label,)
        elif isinstance(node, DisjointUnion):
            right = summaries[kids[1]]
            touched = tuple(right)
            summary = _merge_summary(summaries[kids[0]], right)
            new = DisjointUnion(built[kids[0]], node.right) if on_spine else node
        elif isinstance(node, Relabel):
            summary = summaries[kids[0]]
            moved = summary.pop(node.src, None)
            if moved is not None:
                summary = _merge_summary(summary, {node.dst: moved})
                touched = (node.dst,)
            new = Relabel(node.src, node.dst, built[kids[0]]) if on_spine else node
        else:
            summary = summaries[kids[0]]
            new = Join(node.a, node.b, built[kids[0]]) if on_spine else node
        for k in kids:
            summaries[k] = None
            built[k] = None

        if on_spine:
            for label in touched:
                entry = summary.get(label)
                if entry is None or entry[1] == 0:
                    continue
                if entry[0] is _MIXED:
                    return None
                for x in sorted(entry[0], key=h.index_of):
                    new = Join(label, hat_label[x], new)
                entry[1] = 0
        summaries[i] = summary
        built[i] = new

    if any(entry[1] for entry in summaries[-1].values()):
        return None
    return KExpression(built[-1], validate=False)


def homext_to_hom(g: Graph, partial: PartialMapping, h: Graph,
                  expr: Optional[KExpression] = None, check_core: bool = True) -> WrappedInstance:
    """
    扩展实例 (G', h') → 同态实例 G：G' ⊎ Ĥ，并把 v ∈ V' 连到 N_Ĥ(h'(v))

    Args:
        g: G'
        partial: h'
        h: 非平凡核
        expr: G' 的表达式（可选），输出宽度为原宽度 + |V(H)|
    """
    if is_trivial(h):
        raise PreconditionError(f"target {h.name!r} is trivial")
    if check_core and not is_core(h):
        raise PreconditionError(f"target {h.name!r} is not a core")
    partial.validate(g, h)

    prefix = _free_prefix(g)
    hat = {x: f"{prefix}.{x}" for x in h.vertices}
    order = [hat[x] for x in h.vertices] + list(g.vertices)
    adjacency: Dict[str, Set[str]] = {hat[x]: {hat[y] for y in h.neighbors(x)} for x in h.vertices}
    for v in g.vertices:
        adjacency[v] = set(g.neighbors(v))
    for v, x in partial.items():
        for y in h.neighbors(x):
            adjacency[v].add(hat[y])
            adjacency[hat[y]].add(v)
    graph = Graph.from_adjacency(f"{g.name}+{h.name}", order, adjacency)

    if expr is None:
        return WrappedInstance(graph, None, hat, 'none')
    wrapped = _wrap_expression(expr, partial, h, hat)
    if wrapped is None:
        logger.warning("prescribed vertices never form a homogeneous class, using a trivial expression")
        return WrappedInstance(graph, trivial_expression(graph), hat, 'trivial-fallback')
    logger.info(f"wrapped expression width {wrapped.width} (input width {expr.width})")
    return WrappedInstance(graph, wrapped, hat, 'spine')


# ----------------------------------------------------------------------
# CSP
# ----------------------------------------------------------------------

@dataclass
class Constraint:
    variables: Tuple[int, ...]
    allowed: List[Tuple[int, ...]]

    @property
    def arity(self) -> int:
        return len(self.variables)

    def distinct_variables(self) -> List[int]:
        return list(dict.fromkeys(self.variables))

    def assignments(self) -> List[Dict[int, int]]:
        """P(c) 作为 X_c → [B] 的赋值；与重复变量矛盾的元组被丢弃"""
        result = []
        seen = set()
        for row in self.allowed:
            assignment: Dict[int, int] = {}
            ok = True
            for x, value in zip(self.variables, row):
                if assignment.setdefault(x, value) != value:
                    ok = False
                    break
            key = tuple(sorted(assignment.items()))
            if ok and key not in seen:
                seen.add(key)
                result.append(assignment)
        return result


@dataclass
class CSPInstance:
    n: int
    B: int
    constraints: List[Constraint] = field(default_factory=list)

    @property
    def q(self) -> int:
        return max((c.arity for c in self.constraints), default=0)

    def is_satisfied_by(self, gamma: Dict[int, int]) -> bool:
        for c in self.constraints:
            if tuple(gamma.get(x) for x in c.variables) not in set(c.allowed):
                return False
        return True

    def solve(self, cap: int = 8) -> Optional[Dict[int, int]]:
        """暴力求解（只用于小实例）"""
        if self.n > cap:
            raise CapExceededError(f"brute-force CSP solving limited to {cap} variables")
        for values in itertools.product(range(1, self.B + 1), repeat=self.n):
            gamma = {i + 1: v for i, v in enumerate(values)}
            if self.is_satisfied_by(gamma):
                return gamma
        return None


def parse_csp(text: str) -> CSPInstance:
    """
    解析 CSP 文件：`csp <n> <B>`，`constraint x<i> …`，`allow v …`
    """
    instance: Optional[CSPInstance] = None
    current: Optional[Constraint] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if not line:
            continue
        parts = line.split()
        if instance is None:
            if len(parts) != 3 or parts[0] != 'csp' or not parts[1].isdigit() or not parts[2].isdigit():
                raise CSPFormatError("expected header 'csp <n> <B>'", lineno)
            instance = CSPInstance(int(parts[1]), int(parts[2]))
            continue
        if parts[0] == 'constraint':
            variables = []
            for token in parts[1:]:
                if not token.startswith('x') or not token[1:].isdigit():
                    raise CSPFormatError(f"invalid variable {token!r}", lineno)
                index = int(token[1:])
                if not 1 <= index <= instance.n:
                    raise CSPFormatError(f"variable {token} out of range 1..{instance.n}", lineno)
                variables.append(index)
            if not variables:
                raise CSPFormatError("constraint without variables", lineno)
            current = Constraint(tuple(variables), [])
            instance.constraints.append(current)
        elif parts[0] == 'allow':
            if current is None:
                raise CSPFormatError("'allow' before any constraint", lineno)
            if len(parts) - 1 != current.arity:
                raise CSPFormatError(f"expected {current.arity} values", lineno)
            try:
                row = tuple(int(v) for v in parts[1:])
            except ValueError:
                raise CSPFormatError("values must be integers", lineno) from None
            if any(not 1 <= v <= instance.B for v in row):
                raise CSPFormatError(f"value out of range 1..{instance.B}", lineno)
            current.allowed.append(row)
        else:
            raise CSPFormatError(f"unknown record {parts[0]!r}", lineno)
    if instance is None:
        raise CSPFormatError("missing csp header", 1)
    return instance


def serialize_csp(csp: CSPInstance) -> str:
    lines = [f"csp {csp.n} {csp.B}"]
    for c in csp.constraints:
        lines.append('constraint ' + ' '.join(f"x{i}" for i in c.variables))
        lines.extend('allow ' + ' '.join(str(v) for v in row) for row in c.allowed)
    return '\n'.join(lines) + '\n'


# ----------------------------------------------------------------------
# 归约
# ----------------------------------------------------------------------

@dataclass
class _Incidence:
    variable: int
    k: int
    v_names: List[str]
    u_names: List[str]
    v_links: List[_Placement]
    u_links: List[_Placement]


@dataclass
class _Block:
    j: int
    constraint: int
    or_structure: _OrStructure
    assignments: List[Dict[int, int]]
    incidences: List[_Incidence]


@dataclass
class ReductionOutput:
    """生成的实例：图、部分映射、表达式与元数据"""
    graph: Graph
    partial: PartialMapping
    expr: KExpression
    meta: Dict
    context: SplitTarget
    csp: CSPInstance
    ext_graph: Graph
    ext_partial: PartialMapping
    hat: Dict[str, str] = field(default_factory=dict)
    blocks: List[_Block] = field(default_factory=list, repr=False)

    @property
    def forward_only(self) -> bool:
        return bool(self.meta.get('forward_only'))


class _Emitter:
    """同步构造图与表达式：表达式是左深的不交并链"""

    def __init__(self):
        self.root = None
        self.adjacency: Dict[str, Set[str]] = {}
        self.order: List[str] = []

    def add(self, labelled: Sequence[Tuple[str, int]]):
        for v, _ in labelled:
            if v in self.adjacency:
                raise ConstructionError(f"vertex {v!r} emitted twice")
            self.adjacency[v] = set()
            self.order.append(v)
        part = union_all([Intro(label, v) for v, label in labelled])
        self.root = part if self.root is None else DisjointUnion(self.root, part)

    def edge(self, u: str, v: str, lu: int, lv: int):
        self.adjacency[u].add(v)
        self.adjacency[v].add(u)
        self.root = Join(lu, lv, self.root)

    def join(self, a: int, b: int):
        self.root = Join(a, b, self.root)

    def relabel(self, src: int, dst: int):
        self.root = Relabel(src, dst, self.root)


class _Reducer:
    def __init__(self, csp: CSPInstance, ctx: SplitTarget, family: SignatureFamily):
        self.csp = csp
        self.ctx = ctx
        self.family = family
        self.factory = GadgetFactory(ctx)
        h1 = ctx.h1
        self.a, self.b, self.c = h1.vertices[:3]
        self.w, self.w2 = ctx.w_graph.edges()[0]
        self.assignments = [c.assignments() for c in csp.constraints]

    def lam(self, y: int) -> List[str]:
        return self.family.ordered_vertices(y - 1)

    def lam_signature(self, y: int) -> List[str]:
        return self.family.ordered_vertices(self.family.dual(y - 1))

    def v_gadget(self, d: str) -> BaseGadget:
        return self.factory.s_gadget(implication_pairs(self.ctx.h1, self.a, d), self.w, self.w)

    def u_gadget(self, d: str) -> BaseGadget:
        return self.factory.s_gadget(implication_pairs(self.ctx.h1, self.a, d), self.w, self.w2)

    def or_structure(self, j: int, constraint: int) -> _OrStructure:
        t = len(self.assignments[constraint])
        return _build_or(self.factory, t, self.a, self.b, self.c, self.w, f"blk{j}.or")

    def incidences(self, j: int, constraint: int) -> List[_Incidence]:
        roots = [f"blk{j}.or.r{k}" for k in range(1, len(self.assignments[constraint]) + 1)]
        result = []
        for i in self.csp.constraints[constraint].distinct_variables():
            for k, assignment in enumerate(self.assignments[constraint], 1):
                y = assignment[i]
                base = f"blk{j}.v{i}.a{k}"
                v_names = [f"{base}.V{idx}" for idx in range(1, len(self.lam(y)) + 1)]
                u_names = [f"{base}.U{idx}" for idx in range(1, len(self.lam_signature(y)) + 1)]
                v_links = [_place(self.v_gadget(d), z, roots[k - 1], z) for d, z in zip(self.lam(y), v_names)]
                u_links = [_place(self.u_gadget(d), z, roots[k - 1], z)
                           for d, z in zip(self.lam_signature(y), u_names)]
                result.append(_Incidence(i, k, v_names, u_names, v_links, u_links))
        return result

    def work_sizes(self) -> Tuple[int, int]:
        """每个约束的 or-gadget 顶点数与关联部分顶点数的最大值"""
        constraint_work = 0
        incidence_work = 0
        for ci in range(len(self.csp.constraints)):
            constraint_work = max(constraint_work, len(self.or_structure(0, ci).vertices))
            total = 0
            for inc in self.incidences(0, ci):
                total += len(inc.v_names) + len(inc.u_names)
                total += sum(len(link.base.interior) for link in inc.v_links + inc.u_links)
            incidence_work = max(incidence_work, total)
        return constraint_work, incidence_work


def _trivial_output(csp: CSPInstance, ctx: SplitTarget, satisfiable: bool, meta: Dict) -> ReductionOutput:
    if satisfiable:
        graph = Graph('G_phi', ['x1'])
        partial = PartialMapping()
        expr = KExpression(Intro(1, 'x1'))
        meta['trivially_satisfiable'] = True
    else:
        # 一条边的两端预设到同一个无环顶点
        graph = Graph('G_phi', ['x1', 'x2'], [('x1', 'x2')])
        image = ctx.target.vertices[0]
        partial = PartialMapping({'x1': image, 'x2': image})
        expr = KExpression(Join(1, 2, DisjointUnion(Intro(1, 'x1'), Intro(2, 'x2'))))
        meta['trivially_unsatisfiable'] = True
    meta['width'] = expr.width
    return ReductionOutput(graph, partial, expr, meta, ctx, csp, graph, partial)


def reduce_csp(csp: CSPInstance, factorization: Factorization, factor_index: int = 0,
               target: Optional[Graph] = None, blocks_override: Optional[int] = None,
               to_hom: bool = False, projectivity_ell: Optional[int] = 2) -> ReductionOutput:
    """
    q-CSP-B → HomExt(H) 归约，同时输出 clique-width 表达式

    标签：1..n 为主标签（变量），n+1 为 done，随后是约束工作标签和关联工作标签。
    每个块开始前，W^j_i 中的顶点带标签 i，其余顶点带 done。

    Args:
        csp: 输入实例，B 必须等于 s(H_1)
        factorization: H 的因子分解
        factor_index: H_1 在因子列表中的下标
        target: 用于命名像顶点的目标图（默认使用 H_1 × W）
        blocks_override: 块数 L（小于 m(n|H_1|+1) 时标记 forward_only）
        to_hom: 是否用包装转换为纯同态实例
        projectivity_ell: 记录到元数据中的有界投影性检查的 ℓ
    """
    ctx = SplitTarget.from_factorization(factorization, factor_index, target)
    h1 = ctx.h1
    if h1.n < 3 or is_trivial(h1):
        raise PreconditionError(f"factor {h1.name!r} must be non-trivial with at least 3 vertices")
    family = build_family(h1)
    if csp.B != family.count:
        raise PreconditionError(f"CSP domain size B={csp.B} must equal s(H1)={family.count}")
    if not ctx.w_graph.edges():
        raise PreconditionError("W has no edge")

    reducer = _Reducer(csp, ctx, family)
    m = len(csp.constraints)
    full_blocks = m * (csp.n * h1.n + 1)
    blocks = full_blocks if blocks_override is None else blocks_override
    meta: Dict = {
        'n': csp.n, 'B': csp.B, 'q': csp.q, 'm': m,
        'blocks': blocks, 'full_blocks': full_blocks,
        'forward_only': blocks < full_blocks,
        'a': reducer.a, 'b': reducer.b, 'c': reducer.c, 'w': reducer.w, 'w2': reducer.w2,
        'lambda': {str(y): reducer.lam(y) for y in range(1, family.count + 1)},
        'trivially_unsatisfiable': False,
        'trivially_satisfiable': False,
        'to_hom': to_hom,
        'lower_bound': _lower_bound_meta(factorization, factor_index, family, blocks, projectivity_ell),
    }

    if any(not assignments for assignments in reducer.assignments):
        logger.info("a constraint allows no assignment, emitting the canonical no-instance")
        output = _trivial_output(csp, ctx, False, meta)
        return _finish(output, to_hom)
    if m == 0 or blocks == 0:
        output = _trivial_output(csp, ctx, True, meta)
        return _finish(output, to_hom)

    n = csp.n
    done = n + 1
    constraint_work, incidence_work = reducer.work_sizes()
    cbase = n + 2
    ibase = cbase + constraint_work
    meta['label_budget'] = {
        'main': n, 'done': 1,
        'constraint_work': constraint_work, 'incidence_work': incidence_work,
        'total': n + 1 + constraint_work + incidence_work,
    }
    logger.info(f"reduction: {blocks} blocks, label budget {meta['label_budget']['total']}")

    emitter = _Emitter()
    partial: Dict[str, str] = {}
    main_members: Dict[int, List[str]] = {}
    block_records: List[_Block] = []

    def prescribe(entries: Dict[str, str]):
        for v, image in entries.items():
            if partial.get(v, image) != image:
                raise ConstructionError(f"conflicting prescriptions for {v!r}")
            partial[v] = image

    for j in range(blocks):
        ci = j % m
        structure = reducer.or_structure(j, ci)
        or_label = {v: cbase + k for k, v in enumerate(structure.vertices)}
        emitter.add([(v, or_label[v]) for v in structure.vertices])
        for u, v in structure.edges:
            emitter.edge(u, v, or_label[u], or_label[v])
        prescribe(structure.partial)

        incidences = reducer.incidences(j, ci)
        offset = ibase
        v_labels: List[Tuple[int, int]] = []
        for i in reducer.csp.constraints[ci].distinct_variables():
            mine = [inc for inc in incidences if inc.variable == i]
            label: Dict[str, int] = dict(or_label)
            fresh: List[str] = []
            for inc in mine:
                for name in inc.v_names + inc.u_names:
                    fresh.append(name)
                for link in inc.v_links + inc.u_links:
                    fresh.extend(link.interior_names())
            for name in fresh:
                label[name] = offset
                offset += 1
            emitter.add([(name, label[name]) for name in fresh])
            for inc in mine:
                for link in inc.v_links + inc.u_links:
                    for u, v in link.edges():
                        emitter.edge(u, v, label[u], label[v])
                    prescribe(link.partial())
            previous = main_members.get(i, [])
            for inc in mine:
                for u in inc.u_names:
                    if previous:
                        for v in previous:
                            emitter.adjacency[u].add(v)
                            emitter.adjacency[v].add(u)
                        emitter.join(label[u], i)
            for inc in mine:
                for name in inc.u_names:
                    emitter.relabel(label[name], done)
                for link in inc.v_links + inc.u_links:
                    for name in link.interior_names():
                        emitter.relabel(label[name], done)
                for name in inc.v_names:
                    v_labels.append((label[name], i))
        for lab, i in v_labels:
            emitter.relabel(lab, i)
        for v in structure.vertices:
            emitter.relabel(or_label[v], done)
        for inc in incidences:
            main_members.setdefault(inc.variable, []).extend(inc.v_names)
        block_records.append(_Block(j, ci, structure, reducer.assignments[ci], incidences))

    graph = Graph.from_adjacency('G_phi', emitter.order, emitter.adjacency)
    expr = KExpression(emitter.root, validate=False)
    meta['width'] = expr.width
    meta['vertices'] = graph.n
    meta['edges'] = graph.edge_count
    if expr.width > meta['label_budget']['total']:
        raise ConstructionError(f"expression uses {expr.width} labels, budget is {meta['label_budget']['total']}")
    ext_partial = PartialMapping(partial)
    output = ReductionOutput(graph, ext_partial, expr, meta, ctx, csp, graph, ext_partial, blocks=block_records)
    logger.info(f"G_phi: {graph.n} vertices, {graph.edge_count} edges, width {expr.width}")
    return _finish(output, to_hom)


def _lower_bound_meta(factorization: Factorization, index: int, family: SignatureFamily,
                      blocks: int, ell: Optional[int]) -> Dict:
    status = 'assumed'
    if ell:
        try:
            result = check_projective(factorization, index, ell)
            status = f"verified up to ell={ell}" if result.holds else f"refuted at ell={ell}"
            if not result.holds:
                logger.warning(f"bounded projectivity check failed at ell={ell}")
        except (CapExceededError, PreconditionError) as exc:
            logger.warning(f"projectivity not checked: {exc}")
    return {'s_H1': family.count, 'projectivity': status, 'blocks': blocks}


def _finish(output: ReductionOutput, to_hom: bool) -> ReductionOutput:
    output.meta['expression_strategy'] = 'direct'
    if not to_hom:
        return output
    wrapped = homext_to_hom(output.ext_graph, output.ext_partial, output.context.target, output.expr)
    output.graph = wrapped.graph
    output.expr = wrapped.expr
    output.partial = PartialMapping()
    output.hat = wrapped.hat
    output.meta['expression_strategy'] = wrapped.strategy
    output.meta['width'] = wrapped.expr.width
    output.meta['vertices'] = wrapped.graph.n
    output.meta['edges'] = wrapped.graph.edge_count
    return output


# ----------------------------------------------------------------------
# 正向见证
# ----------------------------------------------------------------------

def _fill_link(link: _Placement, mapping: Dict[str, str], ctx: SplitTarget):
    """按 S2 的坐标投影填充 gadget 内部；像对不在 S 中时改用暴力搜索"""
    pair = (ctx.h1_of(mapping[link.p_name]), ctx.h1_of(mapping[link.q_name]))
    base = link.base
    if pair in base.pairs:
        projection = base.projection(base.pairs.index(pair), ctx)
        for v in base.interior:
            mapping[link.name(v)] = projection[v]
        return
    fixed = PartialMapping(dict(base.partial)).union(
        PartialMapping({base.p: mapping[link.p_name], base.q: mapping[link.q_name]}))
    found = find_homomorphism(base.graph, ctx.target, fixed)
    if found is None:
        raise ConstructionError(f"gadget {link.prefix} cannot be extended for pair {pair}")
    for v in base.interior:
        mapping[link.name(v)] = found[v]


def build_forward_witness(reduction: ReductionOutput, gamma: Dict[int, int]) -> Dict[str, str]:
    """
    由满足赋值 γ 构造 G_φ → H 的同态，并逐边验证

    选中的 r ↦ (a,w)，之前的根 ↦ (c,w)，之后的根 ↦ (b,w)；
    V 集合映到 λ(γ(x_i)) × {w}，U 集合映到 S(λ(γ(x_i))) × {w'}。
    """
    csp = reduction.csp
    if not csp.is_satisfied_by(gamma):
        raise PreconditionError("assignment does not satisfy every constraint")
    meta = reduction.meta
    ctx = reduction.context
    mapping: Dict[str, str] = {}

    if meta.get('trivially_satisfiable'):
        mapping = {v: ctx.target.vertices[0] for v in reduction.ext_graph.vertices}
    else:
        family = build_family(ctx.h1)
        a, b, c, w, w2 = (meta[k] for k in ('a', 'b', 'c', 'w', 'w2'))
        for block in reduction.blocks:
            selected = None
            for k, assignment in enumerate(block.assignments, 1):
                if all(gamma[x] == value for x, value in assignment.items()):
                    selected = k
                    break
            if selected is None:
                raise ConstructionError(f"block {block.j}: no allowed assignment matches the witness")
            roots = block.or_structure.roots
            for k, r in enumerate(roots, 1):
                first = a if k == selected else (c if k < selected else b)
                mapping[r] = ctx.join(first, w)
            for link in block.or_structure.links:
                _fill_link(link, mapping, ctx)
            for inc in block.incidences:
                y = gamma[inc.variable]
                lam = family.ordered_vertices(y - 1)
                sig = family.ordered_vertices(family.dual(y - 1))
                for idx, z in enumerate(inc.v_names):
                    mapping[z] = ctx.join(lam[idx % len(lam)], w)
                for idx, z in enumerate(inc.u_names):
                    mapping[z] = ctx.join(sig[idx % len(sig)], w2)
                for link in inc.v_links + inc.u_links:
                    _fill_link(link, mapping, ctx)

    for v, image in reduction.ext_partial.items():
        if mapping.get(v) != image:
            raise ConstructionError(f"witness disagrees with the prescription at {v!r}")
    for x, hv in reduction.hat.items():
        mapping[hv] = x
    if not is_homomorphism(reduction.graph, ctx.target, mapping):
        raise ConstructionError("forward witness is not a homomorphism")
    return mapping


def write_reduction(output: ReductionOutput, outdir: str) -> Dict[str, str]:
    """写出 G.graph、G.map、G.cwexpr 与 meta.json"""
    path = Path(outdir)
    path.mkdir(parents=True, exist_ok=True)
    encoding = OUTPUT_CONFIG['encoding']
    files = {
        'graph': path / OUTPUT_CONFIG['graph_file'],
        'map': path / OUTPUT_CONFIG['map_file'],
        'expr': path / OUTPUT_CONFIG['expr_file'],
        'meta': path / OUTPUT_CONFIG['meta_file'],
    }
    files['graph'].write_text(serialize_graph(output.graph), encoding=encoding)
    files['map'].write_text(serialize_mapping(output.partial), encoding=encoding)
    files['expr'].write_text(print_kexpr(output.expr) + '\n', encoding=encoding)
    with open(files['meta'], 'w', encoding=encoding) as f:
        json.dump(output.meta, f, ensure_ascii=False, indent=2)
    logger.info(f"✅ reduction written to {path}")
    return {k: str(v) for k, v in files.items()}
