# -*- coding: utf-8 -*-
"""
图结构核心模块
Graph representation, graph files, direct products and structural predicates
"""

import itertools
import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
from networkx.algorithms import isomorphism

from .config import GRAPH_CONFIG
from .errors import CapExceededError, GraphFormatError, InvalidGraphError, PreconditionError

logger = logging.getLogger(__name__)

_ID_RE = re.compile(r'^' + GRAPH_CONFIG['vertex_id_pattern'] + r'$')
_COMMENT_RE = re.compile(r'(^|\s)#.*$')
_NAMED_RE = re.compile(r'^([KCWPE])(\d+)(\*?)$')


class Graph:
    """有限无向图，可选自环（只允许出现在目标图中）"""

    __slots__ = ('name', 'vertices', 'loops_allowed', '_adj', '_index')

    def __init__(self, name: str, vertices: Iterable[str],
                 edges: Iterable[Tuple[str, str]] = (), loops_allowed: bool = False):
        vertices = tuple(vertices)
        adjacency: Dict[str, Set[str]] = {}
        for v in vertices:
            if v in adjacency:
                raise InvalidGraphError(f"duplicate vertex {v!r} in graph {name!r}")
            adjacency[v] = set()
        for u, v in edges:
            if u not in adjacency or v not in adjacency:
                missing = u if u not in adjacency else v
                raise InvalidGraphError(f"edge endpoint {missing!r} is not a vertex of {name!r}")
            if u == v and not loops_allowed:
                raise InvalidGraphError(f"loop at {u!r} but graph {name!r} is simple")
            adjacency[u].add(v)
            adjacency[v].add(u)
        self._install(name, vertices, adjacency, loops_allowed)

    @classmethod
    def from_adjacency(cls, name: str, vertices: Sequence[str],
                       adjacency: Dict[str, Set[str]], loops_allowed: bool = False) -> 'Graph':
        """从已对称的邻接表直接构造（内部批量构造用）"""
        graph = cls.__new__(cls)
        graph._install(name, tuple(vertices), adjacency, loops_allowed)
        return graph

    def _install(self, name, vertices, adjacency, loops_allowed):
        self.name = name
        self.vertices = vertices
        self.loops_allowed = loops_allowed
        self._adj = {v: frozenset(adjacency[v]) for v in vertices}
        self._index = {v: i for i, v in enumerate(vertices)}

    # ------------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return v in self._adj

    def neighbors(self, v: str) -> frozenset:
        try:
            return self._adj[v]
        except KeyError:
            raise InvalidGraphError(f"unknown vertex {v!r} in graph {self.name!r}") from None

    def has_edge(self, u: str, v: str) -> bool:
        return v in self._adj.get(u, ())

    def index_of(self, v: str) -> int:
        return self._index[v]

    def edges(self) -> List[Tuple[str, str]]:
        """按声明顺序排列的边表，每条边出现一次"""
        index = self._index
        result = []
        for u in self.vertices:
            iu = index[u]
            for v in sorted(self._adj[u], key=index.__getitem__):
                if index[v] >= iu:
                    result.append((u, v))
        return result

    @property
    def edge_count(self) -> int:
        loops = sum(1 for v in self.vertices if v in self._adj[v])
        return (sum(len(a) for a in self._adj.values()) + loops) // 2

    def same_structure(self, other: 'Graph') -> bool:
        """顶点集合与边集合相同（忽略名称和顺序）"""
        return set(self.vertices) == set(other.vertices) and self._adj == other._adj

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.name == other.name and self.vertices == other.vertices
                and self.loops_allowed == other.loops_allowed and self._adj == other._adj)

    def __hash__(self):
        return hash((self.name, self.vertices))

    def __repr__(self) -> str:
        return f"Graph({self.name!r}, n={self.n}, m={self.edge_count})"

    def renamed(self, name: str) -> 'Graph':
        return Graph.from_adjacency(name, self.vertices, self._adj, self.loops_allowed)

    def relabeled(self, mapping: Dict[str, str], name: Optional[str] = None) -> 'Graph':
        """按映射重命名顶点（映射必须单射，未列出的顶点保持原名）"""
        new_names = [mapping.get(v, v) for v in self.vertices]
        if len(set(new_names)) != len(new_names):
            raise InvalidGraphError("vertex renaming is not injective")
        adjacency = {mapping.get(v, v): {mapping.get(u, u) for u in self._adj[v]} for v in self.vertices}
        return Graph.from_adjacency(name or self.name, new_names, adjacency, self.loops_allowed)

    def to_networkx(self) -> nx.Graph:
        nxg = nx.Graph()
        nxg.add_nodes_from(self.vertices)
        nxg.add_edges_from(self.edges())
        return nxg


@dataclass(frozen=True)
class ProductVertex:
    """直积图的顶点：每个因子一个坐标，序列化为点号连接"""

    coordinates: Tuple[str, ...]

    def __post_init__(self):
        if not self.coordinates:
            raise InvalidGraphError("product vertex needs at least one coordinate")

    def __str__(self) -> str:
        return '.'.join(self.coordinates)

    @classmethod
    def parse(cls, name: str) -> 'ProductVertex':
        return cls(tuple(name.split('.')))


# ----------------------------------------------------------------------
# 图文件读写
# ----------------------------------------------------------------------

def strip_comment(line: str) -> str:
    return _COMMENT_RE.sub('', line).strip()


def parse_graph(text: str) -> Graph:
    """
    解析图文件

    Args:
        text: 图文件内容（行格式，见 USAGE.md）

    Returns:
        按文件顺序排列顶点的图
    """
    name = None
    loops = False
    vertices: List[str] = []
    seen_vertices: Set[str] = set()
    edges: List[Tuple[str, str]] = []
    seen_edges: Set[frozenset] = set()

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if not line:
            continue
        parts = line.split()
        if name is None:
            if len(parts) != 3 or parts[0] != 'graph' or parts[2] not in ('simple', 'loops'):
                raise GraphFormatError("expected header 'graph <name> <simple|loops>'", lineno)
            name, loops = parts[1], parts[2] == 'loops'
            continue

        kind = parts[0]
        if kind == 'v':
            if len(parts) != 2:
                raise GraphFormatError("expected 'v <id>'", lineno)
            if edges:
                raise GraphFormatError("vertex declared after the first edge", lineno)
            v = parts[1]
            if not _ID_RE.match(v):
                raise GraphFormatError(f"invalid vertex id {v!r}", lineno)
            if v in seen_vertices:
                raise GraphFormatError(f"duplicate vertex {v!r}", lineno)
            seen_vertices.add(v)
            vertices.append(v)
        elif kind == 'e':
            if len(parts) != 3:
                raise GraphFormatError("expected 'e <id> <id>'", lineno)
            u, v = parts[1], parts[2]
            for endpoint in (u, v):
                if endpoint not in seen_vertices:
                    raise GraphFormatError(f"edge endpoint {endpoint!r} is not declared", lineno)
            if u == v and not loops:
                raise GraphFormatError(f"loop at {u!r} in a simple graph", lineno)
            key = frozenset((u, v))
            if key in seen_edges:
                raise GraphFormatError(f"duplicate edge {u} {v}", lineno)
            seen_edges.add(key)
            edges.append((u, v))
        else:
            raise GraphFormatError(f"unknown record {kind!r}", lineno)

    if name is None:
        raise GraphFormatError("missing graph header", 1)
    return Graph(name, vertices, edges, loops_allowed=loops)


def serialize_graph(g: Graph) -> str:
    lines = [f"graph {g.name} {'loops' if g.loops_allowed else 'simple'}"]
    lines.extend(f"v {v}" for v in g.vertices)
    lines.extend(f"e {u} {v}" for u, v in g.edges())
    return '\n'.join(lines) + '\n'


# ----------------------------------------------------------------------
# 直积
# ----------------------------------------------------------------------

def direct_product(factors: Sequence[Graph], name: Optional[str] = None) -> Graph:
    """
    直积 H_1 × ... × H_m：坐标逐一相邻时两个顶点相邻

    顶点名为各坐标用点号连接，嵌套的积自动展平。
    """
    if not factors:
        raise PreconditionError("direct product needs at least one factor")
    for f in factors:
        if f.n == 0:
            raise PreconditionError(f"factor {f.name!r} has no vertices")

    sizes = [f.n for f in factors]
    neighbor_idx = [[[f.index_of(u) for u in sorted(f.neighbors(v), key=f.index_of)]
                     for v in f.vertices] for f in factors]
    radix = []
    acc = 1
    for size in reversed(sizes):
        radix.append(acc)
        acc *= size
    radix.reverse()

    names = [str(ProductVertex(combo)) for combo in itertools.product(*(f.vertices for f in factors))]
    adjacency: Dict[str, Set[str]] = {}
    for flat, combo in enumerate(itertools.product(*(range(s) for s in sizes))):
        choices = [neighbor_idx[k][c] for k, c in enumerate(combo)]
        adjacency[names[flat]] = {
            names[sum(r * c for r, c in zip(radix, nb))]
            for nb in itertools.product(*choices)
        }
    loops_allowed = all(f.loops_allowed for f in factors)
    product_name = name or 'x'.join(f.name for f in factors)
    logger.debug(f"direct product {product_name}: {len(names)} vertices")
    return Graph.from_adjacency(product_name, names, adjacency, loops_allowed)


# ----------------------------------------------------------------------
# 结构判定
# ----------------------------------------------------------------------

def has_loop(g: Graph) -> bool:
    return any(v in g.neighbors(v) for v in g.vertices)


def is_bipartite(g: Graph) -> bool:
    # 自环使图非二部
    if has_loop(g):
        return False
    return nx.is_bipartite(g.to_networkx())


def connected_components(g: Graph) -> List[Graph]:
    """连通分量，按首个顶点的声明顺序排列"""
    parts = [sorted(c, key=g.index_of) for c in nx.connected_components(g.to_networkx())]
    parts.sort(key=lambda part: g.index_of(part[0]))
    if len(parts) == 1:
        return [g]
    return [induced_subgraph(g, part, name=f"{g.name}_c{i + 1}") for i, part in enumerate(parts)]


def is_connected(g: Graph) -> bool:
    return g.n > 0 and nx.is_connected(g.to_networkx())


def is_ramified(g: Graph) -> bool:
    """任意两个不同顶点的邻域互不包含"""
    masks = [neighborhood_mask(g, v) for v in g.vertices]
    for i, a in enumerate(masks):
        for j, b in enumerate(masks):
            if i != j and a & ~b == 0:
                return False
    return True


def neighborhood_mask(g: Graph, v: str) -> int:
    mask = 0
    for u in g.neighbors(v):
        mask |= 1 << g.index_of(u)
    return mask


def induced_subgraph(g: Graph, keep: Iterable[str], name: Optional[str] = None) -> Graph:
    keep_set = set(keep)
    for v in keep_set:
        if v not in g:
            raise InvalidGraphError(f"unknown vertex {v!r} in graph {g.name!r}")
    order = [v for v in g.vertices if v in keep_set]
    adjacency = {v: set(g.neighbors(v)) & keep_set for v in order}
    return Graph.from_adjacency(name or g.name, order, adjacency, g.loops_allowed)


# ----------------------------------------------------------------------
# 同构
# ----------------------------------------------------------------------

def find_isomorphism(g1: Graph, g2: Graph, cap: Optional[int] = None) -> Optional[Dict[str, str]]:
    """VF2 回溯搜索同构映射 g1 → g2"""
    cap = cap or GRAPH_CONFIG['isomorphism_vertex_cap']
    if g1.n != g2.n or g1.edge_count != g2.edge_count:
        return None
    if g1.n > cap:
        raise CapExceededError(f"isomorphism check limited to {cap} vertices, got {g1.n}")
    if sorted(len(g1.neighbors(v)) for v in g1.vertices) != sorted(len(g2.neighbors(v)) for v in g2.vertices):
        return None
    matcher = isomorphism.GraphMatcher(g1.to_networkx(), g2.to_networkx())
    for mapping in matcher.isomorphisms_iter():
        return dict(mapping)
    return None


def are_isomorphic(g1: Graph, g2: Graph, cap: Optional[int] = None) -> bool:
    return find_isomorphism(g1, g2, cap) is not None


# ----------------------------------------------------------------------
# 常用图
# ----------------------------------------------------------------------

def complete_graph(c: int) -> Graph:
    vs = [str(i) for i in range(1, c + 1)]
    return Graph(f"K{c}", vs, itertools.combinations(vs, 2))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise PreconditionError("a cycle needs at least 3 vertices")
    vs = [str(i) for i in range(n)]
    return Graph(f"C{n}", vs, [(vs[i], vs[(i + 1) % n]) for i in range(n)])


def wheel_graph(n: int) -> Graph:
    """轮图：中心 0，外圈 1..n"""
    if n < 3:
        raise PreconditionError("a wheel needs a rim of at least 3 vertices")
    rim = [str(i) for i in range(1, n + 1)]
    edges = [(rim[i], rim[(i + 1) % n]) for i in range(n)] + [('0', v) for v in rim]
    return Graph(f"W{n}", ['0'] + rim, edges)


def path_graph(n: int) -> Graph:
    vs = [str(i) for i in range(1, n + 1)]
    return Graph(f"P{n}", vs, zip(vs, vs[1:]))


def edgeless_graph(n: int) -> Graph:
    return Graph(f"E{n}", [str(i) for i in range(1, n + 1)])


def loop_graph() -> Graph:
    """K_1^*：带自环的单顶点图"""
    w = GRAPH_CONFIG['loop_vertex']
    return Graph("K1*", [w], [(w, w)], loops_allowed=True)


def is_loop_graph(g: Graph) -> bool:
    return g.n == 1 and has_loop(g)


def named_graph(text: str) -> Graph:
    """解析 K3、C5、W6、P3、E4、K1* 这类名称"""
    match = _NAMED_RE.match(text.strip())
    if not match:
        raise InvalidGraphError(f"unknown graph name {text!r}")
    kind, size, star = match.group(1), int(match.group(2)), match.group(3)
    if star:
        if kind == 'K' and size == 1:
            return loop_graph()
        raise InvalidGraphError(f"only K1* may carry a loop marker, got {text!r}")
    builders = {'K': complete_graph, 'C': cycle_graph, 'W': wheel_graph,
                'P': path_graph, 'E': edgeless_graph}
    return builders[kind](size)


def from_networkx(nxg: nx.Graph, name: str) -> Graph:
    vertices = [str(v) for v in nxg.nodes()]
    edges = [(str(u), str(v)) for u, v in nxg.edges()]
    loops = any(u == v for u, v in edges)
    return Graph(name, vertices, edges, loops_allowed=loops)


def random_graph(n: int, p: float, seed: int = 0, name: Optional[str] = None) -> Graph:
    return from_networkx(nx.gnp_random_graph(n, p, seed=seed), name or f"G{n}_{seed}")
