# -*- coding: utf-8 -*-
"""
k-表达式模块
Clique-width expressions: parsing, printing, evaluation and live labels

表达式树可能非常深（生成器输出上万个节点），所有遍历都用显式栈完成。
"""

import logging
import random
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ExpressionSyntaxError, PreconditionError
from .graph_core import Graph, connected_components, has_loop

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False, slots=True)
class Intro:
    """i(v)：引入一个带标签 i 的顶点"""
    label: int
    vertex: str
    pos: int = field(default=-1, repr=False)


@dataclass(frozen=True, eq=False, slots=True)
class DisjointUnion:
    left: object
    right: object
    pos: int = field(default=-1, repr=False)


@dataclass(frozen=True, eq=False, slots=True)
class Relabel:
    """ρ_{src→dst}"""
    src: int
    dst: int
    child: object
    pos: int = field(default=-1, repr=False)


@dataclass(frozen=True, eq=False, slots=True)
class Join:
    """η_{a,b}：连接标签 a 与标签 b 的所有顶点"""
    a: int
    b: int
    child: object
    pos: int = field(default=-1, repr=False)


def postorder(root) -> List[object]:
    """后序遍历，左子树优先"""
    out = []
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded or isinstance(node, Intro):
            out.append(node)
            continue
        stack.append((node, True))
        if isinstance(node, DisjointUnion):
            stack.append((node.right, False))
            stack.append((node.left, False))
        else:
            stack.append((node.child, False))
    return out


class KExpression:
    """k-表达式：节点树加后序索引"""

    def __init__(self, root, validate: bool = True):
        self.root = root
        self.nodes: Tuple[object, ...] = tuple(postorder(root))
        position = {id(node): i for i, node in enumerate(self.nodes)}
        children: List[Tuple[int, ...]] = []
        labels: Set[int] = set()
        vertices: List[str] = []
        for node in self.nodes:
            if isinstance(node, Intro):
                children.append(())
                labels.add(node.label)
                vertices.append(node.vertex)
            elif isinstance(node, DisjointUnion):
                children.append((position[id(node.left)], position[id(node.right)]))
            elif isinstance(node, Relabel):
                children.append((position[id(node.child)],))
                labels.update((node.src, node.dst))
            elif isinstance(node, Join):
                children.append((position[id(node.child)],))
                labels.update((node.a, node.b))
            else:
                raise ExpressionSyntaxError(f"unknown expression node {node!r}")
        self.children: Tuple[Tuple[int, ...], ...] = tuple(children)
        self.labels: Tuple[int, ...] = tuple(sorted(labels))
        self.vertices: Tuple[str, ...] = tuple(vertices)
        if validate:
            self._validate()

    def _validate(self):
        seen: Set[str] = set()
        for node in self.nodes:
            if isinstance(node, Intro):
                if node.label < 1:
                    raise ExpressionSyntaxError("labels must be positive integers", node.pos)
                if node.vertex in seen:
                    raise ExpressionSyntaxError(f"vertex {node.vertex!r} introduced twice", node.pos)
                seen.add(node.vertex)
            elif isinstance(node, Relabel):
                if node.src == node.dst:
                    raise ExpressionSyntaxError(f"relabel {node.src}->{node.dst} needs distinct labels", node.pos)
                if min(node.src, node.dst) < 1:
                    raise ExpressionSyntaxError("labels must be positive integers", node.pos)
            elif isinstance(node, Join):
                if node.a == node.b:
                    raise ExpressionSyntaxError(f"join {node.a},{node.b} needs distinct labels", node.pos)
                if min(node.a, node.b) < 1:
                    raise ExpressionSyntaxError("labels must be positive integers", node.pos)

    @property
    def width(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.nodes)

    def to_text(self) -> str:
        return print_kexpr(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KExpression):
            return NotImplemented
        return len(self.nodes) == len(other.nodes) and self.to_text() == other.to_text()

    def __hash__(self):
        return hash((len(self.nodes), self.labels))

    def __repr__(self) -> str:
        return f"KExpression(width={self.width}, nodes={len(self.nodes)})"


@dataclass
class LabeledGraph:
    """k-图：图加顶点标签"""
    graph: Graph
    label_of: Dict[str, int]

    def label_classes(self) -> Dict[int, FrozenSet[str]]:
        classes: Dict[int, Set[str]] = {}
        for v, label in self.label_of.items():
            classes.setdefault(label, set()).add(v)
        return {label: frozenset(vs) for label, vs in classes.items()}


@dataclass
class LivenessAnnotation:
    """每个节点 τ 的活标签集合 L_τ（按后序下标）"""
    live: Tuple[FrozenSet[int], ...]

    def at(self, index: int) -> FrozenSet[int]:
        return self.live[index]

    @property
    def root(self) -> FrozenSet[int]:
        return self.live[-1]


# ----------------------------------------------------------------------
# 解析与输出
# ----------------------------------------------------------------------

_TOKEN_RE = re.compile(r'(?P<ws>\s+)|(?P<comment>#[^\n]*)|(?P<arrow>->)|(?P<punct>[(){}+,])'
                       r'|(?P<word>[A-Za-z0-9_.][A-Za-z0-9_.#]*)')


def _tokenize(text: str) -> List[Tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        if kind not in ('ws', 'comment'):
            tokens.append((match.group(), pos))
        pos = match.end()
    return tokens


class _Cursor:
    def __init__(self, tokens: List[Tuple[str, int]], end: int):
        self.tokens = tokens
        self.i = 0
        self.end = end

    def peek_pos(self) -> int:
        return self.tokens[self.i][1] if self.i < len(self.tokens) else self.end

    def take(self) -> Tuple[str, int]:
        if self.i >= len(self.tokens):
            raise ExpressionSyntaxError("unexpected end of expression", self.end)
        token = self.tokens[self.i]
        self.i += 1
        return token

    def expect(self, text: str) -> int:
        token, pos = self.take()
        if token != text:
            raise ExpressionSyntaxError(f"expected {text!r}, found {token!r}", pos)
        return pos

    def integer(self) -> int:
        token, pos = self.take()
        if not token.isdigit():
            raise ExpressionSyntaxError(f"expected a label, found {token!r}", pos)
        value = int(token)
        if value < 1:
            raise ExpressionSyntaxError("label 0 is not allowed; labels start at 1", pos)
        return value


def parse_kexpr(text: str) -> KExpression:
    """
    解析 k-表达式

    语法: expr := v(INT,ID) | (expr+expr) | r(INT->INT){expr} | e(INT,INT){expr}
    """
    cursor = _Cursor(_tokenize(text), len(text))
    # 栈帧: [kind, pos, a, b, left]
    stack: List[list] = []
    while True:
        token, pos = cursor.take()
        if token == 'v':
            cursor.expect('(')
            label = cursor.integer()
            cursor.expect(',')
            vertex, vpos = cursor.take()
            if not re.match(r'^[A-Za-z0-9_.][A-Za-z0-9_.#]*$', vertex):
                raise ExpressionSyntaxError(f"invalid vertex id {vertex!r}", vpos)
            cursor.expect(')')
            node = Intro(label, vertex, pos)
        elif token == '(':
            stack.append(['union', pos, None, None, None])
            continue
        elif token in ('r', 'e'):
            cursor.expect('(')
            a = cursor.integer()
            cursor.expect('->' if token == 'r' else ',')
            b = cursor.integer()
            cursor.expect(')')
            cursor.expect('{')
            if a == b:
                kind = 'relabel' if token == 'r' else 'join'
                raise ExpressionSyntaxError(f"{kind} needs two distinct labels, got {a} and {b}", pos)
            stack.append(['relabel' if token == 'r' else 'join', pos, a, b, None])
            continue
        else:
            raise ExpressionSyntaxError(f"unexpected token {token!r}", pos)

        # 归约
        while stack:
            frame = stack[-1]
            if frame[0] == 'union':
                if frame[4] is None:
                    cursor.expect('+')
                    frame[4] = node
                    break
                cursor.expect(')')
                node = DisjointUnion(frame[4], node, frame[1])
            else:
                cursor.expect('}')
                if frame[0] == 'relabel':
                    node = Relabel(frame[2], frame[3], node, frame[1])
                else:
                    node = Join(frame[2], frame[3], node, frame[1])
            stack.pop()
        else:
            if cursor.i != len(cursor.tokens):
                raise ExpressionSyntaxError("trailing input after expression", cursor.peek_pos())
            return KExpression(node)


def print_kexpr(expr: KExpression) -> str:
    out: List[str] = []
    stack: List[object] = [expr.root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif isinstance(item, Intro):
            out.append(f"v({item.label},{item.vertex})")
        elif isinstance(item, DisjointUnion):
            out.append('(')
            stack.extend((')', item.right, '+', item.left))
        elif isinstance(item, Relabel):
            out.append(f"r({item.src}->{item.dst}){{")
            stack.extend(('}', item.child))
        else:
            out.append(f"e({item.a},{item.b}){{")
            stack.extend(('}', item.child))
    return ''.join(out)


# ----------------------------------------------------------------------
# 求值与活标签
# ----------------------------------------------------------------------

@dataclass
class _WalkResult:
    adjacency: Dict[str, Set[str]]
    order: List[str]
    root_classes: Dict[int, List[str]]
    live: Optional[List[FrozenSet[int]]] = None
    vertex_counts: Optional[List[int]] = None
    edge_counts: Optional[List[int]] = None


def _merge_classes(big: Dict[int, List[str]], small: Dict[int, List[str]]) -> Dict[int, List[str]]:
    if len(big) < len(small):
        big, small = small, big
    for label, members in small.items():
        mine = big.get(label)
        if mine is None:
            big[label] = members
        elif len(mine) < len(members):
            members.extend(mine)
            big[label] = members
        else:
            mine.extend(members)
    return big


def _walk(expr: KExpression, final_degree: Optional[Dict[str, int]] = None,
          record_counts: bool = False) -> _WalkResult:
    nodes, children = expr.nodes, expr.children
    adjacency: Dict[str, Set[str]] = {}
    order: List[str] = []
    classes_at: List[Optional[Dict[int, List[str]]]] = [None] * len(nodes)
    tracking = final_degree is not None
    pending_at: List[Optional[Dict[int, int]]] = [None] * len(nodes)
    live: List[FrozenSet[int]] = []
    vertex_counts: List[int] = []
    edge_counts: List[int] = []

    for i, node in enumerate(nodes):
        added = 0
        pending: Dict[int, int] = {}
        if isinstance(node, Intro):
            v = node.vertex
            adjacency[v] = set()
            order.append(v)
            classes = {node.label: [v]}
            if tracking:
                pending = {node.label: 1 if final_degree[v] > 0 else 0}
            size = 1
        elif isinstance(node, DisjointUnion):
            left, right = children[i]
            classes = _merge_classes(classes_at[left], classes_at[right])
            classes_at[left] = classes_at[right] = None
            if tracking:
                pending = pending_at[left]
                for label, count in pending_at[right].items():
                    pending[label] = pending.get(label, 0) + count
                pending_at[left] = pending_at[right] = None
            size = vertex_counts[left] + vertex_counts[right] if record_counts else 0
        else:
            (child,) = children[i]
            classes = classes_at[child]
            classes_at[child] = None
            if tracking:
                pending = pending_at[child]
                pending_at[child] = None
            size = vertex_counts[child] if record_counts else 0
            if isinstance(node, Relabel):
                moved = classes.pop(node.src, None)
                if moved:
                    _merge_classes(classes, {node.dst: moved})
                if tracking and node.src in pending:
                    pending[node.dst] = pending.get(node.dst, 0) + pending.pop(node.src)
            else:
                side_a = classes.get(node.a, ())
                side_b = classes.get(node.b, ())
                for u in side_a:
                    nu = adjacency[u]
                    for v in side_b:
                        if v in nu:
                            continue
                        nu.add(v)
                        adjacency[v].add(u)
                        added += 1
                        if tracking:
                            if len(nu) == final_degree[u]:
                                pending[node.a] -= 1
                            if len(adjacency[v]) == final_degree[v]:
                                pending[node.b] -= 1
        classes_at[i] = classes
        if tracking:
            pending_at[i] = pending
            live.append(frozenset(label for label, count in pending.items() if count > 0))
        if record_counts:
            vertex_counts.append(size)
            base = 0
            for c in children[i]:
                base += edge_counts[c]
            edge_counts.append(base + added)

    return _WalkResult(adjacency, order, classes_at[-1] if nodes else {},
                       live if tracking else None,
                       vertex_counts if record_counts else None,
                       edge_counts if record_counts else None)


def evaluate(expr: KExpression, name: str = 'G') -> LabeledGraph:
    """
    求值：返回表达式定义的 k-图

    Join 在已存在的边上是空操作；某一侧为空时也是空操作。
    """
    result = _walk(expr)
    graph = Graph.from_adjacency(name, result.order, result.adjacency)
    label_of = {v: label for label, members in result.root_classes.items() for v in members}
    return LabeledGraph(graph, label_of)


def annotate_liveness(expr: KExpression, final_graph: Optional[Graph] = None) -> LivenessAnnotation:
    """
    两遍计算活标签：先求出最终图 G，再逐节点比较 G 与 G_τ 的关联边
    """
    if final_graph is None:
        final_graph = evaluate(expr).graph
    final_degree = {v: len(final_graph.neighbors(v)) for v in final_graph.vertices}
    result = _walk(expr, final_degree=final_degree)
    return LivenessAnnotation(tuple(result.live))


# ----------------------------------------------------------------------
# 构造与变换
# ----------------------------------------------------------------------

def union_all(parts: Sequence[object]):
    """左深的不交并链"""
    if not parts:
        raise PreconditionError("cannot build a union of zero expressions")
    node = parts[0]
    for part in parts[1:]:
        node = DisjointUnion(node, part)
    return node


def trivial_expression(g: Graph) -> KExpression:
    """每个顶点一个标签的表达式，宽度 |V(g)|"""
    if g.n == 0:
        raise PreconditionError("cannot build an expression for the empty graph")
    if has_loop(g):
        raise PreconditionError(f"graph {g.name!r} has a loop; expressions define simple graphs")
    label = {v: i + 1 for i, v in enumerate(g.vertices)}
    node = union_all([Intro(label[v], v) for v in g.vertices])
    for u, v in g.edges():
        node = Join(label[u], label[v], node)
    return KExpression(node)


def clique_expression(vertices: Sequence[str]) -> KExpression:
    """宽度 2 的完全图表达式：新顶点用标签 2，连接 1–2，再改名 2→1"""
    node = Intro(1, vertices[0])
    for v in vertices[1:]:
        node = Relabel(2, 1, Join(1, 2, DisjointUnion(node, Intro(2, v))))
    return KExpression(node)


def path_expression(vertices: Sequence[str]) -> KExpression:
    """宽度 3 的路径表达式：标签 1 已完成，2 为当前端点，3 为新顶点"""
    node = Intro(2, vertices[0])
    for v in vertices[1:]:
        node = Relabel(3, 2, Relabel(2, 1, Join(2, 3, DisjointUnion(node, Intro(3, v)))))
    return KExpression(node)


def cycle_expression(vertices: Sequence[str]) -> KExpression:
    """宽度 4 的环表达式：标签 4 固定在首顶点上，最后一步闭合"""
    if len(vertices) < 3:
        raise PreconditionError("a cycle needs at least 3 vertices")
    node = Join(4, 2, DisjointUnion(Intro(4, vertices[0]), Intro(2, vertices[1])))
    for v in vertices[2:]:
        node = Relabel(3, 2, Relabel(2, 1, Join(2, 3, DisjointUnion(node, Intro(3, v)))))
    return KExpression(Join(4, 2, node))


def random_expression(n: int, k: int, seed: int = 0, op_prob: float = 0.5) -> KExpression:
    """
    随机 k-表达式：n 个顶点随机两两合并，每次合并后随机追加连接或改名

    Args:
        n: 顶点数，顶点名为 v0..v{n-1}
        k: 标签上限，宽度不超过 k
        seed: 随机种子
        op_prob: 每次合并后继续追加一个操作的概率
    """
    if n < 1 or k < 1:
        raise PreconditionError("random expression needs n >= 1 and k >= 1")
    rng = random.Random(seed)
    parts = [Intro(rng.randint(1, k), f"v{i}") for i in range(n)]
    while len(parts) > 1:
        i, j = sorted(rng.sample(range(len(parts)), 2))
        right = parts.pop(j)
        left = parts.pop(i)
        node = DisjointUnion(left, right)
        while k >= 2 and rng.random() < op_prob:
            a, b = rng.sample(range(1, k + 1), 2)
            node = Join(a, b, node) if rng.random() < 0.7 else Relabel(a, b, node)
        parts.append(node)
    return KExpression(parts[0])


def relabel_vertices(expr: KExpression, renaming: Dict[str, str]) -> KExpression:
    """重命名顶点（必须单射），标签与结构不变"""
    new_names = [renaming.get(v, v) for v in expr.vertices]
    if len(set(new_names)) != len(new_names):
        raise PreconditionError("vertex renaming collides")
    built: List[object] = [None] * len(expr.nodes)
    for i, node in enumerate(expr.nodes):
        kids = [built[c] for c in expr.children[i]]
        if isinstance(node, Intro):
            built[i] = Intro(node.label, renaming.get(node.vertex, node.vertex), node.pos)
        elif isinstance(node, DisjointUnion):
            built[i] = DisjointUnion(kids[0], kids[1], node.pos)
        elif isinstance(node, Relabel):
            built[i] = Relabel(node.src, node.dst, kids[0], node.pos)
        else:
            built[i] = Join(node.a, node.b, kids[0], node.pos)
    return KExpression(built[-1])


def restrict_expression(expr: KExpression, keep: Iterable[str]) -> KExpression:
    """
    删去 keep 以外的顶点，得到定义诱导子图的表达式，宽度不增

    缺了一侧的不交并直接换成另一侧；子树为空的改名与连接一并删去。
    """
    keep = set(keep)
    if not keep & set(expr.vertices):
        raise PreconditionError("restriction keeps no vertex of the expression")
    built: List[object] = [None] * len(expr.nodes)
    for i, node in enumerate(expr.nodes):
        kids = [built[c] for c in expr.children[i]]
        if isinstance(node, Intro):
            built[i] = node if node.vertex in keep else None
        elif isinstance(node, DisjointUnion):
            left, right = kids
            if left is None or right is None:
                built[i] = right if left is None else left
            else:
                built[i] = DisjointUnion(left, right, node.pos)
        elif kids[0] is None:
            built[i] = None
        elif isinstance(node, Relabel):
            built[i] = Relabel(node.src, node.dst, kids[0], node.pos)
        else:
            built[i] = Join(node.a, node.b, kids[0], node.pos)
    return KExpression(built[-1], validate=False)


def width(expr: KExpression) -> int:
    return expr.width


def component_expressions(expr: KExpression, graph: Optional[Graph] = None) -> List[Tuple[Graph, KExpression]]:
    """
    按连通分量拆分：优先取恰好定义该分量的子表达式，否则把表达式限制到该分量上
    """
    if graph is None:
        graph = evaluate(expr).graph
    components = connected_components(graph)
    if len(components) <= 1:
        return [(graph, expr)]

    comp_of = {v: ci for ci, comp in enumerate(components) for v in comp.vertices}
    walk = _walk(expr, record_counts=True)
    comp_at: List[int] = []
    chosen: Dict[int, object] = {}
    for i, node in enumerate(expr.nodes):
        if isinstance(node, Intro):
            comp = comp_of[node.vertex]
        else:
            kids = {comp_at[c] for c in expr.children[i]}
            comp = kids.pop() if len(kids) == 1 else -1
        comp_at.append(comp)
        if comp >= 0 and comp not in chosen:
            target = components[comp]
            if walk.vertex_counts[i] == target.n and walk.edge_counts[i] == target.edge_count:
                chosen[comp] = node

    result = []
    for ci, comp in enumerate(components):
        if ci in chosen:
            result.append((comp, KExpression(chosen[ci], validate=False)))
        else:
            logger.debug(f"component {comp.name} has no matching subexpression, restricting")
            result.append((comp, restrict_expression(expr, comp.vertices)))
    return result
