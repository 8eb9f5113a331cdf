# -*- coding: utf-8 -*-
"""
动态规划求解模块
Dynamic program over clique-width expressions deciding G → H, with the
extension variant and the core/factor driver

每个节点 τ 维护记录表 P_τ：记录把活标签映射到签名集合（族内下标），
表的大小不超过 s(H)^{|L_τ|}。节点按后序（左子树优先）依次计算。
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import pandas as pd

from .config import DP_CONFIG, ORACLE_CONFIG
from .cwexpr import (
    DisjointUnion, Intro, Join, KExpression, Relabel, annotate_liveness,
    component_expressions, evaluate,
)
from .errors import ConstructionError, InvalidGraphError, PreconditionError
from .graph_core import Graph, connected_components, has_loop, is_bipartite
from .hom_oracle import PartialMapping, compute_core, factorize_prime, find_homomorphism
from .signatures import SignatureFamily, build_family

logger = logging.getLogger(__name__)


@dataclass
class RecordTable:
    """
    P_τ：labels 为升序的活标签，每条记录是与之对齐的族下标元组
    """
    labels: Tuple[int, ...]
    records: Set[Tuple[int, ...]]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def accepting(self) -> bool:
        return not self.labels and () in self.records

    def project(self, keep: Iterable[int]) -> 'RecordTable':
        keep = tuple(sorted(set(keep) & set(self.labels)))
        if keep == self.labels:
            return self
        positions = [self.labels.index(label) for label in keep]
        return RecordTable(keep, {tuple(rec[p] for p in positions) for rec in self.records})


# ----------------------------------------------------------------------
# 四种节点
# ----------------------------------------------------------------------

def dp_intro(label: int, vertex: str, family: SignatureFamily,
             prescribed: Optional[str] = None, live: bool = True) -> RecordTable:
    """
    Intro 节点：p(i) ⊆ N_H(u)，u 为任一顶点或预设的像

    顶点在最终图中孤立时标签不活，表为 {∅}。
    """
    target = family.target
    if prescribed is not None and prescribed not in target:
        raise InvalidGraphError(f"vertex {vertex!r} prescribed to {prescribed!r}, not a vertex of {target.name!r}")
    if not live:
        return RecordTable((), {()})
    if prescribed is None:
        values = [idx for idx in range(family.count) if family.within_some_neighborhood(idx)]
    else:
        values = [idx for idx in range(family.count) if family.within_neighborhood_of(idx, prescribed)]
    return RecordTable((label,), {(idx,) for idx in values})


def dp_relabel(src: int, dst: int, child: RecordTable,
               live_after: Optional[FrozenSet[int]] = None) -> RecordTable:
    """
    Relabel 节点，按 src/dst 是否为活标签分三种情况
    """
    labels = child.labels
    if src not in labels:
        table = child
    elif dst not in labels:
        new_labels = tuple(sorted(dst if label == src else label for label in labels))
        order = [labels.index(src if label == dst else label) for label in new_labels]
        table = RecordTable(new_labels, {tuple(rec[p] for p in order) for rec in child.records})
    else:
        ps, pd_ = labels.index(src), labels.index(dst)
        keep = [k for k in range(len(labels)) if k != ps]
        table = RecordTable(tuple(labels[k] for k in keep),
                            {tuple(rec[k] for k in keep) for rec in child.records if rec[ps] == rec[pd_]})
    if live_after is not None:
        table = table.project(live_after)
    return table


def dp_union(left: RecordTable, right: RecordTable,
             live_after: Optional[FrozenSet[int]] = None) -> RecordTable:
    """
    Union 节点：按共享活标签做哈希连接
    """
    shared = sorted(set(left.labels) & set(right.labels))
    labels = tuple(sorted(set(left.labels) | set(right.labels)))
    left_key = [left.labels.index(label) for label in shared]
    right_key = [right.labels.index(label) for label in shared]
    # 输出列来自左表或右表
    sources = []
    for label in labels:
        if label in left.labels:
            sources.append((0, left.labels.index(label)))
        else:
            sources.append((1, right.labels.index(label)))

    buckets: Dict[Tuple[int, ...], List[Tuple[int, ...]]] = {}
    for rec in right.records:
        buckets.setdefault(tuple(rec[k] for k in right_key), []).append(rec)

    records: Set[Tuple[int, ...]] = set()
    for rec in left.records:
        for other in buckets.get(tuple(rec[k] for k in left_key), ()):
            pair = (rec, other)
            records.add(tuple(pair[side][k] for side, k in sources))
    table = RecordTable(labels, records)
    if live_after is not None:
        table = table.project(live_after)
    return table


def dp_join(a: int, b: int, child: RecordTable, family: SignatureFamily,
            live_after: Optional[FrozenSet[int]] = None) -> RecordTable:
    """
    Join 节点：保留 p'(a) ⊇ S(p'(b)) 的记录，再把 a、b 的值展开为族内子集

    a 或 b 在子节点不活时没有新边，表直接投影。
    """
    if a == b:
        raise PreconditionError("join needs two distinct labels")
    labels = child.labels
    keep = set(labels) if live_after is None else set(live_after)
    if a not in labels or b not in labels:
        return child.project(keep)

    pa, pb = labels.index(a), labels.index(b)
    sets, witness = family.sets, family.witness
    out_labels = tuple(label for label in labels if label in keep)
    positions = [labels.index(label) for label in out_labels]
    expand_a = a in keep
    expand_b = b in keep

    records: Set[Tuple[int, ...]] = set()
    for rec in child.records:
        va, vb = rec[pa], rec[pb]
        # S(p'(b)) = M(p'(b))，与对称条件等价
        if witness[vb] & ~sets[va]:
            continue
        choices = []
        for label, pos in zip(out_labels, positions):
            if label == a and expand_a:
                choices.append(family.subset_indices(va))
            elif label == b and expand_b:
                choices.append(family.subset_indices(vb))
            else:
                choices.append((rec[pos],))
        _expand_into(records, choices)
    return RecordTable(out_labels, records)


def _expand_into(records: Set[Tuple[int, ...]], choices: List[Tuple[int, ...]]) -> None:
    partial = [()]
    for options in choices:
        if len(options) == 1:
            only = options[0]
            partial = [p + (only,) for p in partial]
        else:
            partial = [p + (o,) for p in partial for o in options]
    records.update(partial)


# ----------------------------------------------------------------------
# 求解报告
# ----------------------------------------------------------------------

@dataclass
class NodeStat:
    index: int
    kind: str
    live_labels: int
    records: int
    bound: int


@dataclass
class SolveReport:
    """一次求解的结果与统计"""
    answer: bool
    target: str
    width: int
    complexity_base: int
    strategy: str = 'dp'
    per_node_max_records: int = 0
    components: int = 1
    wall_time_ms: float = 0.0
    witness: Optional[Dict[str, str]] = None
    node_stats: List[NodeStat] = field(default_factory=list)
    factor_reports: List['SolveReport'] = field(default_factory=list)

    @property
    def peak_bound(self) -> int:
        return self.complexity_base ** self.width

    def node_table(self) -> pd.DataFrame:
        """每个节点的表大小"""
        columns = ['index', 'kind', 'live_labels', 'records', 'bound']
        rows = [[s.index, s.kind, s.live_labels, s.records, s.bound] for s in self.node_stats]
        return pd.DataFrame(rows, columns=columns)

    def to_dict(self) -> Dict:
        return {
            'answer': 'yes' if self.answer else 'no',
            'target': self.target,
            'width': self.width,
            'complexity_base': self.complexity_base,
            'strategy': self.strategy,
            'per_node_max_records': self.per_node_max_records,
            'peak_bound': self.peak_bound,
            'components': self.components,
            'wall_time_ms': round(self.wall_time_ms, 3),
            'witness': self.witness,
            'factors': [r.to_dict() for r in self.factor_reports],
        }


# ----------------------------------------------------------------------
# 主流程
# ----------------------------------------------------------------------

_KIND = {Intro: 'intro', DisjointUnion: 'union', Relabel: 'relabel', Join: 'join'}


def run_tables(expr: KExpression, family: SignatureFamily,
               partial: Optional[PartialMapping] = None,
               stats: Optional[List[NodeStat]] = None) -> RecordTable:
    """按后序计算全部节点的记录表，返回根表"""
    liveness = annotate_liveness(expr)
    s = family.count
    check_bound = DP_CONFIG['check_table_bound']
    tables: List[Optional[RecordTable]] = [None] * len(expr.nodes)
    for i, node in enumerate(expr.nodes):
        live = liveness.at(i)
        kids = expr.children[i]
        if isinstance(node, Intro):
            prescribed = partial.get(node.vertex) if partial is not None else None
            table = dp_intro(node.label, node.vertex, family, prescribed, live=node.label in live)
        elif isinstance(node, DisjointUnion):
            table = dp_union(tables[kids[0]], tables[kids[1]], live)
        elif isinstance(node, Relabel):
            table = dp_relabel(node.src, node.dst, tables[kids[0]], live)
        else:
            table = dp_join(node.a, node.b, tables[kids[0]], family, live)
        for k in kids:
            tables[k] = None
        tables[i] = table

        bound = s ** len(table.labels)
        if check_bound and len(table) > bound:
            raise ConstructionError(f"node {i} holds {len(table)} records, bound is {bound}")
        if stats is not None:
            stats.append(NodeStat(i, _KIND[type(node)], len(table.labels), len(table), bound))
    return tables[-1]


def solve(expr: KExpression, h: Graph, partial: Optional[PartialMapping] = None,
          family: Optional[SignatureFamily] = None, want_witness: bool = False) -> SolveReport:
    """
    判定 G → H（G 由表达式给出），可带预设部分映射

    G 不连通时按分量分别求解，全部接受才接受。
    """
    started = time.perf_counter()
    labeled = evaluate(expr)
    g = labeled.graph
    if has_loop(g):
        raise PreconditionError("input graph must be loopless")
    if partial is not None:
        partial.validate(g, h)
    family = family or build_family(h)

    stats: List[NodeStat] = []
    parts = component_expressions(expr, g)
    answer = True
    for comp, comp_expr in parts:
        if comp.n == 1:
            # 孤立顶点可以映到任意顶点
            if h.n == 0:
                answer = False
                break
            continue
        comp_partial = None
        if partial is not None:
            comp_partial = PartialMapping({v: partial[v] for v in comp.vertices if v in partial})
        root = run_tables(comp_expr, family, comp_partial, stats)
        if not root.accepting:
            answer = False
            break

    report = SolveReport(
        answer=answer,
        target=h.name,
        width=expr.width,
        complexity_base=family.count,
        per_node_max_records=max((st.records for st in stats), default=0),
        components=len(parts),
        node_stats=stats,
    )
    if want_witness and answer:
        if g.n <= ORACLE_CONFIG['witness_vertex_cap']:
            report.witness = find_homomorphism(g, h, partial)
        else:
            logger.warning(f"witness skipped: {g.n} vertices exceed the oracle cap")
    report.wall_time_ms = (time.perf_counter() - started) * 1000
    logger.info(f"solve {h.name}: {'yes' if answer else 'no'} (width {expr.width}, "
                f"s(H)={family.count}, peak records {report.per_node_max_records})")
    return report


def trivial_answer(g: Graph, target: Graph) -> Optional[bool]:
    """平凡目标的多项式判定；非平凡目标返回 None"""
    if has_loop(target):
        return True
    if target.n == 0:
        return g.n == 0
    if target.edge_count == 0:
        return g.edge_count == 0
    if is_bipartite(target):
        return is_bipartite(g)
    return None


def _solve_connected_core(expr: KExpression, core: Graph) -> SolveReport:
    """连通非平凡核：分解为素因子，每个非 K_1^* 因子都必须接受"""
    if core.n > ORACLE_CONFIG['factor_vertex_cap']:
        logger.warning(f"core {core.name} has {core.n} vertices, solving without factorization")
        return solve(expr, core)
    factorization = factorize_prime(core)
    reports = []
    answer = True
    for factor in factorization.nontrivial_factors():
        report = solve(expr, factor)
        reports.append(report)
        if not report.answer:
            answer = False
            break
    return SolveReport(
        answer=answer,
        target=core.name,
        width=expr.width,
        complexity_base=max(r.complexity_base for r in reports),
        strategy='factors',
        per_node_max_records=max(r.per_node_max_records for r in reports),
        components=reports[0].components,
        factor_reports=reports,
    )


def solve_via_factors(expr: KExpression, target: Graph) -> SolveReport:
    """
    核化与因子分解驱动：平凡目标直接回答，否则对核的分量/素因子分别运行动态规划

    Returns:
        complexity_base 为实际求解过的因子中最大的 s(H_i)
    """
    started = time.perf_counter()
    g = evaluate(expr).graph

    if DP_CONFIG['trivial_fast_path']:
        quick = trivial_answer(g, target)
        if quick is not None:
            logger.info(f"trivial target {target.name}: answered without dynamic programming")
            return SolveReport(answer=quick, target=target.name, width=expr.width,
                               complexity_base=1, strategy='trivial',
                               wall_time_ms=(time.perf_counter() - started) * 1000)

    core = compute_core(target).graph
    logger.info(f"core of {target.name} has {core.n} vertices")
    core_parts = connected_components(core)

    if len(core_parts) == 1:
        report = _solve_connected_core(expr, core)
    else:
        # 每个 G 分量只需被某个核分量接受
        parts = component_expressions(expr, g)
        reports: List[SolveReport] = []
        answer = True
        for comp, comp_expr in parts:
            accepted = False
            for core_part in core_parts:
                sub = _solve_connected_core(comp_expr, core_part)
                reports.append(sub)
                if sub.answer:
                    accepted = True
                    break
            if not accepted:
                answer = False
                break
        report = SolveReport(
            answer=answer,
            target=core.name,
            width=expr.width,
            complexity_base=max(r.complexity_base for r in reports),
            strategy='core-components',
            per_node_max_records=max(r.per_node_max_records for r in reports),
            components=len(parts),
            factor_reports=reports,
        )
    report.target = target.name
    report.wall_time_ms = (time.perf_counter() - started) * 1000
    return report
