#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行入口
Command-line interface for the clique-width homomorphism toolkit

使用方法:
    python -m homcw signature @K3
    python -m homcw solve --target @K3 --expr G.cwexpr
    python -m homcw --help

Version: 1.0
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from .bench import check_monotone_growth, run_sweep, write_csv
from .config import ERROR_HANDLING, HomcwConfig, OUTPUT_CONFIG, setup_logger
from .cwexpr import parse_kexpr
from .dp_solver import solve, solve_via_factors
from .errors import HomcwError, PreconditionError
from .graph_core import Graph, named_graph, parse_graph, serialize_graph
from .hardness_gen import (
    SplitTarget, build_forward_witness, implication_gadget, or_gadget, parse_csp, reduce_csp, s_gadget,
    verify_or_gadget, verify_s_gadget, write_reduction,
)
from .hom_oracle import (
    check_projective, check_projective_upto, compute_core, factorize_prime, find_homomorphism,
    is_core, is_trivial, parse_mapping, projectivity_precheck,
)
from .signatures import build_family

logger = logging.getLogger('homcw.cli')

EXIT_YES = ERROR_HANDLING['exit_yes']
EXIT_NO = ERROR_HANDLING['exit_no']
EXIT_ERROR = ERROR_HANDLING['exit_error']


def _read(path: str) -> str:
    return Path(path).read_text(encoding=OUTPUT_CONFIG['encoding'])


def load_graph(arg: str) -> Graph:
    """`@K3` 形式的名称或图文件路径"""
    if arg.startswith('@'):
        return named_graph(arg[1:])
    return parse_graph(_read(arg))


def _emit(args, payload: Dict, text: str):
    if args.json or getattr(args, 'report', None) == 'json':
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print(text)


def _graph_dict(g: Graph) -> Dict:
    return {'name': g.name, 'vertices': list(g.vertices), 'edges': [list(e) for e in g.edges()]}


def _factor_choice(h: Graph, index: Optional[int]):
    factorization = factorize_prime(h)
    if index is None:
        candidates = [k for k, f in enumerate(factorization.factors) if not is_trivial(f)]
        index = max(candidates, key=lambda k: build_family(factorization.factors[k]).count)
    return factorization, index


# ----------------------------------------------------------------------
# 子命令
# ----------------------------------------------------------------------

def cmd_solve(args) -> int:
    target = load_graph(args.target)
    expr = parse_kexpr(_read(args.expr))
    partial = parse_mapping(_read(args.map)) if args.map else None
    if args.factorize:
        if partial is not None:
            raise PreconditionError("--factorize does not take a partial mapping")
        report = solve_via_factors(expr, target)
    else:
        report = solve(expr, target, partial, want_witness=args.witness)
    if args.table:
        report.node_table().to_csv(args.table, index=False, encoding='utf-8-sig')
        logger.info(f"node table saved to {args.table}")
    answer = 'yes' if report.answer else 'no'
    _emit(args, report.to_dict(),
          f"{answer} (width {report.width}, base {report.complexity_base}, "
          f"peak records {report.per_node_max_records}, strategy {report.strategy})")
    return EXIT_YES if report.answer else EXIT_NO


def cmd_signature(args) -> int:
    h = load_graph(args.graph)
    family = build_family(h)
    sets = [family.ordered_vertices(i) for i in range(family.count)]
    witnesses = [family.ordered_vertices(family.dual(i)) for i in range(family.count)]
    lines = [f"s(H) = {family.count}"]
    if args.list:
        # S -> M(S)
        lines.extend("{" + ", ".join(s) + "} -> {" + ", ".join(m) + "}" for s, m in zip(sets, witnesses))
    payload = {'graph': h.name, 's': family.count, 'sets': sets, 'witnesses': witnesses}
    _emit(args, payload, '\n'.join(lines))
    return EXIT_YES


def cmd_core(args) -> int:
    h = load_graph(args.graph)
    result = compute_core(h)
    text = serialize_graph(result.graph)
    if args.output:
        Path(args.output).write_text(text, encoding=OUTPUT_CONFIG['encoding'])
    _emit(args, {'core': _graph_dict(result.graph), 'retraction': result.retraction}, text.rstrip('\n'))
    return EXIT_YES


def cmd_factor(args) -> int:
    h = load_graph(args.graph)
    factorization = factorize_prime(h)
    names = ' x '.join(f.name for f in factorization.factors)
    lines = [f"{h.name} = {names}" + (' (prime)' if factorization.is_prime else '')]
    lines.extend(serialize_graph(f).rstrip('\n') for f in factorization.nontrivial_factors())
    payload = {
        'graph': h.name,
        'prime': factorization.is_prime,
        'factors': [_graph_dict(f) for f in factorization.factors],
        'embedding': {v: list(c) for v, c in factorization.embedding.items()},
    }
    _emit(args, payload, '\n'.join(lines))
    return EXIT_YES


def cmd_projective(args) -> int:
    h = load_graph(args.graph)
    precheck = projectivity_precheck(h)
    factorization = factorize_prime(h)
    if args.max_ell:
        result = check_projective_upto(factorization, args.factor_index, args.max_ell)
    else:
        result = check_projective(factorization, args.factor_index, args.ell)
    payload = {'precheck': precheck, 'result': result.to_dict()}
    status = 'holds' if result.holds else 'fails'
    _emit(args, payload, f"projectivity at ell={result.ell}: {status} "
                         f"({result.extension_count} idempotent extensions)")
    return EXIT_YES if result.holds else EXIT_NO


def cmd_oracle(args) -> int:
    g = load_graph(args.graph)
    h = load_graph(args.target)
    partial = parse_mapping(_read(args.map)) if args.map else None
    if partial is not None:
        partial.validate(g, h)
    mapping = find_homomorphism(g, h, partial)
    text = 'no' if mapping is None else 'yes\n' + '\n'.join(f"{v} -> {x}" for v, x in mapping.items())
    _emit(args, {'answer': 'no' if mapping is None else 'yes', 'mapping': mapping}, text)
    return EXIT_NO if mapping is None else EXIT_YES


def cmd_gen(args) -> int:
    h = load_graph(args.target)
    if is_trivial(h) or not is_core(h):
        raise PreconditionError(f"target {h.name!r} must be a non-trivial core")
    factorization, index = _factor_choice(h, args.factor_index)
    csp = parse_csp(_read(args.csp))
    output = reduce_csp(csp, factorization, index, target=h, blocks_override=args.blocks,
                        to_hom=args.to_hom)
    files = write_reduction(output, args.output)
    if args.check_witness:
        gamma = csp.solve()
        if gamma is None:
            logger.info("CSP instance is unsatisfiable, no forward witness to check")
        else:
            build_forward_witness(output, gamma)
            logger.info("✅ forward witness validated")
    meta = output.meta
    _emit(args, {'files': files, 'meta': meta},
          f"{meta.get('vertices', output.graph.n)} vertices, width {meta['width']}, "
          f"{meta['blocks']} blocks -> {args.output}")
    return EXIT_YES


def _pairs(tokens: List[str]):
    pairs = []
    for token in tokens:
        parts = token.split(',')
        if len(parts) != 2:
            raise PreconditionError(f"pair {token!r} must look like x,y")
        pairs.append((parts[0], parts[1]))
    return pairs


def cmd_verify_gadget(args) -> int:
    h = load_graph(args.target)
    factorization, index = _factor_choice(h, args.factor_index)
    h1 = factorization.factors[index]
    a, b, c = (args.a or h1.vertices[0]), (args.b or h1.vertices[1]), (args.c or h1.vertices[2])
    first_edge = SplitTarget.from_factorization(factorization, index, h).w_graph.edges()[0]
    w = args.w or first_edge[0]
    w2 = args.w2 or (first_edge[1] if args.w is None else w)
    if args.kind == 'or':
        gadget = or_gadget(factorization, a, b, c, w, args.t, index, h)
        report = verify_or_gadget(gadget)
        ok = report['o1'] and report['o2']
    else:
        if args.kind == 'implication':
            gadget = implication_gadget(factorization, a, b, w, w2, index, h)
        else:
            if not args.pairs:
                raise PreconditionError("--pairs is required for an S-gadget")
            gadget = s_gadget(factorization, _pairs(args.pairs), w, w2, index, h)
        report = verify_s_gadget(gadget, method=args.method)
        ok = report['s1'] and report['s2']
    report['vertices'] = gadget.graph.n
    summary = ', '.join(f"{k}={v}" for k, v in report.items() if isinstance(v, (bool, int)))
    _emit(args, report, f"{args.kind}-gadget ({gadget.graph.n} vertices): {summary}")
    return EXIT_YES if ok else EXIT_NO


def cmd_bench(args) -> int:
    df = run_sweep(args.clique_sizes, args.widths, args.length, args.threads)
    csv_file = write_csv(df, args.output)
    growth = check_monotone_growth(df)
    ok = all(item['within_bound'] and item['below_naive'] and item['monotone'] for item in growth.values())
    _emit(args, {'csv': csv_file, 'growth': growth}, df.to_string(index=False))
    return EXIT_YES if ok else EXIT_NO


# ----------------------------------------------------------------------
# 参数解析
# ----------------------------------------------------------------------

def create_parser() -> argparse.ArgumentParser:
    """创建命令行参数解析器"""
    parser = argparse.ArgumentParser(
        prog='homcw',
        description='clique-width 参数化的图同态工具 - Graph homomorphism by clique-width',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用示例:
  # 签名数
  homcw signature @K3

  # 按表达式判定 G → H
  homcw solve --target @K3 --expr K4.cwexpr

  # 生成下界实例
  homcw gen --target @K3 --csp inst.csp -o out/ --blocks 1

退出码: 0 = yes/成功, 1 = no, 2 = 用法或输入错误
""")
    parser.add_argument('--json', action='store_true', help='输出 JSON 报告')
    parser.add_argument('--threads', type=int, default=HomcwConfig.THREADS or None, help='最大进程数')
    parser.add_argument('--log-level', default=HomcwConfig.LOG_LEVEL, help='日志级别 (默认: INFO)')
    parser.add_argument('--log-dir', default=HomcwConfig.LOG_DIR or None, help='日志目录')
    parser.add_argument('--version', action='version', version='%(prog)s 1.0')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', help='动态规划判定 G → H')
    p.add_argument('--target', required=True, help='目标图文件或 @名称')
    p.add_argument('--expr', required=True, help='k-表达式文件')
    p.add_argument('--map', help='部分映射文件')
    p.add_argument('--factorize', '--via-factors', dest='factorize', action='store_true', help='先核化与因子分解')
    p.add_argument('--witness', action='store_true', help='附带一个同态')
    p.add_argument('--table', help='把每个节点的表大小写入 CSV')
    p.add_argument('--report', choices=['json'], help='报告格式（等同于全局 --json）')
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser('signature', help='计算 s(H)')
    p.add_argument('graph')
    p.add_argument('--list', '--sets', dest='list', action='store_true', help='列出每个签名集合 S 及其 M(S)')
    p.set_defaults(handler=cmd_signature)

    p = sub.add_parser('core', help='计算核')
    p.add_argument('graph')
    p.add_argument('--output', '-o', help='把核写入文件')
    p.set_defaults(handler=cmd_core)

    p = sub.add_parser('factor', help='素因子分解')
    p.add_argument('graph')
    p.set_defaults(handler=cmd_factor)

    p = sub.add_parser('projective', help='有界投影性检查')
    p.add_argument('graph')
    p.add_argument('--factor-index', type=int, default=0)
    p.add_argument('--ell', type=int, default=2)
    p.add_argument('--max-ell', type=int, help='依次检查 2..max-ell')
    p.set_defaults(handler=cmd_projective)

    p = sub.add_parser('oracle', help='回溯求解 G → H（可带预设）')
    p.add_argument('--graph', required=True)
    p.add_argument('--target', required=True)
    p.add_argument('--map')
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser('gen', help='从 CSP 生成下界实例')
    p.add_argument('--target', required=True)
    p.add_argument('--csp', required=True)
    p.add_argument('--output', '-o', required=True, help='输出目录')
    p.add_argument('--blocks', type=int, help='块数 L（默认完整值）')
    p.add_argument('--to-hom', action='store_true', help='转换为纯同态实例')
    p.add_argument('--factor-index', type=int)
    p.add_argument('--check-witness', action='store_true', help='求解 CSP 并验证正向见证')
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser('verify-gadget', help='检查 gadget 性质')
    p.add_argument('--target', required=True)
    p.add_argument('--kind', choices=['s', 'implication', 'or'], default='s')
    p.add_argument('--pairs', nargs='+', help='S-gadget 的关系，如 1,2 2,1')
    p.add_argument('--a')
    p.add_argument('--b')
    p.add_argument('--c')
    p.add_argument('--w')
    p.add_argument('--w2')
    p.add_argument('--t', type=int, default=2)
    p.add_argument('--method', choices=['pairs', 'enumerate'], default='pairs')
    p.add_argument('--factor-index', type=int)
    p.set_defaults(handler=cmd_verify_gadget)

    p = sub.add_parser('bench', help='规模探测')
    p.add_argument('--output', '-o', default='bench_output')
    p.add_argument('--clique-sizes', type=int, nargs='+')
    p.add_argument('--widths', type=int, nargs='+')
    p.add_argument('--length', type=int)
    p.set_defaults(handler=cmd_bench)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """解析参数并分派；返回退出码"""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_YES if exc.code in (0, None) else EXIT_ERROR
    setup_logger('homcw', args.log_dir, args.log_level)
    try:
        return args.handler(args)
    except HomcwError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as e:
        print(f"❌ file not found: {e.filename}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        print("\n⚠️  interrupted", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
