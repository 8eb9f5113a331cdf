#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
clique-width 参数化的图同态工具包
"""

from .config import HomcwConfig, setup_logger
from .errors import (
    CapExceededError, ConstructionError, CSPFormatError, ExpressionSyntaxError, GraphFormatError,
    HomcwError, InvalidGraphError, MappingFormatError, PreconditionError,
)
from .graph_core import Graph, direct_product, named_graph, parse_graph, serialize_graph
from .signatures import SignatureFamily, build_family, signature_number
from .cwexpr import KExpression, evaluate, parse_kexpr, print_kexpr, trivial_expression
from .hom_oracle import (
    Factorization, PartialMapping, check_projective, compute_core, factorize_prime,
    find_homomorphism, parse_mapping,
)
from .dp_solver import SolveReport, solve, solve_via_factors
from .hardness_gen import (
    CSPInstance, build_forward_witness, homext_to_hom, parse_csp, reduce_csp, write_reduction,
)

__version__ = "1.0.0"
__description__ = "clique-width 参数化的图同态求解与下界实例生成"

__all__ = [
    'HomcwConfig',
    'setup_logger',
    'HomcwError',
    'GraphFormatError',
    'ExpressionSyntaxError',
    'MappingFormatError',
    'CSPFormatError',
    'InvalidGraphError',
    'CapExceededError',
    'PreconditionError',
    'ConstructionError',
    'Graph',
    'direct_product',
    'named_graph',
    'parse_graph',
    'serialize_graph',
    'SignatureFamily',
    'build_family',
    'signature_number',
    'KExpression',
    'evaluate',
    'parse_kexpr',
    'print_kexpr',
    'trivial_expression',
    'Factorization',
    'PartialMapping',
    'check_projective',
    'compute_core',
    'factorize_prime',
    'find_homomorphism',
    'parse_mapping',
    'SolveReport',
    'solve',
    'solve_via_factors',
    'CSPInstance',
    'build_forward_witness',
    'homext_to_hom',
    'parse_csp',
    'reduce_csp',
    'write_reduction',
]
