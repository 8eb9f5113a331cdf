# -*- coding: utf-8 -*-
"""
异常定义
Exception hierarchy for the toolkit
"""

from typing import Optional


class HomcwError(Exception):
    """所有工具包错误的基类"""


class GraphFormatError(HomcwError):
    """图文件格式错误"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ExpressionSyntaxError(HomcwError):
    """k-表达式语法或校验错误"""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"position {position}: {message}"
        super().__init__(message)


class MappingFormatError(GraphFormatError):
    """部分映射文件格式错误"""


class CSPFormatError(GraphFormatError):
    """CSP 文件格式错误"""


class InvalidGraphError(HomcwError):
    """图不满足操作要求（未知顶点、自环等）"""


class CapExceededError(HomcwError):
    """超出规模上限"""


class PreconditionError(HomcwError):
    """前置条件不成立"""


class ConstructionError(HomcwError):
    """生成器内部不变量被破坏"""
