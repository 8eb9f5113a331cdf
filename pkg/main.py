#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
clique-width 图同态工具 - 主程序
Clique-width Graph Homomorphism Toolkit - Main Program

使用方法:
    python main.py signature @K3
    python main.py solve --target @K3 --expr G.cwexpr
    python main.py --help

Version: 1.0
"""

import sys

try:
    from homcw.cli import run
except ImportError as e:
    print(f"导入错误: {e}")
    print("请确保所有依赖已正确安装: pip install -r requirements.txt")
    sys.exit(2)


def main():
    """主函数"""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
