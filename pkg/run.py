#!/usr/bin/env python3
"""
ncrank 실행 스크립트

사용 예:
    python run.py rank preset:a0 --auto-block --y 1e-5 --eps 1e-3
    python run.py iterations --beta 1.0 --delta 0.1 --radius explicit --mode apriori
"""

import sys

from ncrank.cli import main

if __name__ == "__main__":
    sys.exit(main())
