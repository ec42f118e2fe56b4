#!/usr/bin/env python3
"""
Lungtex — Lung-sound texture classification
Command-line entry point
"""

import sys
import os

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, HERE)

from src.cli.commands import main


if __name__ == "__main__":
    sys.exit(main())
