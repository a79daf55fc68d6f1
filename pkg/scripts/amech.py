"""
AMECH ENTRY POINT
Usage: python scripts/amech.py <validate|integrate|jacobi|conjugate|secondvar|crosscheck> --config <path> [--out <dir>]
"""

import os
import sys

# Ensure src module can be imported
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
