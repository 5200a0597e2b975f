"""
factest エントリーポイント

    python main.py analyze --input data.csv --method WTS
"""
import sys

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
