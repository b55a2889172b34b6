"""
main.py

Root-level entry point for the NLS laboratory. Delegates to the command line
in app/cli/main.py:

    python main.py figure1 --out results/figure1
"""

import sys

from app.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
