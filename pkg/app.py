"""
Command-line launcher, equivalent to `python -m etpa`.
"""

import sys

from etpa.cli_runner import main

if __name__ == "__main__":
    sys.exit(main())
