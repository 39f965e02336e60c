"""
Entry point for running polyconc as a module.

This allows the package to be executed with: python -m polyconc
"""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
