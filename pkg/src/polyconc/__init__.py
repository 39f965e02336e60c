"""
polyconc

Numerical checks of polynomial inequalities under log-concave measures:
witness ratios, worst-case searches, Gaussian small-ball and tail scans, and
isoperimetry of polynomial pushforwards.
"""

__version__ = "0.1.0"
__description__ = "Polynomial inequalities under log-concave measures"

from .cli import main

__all__ = ["main"]
