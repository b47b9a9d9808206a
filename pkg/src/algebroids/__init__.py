"""Exact symbolic toolkit for Courant algebroids on polynomial charts.

Checks structure axioms, Dirac structures, pullbacks, Baer combinations, and
the degree-truncated transgression construction — all over Q, so every
reported pass is an identity of polynomials, not a numerical approximation.
"""

__version__ = "0.1.0"
