"""Numerical convex geometry around the centroid/Santalo-point separation.

Modules
-------
specfun   log-gamma and lp-ball volumes in log space
bodies    star bodies given by gauge and support evaluators
moments   mixed volumes of ball and cube, hull centroid heights
volmc     seeded Monte Carlo volume machinery and grid oracles
profile   section profile of the polar hull and its centroid
santalo   polar volumes, Santalo point search and the half-ball example
"""

__version__ = "0.1.0"

from .errors import DiagnosticsError, DomainError, UnsupportedError

__all__ = ["DiagnosticsError", "DomainError", "UnsupportedError", "__version__"]
