"""Exact symbolic point-symmetry analysis of the vacuum field equations with
cosmological term in N dimensions."""

from __future__ import annotations

from .exprcore import Expr, FracExpr
from .jetspace import MetricContext

__version__ = "0.1.0"

__all__ = ["Expr", "FracExpr", "MetricContext", "__version__"]
