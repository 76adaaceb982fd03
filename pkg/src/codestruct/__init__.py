"""Structural complexity metrics, complexity-controlled splits and rank-correlation analysis for code corpora."""

from .metrics import ComplexityMetrics, SourceUnit, analyze

__version__ = "0.1.0"

__all__ = ["ComplexityMetrics", "SourceUnit", "analyze", "__version__"]
