"""Numerical study of tracts, critical points and asymptotic values of entire functions."""

from .expr import ParseError, derivative, eval_log, evaluate, parse
from .field import ScalarField, Window, extract_contours, label_components, sample_field

__version__ = "0.1.0"

__all__ = ["ParseError", "ScalarField", "Window", "derivative", "eval_log", "evaluate",
           "extract_contours", "label_components", "parse", "sample_field"]
