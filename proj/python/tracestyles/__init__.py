"""Behavioural styles from app usage traces."""

from ._core import (
    ArgumentError,
    Error,
    FormulaError,
    Model,
    ParseError,
    check,
    check_dtmc,
    fit,
    format_formula,
    generate,
    jenks,
    normalize_traces,
    run_suite,
)

__all__ = [
    "ArgumentError",
    "Error",
    "FormulaError",
    "Model",
    "ParseError",
    "check",
    "check_dtmc",
    "fit",
    "format_formula",
    "generate",
    "jenks",
    "normalize_traces",
    "run_suite",
]
