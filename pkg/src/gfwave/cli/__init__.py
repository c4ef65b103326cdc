"""Command-line interface and problem-spec files."""

from .builtins import BUILTINS
from .main import build_parser, main
from .spec import ProblemSpec, build_problem, exact_solution, parse_spec, serialize_spec

__all__ = ["BUILTINS", "ProblemSpec", "build_parser", "build_problem", "exact_solution", "main", "parse_spec",
           "serialize_spec"]
