"""Position-dependent-mass quantization toolkit.

Killing vector fields, invariant measures and Noether momenta of the
PDM metric ``ds^2 = m(x) dx^2``; quantum Hamiltonians under Noether,
Laplace-Beltrami and von Roos orderings; classical and spectral solvers.
"""

from pdmq.exprcalc import Expr, parse_expr, eval_expr, diff_expr, simplify, format_expr

__version__ = "0.1.0"

__all__ = ["Expr", "parse_expr", "eval_expr", "diff_expr", "simplify", "format_expr"]
