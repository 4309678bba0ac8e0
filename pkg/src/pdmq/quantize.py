"""Quantum Hamiltonians of a PDM system as second-order differential operators.

Every prescription is reduced to the normal form

    H psi = a(x) psi'' + b(x) psi' + c(x) psi

together with the density ``w`` of the inner product in which ``H`` is
symmetric.  Expansions are done exactly with a small algebra of
operators ``sum_k f_k(x) D^k`` whose composition follows the Leibniz rule.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from math import comb
from typing import Mapping

import numpy as np

from pdmq.exprcalc import (
    ONE, ZERO, Const, Expr, TabulatedFunction, as_expr, diff_expr, evaluate,
    format_expr, simplify,
)
from pdmq.geometry import ProblemDef


class OrderingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# ordering schemes

NAMED_ORDERINGS = {
    "bdd": (0.0, -1.0, 0.0),          # BenDaniel-Duke
    "ben-daniel-duke": (0.0, -1.0, 0.0),
    "zk": (-0.5, 0.0, -0.5),          # Zhu-Kroemer
    "zhu-kroemer": (-0.5, 0.0, -0.5),
    "symmetric": (-1.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class OrderingScheme:
    kind: str                                  # noether | laplace-beltrami | von-roos
    exponents: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("noether", "laplace-beltrami", "von-roos"):
            raise OrderingError(f"unknown ordering {self.kind!r}")
        if self.kind == "von-roos":
            if self.exponents is None or len(self.exponents) != 3:
                raise OrderingError("von Roos ordering needs three exponents")
            ex = tuple(float(a) for a in self.exponents)
            object.__setattr__(self, "exponents", ex)
            if abs(sum(ex) + 1.0) > 1e-12:
                raise OrderingError(f"von Roos exponents {ex} must sum to -1")
        elif self.exponents is not None:
            raise OrderingError(f"{self.kind} takes no exponents")

    @classmethod
    def von_roos(cls, a1: float, a2: float, a3: float) -> "OrderingScheme":
        return cls("von-roos", (a1, a2, a3))

    @classmethod
    def parse(cls, text: str) -> "OrderingScheme":
        """Accepts ``noether``, ``lb``, ``vonroos:a1,a2,a3``, ``von-roos(a1,a2,a3)``
        and the names ``bdd``, ``zk``, ``symmetric``."""
        t = text.strip().lower()
        if t == "noether":
            return cls("noether")
        if t in ("lb", "laplace-beltrami"):
            return cls("laplace-beltrami")
        if t in NAMED_ORDERINGS:
            return cls("von-roos", NAMED_ORDERINGS[t])
        match = re.fullmatch(r"(?:vonroos|von-roos)\s*[:(]\s*([^)]*)\)?", t)
        if not match:
            raise OrderingError(f"cannot parse ordering {text!r}")
        try:
            parts = [float(s) for s in match.group(1).split(",")]
        except ValueError:
            raise OrderingError(f"bad von Roos exponents in {text!r}") from None
        if len(parts) != 3:
            raise OrderingError(f"von Roos ordering needs three exponents, got {text!r}")
        return cls("von-roos", tuple(parts))

    def __str__(self):
        if self.kind == "von-roos":
            return "von-roos({:g},{:g},{:g})".format(*self.exponents)
        return self.kind


# ---------------------------------------------------------------------------
# differential operators sum_k f_k D^k

@dataclass(frozen=True)
class DiffOp:
    coeffs: tuple[Expr, ...]

    @classmethod
    def mult(cls, f) -> "DiffOp":
        return cls((simplify(as_expr(f)),))

    @classmethod
    def d(cls) -> "DiffOp":
        return cls((ZERO, ONE))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> Expr:
        return self.coeffs[k] if k < len(self.coeffs) else ZERO

    def __add__(self, other: "DiffOp") -> "DiffOp":
        n = max(len(self.coeffs), len(other.coeffs))
        return DiffOp(tuple(simplify(self.coeff(k) + other.coeff(k)) for k in range(n)))

    def scale(self, s) -> "DiffOp":
        s = as_expr(s)
        return DiffOp(tuple(simplify(s * c) for c in self.coeffs))

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        # (f D^j)(g D^k) = f * sum_i C(j,i) g^(i) D^(j-i+k)
        out = [ZERO] * (self.order + other.order + 1)
        for j, f in enumerate(self.coeffs):
            if f == ZERO:
                continue
            for k, g in enumerate(other.coeffs):
                deriv = g
                for i in range(j + 1):
                    if i:
                        deriv = diff_expr(deriv)
                    term = simplify(Const(float(comb(j, i))) * f * deriv)
                    out[j - i + k] = simplify(out[j - i + k] + term)
        return DiffOp(tuple(out))


# ---------------------------------------------------------------------------
# operator coefficients

@dataclass(frozen=True)
class OperatorCoefficients:
    scheme: str
    a: Expr
    b: Expr
    c: Expr | TabulatedFunction
    weight: Expr
    hbar: float
    bindings: Mapping[str, float] = field(default_factory=dict)

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(a, b, c, weight)`` at the points ``x``."""
        x = np.asarray(x, dtype=float)
        return tuple(np.broadcast_to(np.asarray(evaluate(e, x, self.bindings), dtype=float),
                                     x.shape).copy()
                     for e in (self.a, self.b, self.c, self.weight))

    def as_dict(self) -> dict:
        return {"scheme": self.scheme, "hbar": self.hbar,
                "a": format_expr(self.a), "b": format_expr(self.b),
                "c": str(self.c) if isinstance(self.c, TabulatedFunction) else format_expr(self.c),
                "weight": format_expr(self.weight)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def _from_diffop(op: DiffOp, potential, weight, scheme, hbar, p: ProblemDef) -> OperatorCoefficients:
    if op.order != 2:
        raise ValueError("kinetic operator must be second order")
    c = op.coeff(0)
    if isinstance(potential, TabulatedFunction):
        if c != ZERO:
            raise ValueError("tabulated potential with a non-vanishing ordering term")
        c_total = potential
    else:
        c_total = simplify(potential + c)
    return OperatorCoefficients(scheme, op.coeff(2), op.coeff(1), c_total,
                                simplify(weight), float(hbar), dict(p.bindings))


def _hbar2(hbar: float) -> Const:
    return Const(float(hbar) ** 2)


def build_noether(p: ProblemDef, hbar: float = 1.0) -> OperatorCoefficients:
    """``-(hbar^2/2) (m^{-1/2} D)^2 + V``, symmetric in ``L^2(sqrt(m) dx)``."""
    pn = DiffOp.mult(p.mass ** -0.5) @ DiffOp.d()
    kinetic = (pn @ pn).scale(Const(-0.5) * _hbar2(hbar))
    return _from_diffop(kinetic, p.potential, p.mass ** 0.5, "noether", hbar, p)


def build_laplace_beltrami(p: ProblemDef, hbar: float = 1.0) -> OperatorCoefficients:
    """``-(hbar^2/2) div grad + V`` for the metric ``g = m``.

    ``div grad f = g^{-1/2} D (g^{1/2} g^{-1} D f)``.
    """
    g = p.mass
    sqrt_g = g ** 0.5
    lap = DiffOp.mult(1 / sqrt_g) @ DiffOp.d() @ DiffOp.mult(sqrt_g * (1 / g)) @ DiffOp.d()
    kinetic = lap.scale(Const(-0.5) * _hbar2(hbar))
    return _from_diffop(kinetic, p.potential, sqrt_g, "laplace-beltrami", hbar, p)


def _von_roos_kinetic(p: ProblemDef, hbar: float, s: OrderingScheme) -> DiffOp:
    if s.kind != "von-roos":
        raise OrderingError(f"{s} is not a von Roos ordering")
    e1, e2, e3 = s.exponents
    m = p.mass
    mp = {e: DiffOp.mult(m ** e) for e in (e1, e2, e3)}
    d = DiffOp.d()
    # p = -i hbar D, so m^a p m^b p m^c = -hbar^2 m^a D m^b D m^c
    first = mp[e1] @ d @ mp[e2] @ d @ mp[e3]
    second = mp[e3] @ d @ mp[e2] @ d @ mp[e1]
    return (first + second).scale(Const(-0.25) * _hbar2(hbar))


def build_von_roos(p: ProblemDef, hbar: float, s: OrderingScheme) -> OperatorCoefficients:
    """``(1/4)(m^a1 p m^a2 p m^a3 + m^a3 p m^a2 p m^a1) + V`` in ``L^2(dx)``."""
    op = _von_roos_kinetic(p, hbar, s)
    return _from_diffop(op, p.potential, ONE, str(s), hbar, p)


def build(p: ProblemDef, hbar: float, s: OrderingScheme) -> OperatorCoefficients:
    if s.kind == "noether":
        return build_noether(p, hbar)
    if s.kind == "laplace-beltrami":
        return build_laplace_beltrami(p, hbar)
    return build_von_roos(p, hbar, s)


def ordering_potential(p: ProblemDef, hbar: float, s: OrderingScheme) -> Expr:
    """Multiplication term of ``s`` relative to the BenDaniel-Duke ordering."""
    u = _von_roos_kinetic(p, hbar, s).coeff(0)
    ref = _von_roos_kinetic(p, hbar, OrderingScheme.von_roos(0, -1, 0)).coeff(0)
    return simplify(u - ref)


def conjugate_to_lebesgue(op: OperatorCoefficients) -> OperatorCoefficients:
    """``W H W^{-1}`` with ``W psi = m^{1/4} psi``, mapping ``L^2(sqrt(m) dx)`` to ``L^2(dx)``.

    ``op`` must carry the weight ``sqrt(m)``, so ``W`` is ``weight^{1/2}``.
    """
    if isinstance(op.c, TabulatedFunction):
        raise ValueError("conjugation needs a closed-form potential")
    h = DiffOp((op.c, op.b, op.a))
    conj = DiffOp.mult(op.weight ** 0.5) @ h @ DiffOp.mult(op.weight ** -0.5)
    return OperatorCoefficients(f"{op.scheme}+lebesgue", conj.coeff(2), conj.coeff(1),
                                conj.coeff(0), ONE, op.hbar, dict(op.bindings))


def max_coefficient_gap(u: OperatorCoefficients, v: OperatorCoefficients, x) -> float:
    """Largest pointwise difference between the coefficient sets of two operators."""
    return max(float(np.max(np.abs(p - q))) for p, q in zip(u.evaluate(x), v.evaluate(x)))


__all__ = [
    "OrderingScheme", "OrderingError", "DiffOp", "OperatorCoefficients", "build",
    "build_noether", "build_laplace_beltrami", "build_von_roos", "ordering_potential",
    "conjugate_to_lebesgue", "max_coefficient_gap", "NAMED_ORDERINGS",
]
