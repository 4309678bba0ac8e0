"""Built-in systems in dimensionless form and their physical scalings.

Lengths are measured in ``sqrt(hbar/(m0 alpha))``, energies in
``hbar alpha``.  The deformation parameters scale as
``lambda = sqrt(m0 alpha/hbar) Lambda`` and ``kappa = (m0 alpha/hbar) kappa~``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

from pdmq.exprcalc import Expr, parse_expr
from pdmq.geometry import INFINITE, OPEN_REGULAR, SINGULAR, Domain, ProblemDef


class ModelError(ValueError):
    pass


def _domain_k(b: Mapping[str, float]) -> Domain:
    k = b["k"]
    if k <= 0:
        return Domain()
    edge = 1.0 / math.sqrt(k)
    return Domain(-edge, edge, SINGULAR, SINGULAR)


def _domain_log(b: Mapping[str, float]) -> Domain:
    return Domain(-1.0 / b["L"], math.inf, SINGULAR, INFINITE)


def _domain_tanh(b: Mapping[str, float]) -> Domain:
    edge = 1.0 / b["L"]
    return Domain(-edge, edge, SINGULAR, SINGULAR)


def _positive(name):
    def check(v):
        if not (v > 0 and math.isfinite(v)):
            raise ModelError(f"{name} must be positive, got {v}")
    return check


def _finite(name):
    def check(v):
        if not math.isfinite(v):
            raise ModelError(f"{name} must be finite, got {v}")
    return check


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict[str, str]                   # name -> admissible range (text)
    mass: Expr
    potential: Expr
    domain_rule: Callable[[Mapping[str, float]], Domain]
    checks: dict[str, Callable[[float], None]] = field(default_factory=dict, repr=False)
    symmetric: bool = False
    citation: str = ""
    defaults: dict[str, float] = field(default_factory=dict)

    def instantiate(self, params: Mapping[str, float] | None = None) -> ProblemDef:
        b = dict(self.defaults)
        b.update(params or {})
        unknown = set(b) - set(self.params)
        if unknown:
            raise ModelError(f"{self.name}: unknown parameters {sorted(unknown)}")
        missing = set(self.params) - set(b)
        if missing:
            raise ModelError(f"{self.name}: missing parameters {sorted(missing)}")
        b = {k: float(v) for k, v in b.items()}
        for name, check in self.checks.items():
            check(b[name])
        return ProblemDef(self.mass, self.potential, self.domain_rule(b), b, name=self.name)

    def describe(self) -> dict:
        return {"name": self.name, "params": self.params, "mass": str(self.mass),
                "potential": str(self.potential), "symmetric": self.symmetric,
                "citation": self.citation, "defaults": self.defaults}


MODELS: dict[str, ModelSpec] = {
    m.name: m for m in (
        ModelSpec(
            "quasi-harmonic-k", {"k": "real; domain |x| < 1/sqrt(k) when k > 0"},
            parse_expr("1/(1 - k*x^2)"), parse_expr("0.5*x^2/(1 - k*x^2)"), _domain_k,
            {"k": _finite("k")}, symmetric=True, citation="quasi-harmonic oscillator",
            defaults={"k": 0.5},
        ),
        ModelSpec(
            "arcsinh-osc", {"L": "> 0"},
            parse_expr("1/(1 + L^2*x^2)"), parse_expr("arcsinh(L*x)^2/(2*L^2)"),
            lambda b: Domain(), {"L": _positive("L")}, symmetric=True,
            citation="model 1", defaults={"L": 1.0},
        ),
        ModelSpec(
            "log-osc", {"L": "> 0; domain x > -1/L"},
            parse_expr("1/(1 + L*x)^2"), parse_expr("log(1 + L*x)^2/(2*L^2)"),
            _domain_log, {"L": _positive("L")}, symmetric=False,
            citation="model 2", defaults={"L": 1.0},
        ),
        ModelSpec(
            "arctanh-osc", {"L": "> 0; domain |x| < 1/L"},
            parse_expr("1/(1 - L^2*x^2)^2"), parse_expr("arctanh(L*x)^2/(2*L^2)"),
            _domain_tanh, {"L": _positive("L")}, symmetric=True,
            citation="model 3", defaults={"L": 1.0},
        ),
    )
}

ALIASES = {"K": "quasi-harmonic-k", "ml": "quasi-harmonic-k", "1": "arcsinh-osc",
           "2": "log-osc", "3": "arctanh-osc"}


def get_model(name: str) -> ModelSpec:
    try:
        return MODELS[ALIASES.get(name, name)]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; known: {sorted(MODELS)}") from None


def builtin(name: str, params: Mapping[str, float] | None = None) -> ProblemDef:
    """Dimensionless problem for a registered model.

    For ``quasi-harmonic-k`` a parameter ``lam`` may be given instead of
    ``k``; it is the Mathews-Lakshmanan sign convention ``k = -lam``.
    """
    params = dict(params or {})
    spec = get_model(name)
    if spec.name == "quasi-harmonic-k" and "lam" in params:
        if "k" in params:
            raise ModelError("give either k or lam, not both")
        params["k"] = -float(params.pop("lam"))
    return spec.instantiate(params)


def mathews_lakshmanan(lam: float, alpha: float = 1.0) -> ProblemDef:
    """``m = 1/(1 + lam x^2)``, ``V = alpha^2 x^2 / (2 (1 + lam x^2))`` (physical units)."""
    if lam < 0:
        edge = 1.0 / math.sqrt(-lam)
        dom = Domain(-edge, edge, SINGULAR, SINGULAR)
    else:
        dom = Domain()
    return ProblemDef(parse_expr("1/(1 + lam*x^2)"),
                      parse_expr("0.5*alpha^2*x^2/(1 + lam*x^2)"), dom,
                      {"lam": float(lam), "alpha": float(alpha)}, name="mathews-lakshmanan")


def ml_period(lam: float, amplitude: float, alpha: float = 1.0) -> float:
    return 2 * math.pi * math.sqrt(1 + lam * amplitude ** 2) / alpha


# ---------------------------------------------------------------------------
# scaling

@dataclass(frozen=True)
class ScalingMap:
    hbar: float = 1.0
    m0: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "m0", "alpha"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ModelError(f"{name} must be positive, got {v}")

    @property
    def length(self) -> float:
        return math.sqrt(self.hbar / (self.m0 * self.alpha))

    @property
    def energy(self) -> float:
        return self.hbar * self.alpha

    def x_of(self, xt: float) -> float:
        return self.length * xt

    def xt_of(self, x: float) -> float:
        return x / self.length

    def lam_to_dimensionless(self, lam: float) -> float:
        return lam * self.length

    def lam_from_dimensionless(self, Lam: float) -> float:
        return Lam / self.length

    def kappa_to_dimensionless(self, kappa: float) -> float:
        return kappa * self.length ** 2

    def kappa_from_dimensionless(self, kt: float) -> float:
        return kt / self.length ** 2

    def E_of(self, e: float) -> float:
        return self.energy * e

    def e_of(self, E: float) -> float:
        return E / self.energy

    def as_dict(self) -> dict:
        return {"hbar": self.hbar, "m0": self.m0, "alpha": self.alpha}


def to_dimensionless(hbar: float, m0: float, alpha: float, *, lam: float | None = None,
                     kappa: float | None = None) -> tuple[float, ScalingMap]:
    """Dimensionless deformation (``Lambda`` or ``kappa~``) and the scaling map."""
    smap = ScalingMap(hbar, m0, alpha)
    if (lam is None) == (kappa is None):
        raise ModelError("give exactly one of lam or kappa")
    if lam is not None:
        return smap.lam_to_dimensionless(lam), smap
    return smap.kappa_to_dimensionless(kappa), smap


def from_dimensionless(value: float, smap: ScalingMap, kind: str = "lam") -> float:
    if kind == "lam":
        return smap.lam_from_dimensionless(value)
    if kind == "kappa":
        return smap.kappa_from_dimensionless(value)
    raise ModelError(f"unknown parameter kind {kind!r}")


__all__ = ["ModelSpec", "MODELS", "builtin", "get_model", "mathews_lakshmanan", "ml_period",
           "ScalingMap", "to_dimensionless", "from_dimensionless", "ModelError", "OPEN_REGULAR"]
