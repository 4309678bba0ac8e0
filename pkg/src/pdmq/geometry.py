"""Metric geometry of a position-dependent mass.

The kinetic term ``T = m(x) v^2 / 2`` is the kinetic energy of the
one-dimensional metric ``ds^2 = m(x) dx^2``.  Its Killing field is
``X = m^{-1/2} d/dx``, the measure invariant under X is ``sqrt(m) dx``,
and the metric arclength ``y = int sqrt(m) dx`` turns the problem into a
constant-mass one.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.interpolate import PchipInterpolator

from pdmq.exprcalc import (
    Const, DomainError, Expr, TabulatedFunction, as_expr, compile_array,
    compile_scalar, diff_expr, simplify, substitute,
)

log = logging.getLogger(__name__)

OPEN_REGULAR = "open-regular"
SINGULAR = "singular-mass-blowup"
INFINITE = "infinite"
_KINDS = (OPEN_REGULAR, SINGULAR, INFINITE)


class GeometryError(ValueError):
    pass


class QuadratureError(GeometryError):
    def __init__(self, message: str, endpoint: float):
        super().__init__(f"{message} (endpoint {endpoint})")
        self.endpoint = endpoint


@dataclass(frozen=True)
class Domain:
    """Open interval ``(lower, upper)`` with the nature of each end."""

    lower: float = -math.inf
    upper: float = math.inf
    lower_kind: str = INFINITE
    upper_kind: str = INFINITE

    def __post_init__(self):
        if not self.lower < self.upper:
            raise GeometryError(f"empty domain ({self.lower}, {self.upper})")
        for kind, end in ((self.lower_kind, self.lower), (self.upper_kind, self.upper)):
            if kind not in _KINDS:
                raise GeometryError(f"unknown endpoint kind {kind!r}")
            if (kind == INFINITE) != math.isinf(end):
                raise GeometryError(f"endpoint {end} inconsistent with kind {kind!r}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x) -> np.ndarray | bool:
        return (x > self.lower) & (x < self.upper)

    def default_anchor(self) -> float:
        if self.lower < 0.0 < self.upper:
            return 0.0
        if math.isinf(self.lower) and math.isinf(self.upper):
            return 0.0
        if math.isinf(self.lower):
            return self.upper - 1.0
        if math.isinf(self.upper):
            return self.lower + 1.0
        return 0.5 * (self.lower + self.upper)

    def sample_interior(self, n: int, rng: np.random.Generator, margin: float = 0.01,
                        span: float = 10.0) -> np.ndarray:
        """Random interior points, kept ``margin`` (relative) off finite ends.

        Infinite sides are sampled up to ``span`` away from the anchor.
        """
        anchor = self.default_anchor()
        lo = anchor - span if math.isinf(self.lower) else None
        hi = anchor + span if math.isinf(self.upper) else None
        if lo is None:
            lo = self.lower + margin * ((hi if hi is not None else self.upper) - self.lower)
        if hi is None:
            hi = self.upper - margin * (self.upper - lo)
        return np.sort(rng.uniform(lo, hi, size=n))

    def as_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper,
                "lower_kind": self.lower_kind, "upper_kind": self.upper_kind}


@dataclass(frozen=True)
class ProblemDef:
    """A PDM system: mass, potential, configuration domain, parameter values."""

    mass: Expr
    potential: Expr | TabulatedFunction
    domain: Domain = field(default_factory=Domain)
    bindings: Mapping[str, float] = field(default_factory=dict)
    name: str = "inline"

    def __post_init__(self):
        object.__setattr__(self, "mass", as_expr(self.mass))
        if not isinstance(self.potential, TabulatedFunction):
            object.__setattr__(self, "potential", as_expr(self.potential))
        object.__setattr__(self, "bindings", dict(self.bindings))
        missing = (self.mass.params() | self.potential.params()) - set(self.bindings)
        if missing:
            raise GeometryError(f"unbound parameters: {sorted(missing)}")

    def m(self, x):
        return _eval(self.mass, x, self.bindings)

    def V(self, x):
        return _eval(self.potential, x, self.bindings)

    def resolved_mass(self) -> Expr:
        return simplify(substitute(self.mass, self.bindings))

    def resolved_potential(self):
        if isinstance(self.potential, TabulatedFunction):
            return self.potential
        return simplify(substitute(self.potential, self.bindings))

    def has_constant_mass(self) -> bool:
        return isinstance(self.resolved_mass(), Const)

    def is_geodesic(self) -> bool:
        v = self.resolved_potential()
        return isinstance(v, Const) and v.value == 0.0

    def check_mass(self, points: np.ndarray) -> None:
        try:
            values = np.atleast_1d(self.m(points))
        except DomainError as exc:
            raise GeometryError(f"mass undefined on the domain interior: {exc}") from None
        bad = ~(np.isfinite(values) & (values > 0))
        if bad.any():
            x_bad = np.atleast_1d(points)[bad][0]
            raise GeometryError(f"mass not strictly positive at x={x_bad!r}")


def _eval(e, x, bindings):
    if isinstance(e, TabulatedFunction):
        return e(x)
    if np.ndim(x) == 0:
        return compile_scalar(e, bindings)(float(x))
    return compile_array(e, bindings)(x)


def classify_endpoint(mass: Expr, bindings: Mapping[str, float], end: float) -> str:
    """Guess the kind of a finite or infinite endpoint from the mass there."""
    if math.isinf(end):
        return INFINITE
    try:
        value = compile_scalar(mass, bindings)(end)
    except DomainError:
        return SINGULAR
    if not math.isfinite(value) or value > 1e12 or value <= 0:
        return SINGULAR
    return OPEN_REGULAR


def make_domain(mass: Expr, bindings: Mapping[str, float], lower: float, upper: float) -> Domain:
    return Domain(lower, upper, classify_endpoint(mass, bindings, lower),
                  classify_endpoint(mass, bindings, upper))


# ---------------------------------------------------------------------------
# Killing data

@dataclass(frozen=True)
class KillingData:
    killing_component: Expr   # f = m^{-1/2}
    density: Expr             # rho = m^{1/2}
    killing_residual: Expr    # f m' + 2 m f'
    measure_residual: Expr    # f rho' + rho f'

    def residual_maxima(self, points: np.ndarray, bindings) -> tuple[float, float]:
        k = np.abs(compile_array(self.killing_residual, bindings)(points))
        mu = np.abs(compile_array(self.measure_residual, bindings)(points))
        return float(k.max()), float(mu.max())


def derive_killing(p: ProblemDef, probes: int = 64) -> KillingData:
    """Killing field, invariant density and both residual expressions."""
    p.check_mass(p.domain.sample_interior(probes, np.random.default_rng(0)))
    m = p.mass
    f = simplify(m ** -0.5)
    rho = simplify(m ** 0.5)
    dm, df, drho = diff_expr(m), diff_expr(f), diff_expr(rho)
    return KillingData(
        killing_component=f,
        density=rho,
        killing_residual=simplify(f * dm + 2 * m * df),
        measure_residual=simplify(f * drho + rho * df),
    )


def noether_momentum(p: ProblemDef) -> tuple[Expr, Expr]:
    """Coefficients ``(c_v, c_p)`` with ``P = c_v * v = c_p * p``."""
    return simplify(p.mass ** 0.5), simplify(p.mass ** -0.5)


# ---------------------------------------------------------------------------
# arclength map

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)

# Gauss-Kronrod 7/15 abscissae (non-negative half) and weights
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_K15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G7_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_WG7 = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    vals = f((c[:, None] + h[:, None] * _K15[None, :]).ravel()).reshape(len(a), 15)
    kron = h * (vals @ _WK15)
    gauss = h * (vals[:, _G7_IDX] @ _WG7)
    return kron, np.abs(kron - gauss)


def _adaptive_pieces(f, a, b, epsabs=1e-12, depth=24):
    """Integral of ``f`` over each ``[a_i, b_i]`` with per-interval bisection.

    Intervals whose Kronrod-Gauss difference exceeds ``epsabs`` (or the
    rounding floor of the value) are split until they pass or ``depth``
    halvings are spent.
    """
    total, err = _gk15(f, a, b)
    bad = err > np.maximum(epsabs, 1e-14 * np.abs(total))
    if depth == 0 or not bad.any():
        return total
    idx = np.flatnonzero(bad)
    mid = 0.5 * (a[idx] + b[idx])
    total[idx] = (_adaptive_pieces(f, a[idx], mid, 0.5 * epsabs, depth - 1)
                  + _adaptive_pieces(f, mid, b[idx], 0.5 * epsabs, depth - 1))
    return total


def _tail(increments: np.ndarray) -> float:
    """Remaining arclength beyond a geometrically approached end.

    The final steps shrink the distance to the end by a constant factor,
    so a finite tail shows up as geometrically decaying increments; a
    ratio near one means the arclength diverges.
    """
    if len(increments) < 3 or increments[-2] <= 0:
        return math.inf
    r = increments[-1] / increments[-2]
    r_prev = increments[-2] / increments[-3]
    if not (0 < r < 0.95) or abs(r - r_prev) > 0.05:
        return math.inf
    return float(increments[-1] * r / (1 - r))


@dataclass(frozen=True, eq=False)
class ArclengthMap:
    """Monotone map ``y(x) = int_{x0}^{x} sqrt(m) dx`` and its inverse.

    ``y_lower``/``y_upper`` are the arclength limits of the domain ends
    when the tabulation reached them, otherwise ``-inf``/``inf`` (the
    end lies beyond the tabulated range).
    """

    x0: float
    x_nodes: np.ndarray
    y_nodes: np.ndarray
    y_lower: float
    y_upper: float
    sqrt_mass: object = field(repr=False)
    _guess: PchipInterpolator = field(repr=False)

    @property
    def y_range(self) -> tuple[float, float]:
        return float(self.y_nodes[0]), float(self.y_nodes[-1])

    def _integral_from_node(self, j: np.ndarray, x: np.ndarray) -> np.ndarray:
        a = self.x_nodes[j]
        half = 0.5 * (x - a)
        pts = a[:, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
        vals = self.sqrt_mass(pts.ravel()).reshape(pts.shape)
        return self.y_nodes[j] + half * (vals @ _GL_WEIGHTS)

    def y_of(self, x):
        """Arclength coordinate of ``x`` (vectorized)."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.x_nodes[0], self.x_nodes[-1]
        if np.any(xs < lo) or np.any(xs > hi):
            raise GeometryError(f"x outside tabulated range [{lo}, {hi}]")
        j = np.clip(np.searchsorted(self.x_nodes, xs, side="right") - 1, 0, len(self.x_nodes) - 2)
        out = self._integral_from_node(j, xs)
        return float(out[0]) if np.ndim(x) == 0 else out

    def x_of(self, y):
        """Inverse map by monotone interpolation plus safeguarded Newton polish."""
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        ylo, yhi = self.y_range
        tol = 1e-12 * max(1.0, yhi - ylo)
        if np.any(ys < ylo - tol) or np.any(ys > yhi + tol):
            raise GeometryError(f"y outside tabulated range [{ylo}, {yhi}]")
        ys = np.clip(ys, ylo, yhi)
        j = np.clip(np.searchsorted(self.y_nodes, ys, side="right") - 1, 0, len(self.y_nodes) - 2)
        a, b = self.x_nodes[j], self.x_nodes[j + 1]
        x = np.clip(self._guess(ys), a, b)
        for _ in range(4):
            r = self._integral_from_node(j, x) - ys
            step = r / self.sqrt_mass(x)
            x_new = x - step
            outside = (x_new < a) | (x_new > b)
            if outside.any():
                # bisection fallback keeps the iterate inside its bracket
                below = r < 0
                a = np.where(below, x, a)
                b = np.where(below, b, x)
                x_new = np.where(outside, 0.5 * (a + b), x_new)
            if np.all(np.abs(x_new - x) <= 4e-16 * np.maximum(1.0, np.abs(x))):
                x = x_new
                break
            x = x_new
        return float(x[0]) if np.ndim(y) == 0 else x

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for xv, yv in zip(self.x_nodes, self.y_nodes):
                w.writerow([repr(float(xv)), repr(float(yv))])


def _march(sqrt_m, x0: float, end: float, direction: int, y_step: float, y_max: float,
           max_nodes: int = 200_000) -> tuple[list[float], bool]:
    """Step outward from ``x0`` with roughly uniform arclength increments.

    Returns the visited x values (excluding ``x0``) and whether the
    endpoint itself was approached to rounding level.
    """
    xs = []
    x = x0
    y_est = 0.0
    finite_end = math.isfinite(end)
    for _ in range(max_nodes):
        dx = y_step / sqrt_m(x)
        if finite_end:
            dx = min(dx, 0.5 * abs(end - x))
        else:
            dx = min(dx, max(1.0, abs(x)))
        # midpoint predictor so steps track the local metric
        xm = x + direction * 0.5 * dx
        dx2 = y_step / sqrt_m(xm)
        dx = min(dx2, 0.5 * abs(end - x)) if finite_end else min(dx2, max(1.0, abs(x)))
        x_next = x + direction * dx
        if x_next == x:
            return xs, True
        x = x_next
        xs.append(x)
        y_est += dx * sqrt_m(x - direction * 0.5 * dx)
        if y_est >= y_max:
            return xs, False
        if finite_end and abs(end - x) <= 1e-13 * max(1.0, abs(end)):
            return xs, True
        if not finite_end and abs(x) > 1e150:
            return xs, True
    raise QuadratureError("arclength tabulation did not terminate", end)


def arclength_map(p: ProblemDef, x0: float | None = None, resolution: int = 200,
                  y_max: float = 16.0) -> ArclengthMap:
    """Tabulate the metric arclength from ``x0`` outward to ``|y| = y_max``.

    ``resolution`` is the number of table nodes per unit of arclength.
    Interval integrals use adaptive Gauss-Kronrod quadrature (absolute
    tolerance 1e-12).  Finite ends are approached geometrically; when the
    arclength stays bounded there the limit is extrapolated from the last
    increments, otherwise the end is reported as unbounded.
    """
    dom = p.domain
    if x0 is None:
        x0 = dom.default_anchor()
    if not dom.contains(x0):
        raise GeometryError(f"anchor {x0} not in the domain interior")
    m_scalar = compile_scalar(p.mass, p.bindings)
    m_array = compile_array(p.mass, p.bindings)

    def sqrt_m_scalar(x):
        return math.sqrt(m_scalar(x))

    def sqrt_m(x):
        return np.sqrt(m_array(x))

    y_step = 1.0 / resolution
    left, left_reached = _march(sqrt_m_scalar, x0, dom.lower, -1, y_step, y_max)
    right, right_reached = _march(sqrt_m_scalar, x0, dom.upper, +1, y_step, y_max)
    x_nodes = np.array(left[::-1] + [x0] + right)
    if len(x_nodes) < 3:
        raise QuadratureError("domain too narrow to tabulate", dom.upper)

    pieces = _adaptive_pieces(sqrt_m, x_nodes[:-1], x_nodes[1:])
    if not np.all(np.isfinite(pieces)):
        raise QuadratureError("non-finite arclength increment",
                              dom.lower if left_reached else dom.upper)
    y_cum = np.concatenate([[0.0], np.cumsum(pieces)])
    y_nodes = y_cum - y_cum[len(left)]

    y_lower = -math.inf
    y_upper = math.inf
    if left_reached:
        y_lower = float(y_nodes[0] - _tail(pieces[:8][::-1]))
    if right_reached:
        y_upper = float(y_nodes[-1] + _tail(pieces[-8:]))
    log.debug("arclength map: %d nodes, y in [%g, %g]", len(x_nodes), y_nodes[0], y_nodes[-1])
    return ArclengthMap(
        x0=float(x0), x_nodes=x_nodes, y_nodes=y_nodes, y_lower=y_lower, y_upper=y_upper,
        sqrt_mass=sqrt_m, _guess=PchipInterpolator(y_nodes, x_nodes),
    )
