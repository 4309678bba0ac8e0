"""Classical dynamics of a position-dependent mass.

The Euler-Lagrange equation of ``L = m(x) v^2 / 2 - V(x)`` is

    m x'' + m'/2 x'^2 + V' = 0,

so ``x'' = A(x) v^2 + B(x)`` with ``A = -m'/(2m)`` and ``B = -V'/m``.
Trajectories are integrated with classic fixed-step RK4.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from pdmq.exprcalc import Expr, Param, TabulatedFunction, _source, _bind, diff_expr, simplify, compile_array
from pdmq.geometry import ProblemDef

log = logging.getLogger(__name__)

V_SYMBOL = Param("v")


class ClassicalError(ValueError):
    pass


class StepUnderflowError(ClassicalError):
    pass


class NonOscillatoryError(ClassicalError):
    pass


@dataclass(frozen=True)
class ClassicalState:
    x: float
    v: float
    t: float = 0.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled solution; ``exited`` marks an early stop at the domain edge."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    dt: float
    E: np.ndarray
    P: np.ndarray
    exited: bool = False
    geodesic: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def final(self) -> ClassicalState:
        return ClassicalState(float(self.x[-1]), float(self.v[-1]), float(self.t[-1]))

    def to_csv(self, path, include_P: bool | None = None) -> None:
        if include_P is None:
            include_P = self.geodesic
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "v", "E"] + (["P"] if include_P else []))
            cols = [self.t, self.x, self.v, self.E] + ([self.P] if include_P else [])
            for row in zip(*cols):
                w.writerow([repr(float(c)) for c in row])


def _coefficients(p: ProblemDef) -> tuple[Expr, Expr]:
    if isinstance(p.potential, TabulatedFunction):
        raise ClassicalError("classical dynamics needs a closed-form potential")
    m = p.mass
    a = simplify(-diff_expr(m) / (2 * m))
    b = simplify(-diff_expr(p.potential) / m)
    return a, b


def acceleration(p: ProblemDef) -> Expr:
    """Right-hand side ``x''`` as an expression in ``x`` and the parameter ``v``."""
    a, b = _coefficients(p)
    return simplify(a * V_SYMBOL ** 2 + b)


def _compile_rhs(p: ProblemDef):
    a, b = _coefficients(p)
    names: dict = {}
    src_a = _source(a, "math", names)
    src_b = _source(b, "math", names)
    env = {"math": math, **_bind(names, p.bindings)}
    # one generated function keeps the RK4 inner loop free of extra calls
    return eval(f"lambda x, v: ({src_a}) * v * v + ({src_b})", env)  # noqa: S307


_FAULTS = (ValueError, ZeroDivisionError, OverflowError)


def integrate(p: ProblemDef, s0: ClassicalState, dt: float, T: float) -> Trajectory:
    """Fixed-step RK4 from ``s0`` over ``[t0, t0 + T]`` with ``round(T/dt)`` steps.

    ``dt`` may be negative for backward integration.  If a step would
    leave the open domain (or hits a mass singularity inside a stage) the
    trajectory ends at the last interior sample and ``exited`` is set.
    """
    if not (dt != 0 and math.isfinite(dt)):
        raise ClassicalError("dt must be nonzero and finite")
    if not T > 0:
        raise ClassicalError("T must be positive")
    dom = p.domain
    if not dom.contains(s0.x):
        raise ClassicalError(f"initial position {s0.x} outside the domain")
    n = int(round(T / abs(dt)))
    if n < 1:
        raise ClassicalError("T shorter than one step")
    if s0.t + dt == s0.t or s0.t + n * dt == s0.t + (n - 1) * dt:
        raise StepUnderflowError(f"dt={dt} underflows against t={s0.t}")
    f = _compile_rhs(p)
    lo, hi = dom.lower, dom.upper

    xs = [0.0] * (n + 1)
    vs = [0.0] * (n + 1)
    x, v = float(s0.x), float(s0.v)
    xs[0], vs[0] = x, v
    h, h2, h6 = dt, 0.5 * dt, dt / 6.0
    done = n
    exited = False
    for i in range(1, n + 1):
        try:
            k1v = f(x, v)
            k1x = v
            k2x = v + h2 * k1v
            k2v = f(x + h2 * k1x, k2x)
            k3x = v + h2 * k2v
            k3v = f(x + h2 * k2x, k3x)
            k4x = v + h * k3v
            k4v = f(x + h * k3x, k4x)
        except _FAULTS:
            done, exited = i - 1, True
            break
        x_new = x + h6 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v_new = v + h6 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (lo < x_new < hi) or not math.isfinite(v_new):
            done, exited = i - 1, True
            break
        x, v = x_new, v_new
        xs[i], vs[i] = x, v
    if exited:
        log.info("trajectory left the domain after %d of %d steps", done, n)
    x_arr = np.array(xs[: done + 1])
    v_arr = np.array(vs[: done + 1])
    t_arr = s0.t + dt * np.arange(done + 1)
    m = compile_array(p.mass, p.bindings)(x_arr)
    V = compile_array(p.potential, p.bindings)(x_arr)
    return Trajectory(
        t=t_arr, x=x_arr, v=v_arr, dt=dt,
        E=0.5 * m * v_arr ** 2 + V, P=np.sqrt(m) * v_arr,
        exited=exited, geodesic=p.is_geodesic(),
        meta={"model": p.name, "steps": done},
    )


def _drift(q: np.ndarray) -> float:
    return float(np.max(np.abs(q - q[0])) / max(1.0, abs(q[0])))


def conservation_report(p: ProblemDef, tr: Trajectory) -> tuple[float, float | None]:
    """Relative drifts of the energy and, for geodesic motion, of ``P = sqrt(m) v``."""
    if len(tr) == 0:
        raise ClassicalError("empty trajectory")
    return _drift(tr.E), (_drift(tr.P) if p.is_geodesic() else None)


def measure_period(tr: Trajectory) -> float:
    """Mean period from successive downward zero crossings of ``v``.

    Each crossing is located by a quadratic through three samples around
    the sign change.
    """
    v, t = tr.v, tr.t
    if np.count_nonzero(np.diff(np.signbit(v))) < 3:
        raise NonOscillatoryError("fewer than three sign changes of v")
    idx = np.flatnonzero((v[:-1] > 0) & (v[1:] <= 0))
    crossings = []
    for i in idx:
        j = min(max(i, 1), len(v) - 2)
        t0, t1, t2 = t[j - 1], t[j], t[j + 1]
        c = np.polyfit([t0 - t1, 0.0, t2 - t1], [v[j - 1], v[j], v[j + 1]], 2)
        roots = np.roots(c)
        roots = roots[np.isreal(roots)].real + t1
        lo_t, hi_t = t[i], t[i + 1]
        ok = roots[(roots >= lo_t - 1e-12) & (roots <= hi_t + 1e-12)]
        if len(ok):
            crossings.append(float(ok[0]))
        else:
            # fall back to the secant root
            crossings.append(float(lo_t + (hi_t - lo_t) * v[i] / (v[i] - v[i + 1])))
    if len(crossings) < 2:
        raise NonOscillatoryError("no complete cycle in the trajectory")
    return float((crossings[-1] - crossings[0]) / (len(crossings) - 1))
