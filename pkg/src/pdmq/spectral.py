"""Discretization and eigen-solution of PDM Hamiltonians.

An operator ``a psi'' + b psi' + c psi`` with density ``w`` satisfying
``(w a)' = w b`` is the Sturm-Liouville operator

    H psi = -(1/w) (q psi')' + c psi,    q = -w a,

which is symmetric in ``L^2(w dx)``.  It is discretized by finite
volumes: nodes ``x_i``, cell faces ``x_{i+1/2}``, cell volumes
``Delta_i``.  With ``r_i = w_i Delta_i`` the matrix ``R H`` is symmetric,
so ``S = R^{1/2} H R^{-1/2}`` is a symmetric tridiagonal matrix.

The default mesh is uniform in the metric arclength ``y`` and mapped to
``x`` through the arclength map; on a uniform x mesh the same formulas
reduce to the textbook flux-form three-point scheme.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from pdmq.exprcalc import ONE, DomainError, TabulatedFunction, diff_expr, evaluate, simplify
from pdmq.geometry import (
    INFINITE, OPEN_REGULAR, SINGULAR, ArclengthMap, Domain, GeometryError, ProblemDef,
    arclength_map,
)
from pdmq.quantize import OperatorCoefficients, OrderingScheme, build

log = logging.getLogger(__name__)

DEFAULT_Y_CUT = 12.0
DEFAULT_EDGE_OFFSET = 1e-9


class SpectralError(RuntimeError):
    pass


class DiscretizationError(SpectralError):
    pass


class TruncationError(SpectralError):
    pass


class ConvergenceError(SpectralError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True, eq=False)
class Grid:
    """Interior nodes plus the two Dirichlet boundary nodes and the cell faces.

    ``x`` holds the ``N`` interior nodes, ``x_bounds`` the boundary nodes,
    ``faces`` the ``N + 1`` points between consecutive nodes.  ``y`` is
    the coordinate in which the mesh is uniform (``x`` itself for
    ``kind == "uniform"``) and ``h`` its spacing.
    """

    kind: str
    x: np.ndarray
    x_bounds: tuple[float, float]
    faces: np.ndarray
    h: float
    y: np.ndarray | None = None
    y_bounds: tuple[float, float] | None = None

    @property
    def N(self) -> int:
        return len(self.x)

    @property
    def all_nodes(self) -> np.ndarray:
        return np.concatenate([[self.x_bounds[0]], self.x, [self.x_bounds[1]]])

    @property
    def volumes(self) -> np.ndarray:
        return np.diff(self.faces)

    @classmethod
    def uniform(cls, lower: float, upper: float, N: int) -> "Grid":
        """``N`` interior points, uniform in x, Dirichlet at ``lower`` and ``upper``."""
        if N < 2:
            raise DiscretizationError("need at least two interior points")
        if not (math.isfinite(lower) and math.isfinite(upper) and lower < upper):
            raise DiscretizationError(f"bad grid bounds [{lower}, {upper}]")
        h = (upper - lower) / (N + 1)
        nodes = lower + h * np.arange(N + 2)
        nodes[-1] = upper
        faces = lower + h * (np.arange(N + 1) + 0.5)
        return cls("uniform", nodes[1:-1], (float(lower), float(upper)), faces, h)

    @classmethod
    def arclength(cls, amap: ArclengthMap, y_lower: float, y_upper: float, N: int,
                  x_bounds: tuple[float, float] | None = None) -> "Grid":
        """Nodes at ``x(y_i)`` for ``y_i`` uniform on ``[y_lower, y_upper]``."""
        if N < 2:
            raise DiscretizationError("need at least two interior points")
        h = (y_upper - y_lower) / (N + 1)
        ys = y_lower + h * np.arange(N + 2)
        ys[-1] = y_upper
        yf = y_lower + h * (np.arange(N + 1) + 0.5)
        xs = amap.x_of(ys)
        if x_bounds is not None:
            xs[0], xs[-1] = x_bounds
        xf = amap.x_of(yf)
        if np.any(np.diff(xs) <= 0):
            raise DiscretizationError("arclength mesh is not strictly increasing "
                                      "(too fine for double precision near an edge)")
        return cls("arclength", xs[1:-1], (float(xs[0]), float(xs[-1])), xf, h,
                   y=ys[1:-1], y_bounds=(float(y_lower), float(y_upper)))


# ---------------------------------------------------------------------------
# truncation

@dataclass(frozen=True)
class Box:
    """Dirichlet box, given both in x and in the arclength coordinate."""

    x_lower: float
    x_upper: float
    y_lower: float
    y_upper: float

    def as_dict(self) -> dict:
        return {"x": [self.x_lower, self.x_upper], "y": [self.y_lower, self.y_upper]}


def truncation_box(p: ProblemDef, amap: ArclengthMap, y_cut: float = DEFAULT_Y_CUT,
                   edge_offset: float = DEFAULT_EDGE_OFFSET) -> Box:
    """Physical box for a Dirichlet solve.

    Each side is cut at arclength ``y_cut`` from the anchor unless the
    domain ends sooner: a regular end is used as is, a singular end is
    pulled in by ``edge_offset`` times the domain width (or by
    ``edge_offset`` when the width is infinite).
    """
    dom = p.domain
    width = dom.width if math.isfinite(dom.width) else 1.0
    ends = []
    for side, end, kind, y_lim in ((-1, dom.lower, dom.lower_kind, amap.y_lower),
                                   (+1, dom.upper, dom.upper_kind, amap.y_upper)):
        if kind == INFINITE or not math.isfinite(y_lim) or abs(y_lim) > y_cut:
            y_end = side * y_cut
            lo, hi = amap.y_range
            if not lo <= y_end <= hi:
                raise TruncationError(f"arclength table [{lo}, {hi}] does not reach y={y_end}")
            x_end = float(amap.x_of(y_end))
            if kind != INFINITE and abs(x_end - end) <= edge_offset * width:
                x_end = end - side * edge_offset * width
                y_end = float(amap.y_of(x_end))
        else:
            x_end = end if kind == OPEN_REGULAR else end - side * edge_offset * width
            ylo, yhi = amap.y_range
            if x_end < amap.x_nodes[0] or x_end > amap.x_nodes[-1]:
                # past the last table node: use the extrapolated limit
                y_end = y_lim
            else:
                y_end = float(amap.y_of(x_end))
        ends.append((x_end, y_end))
    (xl, yl), (xr, yr) = ends
    if not xl < xr:
        raise TruncationError("empty truncation box")
    return Box(xl, xr, yl, yr)


def check_truncation(p: ProblemDef, box: Box, energy: float) -> bool:
    """Warn when the potential at a cut is not well above ``energy``."""
    ok = True
    dom = p.domain
    for x_end, end, kind in ((box.x_lower, dom.lower, dom.lower_kind),
                             (box.x_upper, dom.upper, dom.upper_kind)):
        if kind == OPEN_REGULAR and x_end == end:
            continue
        try:
            v = float(evaluate(p.potential, x_end, p.bindings))
        except DomainError:
            continue
        if v < 2.0 * energy + 10.0:
            log.warning("potential %.3g at cut x=%.6g is below 2*e + 10 for e=%.3g; "
                        "truncation error may be visible", v, x_end, energy)
            ok = False
    return ok


# ---------------------------------------------------------------------------
# assembly

@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Three-point operator ``H`` and its symmetrized form ``S``.

    ``lower[i]`` couples node ``i+1`` to node ``i`` in row ``i+1``,
    ``upper[i]`` couples node ``i+1`` into row ``i``.  ``d`` and ``e`` are
    the diagonal and off-diagonal of ``S = R^{1/2} H R^{-1/2}``; ``r`` is
    the inner-product weight per node (density times cell volume).
    """

    grid: Grid
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    r: np.ndarray
    d: np.ndarray
    e: np.ndarray
    symmetrized: bool
    op: OperatorCoefficients
    mode: str = "flux"

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[:-1] += self.upper * u[1:]
        out[1:] += self.lower * u[:-1]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)


def _coefficients(op: OperatorCoefficients, x: np.ndarray):
    try:
        return op.evaluate(x)
    except (DomainError, GeometryError, ValueError) as exc:
        raise DiscretizationError(f"coefficient evaluation failed on the grid: {exc}") from None


def check_sturm_form(op: OperatorCoefficients, x: np.ndarray, tol: float = 1e-8) -> float:
    """Relative size of ``(w a)' - w b`` at the points ``x``; raises above ``tol``."""
    wa = simplify(op.weight * op.a)
    gap_expr = simplify(diff_expr(wa) - op.weight * op.b)
    scale_expr = simplify(diff_expr(wa))
    try:
        gap = np.abs(np.asarray(evaluate(gap_expr, x, op.bindings), dtype=float))
        scale = np.abs(np.asarray(evaluate(scale_expr, x, op.bindings), dtype=float))
        w_a = np.abs(np.asarray(evaluate(wa, x, op.bindings), dtype=float))
    except DomainError as exc:
        raise DiscretizationError(f"coefficient evaluation failed: {exc}") from None
    worst = float(np.max(gap / np.maximum(1.0, scale + w_a)))
    if worst > tol:
        raise DiscretizationError(f"operator is not symmetric for its weight (gap {worst:.2e})")
    return worst


def discretize(op: OperatorCoefficients, grid: Grid, mode: str = "flux") -> DiscreteOperator:
    """Assemble ``op`` on ``grid`` with Dirichlet ends.

    ``mode="flux"`` is the conservative scheme.  ``mode="naive"`` uses
    plain three-point formulas for ``a D^2 + b D`` and is kept only to
    show what goes wrong without the measure.
    """
    nodes = grid.all_nodes
    x = grid.x
    a, b, c, w = _coefficients(op, x)
    if np.any(w <= 0) or np.any(a >= 0):
        raise DiscretizationError("weight must be positive and a negative on the grid")
    dx = np.diff(nodes)                       # N + 1 node gaps
    if mode == "flux":
        probe = x[np.linspace(0, len(x) - 1, 9).astype(int)]
        check_sturm_form(op, probe)
        a_f, _, _, w_f = _coefficients(op, grid.faces)
        q = -w_f * a_f                        # flux coefficient at the faces
        k = q / dx                            # symmetric stiffness couplings
        vol = grid.volumes
        r = w * vol
        diag = (k[:-1] + k[1:]) / r + c
        upper = -k[1:-1] / r[:-1]
        lower = -k[1:-1] / r[1:]
        d = diag.copy()
        e = -k[1:-1] / np.sqrt(r[:-1] * r[1:])
        symmetrized = True
    elif mode == "naive":
        hl, hr = dx[:-1], dx[1:]
        # nonuniform three-point second and first derivatives
        c_m = 2 / (hl * (hl + hr))
        c_0 = -2 / (hl * hr)
        c_p = 2 / (hr * (hl + hr))
        g_m = -hr / (hl * (hl + hr))
        g_0 = (hr - hl) / (hl * hr)
        g_p = hl / (hr * (hl + hr))
        diag = a * c_0 + b * g_0 + c
        upper = (a * c_p + b * g_p)[:-1]
        lower = (a * c_m + b * g_m)[1:]
        r = w * grid.volumes
        sr = np.sqrt(r)
        d = diag.copy()
        # symmetric part only; the naive matrix is not self-adjoint
        e = 0.5 * (upper * sr[:-1] / sr[1:] + lower * sr[1:] / sr[:-1])
        symmetrized = False
    else:
        raise ValueError(f"unknown assembly mode {mode!r}")
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(upper)) and np.all(np.isfinite(lower))):
        raise DiscretizationError("non-finite matrix entries")
    return DiscreteOperator(grid, diag, lower, upper, r, d, e, symmetrized, op, mode)


def hermiticity_residual(dop: DiscreteOperator, trials: int = 20, seed: int = 0) -> float:
    """Max of ``|<u,Hw> - <Hu,w>| / (|u| |w| |H|)`` over random vector pairs."""
    rng = np.random.default_rng(seed)
    r = dop.r
    norm_h = float(np.max(np.abs(dop.diag)) + np.max(np.abs(dop.upper), initial=0.0)
                   + np.max(np.abs(dop.lower), initial=0.0))
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(dop.grid.N)
        v = rng.standard_normal(dop.grid.N)
        lhs = np.sum(u * dop.matvec(v) * r)
        rhs = np.sum(dop.matvec(u) * v * r)
        nu = math.sqrt(np.sum(u * u * r))
        nv = math.sqrt(np.sum(v * v * r))
        worst = max(worst, abs(lhs - rhs) / (nu * nv * norm_h))
    return worst


# ---------------------------------------------------------------------------
# eigen-solution

@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray          # shape (N, k), normalized: sum psi^2 r = 1
    grid: Grid
    errors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def node_counts(self, rel_floor: float = 1e-8) -> list[int]:
        """Sign changes of each eigenvector, ignoring entries below the floor."""
        counts = []
        for j in range(self.k):
            psi = self.eigenvectors[:, j]
            big = psi[np.abs(psi) > rel_floor * np.max(np.abs(psi))]
            counts.append(int(np.count_nonzero(np.signbit(big[1:]) != np.signbit(big[:-1]))))
        return counts

    def parity_defects(self) -> list[float]:
        """``max |psi_i - (-1)^k psi_{N+1-i}|`` per eigenvector (sup-normalized)."""
        out = []
        for j in range(self.k):
            psi = self.eigenvectors[:, j]
            psi = psi / np.max(np.abs(psi))
            out.append(float(np.max(np.abs(psi - (-1) ** j * psi[::-1]))))
        return out

    def as_dict(self, model: str = "inline", scheme: str = "", params: dict | None = None) -> dict:
        return {
            "model": model, "scheme": scheme, "params": dict(params or {}),
            "N": self.meta.get("N_list", self.grid.N),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "errors": ([float(v) for v in self.errors] if self.errors is not None
                       else [None] * self.k),
        }

    def to_json(self, path, **kw) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(**kw), fh, indent=2)

    def eigenfunctions_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"psi_{j}" for j in range(self.k)])
            for i, xv in enumerate(self.grid.x):
                w.writerow([repr(float(xv))] + [repr(float(v)) for v in self.eigenvectors[i]])


def solve_spectrum(dop: DiscreteOperator, k: int) -> Spectrum:
    """Lowest ``k`` eigenpairs of the symmetrized operator."""
    N = dop.grid.N
    if not 1 <= k <= N:
        raise ValueError(f"k={k} must lie in [1, {N}]")
    if not dop.symmetrized:
        raise SpectralError("refusing to solve a non-symmetrized (naive) operator")
    try:
        vals, vecs = eigh_tridiagonal(dop.d, dop.e, select="i", select_range=(0, k - 1),
                                      check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"tridiagonal eigensolver failed: {exc}") from None
    if len(vals) < k:
        raise ConvergenceError(f"only {len(vals)} of {k} eigenvalues converged", len(vals))
    psi = vecs / np.sqrt(dop.r)[:, None]
    for j in range(k):
        col = psi[:, j]
        lead = np.flatnonzero(np.abs(col) > 1e-3 * np.max(np.abs(col)))[0]
        if col[lead] < 0:
            psi[:, j] = -col
    residuals = np.array([
        np.linalg.norm(dop.matvec(psi[:, j]) - vals[j] * psi[:, j])
        / max(1.0, abs(vals[j])) / np.linalg.norm(psi[:, j]) for j in range(k)
    ])
    if np.any(np.diff(vals) <= 0):
        idx = int(np.flatnonzero(np.diff(vals) <= 0)[0])
        raise ConvergenceError("eigenvalues not strictly increasing", idx)
    return Spectrum(vals, psi, dop.grid, residuals=residuals, meta={"N": N})


# ---------------------------------------------------------------------------
# problem-level drivers

def _map_for(p: ProblemDef, y_cut: float) -> ArclengthMap:
    return arclength_map(p, y_max=max(16.0, y_cut + 4.0))


def _grid_for(p: ProblemDef, amap: ArclengthMap, box: Box, N: int, mesh: str) -> Grid:
    if mesh == "uniform" or p.has_constant_mass():
        return Grid.uniform(box.x_lower, box.x_upper, N)
    if mesh == "arclength":
        return Grid.arclength(amap, box.y_lower, box.y_upper, N,
                              x_bounds=(box.x_lower, box.x_upper))
    raise ValueError(f"unknown mesh {mesh!r}")


@dataclass
class SolveSetup:
    problem: ProblemDef
    op: OperatorCoefficients
    amap: ArclengthMap
    box: Box


def prepare(p: ProblemDef, scheme: OrderingScheme, hbar: float = 1.0,
            y_cut: float = DEFAULT_Y_CUT, box: Box | None = None,
            op: OperatorCoefficients | None = None) -> SolveSetup:
    """Arclength map, truncation box and operator (built from ``scheme`` unless given)."""
    amap = _map_for(p, y_cut)
    if box is None:
        box = truncation_box(p, amap, y_cut)
    return SolveSetup(p, op if op is not None else build(p, hbar, scheme), amap, box)


def solve_at(setup: SolveSetup, N: int, k: int, mesh: str = "arclength") -> tuple[Spectrum, DiscreteOperator]:
    grid = _grid_for(setup.problem, setup.amap, setup.box, N, mesh)
    dop = discretize(setup.op, grid)
    return solve_spectrum(dop, k), dop


def solve_problem(p: ProblemDef, scheme: OrderingScheme | str = "noether", k: int = 5,
                  N: int = 2000, hbar: float = 1.0, y_cut: float = DEFAULT_Y_CUT,
                  mesh: str = "arclength", box: Box | None = None) -> Spectrum:
    if isinstance(scheme, str):
        scheme = OrderingScheme.parse(scheme)
    setup = prepare(p, scheme, hbar, y_cut, box)
    spec, dop = solve_at(setup, N, k, mesh)
    check_truncation(p, setup.box, float(spec.eigenvalues[-1]))
    spec.meta.update(box=setup.box.as_dict(), scheme=str(scheme),
                     hermiticity_residual=hermiticity_residual(dop))
    return spec


def richardson(coarse: np.ndarray, fine: np.ndarray, h_coarse: float, h_fine: float):
    """O(h^2) extrapolation and the error bar ``|extrapolated - fine|``."""
    ratio = h_fine ** 2 / (h_coarse ** 2 - h_fine ** 2)
    extrap = fine + (fine - coarse) * ratio
    return extrap, np.abs(extrap - fine)


def refine_spectrum(p: ProblemDef, scheme: OrderingScheme | str, k: int,
                    N_list: list[int] | tuple[int, ...] = (1000, 2000, 4000), hbar: float = 1.0,
                    y_cut: float = DEFAULT_Y_CUT, mesh: str = "arclength",
                    box: Box | None = None, op: OperatorCoefficients | None = None) -> Spectrum:
    """Solve on each ``N`` and Richardson-extrapolate the last two.

    When the successive differences are not monotone for some eigenvalue
    that eigenvalue is not extrapolated; it keeps the finest value with
    the last difference as error bar, and ``meta["monotone"]`` records it.
    """
    if isinstance(scheme, str):
        scheme = OrderingScheme.parse(scheme)
    N_list = [int(n) for n in N_list]
    if len(N_list) < 2 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list needs at least two increasing entries")
    setup = prepare(p, scheme, hbar, y_cut, box, op)
    runs = []
    herm = 0.0
    for N in N_list:
        spec, dop = solve_at(setup, N, k, mesh)
        herm = max(herm, hermiticity_residual(dop))
        runs.append(spec)
    vals = np.array([s.eigenvalues for s in runs])
    hs = np.array([s.grid.h for s in runs])
    extrap, err = richardson(vals[-2], vals[-1], hs[-2], hs[-1])
    monotone = np.ones(k, dtype=bool)
    if len(N_list) >= 3:
        diffs = np.diff(vals, axis=0)
        same_sign = np.all(np.sign(diffs) == np.sign(diffs[-1]), axis=0)
        shrinking = np.all(np.abs(diffs[1:]) < np.abs(diffs[:-1]), axis=0)
        monotone = same_sign & shrinking
        # tiny differences are rounding-dominated and carry no trend
        converged = np.abs(diffs[-1]) <= 1e-12 * np.maximum(1.0, np.abs(vals[-1]))
        monotone |= converged
    if not monotone.all():
        bad = np.flatnonzero(~monotone)
        log.warning("non-monotone convergence for eigenvalues %s; not extrapolated", bad.tolist())
        extrap = np.where(monotone, extrap, vals[-1])
        err = np.where(monotone, err, np.abs(vals[-1] - vals[-2]))
    check_truncation(p, setup.box, float(extrap[-1]))
    fine = runs[-1]
    return Spectrum(
        extrap, fine.eigenvectors, fine.grid, errors=err, residuals=fine.residuals,
        meta={"N_list": N_list, "raw": vals.tolist(), "monotone": monotone.tolist(),
              "box": setup.box.as_dict(), "scheme": setup.op.scheme,
              "hermiticity_residual": herm},
    )


# ---------------------------------------------------------------------------
# constant-mass (arclength) route

def transform_to_arclength(p: ProblemDef, hbar: float = 1.0, amap: ArclengthMap | None = None,
                           y_bounds: tuple[float, float] | None = None,
                           samples: int = 40001) -> ProblemDef:
    """Unit-mass problem in ``y = int sqrt(m) dx`` with potential ``V(x(y))``.

    The potential is tabulated on ``samples`` points of ``y_bounds`` (the
    tabulated range of the map by default) and interpolated by cubic
    splines.  ``hbar`` does not enter the change of variables; it is
    accepted so the call mirrors the operator builders.
    """
    del hbar
    if amap is None:
        amap = arclength_map(p)
    lo, hi = y_bounds if y_bounds is not None else amap.y_range
    ys = np.linspace(lo, hi, samples)
    xs = amap.x_of(ys)
    try:
        vs = np.asarray(evaluate(p.potential, xs, p.bindings), dtype=float)
    except DomainError as exc:
        raise SpectralError(f"potential undefined on the mapped range: {exc}") from None
    table = TabulatedFunction(ys, vs, label=f"V({p.name} at x(y))")

    def kind(end_kind, y_lim):
        if not math.isfinite(y_lim):
            return INFINITE
        return SINGULAR if end_kind == SINGULAR else OPEN_REGULAR

    dom = Domain(amap.y_lower, amap.y_upper,
                 kind(p.domain.lower_kind, amap.y_lower), kind(p.domain.upper_kind, amap.y_upper))
    return ProblemDef(ONE, table, dom, {}, name=f"{p.name}[arclength]")


def solve_dual(p: ProblemDef, k: int = 5, N_list=(1000, 2000, 4000),
               y_cut: float = DEFAULT_Y_CUT) -> tuple[Spectrum, Spectrum]:
    """Noether spectrum by the direct weighted solve and by the constant-mass route.

    Both routes use the same physical box.
    """
    scheme = OrderingScheme("noether")
    setup = prepare(p, scheme, 1.0, y_cut)
    direct = refine_spectrum(p, scheme, k, N_list, y_cut=y_cut, box=setup.box)
    box = setup.box
    q = transform_to_arclength(p, 1.0, setup.amap, (box.y_lower, box.y_upper))
    ybox = Box(box.y_lower, box.y_upper, box.y_lower, box.y_upper)
    reference = refine_spectrum(q, scheme, k, N_list, y_cut=y_cut, box=ybox, mesh="uniform")
    return direct, reference


__all__ = [
    "Grid", "Box", "DiscreteOperator", "Spectrum", "discretize", "hermiticity_residual",
    "solve_spectrum", "solve_problem", "refine_spectrum", "transform_to_arclength",
    "truncation_box", "richardson", "solve_dual", "prepare", "solve_at",
    "SpectralError", "DiscretizationError", "TruncationError", "ConvergenceError",
    "DEFAULT_Y_CUT", "SolveSetup", "check_truncation",
]
