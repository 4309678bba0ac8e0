"""Acceptance checks.

Each test prints one ``PASS``/``FAIL`` line (past pytest's output
capture) and then asserts the same condition.  Run as a script for just the summary lines:

    python3 tests/test_acceptance.py
"""

import math
import sys
from functools import lru_cache

import numpy as np
import pytest

from pdmq.classical import ClassicalState, conservation_report, integrate, measure_period
from pdmq.exprcalc import diff_expr, eval_expr, format_expr, parse_expr
from pdmq.geometry import ProblemDef, derive_killing, make_domain
from pdmq.models import builtin, mathews_lakshmanan, ml_period
from pdmq.quantize import (
    OrderingScheme, build_laplace_beltrami, build_noether, conjugate_to_lebesgue,
    max_coefficient_gap, ordering_potential,
)
from pdmq.spectral import (
    Grid, discretize, hermiticity_residual, prepare, refine_spectrum, solve_at, solve_dual,
    transform_to_arclength,
)

LAMBDAS = (0.25, 0.5, 1.0)
KAPPAS = (-1.0, -0.5, 0.5)
ALL_CASES = [("quasi-harmonic-k", {"k": k}) for k in KAPPAS] + [
    (name, {"L": L}) for name in ("arcsinh-osc", "log-osc", "arctanh-osc") for L in LAMBDAS]
N_LIST = (1000, 2000, 4000)


_capsys = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _capsys
    _capsys = capsys
    yield
    _capsys = None


def report(label, ok, detail):
    line = f"\n{'PASS' if ok else 'FAIL'}  {label}: {detail}\n"
    if _capsys is None:
        sys.stdout.write(line)
    else:
        with _capsys.disabled():
            sys.stdout.write(line)
    sys.stdout.flush()
    return ok


@lru_cache(maxsize=None)
def refined(name, key, scheme="noether", k=5, n_list=N_LIST, lebesgue=False):
    p = builtin(name, dict(key))
    op = None
    if lebesgue:
        op = conjugate_to_lebesgue(build_noether(p))
    return refine_spectrum(p, scheme, k, n_list, op=op)


def test_c01_killing_and_measure_residuals():
    worst_k = worst_mu = 0.0
    for name, params in ALL_CASES:
        p = builtin(name, params)
        pts = p.domain.sample_interior(100, np.random.default_rng(11))
        k_res, mu_res = derive_killing(p).residual_maxima(pts, p.bindings)
        worst_k, worst_mu = max(worst_k, k_res), max(worst_mu, mu_res)
    ok = worst_k <= 1e-10 and worst_mu <= 1e-10
    assert report("C1 Killing/measure residuals", ok,
                  f"max |f m'+2m f'| = {worst_k:.2e}, max |f rho'+rho f'| = {worst_mu:.2e} "
                  f"over {len(ALL_CASES)} instantiations (tol 1e-10)")


def test_c02_noether_equals_laplace_beltrami():
    gap = spec_gap = 0.0
    for name, params in ALL_CASES:
        p = builtin(name, params)
        pts = p.domain.sample_interior(100, np.random.default_rng(12))
        noe, lb = build_noether(p), build_laplace_beltrami(p)
        gap = max(gap, max_coefficient_gap(noe, lb, pts))
        a = refine_spectrum(p, "noether", 5, (500, 1000, 2000), op=noe)
        b = refine_spectrum(p, "lb", 5, (500, 1000, 2000), op=lb)
        spec_gap = max(spec_gap, float(np.max(np.abs(a.eigenvalues - b.eigenvalues)
                                              / np.abs(a.eigenvalues))))
    ok = gap <= 1e-12 and spec_gap <= 1e-10
    assert report("C2 Noether = Laplace-Beltrami", ok,
                  f"coefficient gap {gap:.2e} (tol 1e-12), spectral gap {spec_gap:.2e} rel (tol 1e-10)")


ML_PAIRS = [(lam, A) for lam in (-0.5, 0.5, 1.0) for A in (0.25, 0.5, 1.0)]


def _ml_run(pair):
    lam, A = pair
    p = mathews_lakshmanan(lam)
    T = 100 * ml_period(lam, A)
    tr = integrate(p, ClassicalState(A, 0.0), 1e-3, T)
    period = measure_period(tr)
    return abs(period / ml_period(lam, A) - 1), conservation_report(p, tr)[0], tr.exited


def test_c03_classical_quasi_harmonic_law():
    results = [_ml_run(pair) for pair in ML_PAIRS]
    per_err = max(r[0] for r in results)
    e_drift = max(r[1] for r in results)
    exited = any(r[2] for r in results)
    p_drift = 0.0
    for m_text, dom, v0 in (("1/(1+x^2)", None, 1.0), ("1/(1-0.5*x^2)", (-1.4, 1.4), 0.3),
                            ("1/(1+x)^2", (-1, math.inf), 0.5)):
        base = ProblemDef(m_text, "0")
        if dom is not None:
            base = ProblemDef(m_text, "0", make_domain(base.mass, {}, *dom))
        tr = integrate(base, ClassicalState(0.0, v0), 1e-3, 10.0)
        p_drift = max(p_drift, conservation_report(base, tr)[1])
    ok = per_err <= 1e-4 and e_drift <= 1e-7 and p_drift <= 1e-8 and not exited
    assert report("C3 classical quasi-harmonic law", ok,
                  f"period rel err {per_err:.2e} (tol 1e-4) over {len(ML_PAIRS)} pairs, "
                  f"energy drift {e_drift:.2e} (tol 1e-7, 100 periods), "
                  f"geodesic P drift {p_drift:.2e} (tol 1e-8)")


CLOSED_MAPS = {"arcsinh-osc": "sinh(L*x)/L", "log-osc": "(exp(L*x) - 1)/L",
               "arctanh-osc": "tanh(L*x)/L"}


def _transform_residual(name, L):
    """Check V(X(y)) = y^2/2 and sqrt(m(X)) X' = 1 for the closed-form inverse map."""
    spec = builtin(name, {"L": L})
    X = parse_expr(CLOSED_MAPS[name])
    dX = diff_expr(X)
    b = {"L": L}
    worst = 0.0
    for y in np.linspace(-3, 3, 61):
        xv = eval_expr(X, y, b)
        v = eval_expr(spec.potential, xv, b)
        metric = math.sqrt(eval_expr(spec.mass, xv, b)) * eval_expr(dX, y, b)
        worst = max(worst, abs(v - 0.5 * y * y), abs(metric - 1))
    return worst


def test_c04_isospectral_to_unit_oscillator():
    dev = 0.0
    tr_res = 0.0
    for name in ("arcsinh-osc", "log-osc", "arctanh-osc"):
        for L in LAMBDAS:
            tr_res = max(tr_res, _transform_residual(name, L))
            spec = refined(name, (("L", L),))
            dev = max(dev, float(np.max(np.abs(spec.eigenvalues - (np.arange(5) + 0.5)))))
    ok = dev <= 1e-4 and tr_res <= 1e-12
    assert report("C4 isospectrality of models 1-3", ok,
                  f"max |e_n - (n+1/2)| = {dev:.2e} (tol 1e-4, N={N_LIST}); "
                  f"transform oracle residual {tr_res:.2e}")


def test_c05_dual_route():
    worst = 0.0
    cases = [("quasi-harmonic-k", {"k": 0.5}), ("arcsinh-osc", {"L": 1.0}),
             ("log-osc", {"L": 1.0}), ("arctanh-osc", {"L": 1.0})]
    for name, params in cases:
        direct, ref = solve_dual(builtin(name, params), 5, N_LIST)
        worst = max(worst, float(np.max(np.abs(direct.eigenvalues - ref.eigenvalues)
                                        / np.abs(ref.eigenvalues))))
    # transformed potential for k > 0 is tan^2(sqrt(k) y)/(2k)
    k = 0.5
    q = transform_to_arclength(builtin("quasi-harmonic-k", {"k": k}), 1.0, None, (-2.0, 2.0))
    ys = np.linspace(-1.9, 1.9, 39)
    pot = max(abs(q.potential(y) - math.tan(math.sqrt(k) * y) ** 2 / (2 * k)) for y in ys)
    ok = worst <= 1e-6 and pot <= 1e-6
    assert report("C5 dual-route equivalence", ok,
                  f"max rel gap {worst:.2e} over 4 models (tol 1e-6); "
                  f"tan^2 potential check {pot:.2e}")


def test_c06_hermiticity():
    worst = 0.0
    schemes = ["noether", "lb", "bdd", "zk", "symmetric", "vonroos:-0.25,-0.5,-0.25"]
    count = 0
    for name, params in ALL_CASES:
        p = builtin(name, params)
        for s in schemes:
            setup = prepare(p, OrderingScheme.parse(s))
            _, dop = solve_at(setup, 1000, 1)
            worst = max(worst, hermiticity_residual(dop))
            count += 1
        setup = prepare(p, OrderingScheme("noether"), op=conjugate_to_lebesgue(build_noether(p)))
        _, dop = solve_at(setup, 1000, 1)
        worst = max(worst, hermiticity_residual(dop))
        count += 1
    p = builtin("quasi-harmonic-k", {"k": 1.0})
    setup = prepare(p, OrderingScheme("noether"))
    naive = discretize(setup.op, Grid.uniform(setup.box.x_lower, setup.box.x_upper, 500), "naive")
    naive_res = hermiticity_residual(naive)
    ok = worst <= 1e-12 and naive_res > 1e-6
    assert report("C6 hermiticity", ok,
                  f"max residual {worst:.2e} over {count} operators (tol 1e-12); "
                  f"naive assembly {naive_res:.2e} (must exceed 1e-6)")


def test_c07_ordering_non_equivalence():
    key = (("L", 1.0),)
    names = {"noether": "noether", "bdd": "vonroos:0,-1,0", "zk": "vonroos:-0.5,0,-0.5"}
    g = {}
    for label, s in names.items():
        spec = refined("log-osc", key, s, 1)
        g[label] = (float(spec.eigenvalues[0]), float(spec.errors[0]))
    lines = []
    distinct = True
    for a, b in (("noether", "bdd"), ("noether", "zk"), ("bdd", "zk")):
        gap = abs(g[a][0] - g[b][0])
        bar = 10 * max(g[a][1], g[b][1])
        distinct &= gap > bar
        lines.append(f"{a}-{b} gap {gap:.2e} vs 10*err {bar:.2e}")
    p = builtin("arctanh-osc", {"L": 0.6})
    u = ordering_potential(p, 1.0, OrderingScheme.von_roos(-1, 0, 0))
    m = p.mass
    dm = diff_expr(m)
    veff = parse_expr(f"-0.5*({format_expr(dm)})^2/({format_expr(m)})^3 "
                      f"+ 0.25*({format_expr(diff_expr(dm))})/({format_expr(m)})^2")
    sym_gap = max(abs(eval_expr(u, x, p.bindings) - eval_expr(veff, x, p.bindings))
                  for x in np.linspace(-1.5, 1.5, 31))
    ok = distinct and sym_gap <= 1e-10
    assert report("C7 ordering non-equivalence", ok,
                  f"e0: noether {g['noether'][0]:.10f}, bdd {g['bdd'][0]:.10f}, "
                  f"zk {g['zk'][0]:.10f}; " + "; ".join(lines)
                  + f"; symmetric-pair V_eff gap {sym_gap:.2e}")


def test_c08_limits():
    dev = {}
    spec = refined("quasi-harmonic-k", (("k", 1e-3),), "noether", 3)
    dev["k=1e-3"] = float(np.max(np.abs(spec.eigenvalues - (np.arange(3) + 0.5))))
    for name in ("arcsinh-osc", "log-osc", "arctanh-osc"):
        spec = refined(name, (("L", 1e-3),), "noether", 3)
        dev[f"{name} L=1e-3"] = float(np.max(np.abs(spec.eigenvalues - (np.arange(3) + 0.5))))
    worst = max(dev.values())
    ok = worst <= 5e-3
    assert report("C8 small-deformation limits", ok,
                  f"max |e_n - (n+1/2)| over lowest 3 = {worst:.2e} (tol 5e-3); "
                  + ", ".join(f"{k}: {v:.2e}" for k, v in dev.items()))


def test_c09_gauge_isospectrality():
    key = (("L", 1.0),)
    a = refined("arcsinh-osc", key, "noether", 3)
    b = refined("arcsinh-osc", key, "noether", 3, lebesgue=True)
    gap = float(np.max(np.abs(a.eigenvalues - b.eigenvalues)))
    ok = gap <= 1e-8
    assert report("C9 gauge isospectrality", ok, f"max gap {gap:.2e} on model 1 (tol 1e-8)")


def test_c10_sturm_properties():
    bad = []
    for name, params in [("quasi-harmonic-k", {"k": 0.5}), ("arcsinh-osc", {"L": 1.0}),
                         ("log-osc", {"L": 1.0}), ("arctanh-osc", {"L": 1.0})]:
        p = builtin(name, params)
        spec = refine_spectrum(p, "noether", 7, (1000, 2000))
        nodes = spec.node_counts()
        if nodes != list(range(7)):
            bad.append(f"{name} nodes {nodes}")
        if name != "log-osc":
            psi = spec.eigenvectors
            parity = [int(np.sign(psi[:, j] @ psi[::-1, j])) for j in range(7)]
            if parity != [(-1) ** j for j in range(7)]:
                bad.append(f"{name} parity {parity}")
    ok = not bad
    assert report("C10 Sturm node counts and parity", ok,
                  "nodes 0..6 and parity +,-,+,... on symmetric models" if ok else "; ".join(bad))


if __name__ == "__main__":
    failed = 0
    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_c")]:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
