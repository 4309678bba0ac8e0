import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdmq.exprcalc import diff_expr, eval_expr, format_expr, parse_expr
from pdmq.geometry import ProblemDef
from pdmq.models import builtin
from pdmq.quantize import (
    OrderingError, OrderingScheme, build_laplace_beltrami, build_noether,
    build_von_roos, conjugate_to_lebesgue, max_coefficient_gap, ordering_potential,
)

BUILTINS = [("quasi-harmonic-k", {"k": -0.5}), ("quasi-harmonic-k", {"k": 0.5}),
            ("arcsinh-osc", {"L": 1.0}), ("log-osc", {"L": 1.0}), ("arctanh-osc", {"L": 0.5})]
TRIPLES = [(0, -1, 0), (-0.5, 0, -0.5), (-1, 0, 0), (-0.25, -0.5, -0.25), (0.3, -0.8, -0.5)]


def points(p, n=100, seed=3):
    return p.domain.sample_interior(n, np.random.default_rng(seed))


class TestOrderingScheme:
    def test_constraint(self):
        with pytest.raises(OrderingError):
            OrderingScheme.von_roos(0, 0, 0)
        OrderingScheme.von_roos(-0.2, -0.3, -0.5)

    @pytest.mark.parametrize("text,kind,ex", [
        ("noether", "noether", None), ("lb", "laplace-beltrami", None),
        ("vonroos:0,-1,0", "von-roos", (0.0, -1.0, 0.0)),
        ("von-roos(-0.5,0,-0.5)", "von-roos", (-0.5, 0.0, -0.5)),
        ("zk", "von-roos", (-0.5, 0.0, -0.5)),
    ])
    def test_parse(self, text, kind, ex):
        s = OrderingScheme.parse(text)
        assert s.kind == kind and s.exponents == ex

    @pytest.mark.parametrize("text", ["weyl", "vonroos:1,2", "vonroos:a,b,c"])
    def test_parse_errors(self, text):
        with pytest.raises(OrderingError):
            OrderingScheme.parse(text)


class TestNoether:
    def test_constant_mass(self):
        op = build_noether(ProblemDef("1", "0.5*x^2"), hbar=2.0)
        assert eval_expr(op.a, 0.3) == -2.0
        assert eval_expr(op.b, 0.3) == 0.0
        assert eval_expr(op.c, 2.0) == 2.0

    def test_quasi_harmonic_coefficients(self):
        p = builtin("quasi-harmonic-k", {"k": 0.7})
        op = build_noether(p)
        a, b, c, w = op.evaluate(np.array([0.4]))
        assert a[0] == pytest.approx(-0.5 * (1 - 0.7 * 0.16))
        assert b[0] == pytest.approx(0.5 * 0.7 * 0.4)
        assert c[0] == pytest.approx(0.5 * 0.16 / (1 - 0.7 * 0.16))
        assert w[0] == pytest.approx(1 / math.sqrt(1 - 0.7 * 0.16))

    def test_arctanh_first_order_term(self):
        # b = (hbar^2/m0) lam^2 x (1 - lam^2 x^2) for m = m0/(1 - lam^2 x^2)^2
        p = ProblemDef("m0/(1 - L^2*x^2)^2", "0", builtin("arctanh-osc", {"L": 0.8}).domain,
                       {"m0": 1.7, "L": 0.8})
        op = build_noether(p, hbar=1.3)
        for x in np.linspace(-1.1, 1.1, 9):
            exact = 1.3 ** 2 / 1.7 * 0.64 * x * (1 - 0.64 * x * x)
            assert eval_expr(op.b, x, p.bindings) == pytest.approx(exact, rel=1e-12, abs=1e-15)

    def test_general_formula(self):
        p = builtin("log-osc", {"L": 0.7})
        op = build_noether(p, hbar=0.9)
        m = lambda x: 1 / (1 + 0.7 * x) ** 2
        dm = lambda x: -1.4 / (1 + 0.7 * x) ** 3
        for x in (-1.0, 0.0, 3.0):
            assert eval_expr(op.a, x, p.bindings) == pytest.approx(-0.81 / (2 * m(x)))
            assert eval_expr(op.b, x, p.bindings) == pytest.approx(0.81 * dm(x) / (4 * m(x) ** 2))


class TestLaplaceBeltrami:
    @pytest.mark.parametrize("name,params", BUILTINS)
    def test_coincides_with_noether(self, name, params):
        p = builtin(name, params)
        gap = max_coefficient_gap(build_noether(p), build_laplace_beltrami(p), points(p))
        assert gap <= 1e-12

    def test_arcsinh_first_order_term(self):
        p = builtin("arcsinh-osc", {"L": 1.0})
        op = build_laplace_beltrami(p)
        for x in (-2.0, 0.5, 3.0):
            assert eval_expr(op.b, x, p.bindings) == pytest.approx(-x / 2)

    def test_constant_mass(self):
        op = build_laplace_beltrami(ProblemDef("1", "x^2"))
        assert eval_expr(op.a, 1.0) == -0.5 and eval_expr(op.b, 1.0) == 0.0


def _nested_oracle(m, V, psi, triple, hbar, x):
    """Apply the symmetrized ordered product to psi by nested numeric differentiation."""
    a1, a2, a3 = triple
    mp.mp.dps = 40

    def chain(first, middle, last):
        inner = lambda t: m(t) ** last * psi(t)
        mid = lambda t: m(t) ** middle * mp.diff(inner, t)
        return m(x) ** first * mp.diff(mid, x)

    kinetic = -hbar ** 2 / 4 * (chain(a1, a2, a3) + chain(a3, a2, a1))
    return kinetic + V(x) * psi(x)


class TestVonRoos:
    @pytest.mark.parametrize("triple", TRIPLES)
    def test_expansion_against_nested_derivatives(self, triple):
        p = builtin("arcsinh-osc", {"L": 0.9})
        op = build_von_roos(p, 1.2, OrderingScheme.von_roos(*triple))
        m = lambda t: 1 / (1 + 0.81 * t * t)
        V = lambda t: mp.asinh(0.9 * t) ** 2 / (2 * 0.81)
        psi = lambda t: mp.exp(-t * t / 3) * (1 + t)
        for x in (-1.3, 0.2, 1.7):
            expected = _nested_oracle(m, V, psi, triple, 1.2, mp.mpf(x))
            a, b, c = (eval_expr(e, x, p.bindings) for e in (op.a, op.b, op.c))
            got = a * float(mp.diff(psi, x, 2)) + b * float(mp.diff(psi, x)) + c * float(psi(x))
            assert got == pytest.approx(float(expected), rel=1e-11, abs=1e-12)

    def test_constant_mass_collapses(self):
        for triple in TRIPLES:
            op = build_von_roos(ProblemDef("1", "0.5*x^2"), 1.0, OrderingScheme.von_roos(*triple))
            assert eval_expr(op.a, 0.7) == pytest.approx(-0.5)
            assert eval_expr(op.b, 0.7) == pytest.approx(0.0)
            assert eval_expr(op.c, 0.7) == pytest.approx(0.245)

    @pytest.mark.parametrize("name,params", BUILTINS)
    def test_first_order_universal(self, name, params):
        p = builtin(name, params)
        xs = points(p)
        bs = [build_von_roos(p, 1.0, OrderingScheme.von_roos(*t)).evaluate(xs)[1] for t in TRIPLES]
        scale = max(1.0, float(np.max(np.abs(bs[0]))))
        for b in bs[1:]:
            assert np.max(np.abs(b - bs[0])) <= 1e-12 * scale
        # and it equals hbar^2 m'/(2 m^2)
        noether_b = build_noether(p).evaluate(xs)[1]
        assert np.allclose(bs[0], 2 * noether_b, rtol=1e-12, atol=1e-14)

    def test_bdd_has_no_ordering_term(self):
        p = builtin("log-osc", {"L": 1.0})
        u = ordering_potential(p, 1.0, OrderingScheme.von_roos(0, -1, 0))
        assert format_expr(u) == "0"

    def test_symmetric_pair_potential(self):
        p = builtin("arctanh-osc", {"L": 0.6})
        u = ordering_potential(p, 1.0, OrderingScheme.von_roos(-1, 0, 0))
        m, dm, ddm = (parse_expr(t) for t in ("1/(1 - L^2*x^2)^2", "4*L^2*x/(1 - L^2*x^2)^3",
                                               "4*L^2*(1 + 5*L^2*x^2)/(1 - L^2*x^2)^4"))
        for x in (-1.2, -0.3, 0.9):
            mv, d1, d2 = (eval_expr(e, x, p.bindings) for e in (m, dm, ddm))
            assert eval_expr(u, x, p.bindings) == pytest.approx(-0.5 * d1 ** 2 / mv ** 3 + 0.25 * d2 / mv ** 2,
                                                                rel=1e-11)

    def test_zhu_kroemer_value(self):
        # hand expansion of the (-1/2, 0, -1/2) ordering for m = 1/(1+x^2):
        # U = -(1/4)[(a+c) m''/m^2 + (c(b+c-1) + a(a+b-1)) m'^2/m^3] = -1/4 at x = 1
        p = builtin("arcsinh-osc", {"L": 1.0})
        u = ordering_potential(p, 1.0, OrderingScheme.von_roos(-0.5, 0, -0.5))
        assert eval_expr(u, 1.0, p.bindings) == pytest.approx(-0.25, abs=1e-14)

    def test_requires_von_roos(self):
        with pytest.raises(OrderingError):
            ordering_potential(builtin("log-osc"), 1.0, OrderingScheme("noether"))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-3.0, 3.0))
def test_hbar_scaling(s, x):
    p = builtin("arcsinh-osc", {"L": 1.0})
    zk = OrderingScheme.von_roos(-0.5, 0, -0.5)
    base = build_von_roos(p, 1.0, zk)
    scaled = build_von_roos(p, s, zk)
    u1 = eval_expr(ordering_potential(p, 1.0, zk), x, p.bindings)
    us = eval_expr(ordering_potential(p, s, zk), x, p.bindings)
    for e1, es in ((base.a, scaled.a), (base.b, scaled.b)):
        assert eval_expr(es, x, p.bindings) == pytest.approx(s * s * eval_expr(e1, x, p.bindings),
                                                             rel=1e-12, abs=1e-14)
    assert us == pytest.approx(s * s * u1, rel=1e-12, abs=1e-14)
    v = eval_expr(p.potential, x, p.bindings)
    assert eval_expr(scaled.c, x, p.bindings) - us == pytest.approx(v, rel=1e-12, abs=1e-12)


class TestConjugation:
    def test_identity_for_constant_mass(self):
        op = build_noether(ProblemDef("1", "0.5*x^2"))
        g = conjugate_to_lebesgue(op)
        for e1, e2 in ((op.a, g.a), (op.b, g.b), (op.c, g.c)):
            assert eval_expr(e1, 0.8) == pytest.approx(eval_expr(e2, 0.8))
        assert format_expr(g.weight) == "1"

    def test_first_order_term_matches_von_roos(self):
        p = builtin("arcsinh-osc", {"L": 1.0})
        g = conjugate_to_lebesgue(build_noether(p))
        xs = points(p)
        b_vr = build_von_roos(p, 1.0, OrderingScheme.von_roos(0, -1, 0)).evaluate(xs)[1]
        assert np.allclose(g.evaluate(xs)[1], b_vr, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("name,params", BUILTINS)
    def test_equals_quarter_ordering(self, name, params):
        p = builtin(name, params)
        g = conjugate_to_lebesgue(build_noether(p))
        v = build_von_roos(p, 1.0, OrderingScheme.von_roos(-0.25, -0.5, -0.25))
        assert max_coefficient_gap(g, v, points(p)) <= 1e-12

    def test_is_symmetric_in_plain_measure(self):
        # weight 1 requires a' = b
        p = builtin("log-osc", {"L": 0.5})
        g = conjugate_to_lebesgue(build_noether(p))
        for x in (-1.5, 0.0, 4.0):
            assert eval_expr(diff_expr(g.a), x, p.bindings) == pytest.approx(eval_expr(g.b, x, p.bindings))


def test_operator_json():
    op = build_noether(builtin("quasi-harmonic-k", {"k": 1.0}))
    d = op.as_dict()
    assert set(d) == {"scheme", "hbar", "a", "b", "c", "weight"}
    for key in ("a", "b", "c", "weight"):
        parse_expr(d[key])
