import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from auctionkit.numerics import (
    ODEError,
    QuadratureError,
    QuadratureSpec,
    RootFindingError,
    RootSpec,
    find_root,
    integrate,
    integrate_ode,
    integrate_pieces,
    riemann_sum,
)


class TestIntegrate:
    def test_polynomials(self):
        assert integrate(lambda y: y, 0, 1) == pytest.approx(0.5, abs=1e-12)
        assert integrate(lambda y: y * y, 0, 1) == pytest.approx(1 / 3, abs=1e-12)

    def test_irwinhall_upper_branch(self):
        assert integrate(lambda y: 2 * y - 1 - y * y / 2, 1, 2) == pytest.approx(5 / 6, abs=1e-12)

    def test_degenerate_and_reversed(self):
        assert integrate(math.exp, 0.7, 0.7) == 0.0
        fwd = integrate(math.exp, 0.0, 1.3)
        assert integrate(math.exp, 1.3, 0.0) == -fwd
        assert fwd == pytest.approx(math.e ** 1.3 - 1, rel=1e-10)

    def test_peaked_integrand(self):
        # a bump the 3-point starting rule alone would miss
        f = lambda y: math.exp(-((y - 0.613) / 0.02) ** 2)
        assert integrate(f, 0, 1) == pytest.approx(0.02 * math.sqrt(math.pi), rel=1e-7)

    def test_very_narrow_peak_needs_a_knot(self):
        f = lambda y: math.exp(-((y - 0.613) / 1e-3) ** 2)
        assert integrate_pieces(f, [0.0, 0.613, 1.0]) == pytest.approx(1e-3 * math.sqrt(math.pi), rel=1e-7)

    def test_endpoint_singularity_is_nudged(self):
        # 1/sqrt(y) is infinite at 0 but integrable
        val = integrate(lambda y: 1 / math.sqrt(y) if y > 0 else math.inf, 0, 1,
                        QuadratureSpec(abs_tol=1e-6, rel_tol=1e-6, max_depth=60))
        assert val == pytest.approx(2.0, abs=1e-4)

    def test_non_convergence_carries_estimate(self):
        spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_depth=3)
        with pytest.raises(QuadratureError) as info:
            integrate(lambda y: math.sin(40 * y), 0, 3, spec)
        assert math.isfinite(info.value.estimate)
        assert info.value.error_bound > 0

    def test_kink_handled_by_pieces(self):
        f = lambda y: abs(y - 0.3)
        assert integrate_pieces(f, [0.0, 0.3, 1.0]) == pytest.approx(0.045 + 0.245, abs=1e-13)

    def test_riemann_fallback_is_first_order_close(self):
        f = lambda y: y ** 3
        assert riemann_sum(f, 0, 1, 20_000) == pytest.approx(0.25, abs=1e-8)
        vec = riemann_sum(lambda t: t ** 3, 0, 1, 20_000, vectorized=True)
        assert vec == pytest.approx(riemann_sum(f, 0, 1, 20_000), abs=1e-15)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            QuadratureSpec(abs_tol=0)
        with pytest.raises(ValueError):
            QuadratureSpec(max_depth=0)
        with pytest.raises(ValueError):
            QuadratureSpec(fallback_panels=10)


coeffs = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6)


@given(coeffs, coeffs, st.floats(-3, 3), st.floats(-3, 3))
def test_integrate_is_linear(p, q, alpha, beta):
    f = np.polynomial.Polynomial(p)
    g = np.polynomial.Polynomial(q)
    a, b = -0.7, 1.9
    spec = QuadratureSpec()
    lhs = integrate(lambda y: alpha * f(y) + beta * g(y), a, b, spec)
    rhs = alpha * integrate(f, a, b, spec) + beta * integrate(g, a, b, spec)
    exact = alpha * (f.integ()(b) - f.integ()(a)) + beta * (g.integ()(b) - g.integ()(a))
    scale = 1 + abs(alpha) * sum(map(abs, p)) + abs(beta) * sum(map(abs, q))
    assert abs(lhs - rhs) <= 2 * (spec.abs_tol + spec.rel_tol * scale * 50)
    assert abs(lhs - exact) <= spec.abs_tol + spec.rel_tol * scale * 50


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_integrate_antisymmetric(a, b):
    f = lambda y: math.cos(3 * y) + y * y
    assert integrate(f, a, b) == -integrate(f, b, a)


class TestFindRoot:
    @pytest.mark.parametrize("f", [lambda x: x - 0.5, lambda x: 2 * x - 1, lambda r: r - (1 - r)])
    def test_simple_roots(self, f):
        assert find_root(f, RootSpec((0.0, 1.0))) == pytest.approx(0.5, abs=1e-10)

    def test_orientation_does_not_matter(self):
        f = lambda x: math.tanh(5 * (x - 0.37)) + 0.1 * x
        g = lambda x: -f(x)
        assert find_root(f, RootSpec((0.0, 1.0), tol=1e-13)) == pytest.approx(
            find_root(g, RootSpec((0.0, 1.0), tol=1e-13)), abs=1e-12)

    def test_no_sign_change_names_endpoints(self):
        with pytest.raises(RootFindingError, match=r"f\(a\)=.*f\(b\)="):
            find_root(lambda x: x * x + 1, RootSpec((-1.0, 1.0)))

    def test_bracket_validation(self):
        with pytest.raises(ValueError):
            RootSpec((1.0, 0.0))
        with pytest.raises(ValueError):
            RootSpec((0.0, 1.0), tol=0)

    def test_flat_then_steep(self):
        f = lambda x: x ** 9 - 1e-3
        assert find_root(f, RootSpec((0.0, 2.0), tol=1e-14)) == pytest.approx(1e-3 ** (1 / 9), abs=1e-12)


class TestODE:
    def test_constant(self):
        ts, ys = integrate_ode(lambda t, y: np.zeros_like(y), 0, 1, [3.0, -1.0])
        assert np.all(ys == np.array([3.0, -1.0]))
        assert ts[0] == 0 and ts[-1] == 1

    def test_exponential(self):
        _, ys = integrate_ode(lambda t, y: y, 0, 1, [1.0], steps=256)
        assert ys[-1, 0] == pytest.approx(math.e, abs=1e-6)

    def test_fourth_order(self):
        errs = []
        for n in (32, 64):
            _, ys = integrate_ode(lambda t, y: y, 0, 1, [1.0], steps=n)
            errs.append(abs(ys[-1, 0] - math.e))
        assert 12 < errs[0] / errs[1] < 20

    def test_backward(self):
        _, ys = integrate_ode(lambda t, y: -y, 1, 0, [1.0], steps=64)
        assert ys[-1, 0] == pytest.approx(math.e, abs=1e-7)

    def test_non_finite_rhs_reports_location(self):
        with pytest.raises(ODEError) as info:
            integrate_ode(lambda t, y: np.array([1 / (t - 0.5) if t != 0.5 else math.inf]), 0, 1, [0.0], steps=16)
        assert info.value.at == pytest.approx(0.5)

    def test_step_floor(self):
        with pytest.raises(ValueError):
            integrate_ode(lambda t, y: y, 0, 1, [1.0], steps=8)
