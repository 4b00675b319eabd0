import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from muhs.dynamics import (
    SQRT3_6,
    ConservedInit,
    Params,
    State,
    c1_bound,
    c1_tilde,
    c2_bound,
    c2_tilde,
    energy,
    energy_rate,
    energy_transport_residual,
    mu0,
    poincare_gap,
    rhs,
    sup_bound,
    sup_bound_check,
    ux_equation_residual,
)
from muhs.grid import deriv, make_grid, random_bandlimited, sup_norm

TWO_PI = 2 * np.pi


def nodes(n):
    return make_grid(n).nodes


def smooth_state(n, eps=0.01):
    x = nodes(n)
    return State(eps * np.sin(TWO_PI * x), np.ones(n))


def rough_state(n):
    # C^4 but not analytic: spectral errors decay algebraically
    x = nodes(n)
    return State(0.01 * np.abs(np.sin(np.pi * x)) ** 5, 1 + 0.1 * np.abs(np.sin(np.pi * x)) ** 5)


class TestStateAndParams:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            State(np.zeros(8), np.zeros(6))

    def test_non_finite_requires_flag(self):
        u = np.zeros(8)
        u[3] = np.nan
        with pytest.raises(ValueError):
            State(u, np.zeros(8))
        s = State(u, np.zeros(8), blown_up=True)
        assert not s.finite

    def test_gamma_finite(self):
        with pytest.raises(ValueError):
            Params(gamma=math.inf)


class TestRhs:
    @pytest.mark.parametrize("c", [0.0, 1.5, -2.0])
    def test_constant_u_steady(self, c):
        du, drho = rhs(State(np.full(32, c), np.zeros(32)), Params())
        assert sup_norm(du) < 1e-13 and sup_norm(drho) == 0

    @pytest.mark.parametrize("gamma", [0.0, 0.3, -1.0])
    def test_constant_density_steady(self, gamma):
        du, drho = rhs(State(np.zeros(32), np.ones(32)), Params(gamma))
        assert sup_norm(du) < 1e-14 and sup_norm(drho) < 1e-14

    def test_quadrature_oracle(self):
        # u = eps sin(2 pi x), rho = 0: every term evaluated by scalar quadrature
        eps, n = 0.01, 128
        x = nodes(n)
        du, drho = rhs(State(eps * np.sin(TWO_PI * x), np.zeros(n)), Params())
        u = lambda y: eps * math.sin(TWO_PI * y)
        ux = lambda y: eps * TWO_PI * math.cos(TWO_PI * y)
        w = lambda y: 0.5 * ux(y) ** 2  # mu0 = 0
        quad = lambda f, a, b: integrate.quad(f, a, b, epsabs=1e-16, epsrel=1e-14)[0]
        mu_w = quad(w, 0, 1)
        inner = lambda y: quad(w, 0, y)
        i2 = quad(inner, 0, 1)
        for j in range(0, n, 11):
            y = x[j]
            nonlocal_term = (y - 0.5) * mu_w - inner(y) + i2
            expected = u(y) * ux(y) + nonlocal_term
            assert du[j] == pytest.approx(expected, abs=1e-10)
        assert sup_norm(drho) == 0
        # closed form of the same: (3/4) pi eps^2 sin(4 pi x)
        assert np.max(np.abs(du - 0.75 * np.pi * eps**2 * np.sin(4 * np.pi * x))) < 1e-15

    @given(st.integers(0, 2**31), st.floats(-2, 2))
    @settings(max_examples=25)
    def test_gamma_adds_transport(self, seed, gamma):
        rng = np.random.default_rng(seed)
        s = State(random_bandlimited(64, 10, rng), random_bandlimited(64, 10, rng))
        du0, dr0 = rhs(s, Params())
        du, dr = rhs(s, Params(gamma))
        assert np.max(np.abs(du - du0 - gamma * deriv(s.u))) < 1e-10
        assert np.max(np.abs(dr - dr0 - gamma * deriv(s.rho))) < 1e-10

    def test_blown_up_gives_nan(self):
        du, drho = rhs(State(np.full(8, np.inf), np.zeros(8), blown_up=True), Params())
        assert np.all(np.isnan(du)) and np.all(np.isnan(drho))

    @given(st.integers(0, 2**31), st.floats(-1, 1))
    @settings(max_examples=25)
    def test_conserves_mean_and_energy(self, seed, gamma):
        rng = np.random.default_rng(seed)
        s = State(0.3 * random_bandlimited(64, 8, rng), 1 + 0.2 * random_bandlimited(64, 8, rng, 0.0))
        tend = rhs(s, Params(gamma))
        scale = np.mean(np.abs(deriv(s.u) * deriv(tend[0])) + np.abs(s.rho * tend[1]))
        assert abs(np.mean(tend[0])) < 1e-12 * max(1.0, sup_norm(tend[0]))
        assert abs(energy_rate(s, tend)) < 1e-12 * max(1.0, scale)

    def test_dealias_truncates(self, rng):
        s = State(random_bandlimited(32, 15, rng), np.ones(32))
        du, _ = rhs(s, Params(dealias=True))
        c = np.abs(np.fft.rfft(du))
        assert np.max(c[11:]) < 1e-14 * np.max(c)


class TestFunctionals:
    def test_energy_example(self):
        x = nodes(64)
        s = State(np.sin(TWO_PI * x) / TWO_PI, np.ones(64))
        assert energy(s) == pytest.approx(1.5, abs=1e-14)

    def test_constant(self):
        s = State(np.full(16, 5.0), np.zeros(16))
        assert mu0(s) == 5.0 and energy(s) == 0.0

    @given(st.integers(0, 2**31))
    @settings(max_examples=25)
    def test_energy_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        assert energy(State(rng.normal(size=16), rng.normal(size=16))) >= 0


class TestSupBound:
    def test_constant_u_margin(self):
        s = State(np.full(32, 2.0), 1 + 0.5 * np.cos(TWO_PI * nodes(32)))
        c = ConservedInit.from_state(s)
        r = sup_bound_check(s, c)
        assert r.holds and r.margin == pytest.approx(SQRT3_6 * c.mu1, abs=1e-14)

    def test_shifted_sine(self):
        a, m = 0.1, 1.0
        x = nodes(128)
        s = State(m + a * np.sin(TWO_PI * x), np.zeros(128))
        c = ConservedInit.from_state(s)
        mu1 = a * TWO_PI * math.sqrt(0.5)
        assert c.mu1 == pytest.approx(mu1, rel=1e-13)
        r = sup_bound_check(s, c)
        assert r.margin == pytest.approx(m + SQRT3_6 * mu1 - (m + a), abs=1e-13)
        assert r.holds and r.margin > 0

    def test_blown_up_sentinel(self):
        s = State(np.full(8, np.nan), np.zeros(8), blown_up=True)
        c = ConservedInit(0, 1, 0, 0, 1, 1)
        r = sup_bound_check(s, c)
        assert r.margin == -math.inf and not r.holds

    @given(st.integers(0, 2**31), st.integers(1, 30))
    @settings(max_examples=40)
    def test_holds_for_any_state(self, seed, kmax):
        rng = np.random.default_rng(seed)
        s = State(random_bandlimited(64, kmax, rng), rng.normal(size=64))
        assert sup_bound_check(s, ConservedInit.from_state(s)).holds


class TestPoincare:
    def test_sine(self):
        assert poincare_gap(np.sin(TWO_PI * nodes(256))) == pytest.approx(np.pi**2 / 6 - 1, abs=1e-12)

    def test_constant(self):
        assert poincare_gap(np.full(16, 3.0)) == 0.0

    def test_parabola(self):
        x = nodes(256)
        assert poincare_gap(x * (1 - x)) >= 0

    @given(st.integers(0, 2**31), st.integers(1, 60))
    @settings(max_examples=40)
    def test_nonnegative(self, seed, kmax):
        f = random_bandlimited(128, kmax, np.random.default_rng(seed))
        assert poincare_gap(f) >= -1e-12


class TestAprioriBounds:
    @pytest.fixture
    def init(self):
        x = nodes(128)
        return ConservedInit.from_state(State(np.sin(TWO_PI * x) / TWO_PI, np.ones(128)))

    def test_c1_at_zero(self, init):
        assert init.u0x_sup == pytest.approx(1.0) and init.beta == 1.0
        assert c1_tilde(0.0, init) == pytest.approx(1.5, abs=1e-14)
        assert c1_bound(0.0, init) == pytest.approx(1.5, abs=1e-14)

    def test_c2_at_zero(self, init):
        assert c2_tilde(0.0, init) == 1.0
        assert c2_bound(0.0, init) == 1.0

    def test_growth(self, init):
        ts = [0.0, 0.5, 1.0, 2.0]
        v = [c1_tilde(t, init) for t in ts]
        assert all(b > a for a, b in zip(v, v[1:]))
        # the |mu0| form is never looser than the ||u0||_2 form
        assert all(c1_bound(t, init) <= c1_tilde(t, init) for t in ts)

    @pytest.mark.parametrize("f", [c1_tilde, c2_tilde, c1_bound, c2_bound])
    def test_beta_gate(self, f):
        with pytest.raises(ValueError):
            f(0.0, ConservedInit(0.0, 1.0, 0.1, 1.0, 1.0, 0.0))

    def test_invalid_invariants(self):
        with pytest.raises(ValueError):
            ConservedInit(0.0, -1.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            ConservedInit(math.nan, 1.0, 0.0, 0.0, 0.0, 0.0)


class TestResiduals:
    @pytest.mark.parametrize("r", [0.0, 1.0, 2.5])
    def test_constant_state(self, r):
        s = State(np.full(32, 0.7), np.full(32, r))
        p = Params(0.2)
        tend = rhs(s, p)
        assert sup_norm(energy_transport_residual(s, p, tend)) < 1e-13
        assert sup_norm(ux_equation_residual(s, p, tend)) < 1e-13

    @pytest.mark.parametrize("n", [128, 256])
    def test_band_limited_example_at_roundoff(self, n):
        s = smooth_state(n)
        tend = rhs(s, Params())
        assert sup_norm(energy_transport_residual(s, Params(), tend)) < 1e-13

    def test_refinement(self):
        p = Params(0.3)
        res = []
        for n in (128, 256):
            s = rough_state(n)
            tend = rhs(s, p)
            res.append((sup_norm(energy_transport_residual(s, p, tend)), sup_norm(ux_equation_residual(s, p, tend))))
        assert res[0][0] / res[1][0] >= 4
        assert res[0][1] / res[1][1] >= 4

    @given(st.integers(0, 2**31))
    @settings(max_examples=10, deadline=None)
    def test_random_band_limited(self, seed):
        rng = np.random.default_rng(seed)
        u = random_bandlimited(512, 20, rng)
        rho = 1 + random_bandlimited(512, 20, rng, 0.0)
        s = State(u / sup_norm(u), rho)
        p = Params(0.3)
        assert sup_norm(energy_transport_residual(s, p, rhs(s, p))) < 1e-6

    def test_ux_equation_example(self):
        s = smooth_state(256)
        p = Params(0.3)
        assert sup_norm(ux_equation_residual(s, p, rhs(s, p))) < 1e-8

    def test_wrong_tendencies_detected(self):
        s = smooth_state(64, eps=0.1)
        zeros = (np.zeros(64), np.zeros(64))
        ux = deriv(s.u)
        m1 = energy(s)
        right = 0.5 * ux * ux - 0.5 * s.rho**2 + 0.5 * m1
        res = ux_equation_residual(s, Params(), zeros)
        assert np.allclose(res, -s.u * deriv(ux) - right, atol=1e-13)
        assert sup_norm(res) > 1e-2
        assert sup_norm(energy_transport_residual(s, Params(), zeros)) > 1e-2

    def test_frozen_mu1(self):
        s = smooth_state(64)
        tend = rhs(s, Params())
        shifted = ux_equation_residual(s, Params(), tend, mu1_sq=energy(s) + 2.0)
        assert np.allclose(shifted, ux_equation_residual(s, Params(), tend) - 1.0)
