import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muhs.dynamics import Params, State
from muhs.grid import PeriodicGrid, make_grid, mean
from muhs.mollify import ConstantProfile, FourierProfile, RoughInitialData, make_initial
from muhs.timestep import TimeStepConfig, run
from muhs.verify import (
    TestFunction,
    admissibility_margins,
    aligned_steps,
    convergence_study,
    initial_energy_limit,
    study_dt,
    weak_residual_rho,
    weak_residual_u,
)

TWO_PI = 2 * np.pi
PHI = TestFunction(((1, 1.0, 0.0),), 0.0, 0.5)


def steady(n=32, u=0.7, rho=1.3, t_end=1.0):
    s = State(np.full(n, u), np.full(n, rho))
    return run(s, Params(), TimeStepConfig(t_end, dt_max=0.01))


class TestTestFunction:
    def test_compact_support(self):
        phi = TestFunction(t0=0.2, t1=0.6)
        assert phi.psi(0.2) == 0 and phi.psi(0.6) == 0 and phi.psi(0.9) == 0
        assert phi.psi(0.4) == pytest.approx(math.exp(-1))

    def test_time_derivative(self):
        phi = TestFunction(t0=0.1, t1=0.7, amplitude=2.0)
        t = np.linspace(0.15, 0.65, 11)
        h = 1e-6
        fd = (phi.psi(t + h) - phi.psi(t - h)) / (2 * h)
        assert np.allclose(phi.dpsi(t), fd, atol=1e-7)

    def test_space_derivative(self):
        phi = TestFunction(((1, 0.5, 0.25), (3, 0.0, 1.0)))
        x = make_grid(64).nodes
        from muhs.grid import deriv

        assert np.allclose(phi.dspace(x), deriv(phi.space(x)), atol=1e-11)

    def test_invalid_support(self):
        with pytest.raises(ValueError):
            TestFunction(t0=0.5, t1=0.5)


class TestWeakResiduals:
    def test_steady_u(self):
        tr = steady()
        for phi in (PHI, TestFunction(((2, 0.0, 1.0),), 0.1, 0.9)):
            assert weak_residual_u(tr, Params(), phi) <= 1e-12

    def test_steady_rho(self):
        tr = steady(u=0.0)
        assert weak_residual_rho(tr, Params(), PHI) < 1e-14

    def test_zero_test_function(self):
        tr = run(State(0.1 * np.sin(TWO_PI * make_grid(32).nodes), np.ones(32)), Params(), TimeStepConfig(0.5))
        zero = PHI.scaled(0.0)
        assert weak_residual_u(tr, Params(), zero) == 0.0
        assert weak_residual_rho(tr, Params(), zero) == 0.0

    def test_temporal_only(self):
        # S = 1: the residual reduces to |int rho phi_t| = |int mean(rho) psi'| = 0 by mass conservation
        x = make_grid(64).nodes
        s0 = State(0.2 * np.sin(TWO_PI * x), 1 + 0.3 * np.cos(TWO_PI * x))
        tr = run(s0, Params(0.2), TimeStepConfig(0.6, dt_max=0.01))
        phi = TestFunction(((0, 1.0, 0.0),), 0.1, 0.5)
        masses = [mean(r) for r in tr.rho]
        assert np.ptp(masses) < 1e-14
        assert weak_residual_rho(tr, Params(0.2), phi) < 1e-12

    def test_sign_of_flux_term(self):
        # the opposite sign on the flux term leaves an O(1) residual on a true solution
        x = make_grid(64).nodes
        p = Params(0.3)
        s0 = State(0.2 * np.sin(TWO_PI * x), 1 + 0.3 * np.cos(TWO_PI * x))
        tr = run(s0, p, TimeStepConfig(0.5, dt_max=0.005))
        phi = TestFunction(((1, 0.0, 1.0),), 0.0, 0.5)
        S, Sx = phi.space(x), phi.dspace(x)
        dens = [
            mean(r * S) * float(phi.dpsi(t)) + mean((r * u + p.gamma * r) * Sx) * float(phi.psi(t))
            for t, u, r in zip(tr.times, tr.u, tr.rho)
        ]
        flipped = abs(np.sum((np.array(dens[1:]) + dens[:-1]) * np.diff(tr.times)) / 2)
        assert weak_residual_rho(tr, p, phi) < 1e-8
        assert flipped > 1e-3

    def test_rejects_blow_up(self):
        x = make_grid(64).nodes
        tr = run(State(np.sin(TWO_PI * x), np.zeros(64)), Params(), TimeStepConfig(1.0, blowup_threshold=10.0))
        with pytest.raises(ValueError):
            weak_residual_u(tr, Params(), PHI)
        with pytest.raises(ValueError):
            initial_energy_limit(tr)


class TestAlignedSteps:
    def test_basic(self):
        assert aligned_steps(1.0, 0.1) == 10
        assert aligned_steps(1.0, 0.3) == 4

    def test_probes_on_lattice(self):
        m = aligned_steps(0.5, 0.002, (0.025, 0.05, 0.1))
        assert m >= 250
        for t in (0.025, 0.05, 0.1):
            assert abs(t * m / 0.5 - round(t * m / 0.5)) < 1e-9

    def test_multiple(self):
        m = aligned_steps(1.0, 0.01, (0.3,), multiple=4)
        assert m % 4 == 0 and round(0.3 * m) % 4 == 0

    def test_impossible(self):
        assert aligned_steps(1.0, 0.5, (1 / math.pi,), search=10) == 0

    @given(st.floats(0.01, 2.0), st.floats(1e-3, 0.1))
    @settings(max_examples=40)
    def test_step_bound(self, t_end, dt):
        m = aligned_steps(t_end, dt)
        assert t_end / m <= dt * (1 + 1e-12)
        assert m == 1 or t_end / (m - 1) > dt


class TestConvergenceStudy:
    def test_argument_checks(self, hat_step_data):
        g, p, cfg = PeriodicGrid(32), Params(), TimeStepConfig(0.1)
        with pytest.raises(ValueError):
            convergence_study(hat_step_data, [4, 8], g, p, cfg, [0.1])
        with pytest.raises(ValueError):
            convergence_study(hat_step_data, [4, 16, 8], g, p, cfg, [0.1])
        with pytest.raises(ValueError):
            convergence_study(hat_step_data, [4, 8, 16], g, p, cfg, [0.2])
        vac = RoughInitialData(hat_step_data.u0, ConstantProfile(1.0), alpha=0.0)
        with pytest.raises(ValueError):
            convergence_study(vac, [4, 8, 16], g, p, cfg, [0.1])

    def test_study_dt_respects_cfl(self, hat_step_data):
        g, p = PeriodicGrid(64), Params(0.3)
        cfg = TimeStepConfig(0.5, dt_max=1.0)
        dt = study_dt(hat_step_data, g, p, cfg, (0.025, 0.1))
        c = hat_step_data.rough_invariants(g)
        speed = c.u0_l2 + math.sqrt(3) / 6 * c.mu1 + 0.3
        assert dt <= 0.3 * g.h / speed
        m = round(0.5 / dt)
        assert 0.5 / m == pytest.approx(dt, rel=1e-14)

    def test_small_study(self, hat_step_data):
        rep = convergence_study(
            hat_step_data, [4, 8, 16], PeriodicGrid(64), Params(0.3), TimeStepConfig(0.2, dt_max=1.0), [0.1, 0.2]
        )
        assert rep.decreasing and not rep.decay_violations()
        assert all(m > 0 for m in rep.energy_margins.values())
        assert rep.admissibility_margin > 0
        rows = rep.rows()
        assert len(rows) == 2 * 3 * 2
        assert {r["field"] for r in rows} == {"u", "u_x", "rho"}

    def test_smooth_data(self):
        # mollifying a trigonometric polynomial still damps each mode by 1 - O(k^2/n^2)
        data = RoughInitialData(FourierProfile(0.0, ((1, 0.0, 0.1),)), ConstantProfile(1.0), alpha=1.0)
        rep = convergence_study(data, [4, 8, 16], PeriodicGrid(64), Params(0.3), TimeStepConfig(0.1), [0.1])
        for d in rep.distances.values():
            assert 3.0 < d[0] / d[1] < 4.5

    def test_decay_violation_reported(self, hat_step_data):
        rep = convergence_study(
            hat_step_data, [4, 8, 16], PeriodicGrid(32), Params(), TimeStepConfig(0.05, dt_max=1.0), [0.05]
        )
        rep.distances[("u", 0.05)] = [1.0, 2.0]
        assert ("u", 0.05, 0) in rep.decay_violations()
        assert not rep.decreasing


class TestEnergyLimits:
    def test_conserved_state(self):
        rep = initial_energy_limit(steady(), [0.5, 0.1])
        assert max(rep.ux_gap + rep.rho_gap) < 1e-13

    def test_default_times(self):
        tr = steady(t_end=0.05)
        assert initial_energy_limit(tr).times == tuple(sorted(tr.times[1:], reverse=True))

    def test_refinement(self, hat_step_data):
        gaps = {}
        for n in (64, 256):
            s0, init = make_initial(hat_step_data, PeriodicGrid(n), 32)
            tr = run(s0, Params(0.3), TimeStepConfig(0.1), init, stops=[0.025, 0.05])
            rep = initial_energy_limit(tr, [0.1, 0.05, 0.025])
            assert rep.decreasing
            gaps[n] = rep
        assert all(f < c for f, c in zip(gaps[256].ux_gap, gaps[64].ux_gap))
        assert all(f < c for f, c in zip(gaps[256].rho_gap, gaps[64].rho_gap))


class TestAdmissibility:
    def test_self_reference(self, hat_step_data):
        g = PeriodicGrid(64)
        s0, init = make_initial(hat_step_data, g, 8)
        tr = run(s0, Params(0.3), TimeStepConfig(0.2), init, stops=[0.1])
        own = admissibility_margins(tr, None, g, [0.0, 0.1, 0.2])
        rough = admissibility_margins(tr, hat_step_data, g, [0.0, 0.1, 0.2])
        assert own[0] == pytest.approx(0.0, abs=1e-15)
        assert all(r >= o for r, o in zip(rough, own))
