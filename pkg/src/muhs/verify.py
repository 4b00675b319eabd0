"""Weak-form residuals, the mollified-sequence convergence study and the
early-time energy limits."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from muhs.dynamics import SQRT3_6, Params
from muhs.grid import PeriodicGrid, deriv, l2_norm, mean
from muhs.mollify import MollifierSpec, RoughInitialData, bump, make_initial
from muhs.operator import ainv_dx
from muhs.timestep import TimeStepConfig, TrajectoryRecord, run

__all__ = [
    "TestFunction",
    "weak_residual_u",
    "weak_residual_rho",
    "ConvergenceReport",
    "convergence_study",
    "study_dt",
    "aligned_steps",
    "EnergyLimitReport",
    "initial_energy_limit",
    "admissibility_margins",
]


@dataclass(frozen=True)
class TestFunction:
    """phi(t, x) = psi(t) * S(x).

    S is a trigonometric polynomial with modes ``(k, a, b)`` meaning
    a cos(2 pi k x) + b sin(2 pi k x); psi is the bump exp(1/(s^2 - 1)) mapped
    onto (t0, t1), scaled by ``amplitude``.
    """

    __test__ = False  # not a pytest class

    modes: tuple = ((1, 1.0, 0.0),)
    t0: float = 0.0
    t1: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("temporal support must satisfy t0 < t1")

    def _s(self, t):
        return (2.0 * np.asarray(t, dtype=float) - self.t0 - self.t1) / (self.t1 - self.t0)

    def psi(self, t):
        return self.amplitude * bump(self._s(t))

    def dpsi(self, t):
        s = np.asarray(self._s(t), dtype=float)
        inside = np.abs(s) < 1.0
        out = np.zeros_like(s)
        si = s[inside]
        out[inside] = bump(si) * (-2.0 * si / (si * si - 1.0) ** 2)
        return self.amplitude * out * 2.0 / (self.t1 - self.t0)

    def space(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, a, b in self.modes:
            out = out + a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
        return out

    def dspace(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, a, b in self.modes:
            w = 2 * np.pi * k
            out = out - a * w * np.sin(w * x) + b * w * np.cos(w * x)
        return out

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(self.modes, self.t0, self.t1, self.amplitude * c)


def _trapezoid(values, times) -> float:
    return float(np.trapezoid(values, times)) if hasattr(np, "trapezoid") else float(np.trapz(values, times))


def _check_traj(traj: TrajectoryRecord):
    if traj.blew_up:
        raise ValueError("trajectory terminated in blow-up")


def _weak_u_density(traj: TrajectoryRecord, p: Params, phi: TestFunction) -> np.ndarray:
    n = traj.u[0].shape[0]
    x = np.arange(n) / n
    S = phi.space(x)
    out = np.empty(len(traj))
    for i, t in enumerate(traj.times):
        u, rho = traj.u[i], traj.rho[i]
        ux = deriv(u)
        nonlocal_term = ainv_dx(2.0 * mean(u) * u + 0.5 * ux * ux + 0.5 * rho * rho)
        out[i] = mean((u * phi.dpsi(t) + ((u + p.gamma) * ux + nonlocal_term) * phi.psi(t)) * S)
    return out


def weak_residual_u(traj: TrajectoryRecord, p: Params, phi: TestFunction) -> float:
    """|int int u phi_t + [(u + gamma) u_x + d/dx A^{-1}(2 mu0 u + u_x^2/2 + rho^2/2)] phi dx dt|."""
    _check_traj(traj)
    return abs(_trapezoid(_weak_u_density(traj, p, phi), traj.times))


def weak_residual_rho(traj: TrajectoryRecord, p: Params, phi: TestFunction) -> float:
    """|int int rho phi_t - (rho u + gamma rho) phi_x dx dt|; no derivative lands on rho."""
    _check_traj(traj)
    n = traj.rho[0].shape[0]
    x = np.arange(n) / n
    S, Sx = phi.space(x), phi.dspace(x)
    dens = np.empty(len(traj))
    for i, t in enumerate(traj.times):
        u, rho = traj.u[i], traj.rho[i]
        dens[i] = mean(rho * S) * float(phi.dpsi(t)) - mean((rho * u + p.gamma * rho) * Sx) * float(phi.psi(t))
    return abs(_trapezoid(dens, traj.times))


# -- convergence study ------------------------------------------------------


@dataclass
class ConvergenceReport:
    n_list: tuple
    probe_times: tuple
    # distances[(field, t)] -> list of consecutive-pair L2 distances
    distances: dict = field(default_factory=dict)
    sup_distances: dict = field(default_factory=dict)
    energies: dict = field(default_factory=dict)  # n -> list of energies at probe times
    mu1_sq: float = math.nan
    energy_margins: dict = field(default_factory=dict)  # n -> min(mu1^2 - energy)
    admissibility_margin: float = math.nan
    dt: float = math.nan
    trajectories: dict = field(default_factory=dict, repr=False)

    def decay_violations(self) -> list[tuple]:
        """(field, t, i) where distance i+1 fails to be strictly below distance i."""
        bad = []
        for (name, t), d in self.distances.items():
            for i in range(len(d) - 1):
                if not d[i + 1] < d[i]:
                    bad.append((name, t, i))
        return bad

    @property
    def decreasing(self) -> bool:
        return not self.decay_violations()

    def rows(self) -> list[dict]:
        out = []
        for (name, t), d in sorted(self.distances.items()):
            for i, v in enumerate(d):
                out.append(
                    {
                        "field": name,
                        "t": t,
                        "n_a": self.n_list[i],
                        "n_b": self.n_list[i + 1],
                        "l2_distance": v,
                        "sup_distance": self.sup_distances[(name, t)][i],
                    }
                )
        return out


def aligned_steps(t_end: float, dt_limit: float, times=(), multiple: int = 1, search: int = 4096) -> int:
    """Smallest step count m with t_end/m <= dt_limit that puts every time in
    ``times`` on the step lattice and makes m a multiple of ``multiple``.

    Returns 0 when no such m exists within ``search`` candidates.
    """
    m0 = max(1, math.ceil(t_end / dt_limit - 1e-12))
    m0 = multiple * math.ceil(m0 / multiple)
    for m in range(m0, m0 + search * multiple, multiple):
        ok = True
        for t in times:
            q = t * m / t_end
            r = round(q)
            if abs(q - r) > 1e-9 or r % multiple:
                ok = False
                break
        if ok:
            return m
    return 0


def study_dt(
    data: RoughInitialData, grid: PeriodicGrid, p: Params, cfg: TimeStepConfig, probe_times=()
) -> float:
    """One uniform step size valid for every mollified run.

    The speed bound ||u0||_2 + (sqrt 3/6) mu1 of the rough data dominates
    sup|u^n(t)| for all n and t, so the CFL condition holds throughout. The
    step is then shrunk so that probe times and every ``record_every``-th
    step share one uniform lattice.
    """
    if cfg.fixed_dt is not None:
        return cfg.fixed_dt
    c = data.rough_invariants(grid)
    speed = c.u0_l2 + SQRT3_6 * c.mu1 + abs(p.gamma) + 1e-12
    dt = min(cfg.dt_max, cfg.cfl_number * grid.h / speed)
    if cfg.t_end <= 0:
        return dt
    m = aligned_steps(cfg.t_end, dt, probe_times, cfg.record_every)
    return cfg.t_end / m if m else dt


def convergence_study(
    data: RoughInitialData,
    n_list,
    grid: PeriodicGrid,
    p: Params,
    cfg: TimeStepConfig,
    probe_times,
    extra_stops=(),
) -> ConvergenceReport:
    n_list = tuple(int(n) for n in n_list)
    if len(n_list) < 3:
        raise ValueError("need at least three mollifier indices to test decay")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("mollifier indices must be strictly increasing")
    if not data.alpha > 0:
        raise ValueError("convergence study requires rho0 >= alpha > 0")
    probe_times = tuple(float(t) for t in probe_times)
    if any(not 0 <= t <= cfg.t_end for t in probe_times):
        raise ValueError("probe times must lie in [0, t_end]")
    dt = study_dt(data, grid, p, cfg, probe_times + tuple(extra_stops))
    run_cfg = dataclasses.replace(cfg, fixed_dt=dt)
    rough = data.rough_invariants(grid)
    rep = ConvergenceReport(n_list, probe_times, mu1_sq=rough.mu1_sq, dt=dt)
    fields = {}
    for n in n_list:
        s0, init = make_initial(data, grid, MollifierSpec(n))
        traj = run(s0, p, run_cfg, init, stops=probe_times + tuple(extra_stops))
        if traj.blew_up:
            raise RuntimeError(f"mollified run n={n} blew up at t={traj.blowup_time}")
        rep.trajectories[n] = traj
        snaps = {}
        for t in probe_times:
            i = traj.index_of(t)
            u, rho = traj.u[i], traj.rho[i]
            snaps[t] = {"u": u, "u_x": deriv(u), "rho": rho}
        fields[n] = snaps
        es = [mean(s["u_x"] ** 2 + s["rho"] ** 2) for s in snaps.values()]
        rep.energies[n] = es
        rep.energy_margins[n] = min(rough.mu1_sq - e for e in es)
    for t in probe_times:
        for name in ("u", "u_x", "rho"):
            rep.distances[(name, t)] = [
                l2_norm(fields[b][t][name] - fields[a][t][name]) for a, b in zip(n_list, n_list[1:])
            ]
            rep.sup_distances[(name, t)] = [
                float(np.max(np.abs(fields[b][t][name] - fields[a][t][name]))) for a, b in zip(n_list, n_list[1:])
            ]
    finest = rep.trajectories[n_list[-1]]
    rep.admissibility_margin = min(admissibility_margins(finest, data, grid, probe_times))
    return rep


def admissibility_margins(traj: TrajectoryRecord, data: RoughInitialData | None, grid: PeriodicGrid, times) -> list:
    """||u0_x|| + ||rho0|| - (||u_x(t)|| + ||rho(t)||) at each time.

    With ``data`` the reference is the rough data (analytic derivative);
    otherwise the trajectory's own initial state.
    """
    if data is not None:
        u0x = data.u0_derivative(grid)
        _, rho0 = data.sample(grid)
    else:
        u0x, rho0 = deriv(traj.u[0]), traj.rho[0]
    ref = l2_norm(u0x) + l2_norm(rho0)
    out = []
    for t in times:
        i = traj.index_of(t)
        out.append(ref - (l2_norm(deriv(traj.u[i])) + l2_norm(traj.rho[i])))
    return out


# -- early-time limits ------------------------------------------------------


@dataclass
class EnergyLimitReport:
    times: tuple
    ux_gap: tuple  # |int u_x^2(t) - int u0x^2|
    rho_gap: tuple  # |int rho^2(t) - int rho0^2|

    @property
    def decreasing(self) -> bool:
        """Both gaps strictly shrink as t decreases toward 0."""
        order = np.argsort(self.times)[::-1]
        a = np.asarray(self.ux_gap)[order]
        b = np.asarray(self.rho_gap)[order]
        return bool(np.all(np.diff(a) < 0) and np.all(np.diff(b) < 0))


def initial_energy_limit(traj: TrajectoryRecord, times=None) -> EnergyLimitReport:
    """Gaps between the component energies at early snapshots and at t = 0.

    ``times`` defaults to every recorded positive time.
    """
    _check_traj(traj)
    ux0 = deriv(traj.u[0])
    e_u0 = mean(ux0**2)
    e_r0 = mean(traj.rho[0] ** 2)
    if times is None:
        times = [t for t in traj.times if t > 0]
    times = tuple(sorted((float(t) for t in times), reverse=True))
    ug, rg = [], []
    for t in times:
        i = traj.index_of(t)
        ug.append(abs(mean(deriv(traj.u[i]) ** 2) - e_u0))
        rg.append(abs(mean(traj.rho[i] ** 2) - e_r0))
    return EnergyLimitReport(times, tuple(ug), tuple(rg))
