"""Method-of-lines integration with classical RK4, trajectory recording and
characteristic tracking for the density equation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from muhs import dynamics as dyn
from muhs.dynamics import ConservedInit, Params, State
from muhs.grid import deriv, evaluate, mean, sup_norm, wavenumbers

__all__ = [
    "TimeStepConfig",
    "TrajectoryRecord",
    "Characteristic",
    "cfl_dt",
    "step_rk4",
    "run",
    "evolve_characteristics",
    "DIAGNOSTIC_COLUMNS",
]

DIAGNOSTIC_COLUMNS = (
    "t",
    "mu0",
    "energy",
    "sup_u",
    "sup_ux",
    "min_ux",
    "sup_rho",
    "min_rho",
    "sup_bound_margin",
    "c1_margin",
    "c2_margin",
)

# steps shorter than this fraction of the nominal dt are folded into the previous one
_SLIVER = 1e-9


@dataclass(frozen=True)
class TimeStepConfig:
    t_end: float
    cfl_number: float = 0.3
    dt_max: float = 1e-2
    record_every: int = 1
    blowup_threshold: float = 1e6
    fixed_dt: float | None = None
    # relative energy drift treated as loss of regularity; None disables
    energy_drift_limit: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be finite and >= 0, got {self.t_end}")
        if not 0 < self.cfl_number <= 1:
            raise ValueError(f"cfl_number must lie in (0, 1], got {self.cfl_number}")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be an integer >= 1")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if self.fixed_dt is not None and not self.fixed_dt > 0:
            raise ValueError("fixed_dt must be positive")
        if self.energy_drift_limit is not None and not self.energy_drift_limit > 0:
            raise ValueError("energy_drift_limit must be positive")


@dataclass
class TrajectoryRecord:
    """Snapshots and diagnostics from one run.

    ``termination`` is ``"reached_t_end"`` or ``"blowup_detected"``; in the
    latter case ``blowup_time`` holds the time of the first bad state.
    """

    params: Params
    init: ConservedInit
    times: list = field(default_factory=list)
    u: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    du: list = field(default_factory=list)
    drho: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    termination: str = "running"
    blowup_time: float | None = None
    steps: int = 0

    @property
    def blew_up(self) -> bool:
        return self.termination == "blowup_detected"

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> State:
        return State(self.u[i], self.rho[i], self.times[i])

    def index_of(self, t: float, tol: float = 1e-12) -> int:
        ts = np.asarray(self.times)
        i = int(np.argmin(np.abs(ts - t)))
        if abs(ts[i] - t) > tol:
            raise KeyError(f"no snapshot at t={t} (closest {ts[i]})")
        return i

    def column(self, name: str) -> np.ndarray:
        return np.array([d[name] for d in self.diagnostics])

    def append(self, s: State, tend, diag: dict):
        self.times.append(float(s.t))
        self.u.append(s.u)
        self.rho.append(s.rho)
        self.du.append(tend[0])
        self.drho.append(tend[1])
        self.diagnostics.append(diag)


def cfl_dt(s: State, p: Params, cfg: TimeStepConfig) -> float:
    if s.blown_up or not s.finite:
        return 0.0
    speed = sup_norm(s.u) + abs(p.gamma) + 1e-12
    return min(cfg.dt_max, cfg.cfl_number / (s.n * speed))


def _bad(u, rho) -> bool:
    return not (np.all(np.isfinite(u)) and np.all(np.isfinite(rho)))


def _stage(u, rho) -> State:
    return State(u, rho, blown_up=_bad(u, rho))


def step_rk4(s: State, p: Params, dt: float) -> State:
    if s.blown_up:
        return s
    u, rho = s.u, s.rho
    k1u, k1r = dyn.rhs(s, p)
    k2u, k2r = dyn.rhs(_stage(u + 0.5 * dt * k1u, rho + 0.5 * dt * k1r), p)
    k3u, k3r = dyn.rhs(_stage(u + 0.5 * dt * k2u, rho + 0.5 * dt * k2r), p)
    k4u, k4r = dyn.rhs(_stage(u + dt * k3u, rho + dt * k3r), p)
    un = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    rn = rho + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    return State(un, rn, s.t + dt, blown_up=_bad(un, rn))


def _diagnostics(s: State, c: ConservedInit) -> dict:
    ux = deriv(s.u)
    d = {
        "t": float(s.t),
        "mu0": mean(s.u),
        "energy": dyn.energy(s),
        "sup_u": sup_norm(s.u),
        "sup_ux": sup_norm(ux),
        "min_ux": float(np.min(ux)),
        "sup_rho": sup_norm(s.rho),
        "min_rho": float(np.min(s.rho)),
        "sup_bound_margin": dyn.sup_bound_check(s, c).margin,
        "c1_margin": math.nan,
        "c2_margin": math.nan,
    }
    if c.beta > 0:
        try:
            d["c1_margin"] = dyn.c1_tilde(s.t, c) - d["sup_ux"]
            d["c2_margin"] = dyn.c2_tilde(s.t, c) - d["sup_rho"]
        except OverflowError:
            d["c1_margin"] = d["c2_margin"] = math.inf
    return d


def _drifted(s: State, e0: float, cfg: TimeStepConfig) -> bool:
    if cfg.energy_drift_limit is None:
        return False
    return abs(dyn.energy(s) - e0) > cfg.energy_drift_limit * max(e0, 1e-300)


def run(
    s0: State,
    p: Params,
    cfg: TimeStepConfig,
    init: ConservedInit | None = None,
    stops=(),
) -> TrajectoryRecord:
    """Integrate from ``s0`` to ``cfg.t_end``.

    Steps are shortened to land exactly on every time in ``stops`` and on
    ``t_end``; those states are always recorded, as is t = 0. Blow-up (a
    non-finite value, sup|u_x| above the threshold, or, when
    ``energy_drift_limit`` is set, a relative energy drift beyond it) ends
    the run and is reported through ``termination``.
    """
    if not s0.finite:
        raise ValueError("initial state must be finite")
    init = init or ConservedInit.from_state(s0)
    rec = TrajectoryRecord(params=p, init=init)
    targets = sorted({float(t) for t in stops if s0.t < t < cfg.t_end} | {float(cfg.t_end)})
    s = s0
    e0 = dyn.energy(s0)
    rec.append(s, dyn.rhs(s, p), _diagnostics(s, init))
    ti = 0
    while ti < len(targets) and targets[ti] <= s.t:
        ti += 1
    while ti < len(targets):
        target = targets[ti]
        dt = cfg.fixed_dt if cfg.fixed_dt is not None else cfl_dt(s, p, cfg)
        if not dt > 0:
            rec.termination, rec.blowup_time = "blowup_detected", s.t
            return rec
        hit = s.t + dt * (1.0 + _SLIVER) >= target
        new = step_rk4(s, p, target - s.t if hit else dt)
        if hit:
            new = State(new.u, new.rho, target, new.blown_up)
        rec.steps += 1
        if new.blown_up or sup_norm(deriv(new.u)) > cfg.blowup_threshold or _drifted(new, e0, cfg):
            rec.termination, rec.blowup_time = "blowup_detected", new.t
            if rec.times[-1] != s.t:
                rec.append(s, dyn.rhs(s, p), _diagnostics(s, init))
            return rec
        s = new
        if hit:
            ti += 1
        if hit or rec.steps % cfg.record_every == 0:
            rec.append(s, dyn.rhs(s, p), _diagnostics(s, init))
    rec.termination = "reached_t_end"
    return rec


# -- characteristics --------------------------------------------------------


@dataclass
class Characteristic:
    """Path X(t) with dX/dt = -(u + gamma), carrying R with dR/dt = u_x R."""

    x0: float
    times: np.ndarray
    X: np.ndarray
    R: np.ndarray
    rho_on_path: np.ndarray

    @property
    def mismatch(self) -> float:
        """Max relative gap between R and the interpolated density on the path."""
        scale = np.maximum(np.abs(self.rho_on_path), 1e-300)
        return float(np.max(np.abs(self.R - self.rho_on_path) / scale))

    @property
    def sign_preserved(self) -> bool:
        s = np.sign(self.R[0])
        return bool(s != 0 and np.all(np.sign(self.R) == s))


def _hermite(c0, d0, c1, d1, theta, h):
    t2, t3 = theta * theta, theta * theta * theta
    return (
        (2 * t3 - 3 * t2 + 1) * c0
        + (t3 - 2 * t2 + theta) * h * d0
        + (-2 * t3 + 3 * t2) * c1
        + (t3 - t2) * h * d1
    )


def evolve_characteristics(
    traj: TrajectoryRecord, p: Params, seeds, substeps: int = 2
) -> list[Characteristic]:
    """Track characteristics through a finished trajectory.

    Fields between snapshots are cubic Hermite in time (using the recorded
    tendencies) and trigonometric interpolants in space.
    """
    if traj.blew_up:
        raise ValueError("cannot trace characteristics through a blown-up trajectory")
    if len(traj) < 2:
        raise ValueError("trajectory needs at least two snapshots")
    seeds = np.mod(np.asarray(seeds, dtype=float), 1.0)
    n = traj.u[0].shape[0]
    ik = 1j * wavenumbers(n)
    ik = ik.copy()
    ik[-1] = 0.0

    def coeffs(i):
        uh = np.fft.rfft(traj.u[i]) / n
        duh = np.fft.rfft(traj.du[i]) / n
        return uh, duh, uh * ik, duh * ik

    times = np.asarray(traj.times)
    X = seeds.copy()
    R = evaluate(np.fft.rfft(traj.rho[0]) / n, X, n)
    Xs, Rs, rhos = [X.copy()], [R.copy()], [R.copy()]
    cur = coeffs(0)
    for i in range(len(times) - 1):
        nxt = coeffs(i + 1)
        t0, h = times[i], times[i + 1] - times[i]

        def field_at(theta):
            uh = _hermite(cur[0], cur[1], nxt[0], nxt[1], theta, h)
            uxh = _hermite(cur[2], cur[3], nxt[2], nxt[3], theta, h)
            return uh, uxh

        def f(theta, x, r):
            uh, uxh = field_at(theta)
            return -(evaluate(uh, x, n) + p.gamma), evaluate(uxh, x, n) * r

        dth = 1.0 / substeps
        for j in range(substeps):
            th = j * dth
            ht = h * dth
            a1, b1 = f(th, X, R)
            a2, b2 = f(th + 0.5 * dth, X + 0.5 * ht * a1, R + 0.5 * ht * b1)
            a3, b3 = f(th + 0.5 * dth, X + 0.5 * ht * a2, R + 0.5 * ht * b2)
            a4, b4 = f(th + dth, X + ht * a3, R + ht * b3)
            X = np.mod(X + ht / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4), 1.0)
            R = R + ht / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        cur = nxt
        Xs.append(X.copy())
        Rs.append(R.copy())
        rhos.append(evaluate(np.fft.rfft(traj.rho[i + 1]) / n, X, n))
    Xs, Rs, rhos = np.array(Xs), np.array(Rs), np.array(rhos)
    return [
        Characteristic(float(x0), times.copy(), Xs[:, j], Rs[:, j], rhos[:, j])
        for j, x0 in enumerate(seeds)
    ]
