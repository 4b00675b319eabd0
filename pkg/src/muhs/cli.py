"""Command-line driver.

Exit codes: 0 success, 1 property violation, 2 usage/config error,
3 declared-regime violation (blow-up where global existence was promised).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from muhs import dynamics as dyn
from muhs.archive import write_csv, write_diagnostics, write_manifest, write_trajectory
from muhs.config import ConfigError, ExperimentConfig, load_config
from muhs.grid import PeriodicGrid
from muhs.mollify import MollifierSpec, bump_integral, make_initial, mollification_norms, mollifier
from muhs.operator import operator_suite
from muhs.timestep import DIAGNOSTIC_COLUMNS, run
from muhs.verify import convergence_study

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_REGIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _say(args, *msg):
    if not args.quiet:
        print(*msg)


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    updates = {}
    if args.grid is not None:
        updates["grid"] = args.grid
    if args.out is not None:
        updates["output_dir"] = args.out
    if updates:
        cfg = ExperimentConfig.model_validate({**cfg.model_dump(), **updates})
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    grid = cfg.make_grid()
    p = cfg.params()
    s0, init = make_initial(cfg.data(), grid, cfg.mollifier)
    traj = run(s0, p, cfg.timestep(), init, stops=cfg.probe_times)
    out = Path(cfg.output_dir)
    write_trajectory(out / "trajectory.csv", traj)
    write_diagnostics(out / "diagnostics.csv", traj)
    write_manifest(
        out / "manifest.txt",
        "simulate",
        cfg.model_dump(),
        {
            "trajectory.csv": "t, u_0..u_{n-1}, rho_0..rho_{n-1}; one row per snapshot",
            "diagnostics.csv": ", ".join(DIAGNOSTIC_COLUMNS),
        },
        {"termination": traj.termination, "steps": traj.steps, "blowup_time": traj.blowup_time},
    )
    _say(args, f"termination: {traj.termination} after {traj.steps} steps, {len(traj)} snapshots")
    if traj.blew_up:
        _say(args, f"blow-up detected at t={traj.blowup_time:.6g}")
        if cfg.declare_global:
            return EXIT_REGIME
    else:
        e = traj.column("energy")
        m = traj.column("mu0")
        _say(args, f"energy drift (rel): {np.max(np.abs(e - e[0])) / max(e[0], 1e-300):.3e}")
        _say(args, f"mean drift: {np.max(np.abs(m - m[0])):.3e}")
    return EXIT_OK


def cmd_verify_operator(args) -> int:
    n = 256 if args.grid is None else args.grid
    try:
        PeriodicGrid(n)
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    checks = operator_suite(n)
    rows = []
    for c in checks:
        _say(args, f"{c.name:22s} max error {c.error:.3e}  tol {c.tolerance:.1e}  {'PASS' if c.passed else 'FAIL'}")
        rows.append([c.name, c.error, c.tolerance, c.passed])
    if args.out:
        write_csv(Path(args.out) / "operator_report.csv", ["identity", "max_error", "tolerance", "passed"], rows)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"failing identities: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load(args)
    if len(cfg.n_list) < 3:
        raise ConfigError("converge needs n_list with at least three indices")
    if not cfg.initial.alpha > 0:
        raise ConfigError("converge needs initial.alpha > 0")
    grid = cfg.make_grid()
    tcfg = cfg.timestep()
    probes = cfg.probe_times or [tcfg.t_end]
    try:
        rep = convergence_study(cfg.data(), cfg.n_list, grid, cfg.params(), tcfg, probes)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    out = Path(cfg.output_dir)
    cols = ["field", "t", "n_a", "n_b", "l2_distance", "sup_distance"]
    write_csv(out / "convergence.csv", cols, ([r[c] for c in cols] for r in rep.rows()))
    erows = []
    for n, es in rep.energies.items():
        for t, e in zip(rep.probe_times, es):
            erows.append([n, t, e, rep.mu1_sq, rep.mu1_sq - e])
    write_csv(out / "energies.csv", ["n", "t", "energy", "mu1_sq", "margin"], erows)
    lines = [f"mollifier indices: {list(rep.n_list)}", f"uniform dt: {rep.dt:.17g}"]
    for (name, t), d in sorted(rep.distances.items()):
        lines.append(f"{name:4s} t={t:<8g} " + "  ".join(f"{v:.6e}" for v in d))
    lines.append(f"min energy margin mu1^2 - energy: {min(rep.energy_margins.values()):.6e}")
    lines.append(f"admissibility margin (finest run): {rep.admissibility_margin:.6e}")
    bad = rep.decay_violations()
    lines.append("cauchy decay: " + ("holds" if not bad else "VIOLATED"))
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_manifest(
        out / "manifest.txt",
        "converge",
        cfg.model_dump(),
        {
            "convergence.csv": ", ".join(cols),
            "energies.csv": "n, t, energy, mu1_sq, margin",
            "summary.txt": "human-readable digest of the two CSVs",
        },
        {"dt": rep.dt},
    )
    for line in lines:
        _say(args, line)
    if bad:
        for name, t, i in bad:
            a, b, c = rep.n_list[i], rep.n_list[i + 1], rep.n_list[i + 2]
            print(f"decay violated for {name} at t={t}: d({b},{c}) >= d({a},{b})", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _load(args)
    grid = cfg.make_grid()
    s0, init = make_initial(cfg.data(), grid, cfg.mollifier)
    if not init.beta > 0:
        raise ConfigError(f"bounds need inf|rho0| > 0 (got {init.beta:.3g})")
    traj = run(s0, cfg.params(), cfg.timestep(), init, stops=cfg.probe_times)
    rows = []
    first_bad = None
    for d in traj.diagnostics:
        t = d["t"]
        c1 = dyn.c1_tilde(t, init)
        c2 = dyn.c2_tilde(t, init)
        m1, m2 = c1 - d["sup_ux"], c2 - d["sup_rho"]
        rows.append([t, d["sup_ux"], c1, d["sup_rho"], c2, m1, m2, d["sup_bound_margin"]])
        if first_bad is None and min(m1, m2, d["sup_bound_margin"]) < -dyn.HOLDS_TOL:
            first_bad = t
    out = Path(cfg.output_dir)
    cols = ["t", "sup_ux", "c1_tilde", "sup_rho", "c2_tilde", "c1_margin", "c2_margin", "sup_bound_margin"]
    write_csv(out / "bounds.csv", cols, rows)
    write_manifest(out / "manifest.txt", "bounds", cfg.model_dump(), {"bounds.csv": ", ".join(cols)})
    _say(args, f"{len(rows)} rows, termination: {traj.termination}")
    if traj.blew_up:
        print(f"blow-up at t={traj.blowup_time:.6g} despite inf|rho0| > 0", file=sys.stderr)
        return EXIT_REGIME
    if first_bad is not None:
        print(f"bound violated at t={first_bad:.17g}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_mollify_inspect(args) -> int:
    cfg = _load(args)
    grid = cfg.make_grid()
    ns = cfg.n_list or ([cfg.mollifier] if cfg.mollifier else [])
    if not ns:
        raise ConfigError("mollify-inspect needs n_list or mollifier")
    data = cfg.data()
    out = Path(cfg.output_dir)
    table = []
    for n in ns:
        phi = mollifier(MollifierSpec(n), grid)
        write_csv(out / f"phi_n{n}.csv", ["x", "phi"], zip(grid.nodes, phi))
        table.append(mollification_norms(data, grid, n))
    cols = list(table[0])
    write_csv(out / "norms.csv", cols, ([r[c] for c in cols] for r in table))
    write_manifest(
        out / "manifest.txt",
        "mollify-inspect",
        cfg.model_dump(),
        {"phi_n<N>.csv": "x, phi (unit discrete mean)", "norms.csv": ", ".join(cols)},
        {"bump_integral": bump_integral()},
    )
    _say(args, f"bump integral: {bump_integral():.15f}")
    for r in table:
        _say(args, "  ".join(f"{k}={r[k]:.6g}" for k in ("n", "u0n_l2", "u0nx_l2", "rho0n_l2", "rho0n_min", "h1_distance")))
    return EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "integrate one configuration and archive the trajectory"),
    "verify-operator": (cmd_verify_operator, "check the inverse-operator identities on random inputs"),
    "converge": (cmd_converge, "mollified-sequence Cauchy study"),
    "bounds": (cmd_bounds, "compare sup|u_x|, sup|rho| with the a priori bounds"),
    "mollify-inspect": (cmd_mollify_inspect, "dump mollifier samples and norm table"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="muhs", description="Periodic two-component mu-Hunter-Saxton simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--grid", metavar="N", type=int)
        sp.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # precondition failures from the library (grid parity, alpha, beta)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
