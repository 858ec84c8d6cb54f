"""Command-line front end.

Every subcommand builds a :class:`~qbranch.serialize.Table` and writes it as
JSON or CSV to ``--output``, to ``$QBRANCH_OUTPUT_DIR/<subcommand>.<format>``
when that variable is set, or to standard output. Exit status is 0 on
success, 1 on a physics-domain error or a failed ``validate``, 2 on a usage
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from qbranch import __version__, branches, coulomb, ksmap, phases, scattering1d, validation
from qbranch.errors import QBranchError
from qbranch.gridfield import Grid1D
from qbranch.madelung import decompose
from qbranch.serialize import Table, atomic_write, dumps_json

OUTPUT_DIR_ENV = "QBRANCH_OUTPUT_DIR"


@dataclass(frozen=True)
class UnitSystem:
    """``hbar``, default mass, Coulomb constant ``e2`` and elementary charge."""

    name: str
    hbar: float
    mass: float
    e2: float
    charge: float


UNITS: Mapping[str, UnitSystem] = {
    "natural": UnitSystem("natural", 1.0, 1.0, 1.0, 1.0),
    # MeV and fm with c = 1: hbar -> hbar c, masses in MeV (default: one atomic mass unit)
    "mev_fm": UnitSystem("mev_fm", 197.327, 931.494, 1.44, 1.0),
    "si": UnitSystem("si", 1.054571817e-34, 9.1093837015e-31, 2.307077552e-28, 1.602176634e-19),
}


@dataclass(frozen=True)
class RunConfig:
    units: UnitSystem
    fmt: str = "json"
    output: Optional[str] = None
    grid: Optional[str] = None
    tolerances: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.fmt not in ("json", "csv"):
            raise ValueError(f"unknown format {self.fmt!r}")
        for k, v in self.tolerances.items():
            if not v > 0:
                raise ValueError(f"tolerance {k} must be positive")


def parse_sweep(spec: str) -> np.ndarray:
    """``"start:stop:step"`` to an inclusive, evenly spaced array."""
    try:
        a, b, s = (float(v) for v in spec.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"sweep must look like 'start:stop:step', got {spec!r}") from None
    if not s > 0 or b < a:
        raise argparse.ArgumentTypeError("sweep needs step > 0 and stop >= start")
    n = int(round((b - a) / s)) + 1
    return a + (b - a) * np.arange(n) / max(n - 1, 1) if n > 1 else np.array([a])


def _tolerance(spec: str) -> tuple[str, float]:
    try:
        k, v = spec.split("=")
        v = float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance must look like NAME=VALUE, got {spec!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return k, v


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _problem(args, cfg: RunConfig, width: Optional[float]) -> scattering1d.ScatteringProblem:
    m = cfg.units.mass if args.mass is None else args.mass
    return scattering1d.ScatteringProblem(args.energy, args.v0, width, m=m, hbar=cfg.units.hbar)


def _grid(cfg: RunConfig, default: str) -> Grid1D:
    return Grid1D.parse(cfg.grid or default)


def _fields_table(sol, grid: Grid1D, meta: dict) -> Table:
    p = sol.problem
    psi = scattering1d.evaluate_wavefunction(sol, grid)
    f = decompose(psi, p.m, p.hbar, dpsi=sol.derivative(grid.x, 1), d2psi=sol.derivative(grid.x, 2))
    return Table({"x": grid.x, "psi": psi.values, "rho": f.rho, "S": f.S, "v": f.v, "Q": f.Q,
                  "V": p.potential(grid.x)}, meta)


def cmd_step(args, cfg: RunConfig) -> Table:
    p = _problem(args, cfg, None)
    sol = scattering1d.solve_step(p)
    meta = {"k": p.k, "kappa": p.kappa, "r": sol.r, "A": sol.A, "R": sol.R, "T": 0.0,
            "delta": sol.delta, "theta": sol.theta}
    return _fields_table(sol, _grid(cfg, f"{-4.0 / p.k}:{4.0 / p.kappa}:401"), meta)


def cmd_barrier(args, cfg: RunConfig) -> Table:
    p = _problem(args, cfg, args.width)
    meta = {"k": p.k, "kappa": p.kappa, "opacity": p.opacity, "log_T": scattering1d.log_transmission(p),
            "T_thick": scattering1d.thick_barrier_transmission(p)}
    try:
        sol = scattering1d.solve_barrier(p)
    except scattering1d.ThickBarrierOverflowError:
        meta["T"] = scattering1d.transmission(p)
        meta["R"] = 1.0 - meta["T"]
        return Table({}, meta)
    meta.update({"r": sol.r, "t": sol.t, "A": sol.A, "B": sol.B, "T": sol.T, "R": sol.R})
    return _fields_table(sol, _grid(cfg, f"{-2.0 * p.a}:{3.0 * p.a}:401"), meta)


def cmd_madelung(args, cfg: RunConfig) -> Table:
    p = _problem(args, cfg, args.width)
    sol = scattering1d.solve_step(p) if p.is_step else scattering1d.solve_barrier(p)
    hi = 4.0 / p.kappa if p.is_step else 2.0 * p.a
    grid = _grid(cfg, f"{-2.0 / p.k}:{hi}:801")
    psi = scattering1d.evaluate_wavefunction(sol, grid)
    if args.method == "exact":
        f = decompose(psi, p.m, p.hbar, dpsi=sol.derivative(grid.x, 1), d2psi=sol.derivative(grid.x, 2))
    else:
        f = decompose(psi, p.m, p.hbar)
    t = f.to_table()
    cur = f.current[~f.node_mask]
    return Table(t.columns, {"method": args.method, "current_mean": float(np.mean(cur)),
                             "current_ptp": float(np.ptp(cur))})


def cmd_branches(args, cfg: RunConfig) -> Table:
    p = _problem(args, cfg, args.width)
    if p.is_step:
        sol = scattering1d.solve_step(p)
        sets = branches.step_branches(sol)
        spans = {"I": (-4.0 / p.k, 0.0), "II": (0.0, 4.0 / p.kappa)}
    else:
        sol = scattering1d.solve_barrier(p)
        sets = branches.barrier_branches(sol)
        spans = {"I": (-4.0 / p.k, 0.0), "II": (0.0, p.a), "III": (p.a, p.a + 4.0 / p.k)}
    labels, regions, real, qmax, hjmax = [], [], [], [], []
    for region, bs in sets.items():
        grid = Grid1D(*spans[region], 201)
        V = float(p.potential(0.5 * (spans[region][0] + spans[region][1])))
        for b in bs:
            labels.append(b.label)
            regions.append(region)
            real.append(branches.is_classical_real(b, grid))
            q = branches.branch_quantum_potential(b, grid, p.m, p.hbar).values
            qmax.append(float(np.nanmax(np.abs(q))))
            hjmax.append(float(np.max(np.abs(branches.hj_residual(b, V, p.m, grid).values))))
    forced = branches.forced_real_branch(p.kappa, p.E, p.hbar)
    g2 = Grid1D(*spans["II"], 201)
    forced_res = float(np.max(np.abs(branches.hj_residual(forced, p.V0, p.m, g2).values)))
    return Table({"label": labels, "region": regions, "classical_real": np.array(real),
                  "max_abs_Q": np.array(qmax), "max_abs_hj_residual": np.array(hjmax)},
                 {"forced_real_hj_residual": forced_res,
                  "expected_forced_residual": (p.hbar * p.kappa) ** 2 / p.m})


def _coulomb_params(args, cfg: RunConfig) -> coulomb.CoulombParams:
    m = cfg.units.mass if args.mass is None else args.mass
    return coulomb.CoulombParams(args.energy, args.L, args.z1, args.z2, m, cfg.units.hbar, cfg.units.e2)


def _radial_grid(args, cfg: RunConfig, p: coulomb.CoulombParams, r_min: float) -> Grid1D:
    if cfg.grid:
        return Grid1D.parse(cfg.grid)
    tp = p.turning_points()
    r_max = 3.0 * tp[0] if tp else 20.0 / p.k
    return Grid1D(r_min, max(r_max, 2.0 * r_min), 601)


def _coulomb_table(p, f, grid: Grid1D, meta: dict, extra: Optional[dict] = None) -> Table:
    rep = coulomb.forbidden_region_check(p, grid)
    cols = {"r": grid.x, "rho": f.rho, "S": f.S, "v_r": f.v, "Q": f.Q, "allowed": rep.allowed}
    cols.update(extra or {})
    tp = p.turning_points()
    meta = {"eta": p.eta, "k": p.k, "turning_point": tp[0] if tp else None, **meta}
    return Table(cols, meta)


def cmd_coulomb_decay(args, cfg: RunConfig) -> Table:
    p = _coulomb_params(args, cfg)
    tp = p.turning_points()
    grid = _radial_grid(args, cfg, p, args.r_min if args.r_min else (0.25 * tp[0] if tp else 0.1 / p.k))
    f = coulomb.decay_fields(p, grid)
    return _coulomb_table(p, f, grid, {"current": float(np.mean(f.current))})


def cmd_coulomb_fusion(args, cfg: RunConfig) -> Table:
    p = _coulomb_params(args, cfg)
    ch = coulomb.FusionChannel(complex(args.s_re, args.s_im), args.radius)
    grid = _radial_grid(args, cfg, p, args.radius)
    res = coulomb.fusion_fields(p, ch, grid)
    return _coulomb_table(p, res.field, grid, {"T_L": res.T_L, "S_L": ch.S_L,
                                               "current": float(np.mean(res.current))},
                          {"dS_dr": res.dS_dr})


def cmd_ks_hydrogen(args, cfg: RunConfig) -> Table:
    m = cfg.units.mass if args.mass is None else args.mass
    ks = ksmap.KSConfig(args.G, args.energy, m, cfg.units.hbar)
    prof = ksmap.reconstruct_ground_state(ks, quadrature=ksmap.Quadrature(args.quadrature, args.nodes),
                                          r=np.linspace(args.r_min, args.r_max, args.points))
    return prof.to_table()


def cmd_ks_inverted(args, cfg: RunConfig) -> Table:
    m = cfg.units.mass if args.mass is None else args.mass
    ks = ksmap.KSConfig(args.G, args.energy, m, cfg.units.hbar)
    sample = ksmap.BranchSample.random(args.branches, args.seed, tprime=args.tprime)
    return ksmap.inverted_branch_interference_check(ks, sample).to_table()


def cmd_berry(args, cfg: RunConfig) -> Table:
    if args.loop_file:
        with open(args.loop_file, encoding="utf-8") as fh:
            spec = json.load(fh)
        loop = phases.LoopPath(spec["theta"], spec["phi"])
        expected = None
    else:
        loop = phases.LoopPath.latitude(args.theta, args.points)
        expected = -args.band * math.pi * (1.0 - math.cos(args.theta))
    gamma = phases.berry_phase_discrete(loop, args.band)
    return Table({"theta": loop.theta, "phi": loop.phi},
                 {"band": args.band, "n_points": loop.n_points, "gamma": gamma,
                  "solid_angle": phases.solid_angle(loop), "expected_gamma": expected})


def cmd_josephson(args, cfg: RunConfig) -> Table:
    deltas = args.delta_sweep
    closed, field_j = [], []
    for d in deltas:
        j = phases.JunctionSpec(args.u0, args.energy, args.thickness, args.a_amp, args.b_amp, float(d),
                                Mstar=args.mstar, q_pair=2.0 * cfg.units.charge, hbar=cfg.units.hbar)
        closed.append(phases.josephson_current(j))
        field_j.append(float(np.mean(phases.josephson_current_from_field(j))))
    return Table({"delta": deltas, "j_closed": np.array(closed), "j_field": np.array(field_j)},
                 {"j_c": j.j_c, "kappa": j.kappa_sc})


def cmd_squid(args, cfg: RunConfig) -> Table:
    phi0 = phases.flux_quantum(cfg.units.hbar, cfg.units.charge)
    frac = args.flux_sweep
    closed = phases.squid_critical_current(args.ic, frac * phi0, phi0)
    brute = np.array([phases.squid_critical_current_brute(args.ic, f * phi0, phi0) for f in frac])
    return Table({"flux_over_phi0": frac, "Ic_squid": np.atleast_1d(closed), "Ic_brute": brute},
                 {"Phi0": phi0, "Ic_single": args.ic})


def cmd_validate(args, cfg: RunConfig) -> Table:
    return validation.report_table(validation.run_checks(cfg.tolerances))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--units", choices=sorted(UNITS), default="natural")
    common.add_argument("--format", choices=("json", "csv"), default="json", dest="fmt")
    common.add_argument("--output", "-o", help="output file (default: $%s/<command>.<format> or stdout)" % OUTPUT_DIR_ENV)
    common.add_argument("--grid", help="grid as x_min:x_max:n_points")
    common.add_argument("--mass", type=float, help="particle mass (default from the unit system)")

    parser = argparse.ArgumentParser(prog="qbranch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("step", cmd_step, "potential step: coefficients and Madelung fields")
    sp.add_argument("--energy", type=float, required=True)
    sp.add_argument("--v0", type=float, required=True)

    for name, func, help_ in (("barrier", cmd_barrier, "rectangular barrier: coefficients and fields"),
                              ("madelung", cmd_madelung, "Madelung decomposition of a step or barrier"),
                              ("branches", cmd_branches, "classical-action branch diagnostics")):
        sp = add(name, func, help_)
        sp.add_argument("--energy", type=float, required=True)
        sp.add_argument("--v0", type=float, required=True)
        sp.add_argument("--width", type=float, required=(name == "barrier"),
                        help="barrier width (omit for a step)")
        if name == "madelung":
            sp.add_argument("--method", choices=("exact", "fd"), default="exact")

    for name, func, help_ in (("coulomb-decay", cmd_coulomb_decay, "Madelung fields of the outgoing Coulomb wave"),
                              ("coulomb-fusion", cmd_coulomb_fusion, "fusion wave fields and probability")):
        sp = add(name, func, help_)
        sp.add_argument("--energy", type=float, required=True)
        sp.add_argument("--L", type=int, default=0)
        sp.add_argument("--z1", type=float, default=1.0)
        sp.add_argument("--z2", type=float, default=1.0)
        if name == "coulomb-decay":
            sp.add_argument("--r-min", type=float, dest="r_min", help="inner radius")
        else:
            sp.add_argument("--s-re", type=float, default=0.0, dest="s_re")
            sp.add_argument("--s-im", type=float, default=0.0, dest="s_im")
            sp.add_argument("--radius", type=float, required=True, help="absorption radius R")

    sp = add("ks-hydrogen", cmd_ks_hydrogen, "hydrogen ground state from the 4D oscillator branch integral")
    sp.add_argument("--G", type=float, default=1.0, help="Coulomb strength Z e^2")
    sp.add_argument("--energy", type=float, default=-0.5)
    sp.add_argument("--quadrature", choices=("closed", "hermite"), default="closed")
    sp.add_argument("--nodes", type=int, default=96)
    sp.add_argument("--r-min", type=float, default=0.1, dest="r_min")
    sp.add_argument("--r-max", type=float, default=10.0, dest="r_max")
    sp.add_argument("--points", type=int, default=200)

    sp = add("ks-inverted", cmd_ks_inverted, "branch quantum potentials of the inverted oscillator")
    sp.add_argument("--G", type=float, default=1.0, help="Coulomb strength Z1 Z2 e^2")
    sp.add_argument("--energy", type=float, default=0.5)
    sp.add_argument("--branches", type=int, default=6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tprime", type=float, default=1.0)

    sp = add("berry", cmd_berry, "discrete Berry phase of a spin-1/2 loop")
    sp.add_argument("--theta", type=float, default=math.pi / 3, help="latitude loop polar angle")
    sp.add_argument("--points", type=int, default=2000)
    sp.add_argument("--band", type=int, choices=(1, -1), default=1)
    sp.add_argument("--loop-file", dest="loop_file", help='JSON file {"theta": [...], "phi": [...]}')

    sp = add("josephson", cmd_josephson, "Josephson current versus phase difference")
    sp.add_argument("--u0", type=float, default=2.0)
    sp.add_argument("--energy", type=float, default=1.0)
    sp.add_argument("--thickness", type=float, default=1.0)
    sp.add_argument("--a-amp", type=float, default=1.0, dest="a_amp")
    sp.add_argument("--b-amp", type=float, default=1.0, dest="b_amp")
    sp.add_argument("--mstar", type=float, default=2.0)
    sp.add_argument("--delta-sweep", type=parse_sweep, default=parse_sweep("0:6.25:0.25"), dest="delta_sweep")

    sp = add("squid", cmd_squid, "dc SQUID critical current versus flux")
    sp.add_argument("--ic", type=float, default=1.0)
    sp.add_argument("--flux-sweep", type=parse_sweep, default=parse_sweep("0:2:0.01"), dest="flux_sweep",
                    help="flux in units of the flux quantum, start:stop:step")

    sp = add("validate", cmd_validate, "run every dual-path cross-check")
    sp.add_argument("--tol", type=_tolerance, action="append", default=[], help="override NAME=VALUE")
    return parser


def _emit(table: Table, cfg: RunConfig, command: str) -> None:
    text = dumps_json(table) if cfg.fmt == "json" else table.to_csv()
    path = cfg.output
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        path = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{command}.{cfg.fmt}")
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    tols = dict(getattr(args, "tol", []) or [])
    if args.command == "validate" and set(tols) - set(validation.CHECKS):
        print(f"qbranch validate: unknown check in --tol: {sorted(set(tols) - set(validation.CHECKS))}",
              file=sys.stderr)
        return 2
    cfg = RunConfig(UNITS[args.units], args.fmt, args.output, args.grid, tols)
    try:
        table = args.func(args, cfg)
    except QBranchError as exc:
        print(f"qbranch {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _emit(table, cfg, args.command)
    if args.command == "validate" and not table.meta["all_passed"]:
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> None:
    try:
        code = run(argv)
        sys.stdout.flush()
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
