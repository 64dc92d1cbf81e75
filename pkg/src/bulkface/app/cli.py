"""Command line entry point: ``bulkface <subcommand> [--config ...]``.

Exit codes: 0 ok, 1 invalid input, 2 solver failure, 3 property violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .. import analysis
from ..assembly import StateVector
from ..coefficients import OnsagerDirectModel, audit_assumptions
from ..errors import (ConfigurationError, EigenNotConverged, InsufficientDecayData,
                      LinearSolveFailed, ModeError, PicardDiverged, StepSizeUnderflow)
from ..mesh import MODES
from ..timestepper import run
from . import io
from .config import ConfigError, RunConfig, load_config, parse_config

log = logging.getLogger("bulkface")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_PROPERTY = 0, 1, 2, 3

PME_DEFAULT = {
    "geometry": {"nx": 16, "ny": 16, "mode": "bulk_only"},
    "model": {},
    "initial": {"kind": "expression",
                "expression": "1 + 0.5*cos(3.141592653589793*x)*cos(3.141592653589793*y)"},
    "time": {"dt": 0.01, "t_end": 2.0},
    "output": {"prefix": "pme"},
}


class PropertyViolation(Exception):
    pass


def _threads():
    raw = os.environ.get("BULKFACE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"expected a positive integer, got {raw!r}", key="BULKFACE_THREADS")
    if n < 1:
        raise ConfigError("must be >= 1", key="BULKFACE_THREADS")
    if n > 1:
        log.debug("BULKFACE_THREADS=%d ignored: assembly is serial for reproducibility", n)
    return n


class Session:
    """Shared output plumbing for one invocation."""

    def __init__(self, cfg: RunConfig, out_dir, quiet):
        self.cfg = cfg
        self.dir = out_dir or cfg.output.dir
        self.prefix = cfg.output.prefix
        self.quiet = quiet

    def path(self, name):
        return os.path.join(self.dir, f"{self.prefix}_{name}")

    def say(self, msg):
        if not self.quiet:
            print(msg)

    def echo_config(self, extra=None):
        doc = dict(self.cfg.resolved)
        doc["output"] = {**doc["output"], "dir": self.dir}
        if extra:
            doc["command"] = extra
        io.write_config_echo(self.path("config.json"), doc)

    def write_trace(self, trace):
        io.write_diagnostics(self.path("diagnostics.csv"), trace)
        io.write_mesh(self.path("mesh.csv"), trace.geom)
        for k, s in enumerate(trace.snapshots):
            io.write_snapshot(self.path(f"snapshot_{k:05d}.csv"), trace.geom, s)
        io.write_table(self.path("snapshot_times.csv"), ["index", "t"],
                       [[k, t] for k, t in enumerate(trace.times)])


def _simulate(cfg: RunConfig):
    geom = cfg.build_geometry()
    u0 = cfg.initial_state(geom)
    return run(geom, cfg.model, cfg.forcing, u0, cfg.time, capacity=cfg.capacity)


def _check_bounds(session, trace):
    """Maximum principle against the initial range (widened by dissipative forcing)."""
    x0 = trace.snapshots[0].flat
    lo, hi = float(x0.min()), float(x0.max())
    forcing = session.cfg.forcing
    if forcing.is_zero:
        tol = 1e-10
    elif forcing.dissipative:
        lf, Lf = forcing.sign_bounds()
        lo, hi, tol = min(lo, lf), max(hi, Lf), 1e-8
    else:
        return None
    rep = analysis.check_maximum_principle(trace, lo, hi, tol)
    session.say(f"bounds [{lo:.6g}, {hi:.6g}]: upper excess {rep.upper_violation:.3e}, "
                f"lower excess {rep.lower_violation:.3e}")
    return rep


def cmd_simulate(session, args):
    trace = _simulate(session.cfg)
    session.echo_config("simulate")
    session.write_trace(trace)
    d0, d1 = trace.snapshots[0].flat, trace.final_state.flat
    w = trace.geom.lumped_weights
    drift = abs(w @ d1 - w @ d0) / max(abs(w @ d0), 1e-300)
    session.say(f"{len(trace.diagnostics)} steps, relative mass drift {drift:.3e}")
    rep = _check_bounds(session, trace)
    if rep is not None and not rep.passed:
        raise PropertyViolation("maximum principle violated")
    return trace


def cmd_decay(session, args):
    if not session.cfg.forcing.is_zero:
        raise ConfigError("decay needs zero forcing", key="forcing")
    trace = cmd_simulate(session, args)
    fit = analysis.fit_decay_rate(trace, trace.u_infinity)
    ratios = fit.bound_ratios()
    ok = fit.delta_hat > 0 and fit.bound_holds(1e-3)
    io.write_table(session.path("decay.csv"),
                   ["delta_hat", "r_squared", "t_start", "t_end", "max_bound_ratio", "bound_ok"],
                   [[fit.delta_hat, fit.r_squared, fit.window[0], fit.window[1],
                     float(ratios.max()), ok]])
    session.say(f"delta_hat={fit.delta_hat:.6g} r2={fit.r_squared:.6g} "
                f"window=[{fit.window[0]:g}, {fit.window[1]:g}] max ratio={ratios.max():.6g}")
    if not ok:
        raise PropertyViolation("exponential decay bound not satisfied")


def cmd_pme(session, args):
    trace = cmd_simulate(session, args)
    x0, x1 = trace.snapshots[0].flat, trace.final_state.flat
    w = trace.geom.lumped_weights
    drift = abs(w @ x1 - w @ x0) / abs(w @ x0)
    spread = float(x1.max() - x1.min())
    min_u = min(float(s.flat.min()) for s in trace.snapshots)
    try:
        delta = analysis.fit_decay_rate(trace, trace.u_infinity).delta_hat
    except InsufficientDecayData:
        delta = float("nan")
    law = session.cfg.model.k_plus
    io.write_table(session.path("summary.csv"),
                   ["rho", "final_spread", "mass_drift", "min_u", "delta_hat"],
                   [[law.rho if law.kind == "power" else float("nan"), spread, drift, min_u, delta]])
    session.say(f"final spread {spread:.3e}, min {min_u:.6g}, delta_hat {delta:.6g}")
    if min_u <= 0 or drift > 1e-9:
        raise PropertyViolation("positivity or mass conservation violated")


def cmd_poincare(session, args):
    geom = session.cfg.build_geometry()
    weights = tuple(args.transmission)
    rep = analysis.poincare_constant(geom, weights, seed=args.seed)
    ratios = analysis.random_state_ratios(rep, geom, args.samples, args.seed, weights)
    left, right = rep.check(geom, rep.vector, weights)
    equality = abs(left - right) / right
    session.echo_config("poincare")
    io.write_table(session.path("poincare.csv"),
                   ["lambda1", "C", "residual", "iterations", "max_random_ratio", "eigen_equality"],
                   [[rep.lambda1, rep.C, rep.residual, rep.iterations, float(ratios.max()), equality]])
    io.write_snapshot(session.path("eigenvector.csv"), geom, StateVector.from_flat(geom, rep.vector))
    session.say(f"lambda1={rep.lambda1:.12g} C={rep.C:.12g} max ratio={ratios.max():.12g}")
    if ratios.max() > 1 + 1e-8 or equality > 1e-6:
        raise PropertyViolation("Poincare inequality check failed")


def cmd_onsager_compare(session, args):
    cfg = session.cfg
    if cfg.onsager is None:
        raise ConfigError("onsager-compare needs an 'onsager' section", key="onsager")
    geom = cfg.build_geometry()
    theta0 = cfg.initial_state(geom)
    transformed = run(geom, cfg.model, cfg.forcing, theta0, cfg.time, capacity=cfg.capacity)
    direct_model = OnsagerDirectModel(cfg.onsager, cfg.model.clamp)
    direct = run(geom, direct_model, cfg.forcing, theta0, cfg.time, capacity=cfg.capacity)
    gap = float(np.max(np.abs(transformed.snapshot_matrix() - direct.snapshot_matrix())))
    ent = analysis.entropy_trace(geom, cfg.onsager, direct, model=cfg.model)
    session.echo_config("onsager-compare")
    session.write_trace(transformed)
    io.write_table(session.path("entropy.csv"), ["t", "entropy", "dissipation"],
                   zip(ent.times, ent.entropy_values, ent.dissipation_values))
    ok = gap <= 1e-9 and ent.is_nondecreasing(1e-10)
    io.write_table(session.path("onsager_compare.csv"),
                   ["max_discrepancy", "entropy_min_increment", "entropy_nondecreasing"],
                   [[gap, ent.min_increment(), ent.is_nondecreasing(1e-10)]])
    session.say(f"max discrepancy {gap:.3e}, smallest entropy increment {ent.min_increment():.3e}")
    if not ok:
        raise PropertyViolation("Onsager consistency check failed")


def cmd_audit(session, args):
    rep = audit_assumptions(session.cfg.model, mode=session.cfg.geometry["mode"])
    for line in rep.lines():
        session.say(line)
    if not rep.ok:
        raise ConfigurationError("coefficient audit failed: " + "; ".join(rep.messages))


COMMANDS = {
    "simulate": cmd_simulate,
    "decay": cmd_decay,
    "pme": cmd_pme,
    "poincare": cmd_poincare,
    "onsager-compare": cmd_onsager_compare,
    "audit": cmd_audit,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, default=0, help="seed for random-field checks")
    common.add_argument("--quiet", action="store_true")
    parser = argparse.ArgumentParser(prog="bulkface", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "pme":
            p.add_argument("--rho", type=float, help="power-law exponent (default 2)")
        if name == "poincare":
            p.add_argument("--nx", type=int)
            p.add_argument("--ny", type=int)
            p.add_argument("--mode", choices=MODES)
            p.add_argument("--transmission", type=float, nargs=3, default=(1.0, 1.0, 1.0),
                           metavar=("M_PLUS", "M_MINUS", "M_GAMMA"))
            p.add_argument("--samples", type=int, default=1000)
    return parser


def _read_doc(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno, column=exc.colno) from exc


def _load(args) -> RunConfig:
    if args.command == "pme":
        doc = _read_doc(args.config) if args.config else json.loads(json.dumps(PME_DEFAULT))
        if not isinstance(doc, dict):
            raise ConfigError("expected an object", key="<root>")
        doc.setdefault("geometry", {})["mode"] = "bulk_only"
        model = doc.setdefault("model", {})
        if args.rho is not None or "k_plus" not in model:
            rho = 2.0 if args.rho is None else args.rho
            model["k_plus"] = {"kind": "power", "kappa0": rho, "rho": rho}
        return parse_config(json.dumps(doc))
    if args.command == "poincare":
        doc = _read_doc(args.config) if args.config else {"model": {},
                                                          "initial": {"kind": "constant"}}
        geo = doc.setdefault("geometry", {})
        for key in ("nx", "ny", "mode"):
            if getattr(args, key) is not None:
                geo[key] = getattr(args, key)
        doc.setdefault("output", {}).setdefault("prefix", "poincare")
        return parse_config(json.dumps(doc))
    if not args.config:
        raise ConfigError("this subcommand needs --config", key="--config")
    return load_config(args.config)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _threads()
        cfg = _load(args)
        COMMANDS[args.command](Session(cfg, args.out, args.quiet), args)
    except (ConfigurationError, ModeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PicardDiverged, StepSizeUnderflow, LinearSolveFailed, EigenNotConverged,
            InsufficientDecayData) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PropertyViolation as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
