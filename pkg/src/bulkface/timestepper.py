"""Implicit Euler in time with a frozen-coefficient (Picard) inner iteration.

Each inner iterate solves the linear problem

    (M/dt + A(w_k)) w_{k+1} = M u_n / dt + F(w_k)

with the coefficients of A and the forcing F frozen at the previous iterate.
The system matrix is SPD (lumped M > 0, A symmetric PSD).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .assembly import StateVector, assemble_operator, assemble_rhs, capacity_weights
from .coefficients import audit_assumptions
from .errors import ConfigurationError, PicardDiverged, StepSizeUnderflow
from .linalg import solve_spd
from .mesh import CoupledGeometry

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeStepConfig:
    dt: float
    t_end: float
    picard_tol: float = 1e-10
    picard_max: int = 50
    linear_tol: float = 1e-12
    dt_min: Optional[float] = None  # defaults to dt / 2**6
    snapshot_every: int = 1
    linear_solver: str = "cg"

    def __post_init__(self):
        for name in ("dt", "t_end", "picard_tol", "linear_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"time.{name} must be positive")
        if self.picard_max < 1:
            raise ConfigurationError("time.picard_max must be >= 1")
        if self.snapshot_every < 1:
            raise ConfigurationError("snapshot_every must be >= 1")
        if self.dt_min is not None and not 0 < self.dt_min <= self.dt:
            raise ConfigurationError("time.dt_min must lie in (0, dt]")
        if self.linear_solver not in ("cg", "dense"):
            raise ConfigurationError(f"unknown linear solver {self.linear_solver!r}")

    @property
    def min_step(self) -> float:
        return self.dt / 2 ** 6 if self.dt_min is None else self.dt_min


@dataclass
class StepDiagnostics:
    t: float
    dt: float
    picard_iters: int
    last_fixed_point_residual: float
    mass: float
    min_u: float
    max_u: float
    l22_dist_to_equilibrium: float
    dissipation: float = 0.0  # u.A(w*)u with the operator of the final inner solve
    residual_history: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    geom: CoupledGeometry
    times: np.ndarray
    snapshots: list
    diagnostics: list
    final_state: StateVector
    u_infinity: float
    dt_schedule: list

    def snapshot_matrix(self) -> np.ndarray:
        return np.array([s.flat for s in self.snapshots])


def step_implicit(geom, model, forcing, u_n, dt, cfg: TimeStepConfig, *,
                  capacity=None, u_infinity=None, t=0.0):
    """One implicit Euler step.  Returns (state, diagnostics).

    Raises PicardDiverged when the inner iteration does not reach
    ``cfg.picard_tol`` (sup-norm) within ``cfg.picard_max`` solves.
    """
    x_n = u_n.flat if isinstance(u_n, StateVector) else np.asarray(u_n, dtype=float)
    mass = capacity_weights(geom, capacity)
    lumped = geom.lumped_weights
    if u_infinity is None:
        u_infinity = float(lumped @ x_n) / geom.measures.V
    shift = sp.diags(mass / dt)
    inertia = mass * x_n / dt

    w = x_n.copy()
    history = []
    A = None
    for it in range(1, cfg.picard_max + 1):
        A = assemble_operator(geom, model, w)
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = inertia + assemble_rhs(geom, forcing, w)
        if not np.all(np.isfinite(rhs)):
            raise PicardDiverged("forcing overflowed at the current iterate", history)
        w_new, _ = solve_spd((A + shift).tocsr(), rhs, x0=w, rtol=cfg.linear_tol,
                             method=cfg.linear_solver)
        res = float(np.max(np.abs(w_new - w)))
        history.append(res)
        if not np.isfinite(res):
            raise PicardDiverged("non-finite fixed-point residual", history)
        w = w_new
        if res < cfg.picard_tol:
            break
    else:
        raise PicardDiverged(
            f"no fixed point to {cfg.picard_tol:g} after {cfg.picard_max} iterations "
            f"(last residual {history[-1]:.3e})", history)

    diag = StepDiagnostics(
        t=t + dt,
        dt=dt,
        picard_iters=it,
        last_fixed_point_residual=history[-1],
        mass=float(lumped @ w),
        min_u=float(w.min()),
        max_u=float(w.max()),
        l22_dist_to_equilibrium=float(np.sqrt(lumped @ (w - u_infinity) ** 2)),
        dissipation=float(w @ (A @ w)),
        residual_history=history,
    )
    return StateVector.from_flat(geom, w), diag


def run(geom, model, forcing, u0, cfg: TimeStepConfig, *, capacity=None,
        check_assumptions=True) -> SimulationTrace:
    """Integrate over [0, t_end]; steps whose inner iteration fails are halved."""
    if not isinstance(u0, StateVector):
        u0 = StateVector.from_flat(geom, u0)
    u0.validate(geom)
    x0 = u0.flat
    lo, hi = model.clamp.l, model.clamp.L
    if x0.min() < lo or x0.max() > hi:
        raise ConfigurationError(
            f"clamp window [{lo}, {hi}] does not contain the initial range "
            f"[{x0.min()}, {x0.max()}]")
    if check_assumptions:
        report = audit_assumptions(model, mode=geom.mode)
        if not report.ok:
            raise ConfigurationError("; ".join(report.messages))

    u_inf = float(geom.lumped_weights @ x0) / geom.measures.V
    n_steps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    snapshots, times = [u0], [0.0]
    diagnostics, schedule = [], []
    state, t = u0, 0.0

    def advance(state, t, h):
        try:
            new, diag = step_implicit(geom, model, forcing, state, h, cfg,
                                      capacity=capacity, u_infinity=u_inf, t=t)
        except PicardDiverged as exc:
            if h / 2 < cfg.min_step * (1 - 1e-12):
                raise StepSizeUnderflow(
                    f"step at t={t:g} failed down to dt={h:g} (< dt_min={cfg.min_step:g})") from exc
            log.info("halving step at t=%g: %s", t, exc)
            mid, _ = advance(state, t, h / 2)
            return advance(mid, t + h / 2, h / 2)
        diagnostics.append(diag)
        schedule.append(h)
        return new, t + h

    for k in range(1, n_steps + 1):
        t_target = min(k * cfg.dt, cfg.t_end)
        state, _ = advance(state, t, t_target - t)
        t = t_target
        diagnostics[-1].t = t  # pin the accumulated time to the grid
        if k % cfg.snapshot_every == 0 or k == n_steps:
            snapshots.append(state)
            times.append(t)

    return SimulationTrace(
        geom=geom,
        times=np.array(times),
        snapshots=snapshots,
        diagnostics=diagnostics,
        final_state=state,
        u_infinity=u_inf,
        dt_schedule=schedule,
    )
