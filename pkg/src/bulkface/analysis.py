"""Diagnostics of simulated orbits: equilibrium, decay, Poincare constant, bounds, entropy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import StateVector, assemble_operator, capacity_weights
from .coefficients import ClampBounds, CoefficientModel, ScalarLaw, TransmissionLaw
from .errors import ConfigurationError, InsufficientDecayData
from .linalg import smallest_nonzero_eigenpair

EPS = np.finfo(float).eps


def _flat(u):
    return u.flat if isinstance(u, StateVector) else np.asarray(u, dtype=float)


# ------------------------------------------------------------- mass, equilibrium

def total_mass(geom, u) -> float:
    return float(geom.lumped_weights @ _flat(u))


@dataclass(frozen=True)
class EquilibriumReport:
    mass: float
    V: float
    u_infinity: float


def equilibrium(geom, u0) -> EquilibriumReport:
    mass = total_mass(geom, u0)
    V = geom.measures.V
    return EquilibriumReport(mass, V, mass / V)


def l22_distance(geom, u, c: float) -> float:
    d = _flat(u) - c
    return float(np.sqrt(geom.lumped_weights @ (d * d)))


# --------------------------------------------------------------------- decay

@dataclass(frozen=True)
class DecayFit:
    delta_hat: float
    r_squared: float
    window: tuple
    times: np.ndarray
    distances: np.ndarray

    def bound_ratios(self) -> np.ndarray:
        """dist(t) / (dist(t0) exp(-delta_hat (t - t0))) over the fit window."""
        t0, d0 = self.times[0], self.distances[0]
        return self.distances / (d0 * np.exp(-self.delta_hat * (self.times - t0)))

    def bound_holds(self, slack: float = 1e-3) -> bool:
        return bool(np.all(self.bound_ratios() <= 1.0 + slack))


def fit_log_linear(times, distances, floor: float = 10 * EPS) -> DecayFit:
    """Least-squares fit of log(distance) against t.

    The window is the leading run of samples with distance above `floor`.
    """
    times = np.asarray(times, dtype=float)
    distances = np.asarray(distances, dtype=float)
    below = np.flatnonzero(~(distances > floor))
    stop = below[0] if below.size else distances.size
    t, d = times[:stop], distances[:stop]
    if t.size < 5:
        raise InsufficientDecayData(f"only {t.size} samples above {floor:.3e}; need 5")
    y = np.log(d)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(-float(slope), r2, (float(t[0]), float(t[-1])), t, d)


def fit_decay_rate(trace, u_infinity: float, rel_floor: float = 1e-9) -> DecayFit:
    """Fit on snapshots whose distance stays above rel_floor * ||u0||.

    The default floor sits well above the linear-solver noise (relative 1e-12),
    so the tail where the distance has stalled at round-off is not fitted.
    """
    geom = trace.geom
    dists = np.array([l22_distance(geom, s, u_infinity) for s in trace.snapshots])
    norm0 = np.sqrt(geom.lumped_weights @ trace.snapshots[0].flat ** 2)
    floor = max(10 * EPS, rel_floor * norm0)
    return fit_log_linear(trace.times, dists, floor)


# ------------------------------------------------------------------ Poincare

@dataclass(frozen=True)
class PoincareReport:
    lambda1: float
    C: float
    residual: float
    iterations: int
    vector: np.ndarray

    def check(self, geom, u, transmission=(1.0, 1.0, 1.0)):
        """(left, right) sides of the inequality for a state u."""
        A = unit_operator(geom, transmission)
        x = _flat(u)
        left = l22_distance(geom, x, equilibrium(geom, x).u_infinity) ** 2
        return left, self.C * float(x @ (A @ x))


def unit_model(transmission=(1.0, 1.0, 1.0)) -> CoefficientModel:
    one = ScalarLaw("constant", 1.0)
    mp, mm, mg = (TransmissionLaw("constant", float(v)) for v in transmission)
    return CoefficientModel(one, one, one, mp, mm, mg, ClampBounds(-1.0, 1.0))


def unit_operator(geom, transmission=(1.0, 1.0, 1.0)):
    """Gradient energy plus unit-weighted squared trace jumps, as a matrix."""
    return assemble_operator(geom, unit_model(transmission), np.zeros(geom.n_dofs))


def poincare_constant(geom, transmission=(1.0, 1.0, 1.0), tol=1e-11,
                      maxiter=10_000, seed=0) -> PoincareReport:
    """Sharp discrete constant C = 1/lambda1 of the bulk-interface Poincare inequality."""
    A = unit_operator(geom, transmission)
    lam, x, res, its = smallest_nonzero_eigenpair(A, geom.lumped_weights, tol=tol,
                                                  maxiter=maxiter, seed=seed)
    return PoincareReport(lam, 1.0 / lam, res, its, x)


# ---------------------------------------------------------- maximum principle

@dataclass(frozen=True)
class MaxPrincipleReport:
    upper_violation: float
    lower_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.upper_violation <= self.tol and self.lower_violation <= self.tol


def check_maximum_principle(trace, l0: float, L0: float, tol: float = 1e-10) -> MaxPrincipleReport:
    """Largest excursion of any snapshot or step above L0 / below l0."""
    hi = [s.flat.max() for s in trace.snapshots] + [d.max_u for d in trace.diagnostics]
    lo = [s.flat.min() for s in trace.snapshots] + [d.min_u for d in trace.diagnostics]
    return MaxPrincipleReport(max(0.0, max(hi) - L0), max(0.0, l0 - min(lo)), tol)


# ------------------------------------------------------------------- entropy

def entropy(geom, om, theta) -> float:
    """Capacity-weighted integral of log(theta) over bulks and interface."""
    th = _flat(theta)
    if np.any(th <= 0):
        raise ConfigurationError("entropy needs strictly positive temperatures")
    return float(capacity_weights(geom, om.capacity) @ np.log(th))


def dissipation_rate(geom, model, u) -> float:
    x = _flat(u)
    return float(x @ (assemble_operator(geom, model, x) @ x))


@dataclass(frozen=True)
class EntropyTrace:
    times: np.ndarray
    entropy_values: np.ndarray
    dissipation_values: np.ndarray

    def min_increment(self) -> float:
        d = np.diff(self.entropy_values)
        return float(d.min()) if d.size else 0.0

    def is_nondecreasing(self, tol: float = 1e-10) -> bool:
        return self.min_increment() >= -tol


def entropy_trace(geom, om, theta_trace, model=None) -> EntropyTrace:
    """Entropy and u-model dissipation at every snapshot of a temperature orbit."""
    from .coefficients import onsager_to_u_model

    snaps = [s.flat for s in theta_trace.snapshots]
    lo = min(s.min() for s in snaps)
    if lo <= 0:
        raise ConfigurationError(f"temperature orbit left the positive cone (min {lo:g})")
    if model is None:
        model = onsager_to_u_model(om, ClampBounds(lo / 2, max(s.max() for s in snaps) + 1))
    S = np.array([entropy(geom, om, s) for s in snaps])
    D = np.array([dissipation_rate(geom, model, s) for s in snaps])
    return EntropyTrace(np.asarray(theta_trace.times), S, D)


def capacity_equilibrium(geom, om, theta) -> float:
    """Constant temperature with the same capacity-weighted energy as theta."""
    w = capacity_weights(geom, om.capacity)
    return float(w @ _flat(theta)) / float(w.sum())


# ----------------------------------------------------------------- stability

@dataclass(frozen=True)
class StabilityReport:
    left: float
    right: float

    @property
    def holds(self) -> bool:
        return self.left <= self.right + 1e-12


def stability_margin(geom, u0, v_infinity: float) -> StabilityReport:
    """|u_inf - v_inf| against the L1 distance of u0 to v_inf divided by V."""
    x = _flat(u0)
    left = abs(equilibrium(geom, x).u_infinity - v_infinity)
    right = float(geom.lumped_weights @ np.abs(x - v_infinity)) / geom.measures.V
    return StabilityReport(left, right)


def random_state_ratios(report: PoincareReport, geom, n_states=1000, seed=0,
                        transmission=(1.0, 1.0, 1.0)) -> np.ndarray:
    """left/right of the Poincare inequality for seeded standard-normal states."""
    A = unit_operator(geom, transmission)
    w = geom.lumped_weights
    X = np.random.default_rng(seed).standard_normal((n_states, geom.n_dofs))
    centred = X - (X @ w)[:, None] / w.sum()
    left = (centred ** 2) @ w
    right = report.C * np.einsum("ij,ij->i", X, (A @ X.T).T)
    return left / right
