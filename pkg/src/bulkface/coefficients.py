"""Coefficient laws, clamping, forcing laws and the entropic (Onsager) transform.

Diffusion laws k are scalar functions of one field value.  Transmission laws
m are functions of the trace triple (v_plus, v_minus, v_gamma).  Every
evaluation used by the discretisation goes through the clamp window [l, L]
first, so the laws only ever see arguments where they are bounded.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

SLOTS = ("plus", "minus", "gamma")
FORCING_SLOTS = ("f_plus", "f_minus", "f_gamma", "g_plus", "g_minus",
                 "h_plus", "h_minus", "h_gamma")


@dataclass(frozen=True)
class ClampBounds:
    l: float
    L: float

    def __post_init__(self):
        if not (np.isfinite(self.l) and np.isfinite(self.L)) or not self.l < self.L:
            raise ConfigurationError(f"clamp window needs finite l < L, got [{self.l}, {self.L}]")


def clamp_value(v, bounds: ClampBounds):
    """Truncate into [l, L]; scalars in, scalars out."""
    out = np.clip(v, bounds.l, bounds.L)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- diffusion laws

@dataclass(frozen=True)
class ScalarLaw:
    """k(v): ``constant`` -> kappa0, ``power`` -> kappa0 v**(rho-1), ``entropic`` -> kappa0 / v**2."""

    kind: str = "constant"
    kappa0: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "entropic"):
            raise ConfigurationError(f"unknown diffusion law kind {self.kind!r}")
        if not self.kappa0 > 0:
            raise ConfigurationError(f"kappa0 must be positive, got {self.kappa0}")

    @property
    def requires_positive(self) -> bool:
        if self.kind == "entropic":
            return True
        if self.kind == "power":
            e = self.rho - 1.0
            return e < 0 or e != int(e)
        return False

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "constant":
            out = np.full_like(v, self.kappa0)
        elif self.kind == "power":
            out = self.kappa0 * v ** (self.rho - 1.0)
        else:
            out = self.kappa0 / (v * v)
        return float(out) if out.ndim == 0 else out


def _check_window(law, bounds: ClampBounds, name="law"):
    if law.requires_positive and bounds.l <= 0:
        raise ConfigurationError(
            f"{name} ({law.kind}) needs a positive clamp window, got l = {bounds.l}")


def eval_k(law: ScalarLaw, bounds: ClampBounds, v):
    _check_window(law, bounds)
    return law(clamp_value(v, bounds))


# ------------------------------------------------------------- transmission laws

@dataclass(frozen=True)
class TransmissionLaw:
    """m(v_plus, v_minus, v_gamma) for one of the three transmission slots.

    ``entropic_pair`` evaluates M0 / (a b)**power where (a, b) is the pair of
    traces the slot does *not* couple through: (v_gamma, v_plus) for the plus
    slot, (v_gamma, v_minus) for minus, (v_plus, v_minus) for gamma.
    """

    kind: str = "constant"
    value: float = 0.0
    M0: float = 1.0
    power: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "entropic_pair", "zero"):
            raise ConfigurationError(f"unknown transmission law kind {self.kind!r}")
        if self.kind == "constant" and not self.value >= 0:
            raise ConfigurationError(f"transmission value must be >= 0, got {self.value}")
        if self.kind == "entropic_pair" and not self.M0 > 0:
            raise ConfigurationError(f"M0 must be positive, got {self.M0}")

    @property
    def requires_positive(self) -> bool:
        return self.kind == "entropic_pair"

    def evaluate(self, slot: str, vp, vm, vg):
        shape = np.broadcast(np.asarray(vp), np.asarray(vm), np.asarray(vg)).shape
        if self.kind == "zero":
            return np.zeros(shape)
        if self.kind == "constant":
            return np.full(shape, float(self.value))
        a, b = {"plus": (vg, vp), "minus": (vg, vm), "gamma": (vp, vm)}[slot]
        prod = np.asarray(a, dtype=float) * np.asarray(b, dtype=float)
        if self.power == 1.0:
            return self.M0 / prod
        return self.M0 / prod ** self.power


def eval_m_matrix(mp: float, mm: float, mg: float) -> np.ndarray:
    """3x3 transmission matrix in the (+, -, Gamma) ordering."""
    if mp < 0 or mm < 0 or mg < 0:
        raise ValueError(f"transmission values must be nonnegative, got {(mp, mm, mg)}")
    return np.array([
        [mp + mg, -mg, -mp],
        [-mg, mm + mg, -mm],
        [-mp, -mm, mp + mm],
    ], dtype=float)


def transmission_quadratic_form(r, mp, mm, mg) -> float:
    rp, rm, rg = r
    return mg * (rp - rm) ** 2 + mp * (rp - rg) ** 2 + mm * (rm - rg) ** 2


# ------------------------------------------------------------------ full model

@dataclass(frozen=True)
class CoefficientModel:
    k_plus: ScalarLaw = field(default_factory=ScalarLaw)
    k_minus: ScalarLaw = field(default_factory=ScalarLaw)
    k_gamma: ScalarLaw = field(default_factory=ScalarLaw)
    m_plus: TransmissionLaw = field(default_factory=lambda: TransmissionLaw("constant", 1.0))
    m_minus: TransmissionLaw = field(default_factory=lambda: TransmissionLaw("constant", 1.0))
    m_gamma: TransmissionLaw = field(default_factory=lambda: TransmissionLaw("constant", 1.0))
    clamp: ClampBounds = field(default_factory=lambda: ClampBounds(0.0, 1.0))

    def __post_init__(self):
        for name in ("k_plus", "k_minus", "k_gamma", "m_plus", "m_minus", "m_gamma"):
            _check_window(getattr(self, name), self.clamp, name)

    def k(self, slot: str, v):
        """Clamped diffusion coefficient of field `slot` at value(s) v."""
        return getattr(self, "k_" + slot)(np.clip(v, self.clamp.l, self.clamp.L))

    def m(self, slot: str, vp, vm, vg):
        """Clamped transmission coefficient `slot` at the trace triple."""
        c = self.clamp
        return getattr(self, "m_" + slot).evaluate(
            slot, np.clip(vp, c.l, c.L), np.clip(vm, c.l, c.L), np.clip(vg, c.l, c.L))

    def with_clamp(self, bounds: ClampBounds) -> "CoefficientModel":
        return replace(self, clamp=bounds)

    def scalar_laws(self) -> dict:
        return {s: getattr(self, "k_" + s) for s in SLOTS}

    def transmission_laws(self) -> dict:
        return {s: getattr(self, "m_" + s) for s in SLOTS}


def default_clamp(laws, u_min: float, u_max: float, forcing=None) -> ClampBounds:
    """Clamp window used when the configuration asks for ``auto``.

    L = max(u0) + 1.  For laws needing positive arguments l = min(u0)/2,
    otherwise l = min(u0) for nonnegative data and min(u0) - 1 for
    sign-changing data.  Dissipative forcing widens the window to its sign
    bounds.
    """
    lo, hi = float(u_min), float(u_max)
    if forcing is not None and not forcing.is_zero and forcing.dissipative:
        lf, Lf = forcing.sign_bounds()
        lo, hi = min(lo, lf), max(hi, Lf)
    if any(law.requires_positive for law in laws):
        if lo <= 0:
            raise ConfigurationError(
                f"positive data required for the chosen laws, min(u0) = {lo}")
        return ClampBounds(lo / 2.0, hi + 1.0)
    return ClampBounds(lo if lo >= 0 else lo - 1.0, hi + 1.0)


@dataclass
class AuditReport:
    k_min: dict
    k_max: dict
    m_min: dict
    m_max: dict
    k_lipschitz: dict
    ok: bool
    messages: list

    @property
    def k_lower(self) -> float:
        return min(self.k_min.values())

    @property
    def k_upper(self) -> float:
        return max(self.k_max.values())

    def lines(self):
        for s in self.k_min:
            yield f"k_{s}: min={self.k_min[s]:.6g} max={self.k_max[s]:.6g} lip={self.k_lipschitz[s]:.6g}"
        for s in self.m_min:
            yield f"m_{s}: min={self.m_min[s]:.6g} max={self.m_max[s]:.6g}"
        yield "ok" if self.ok else "FAILED"
        yield from self.messages


_MODE_SLOTS = {
    "full": (SLOTS, SLOTS),
    "upper_only": (("plus", "gamma"), ("plus",)),
    "bulk_only": (("plus",), ()),
}


def audit_assumptions(model, samples: int = 17, mode: str = "full") -> AuditReport:
    """Sample every law on the clamp window and check the bounds/ellipticity rules.

    Diffusion laws need a positive minimum.  Transmission needs at least two
    positive minima in full mode (just m_plus when the lower bulk is absent).
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    k_slots, m_slots = _MODE_SLOTS[mode]
    grid = np.linspace(model.clamp.l, model.clamp.L, samples)
    k_min, k_max, k_lip = {}, {}, {}
    for s in k_slots:
        vals = np.asarray(model.k(s, grid), dtype=float)
        k_min[s], k_max[s] = float(vals.min()), float(vals.max())
        k_lip[s] = float(np.max(np.abs(np.diff(vals)) / np.diff(grid)))
    m_min, m_max = {}, {}
    if m_slots:
        vp, vm, vg = (a.ravel() for a in np.meshgrid(grid, grid, grid, indexing="ij"))
        for s in m_slots:
            vals = np.asarray(model.m(s, vp, vm, vg), dtype=float)
            m_min[s], m_max[s] = float(vals.min()), float(vals.max())

    messages = []
    ok = True
    if k_min and min(k_min.values()) <= 0:
        ok = False
        messages.append("diffusion coefficients must be bounded below by a positive constant "
                        "on the clamp window")
    if m_slots:
        positive = [s for s in m_slots if m_min[s] > 0]
        need = 2 if mode == "full" else 1
        if len(positive) < need:
            ok = False
            if mode == "full":
                messages.append("transmission: at least two of m_plus, m_minus, m_gamma must be "
                                f"positive on the clamp window (positive: {positive or 'none'})")
            else:
                messages.append("transmission: m_plus must be positive on the clamp window")
    return AuditReport(k_min, k_max, m_min, m_max, k_lip, ok, messages)


# ------------------------------------------------------------------- forcing

@dataclass(frozen=True)
class ForcingLaw:
    """phi(v) for one forcing slot.  ``polynomial`` coeffs are in ascending powers."""

    kind: str = "zero"
    value: float = 0.0
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "allen_cahn", "polynomial"):
            raise ConfigurationError(f"unknown forcing kind {self.kind!r}")

    def coefficients(self) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(1)
        if self.kind == "constant":
            return np.array([float(self.value)])
        if self.kind == "allen_cahn":
            return np.array([0.0, 1.0, 0.0, -1.0])
        c = np.array(self.coeffs, dtype=float)
        return c if c.size else np.zeros(1)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coefficients())

    def __call__(self, v):
        return np.polynomial.polynomial.polyval(np.asarray(v, dtype=float), self.coefficients())

    @property
    def dissipative(self) -> bool:
        """liminf of -phi'(v) as |v| -> oo is positive."""
        c = np.trim_zeros(self.coefficients(), "b")
        deg = len(c) - 1
        if deg < 1:
            return False
        # -phi' -> +oo on both sides iff deg(phi) odd with negative leading coefficient
        if deg == 1:
            return c[1] < 0
        return deg % 2 == 1 and c[-1] < 0

    def sign_bounds(self):
        """(l, L) with phi > 0 below l and phi < 0 above L; only for dissipative laws."""
        if not self.dissipative:
            raise ConfigurationError(f"forcing law {self.kind!r} is not dissipative")
        c = np.trim_zeros(self.coefficients(), "b")
        roots = np.polynomial.polynomial.polyroots(c)
        real = roots[np.abs(roots.imag) <= 1e-12 * max(1.0, np.max(np.abs(roots)))].real
        return float(real.min()), float(real.max())


@dataclass(frozen=True)
class ForcingModel:
    f_plus: ForcingLaw = field(default_factory=ForcingLaw)
    f_minus: ForcingLaw = field(default_factory=ForcingLaw)
    f_gamma: ForcingLaw = field(default_factory=ForcingLaw)
    g_plus: ForcingLaw = field(default_factory=ForcingLaw)
    g_minus: ForcingLaw = field(default_factory=ForcingLaw)
    h_plus: ForcingLaw = field(default_factory=ForcingLaw)
    h_minus: ForcingLaw = field(default_factory=ForcingLaw)
    h_gamma: ForcingLaw = field(default_factory=ForcingLaw)

    def active(self) -> dict:
        return {s: getattr(self, s) for s in FORCING_SLOTS if not getattr(self, s).is_zero}

    @property
    def is_zero(self) -> bool:
        return not self.active()

    @property
    def dissipative(self) -> bool:
        return all(law.dissipative for law in self.active().values())

    def sign_bounds(self):
        bounds = [law.sign_bounds() for law in self.active().values()]
        if not bounds:
            raise ConfigurationError("no active forcing laws")
        return min(b[0] for b in bounds), max(b[1] for b in bounds)


def allen_cahn_forcing(slots=("f_plus", "f_minus", "f_gamma")) -> ForcingModel:
    return ForcingModel(**{s: ForcingLaw("allen_cahn") for s in slots})


# ------------------------------------------------------------------- Onsager

@dataclass(frozen=True)
class OnsagerModel:
    """Temperature formulation: capacities c, conductivities K(theta), exchange M(theta)."""

    c_plus: float = 1.0
    c_minus: float = 1.0
    c_gamma: float = 1.0
    K_plus: ScalarLaw = field(default_factory=ScalarLaw)
    K_minus: ScalarLaw = field(default_factory=ScalarLaw)
    K_gamma: ScalarLaw = field(default_factory=ScalarLaw)
    M_plus: TransmissionLaw = field(default_factory=lambda: TransmissionLaw("constant", 1.0))
    M_minus: TransmissionLaw = field(default_factory=lambda: TransmissionLaw("zero"))
    M_gamma: TransmissionLaw = field(default_factory=lambda: TransmissionLaw("constant", 1.0))

    def __post_init__(self):
        for name in ("c_plus", "c_minus", "c_gamma"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")

    @property
    def capacity(self) -> dict:
        return {"plus": self.c_plus, "minus": self.c_minus, "gamma": self.c_gamma}


def _transform_scalar(law: ScalarLaw) -> ScalarLaw:
    # K(theta) / theta**2, kept inside the closed family of laws
    if law.kind == "constant":
        return ScalarLaw("entropic", law.kappa0)
    if law.kind == "power":
        return ScalarLaw("power", law.kappa0, law.rho - 2.0)
    return ScalarLaw("power", law.kappa0, -3.0)


def _transform_transmission(law: TransmissionLaw) -> TransmissionLaw:
    # M(theta) / (theta_a theta_b)
    if law.kind == "zero":
        return law
    if law.kind == "constant":
        if law.value == 0:
            return TransmissionLaw("zero")
        return TransmissionLaw("entropic_pair", M0=law.value, power=1.0)
    return TransmissionLaw("entropic_pair", M0=law.M0, power=law.power + 1.0)


def onsager_to_u_model(om: OnsagerModel, bounds: ClampBounds) -> CoefficientModel:
    """Closed-form coefficient model k = K/theta^2, m = M/(theta theta)."""
    if bounds.l <= 0:
        raise ConfigurationError(f"temperatures need a positive clamp window, got l = {bounds.l}")
    return CoefficientModel(
        k_plus=_transform_scalar(om.K_plus),
        k_minus=_transform_scalar(om.K_minus),
        k_gamma=_transform_scalar(om.K_gamma),
        m_plus=_transform_transmission(om.M_plus),
        m_minus=_transform_transmission(om.M_minus),
        m_gamma=_transform_transmission(om.M_gamma),
        clamp=bounds,
    )


def onsager_values(om: OnsagerModel, theta) -> dict:
    """Value-level transform at one temperature triple (tp, tm, tg), unclamped."""
    tp, tm, tg = (float(t) for t in theta)
    if min(tp, tm, tg) <= 0:
        raise ConfigurationError("temperatures must be positive")
    return {
        "k_plus": om.K_plus(tp) / tp ** 2,
        "k_minus": om.K_minus(tm) / tm ** 2,
        "k_gamma": om.K_gamma(tg) / tg ** 2,
        "m_plus": float(om.M_plus.evaluate("plus", tp, tm, tg)) / (tg * tp),
        "m_minus": float(om.M_minus.evaluate("minus", tp, tm, tg)) / (tg * tm),
        "m_gamma": float(om.M_gamma.evaluate("gamma", tp, tm, tg)) / (tp * tm),
    }


@dataclass(frozen=True)
class OnsagerDirectModel:
    """Evaluates the temperature laws and divides by temperatures on the fly.

    Exposes the same ``k``/``m``/``clamp`` surface as :class:`CoefficientModel`,
    so the assembler can run the temperature formulation without the closed-form
    rewrite of :func:`onsager_to_u_model`.
    """

    om: OnsagerModel
    clamp: ClampBounds

    def __post_init__(self):
        if self.clamp.l <= 0:
            raise ConfigurationError("temperatures need a positive clamp window")

    def k(self, slot, v):
        t = np.clip(np.asarray(v, dtype=float), self.clamp.l, self.clamp.L)
        return getattr(self.om, "K_" + slot)(t) / (t * t)

    def m(self, slot, vp, vm, vg):
        c = self.clamp
        tp, tm, tg = (np.clip(np.asarray(a, dtype=float), c.l, c.L) for a in (vp, vm, vg))
        M = getattr(self.om, "M_" + slot).evaluate(slot, tp, tm, tg)
        den = {"plus": tg * tp, "minus": tg * tm, "gamma": tp * tm}[slot]
        return M / den

    def scalar_laws(self) -> dict:
        return {s: getattr(self.om, "K_" + s) for s in SLOTS}

    def transmission_laws(self) -> dict:
        return {s: getattr(self.om, "M_" + s) for s in SLOTS}

