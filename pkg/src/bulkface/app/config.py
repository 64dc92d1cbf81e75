"""JSON run configuration: parsing, validation, defaults and initial-data grammar.

Initial-data expressions use a fixed grammar: numeric literals, ``x``, ``y``,
binary ``+ - * /``, unary ``+ -``, parentheses and the one-argument functions
``sin``, ``cos``, ``exp``.  Anything else is rejected.
"""
from __future__ import annotations

import ast
import copy
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..assembly import StateVector
from ..coefficients import (ClampBounds, CoefficientModel, ForcingLaw, ForcingModel,
                            OnsagerModel, ScalarLaw, TransmissionLaw, default_clamp,
                            onsager_to_u_model, FORCING_SLOTS)
from ..errors import ConfigurationError
from ..mesh import MODES, CoupledGeometry, build_rectangle_geometry
from ..timestepper import TimeStepConfig


class ConfigError(ConfigurationError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None, line=None, column=None):
        where = f"{key}: " if key else ""
        if line is not None:
            where = f"line {line}, column {column}: "
        super().__init__(where + message)
        self.key, self.line, self.column = key, line, column


DEFAULTS = {
    "geometry": {"nx": 16, "ny": 16, "mode": "full"},
    "time": {"dt": 0.01, "t_end": 1.0, "picard_tol": 1e-10, "picard_max": 50,
             "linear_tol": 1e-12, "dt_min": None, "snapshot_every": 1,
             "linear_solver": "cg"},
    "output": {"dir": "out", "prefix": "run"},
}

SCALAR_LAW_KEYS = {"kind", "kappa0", "rho"}
TRANSMISSION_KEYS = {"kind", "value", "M0", "power"}
FORCING_KEYS = {"kind", "value", "coeffs"}
TOP_KEYS = {"geometry", "model", "forcing", "onsager", "initial", "time", "output"}


# ---------------------------------------------------------------- expressions

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide}


def parse_expression(text: str):
    """Compile an initial-data expression into a callable f(x, y)."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}",
                          key="initial.expression") from exc
    _check_node(tree.body, text)

    def func(x, y):
        with np.errstate(all="ignore"):
            return _eval(tree.body, {"x": np.asarray(x, dtype=float),
                                     "y": np.asarray(y, dtype=float)})
    return func


def _check_node(node, text):
    bad = ConfigError(f"expression {text!r} uses unsupported syntax "
                      f"({type(node).__name__})", key="initial.expression")
    if isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise bad
        _check_node(node.left, text)
        _check_node(node.right, text)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise bad
        _check_node(node.operand, text)
    elif isinstance(node, ast.Call):
        if (not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS
                or len(node.args) != 1 or node.keywords):
            raise bad
        _check_node(node.args[0], text)
    elif isinstance(node, ast.Name):
        if node.id not in ("x", "y"):
            raise ConfigError(f"unknown name {node.id!r} in expression", key="initial.expression")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise bad
    else:
        raise bad


def _eval(node, env):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    if isinstance(node, ast.Name):
        return env[node.id]
    return float(node.value)


# ------------------------------------------------------------------ helpers

def _expect_dict(obj, key):
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", key=key)
    return obj


def _reject_unknown(obj, allowed, key):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) {extra}", key=key)


def _number(obj, name, key, default=None, integer=False):
    v = obj.get(name, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("expected a number", key=f"{key}.{name}")
    if integer:
        if int(v) != v:
            raise ConfigError("expected an integer", key=f"{key}.{name}")
        return int(v)
    return float(v)


def _build(cls, section, allowed, key, **defaults):
    section = _expect_dict(section, key)
    _reject_unknown(section, allowed, key)
    merged = {**defaults, **section}
    if "coeffs" in merged:
        merged["coeffs"] = tuple(float(c) for c in merged["coeffs"])
    try:
        return cls(**merged), merged
    except ConfigurationError as exc:
        raise ConfigError(str(exc), key=key) from exc
    except TypeError as exc:
        raise ConfigError(str(exc), key=key) from exc


def _clamp_section(section, key):
    if section is None or section == "auto":
        return "auto"
    section = _expect_dict(section, key)
    _reject_unknown(section, {"l", "L"}, key)
    if set(section) != {"l", "L"}:
        raise ConfigError("clamp needs both l and L, or the string 'auto'", key=key)
    try:
        return ClampBounds(_number(section, "l", key), _number(section, "L", key))
    except ConfigurationError as exc:
        raise ConfigError(str(exc), key=key) from exc


# ----------------------------------------------------------------- RunConfig

@dataclass(frozen=True, eq=False)
class InitialSpec:
    kind: str
    value: float = 0.0
    value_plus: float = 0.0
    value_minus: float = 0.0
    value_gamma: float = 0.0
    expression: str = ""

    def state(self, geom: CoupledGeometry) -> StateVector:
        if self.kind == "constant":
            return StateVector.constant(geom, self.value)
        if self.kind == "piecewise":
            return StateVector.piecewise(geom, self.value_plus, self.value_minus, self.value_gamma)
        return StateVector.from_function(geom, parse_expression(self.expression))


@dataclass(frozen=True, eq=False)
class OutputConfig:
    dir: str = "out"
    prefix: str = "run"
    snapshot_every: int = 1


@dataclass(frozen=True, eq=False)
class RunConfig:
    geometry: dict
    model: CoefficientModel  # the model actually simulated (transformed if onsager given)
    forcing: ForcingModel
    onsager: Optional[OnsagerModel]
    initial: InitialSpec
    time: TimeStepConfig
    output: OutputConfig
    resolved: dict  # fully defaulted document, echoed next to every output

    def build_geometry(self) -> CoupledGeometry:
        g = self.geometry
        return build_rectangle_geometry(g["nx"], g["ny"], g["mode"])

    def initial_state(self, geom=None) -> StateVector:
        return self.initial.state(geom or self.build_geometry())

    @property
    def capacity(self):
        return None if self.onsager is None else self.onsager.capacity


def _parse_geometry(doc):
    section = _expect_dict(doc.get("geometry", {}), "geometry")
    _reject_unknown(section, DEFAULTS["geometry"], "geometry")
    g = {**DEFAULTS["geometry"], **section}
    for k in ("nx", "ny"):
        g[k] = _number(g, k, "geometry", integer=True)
        if g[k] < 1:
            raise ConfigError("must be >= 1", key=f"geometry.{k}")
    if g["mode"] not in MODES:
        raise ConfigError(f"expected one of {list(MODES)}", key="geometry.mode")
    return g


def _parse_initial(doc):
    if "initial" not in doc:
        raise ConfigError("missing required section", key="initial")
    section = _expect_dict(doc["initial"], "initial")
    kind = section.get("kind")
    allowed = {
        "constant": {"kind", "value"},
        "piecewise": {"kind", "value_plus", "value_minus", "value_gamma"},
        "expression": {"kind", "expression"},
    }
    if kind not in allowed:
        raise ConfigError(f"expected kind in {sorted(allowed)}", key="initial.kind")
    _reject_unknown(section, allowed[kind], "initial")
    if kind == "expression":
        expr = section.get("expression")
        if not isinstance(expr, str):
            raise ConfigError("expected a string", key="initial.expression")
        parse_expression(expr)
        return InitialSpec("expression", expression=expr), dict(section)
    nums = {k: _number(section, k, "initial", default=0.0) for k in allowed[kind] - {"kind"}}
    return InitialSpec(kind, **nums), {"kind": kind, **nums}


def _parse_time(doc):
    section = _expect_dict(doc.get("time", {}), "time")
    _reject_unknown(section, DEFAULTS["time"], "time")
    t = {**DEFAULTS["time"], **section}
    vals = {}
    for k in ("dt", "t_end", "picard_tol", "linear_tol", "dt_min"):
        vals[k] = _number(t, k, "time")
    for k in ("picard_max", "snapshot_every"):
        vals[k] = _number(t, k, "time", integer=True)
    vals["linear_solver"] = t["linear_solver"]
    return vals


def _parse_forcing(doc):
    section = _expect_dict(doc.get("forcing", {}), "forcing")
    _reject_unknown(section, FORCING_SLOTS, "forcing")
    laws, echo = {}, {}
    for slot in FORCING_SLOTS:
        law, merged = _build(ForcingLaw, section.get(slot, {"kind": "zero"}), FORCING_KEYS,
                             f"forcing.{slot}")
        laws[slot] = law
        echo[slot] = {k: list(v) if isinstance(v, tuple) else v for k, v in merged.items()}
    return ForcingModel(**laws), echo


def _parse_laws(section, key, scalar_names, trans_names, scalar_default, trans_defaults):
    out, echo = {}, {}
    for name in scalar_names:
        out[name], echo[name] = _build(ScalarLaw, section.get(name, scalar_default),
                                       SCALAR_LAW_KEYS, f"{key}.{name}")
    for name in trans_names:
        out[name], echo[name] = _build(TransmissionLaw, section.get(name, trans_defaults[name]),
                                       TRANSMISSION_KEYS, f"{key}.{name}")
    return out, echo


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    doc = _expect_dict(doc, "<root>")
    _reject_unknown(doc, TOP_KEYS, "<root>")
    if ("model" in doc) == ("onsager" in doc):
        raise ConfigError("exactly one of 'model' and 'onsager' must be given", key="model")

    geometry = _parse_geometry(doc)
    initial, initial_echo = _parse_initial(doc)
    time_vals = _parse_time(doc)
    forcing, forcing_echo = _parse_forcing(doc)

    out_section = _expect_dict(doc.get("output", {}), "output")
    _reject_unknown(out_section, {"dir", "prefix", "snapshot_every"}, "output")
    if "snapshot_every" in out_section:
        every = _number(out_section, "snapshot_every", "output", integer=True)
        if "snapshot_every" in doc.get("time", {}) and every != time_vals["snapshot_every"]:
            raise ConfigError("conflicts with time.snapshot_every", key="output.snapshot_every")
        time_vals["snapshot_every"] = every
    output = OutputConfig(str(out_section.get("dir", DEFAULTS["output"]["dir"])),
                          str(out_section.get("prefix", DEFAULTS["output"]["prefix"])),
                          time_vals["snapshot_every"])
    try:
        tcfg = TimeStepConfig(**time_vals)
    except ConfigurationError as exc:
        raise ConfigError(str(exc), key="time") from exc

    geom = build_rectangle_geometry(geometry["nx"], geometry["ny"], geometry["mode"])
    u0 = initial.state(geom).flat
    if not np.all(np.isfinite(u0)):
        raise ConfigError("initial data evaluates to non-finite values", key="initial")

    resolved = {"geometry": geometry, "initial": initial_echo, "forcing": forcing_echo,
                "time": {**time_vals, "dt_min": tcfg.min_step},
                "output": {"dir": output.dir, "prefix": output.prefix,
                           "snapshot_every": output.snapshot_every}}
    onsager = None
    if "model" in doc:
        section = _expect_dict(doc["model"], "model")
        _reject_unknown(section, {"k_plus", "k_minus", "k_gamma", "m_plus", "m_minus",
                               "m_gamma", "clamp"}, "model")
        laws, echo = _parse_laws(section, "model", ("k_plus", "k_minus", "k_gamma"),
                                 ("m_plus", "m_minus", "m_gamma"),
                                 {"kind": "constant", "kappa0": 1.0},
                                 {n: {"kind": "constant", "value": 1.0}
                                  for n in ("m_plus", "m_minus", "m_gamma")})
        clamp = _clamp_section(section.get("clamp", "auto"), "model.clamp")
        if clamp == "auto":
            try:
                clamp = default_clamp([laws[n] for n in laws], u0.min(), u0.max(), forcing)
            except ConfigurationError as exc:
                raise ConfigError(str(exc), key="model.clamp") from exc
        try:
            model = CoefficientModel(**laws, clamp=clamp)
        except ConfigurationError as exc:
            raise ConfigError(str(exc), key="model") from exc
        resolved["model"] = {**echo, "clamp": {"l": clamp.l, "L": clamp.L}}
    else:
        section = _expect_dict(doc["onsager"], "onsager")
        caps = ("c_plus", "c_minus", "c_gamma")
        _reject_unknown(section, {*caps, "K_plus", "K_minus", "K_gamma", "M_plus", "M_minus",
                               "M_gamma", "clamp"}, "onsager")
        laws, echo = _parse_laws(section, "onsager", ("K_plus", "K_minus", "K_gamma"),
                                 ("M_plus", "M_minus", "M_gamma"),
                                 {"kind": "constant", "kappa0": 1.0},
                                 {"M_plus": {"kind": "constant", "value": 1.0},
                                  "M_minus": {"kind": "zero"},
                                  "M_gamma": {"kind": "constant", "value": 1.0}})
        cvals = {c: _number(section, c, "onsager", default=1.0) for c in caps}
        try:
            onsager = OnsagerModel(**cvals, **laws)
        except ConfigurationError as exc:
            raise ConfigError(str(exc), key="onsager") from exc
        clamp = _clamp_section(section.get("clamp", "auto"), "onsager.clamp")
        if clamp == "auto":
            if u0.min() <= 0:
                raise ConfigError("temperatures must be positive", key="initial")
            clamp = ClampBounds(u0.min() / 2.0, u0.max() + 1.0)
        try:
            model = onsager_to_u_model(onsager, clamp)
        except ConfigurationError as exc:
            raise ConfigError(str(exc), key="onsager.clamp") from exc
        resolved["onsager"] = {**cvals, **echo, "clamp": {"l": clamp.l, "L": clamp.L}}

    return RunConfig(geometry, model, forcing, onsager, initial, tcfg, output,
                     copy.deepcopy(resolved))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
