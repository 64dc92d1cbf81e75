"""P1 / lumped-quadrature assembly of the coupled operator and load vector.

Unknowns are ordered [u_plus ; u_minus ; u_gamma] (see ``CoupledGeometry.slices``).
Coefficients are frozen at a given state w: bulk elements use k at the mean
of the clamped vertex values, interface segments use k_gamma at the mean of
the clamped interface values, and the transmission block uses m at the
clamped trace triple of each interface node.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .mesh import CoupledGeometry, boundary_weights

# ------------------------------------------------------------------- state


@dataclass(frozen=True, eq=False)
class StateVector:
    u_plus: np.ndarray
    u_minus: Optional[np.ndarray] = None
    u_gamma: Optional[np.ndarray] = None

    @classmethod
    def from_flat(cls, geom: CoupledGeometry, x) -> "StateVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (geom.n_dofs,):
            raise ValueError(f"expected {geom.n_dofs} values, got shape {x.shape}")
        s = geom.slices
        return cls(
            x[s["plus"]].copy(),
            x[s["minus"]].copy() if "minus" in s else None,
            x[s["gamma"]].copy() if "gamma" in s else None,
        )

    @classmethod
    def constant(cls, geom: CoupledGeometry, c: float) -> "StateVector":
        return cls.from_flat(geom, np.full(geom.n_dofs, float(c)))

    @classmethod
    def piecewise(cls, geom, value_plus, value_minus=0.0, value_gamma=0.0) -> "StateVector":
        n = geom.sizes
        return cls(
            np.full(n["plus"], float(value_plus)),
            np.full(n["minus"], float(value_minus)) if geom.has_minus else None,
            np.full(n["gamma"], float(value_gamma)) if geom.has_interface else None,
        )

    @classmethod
    def from_function(cls, geom, func) -> "StateVector":
        """Nodal interpolation of func(x, y) on every dof."""
        xy = geom.dof_coordinates
        vals = np.broadcast_to(np.asarray(func(xy[:, 0], xy[:, 1]), dtype=float), (geom.n_dofs,))
        return cls.from_flat(geom, vals)

    @property
    def flat(self) -> np.ndarray:
        parts = [self.u_plus]
        if self.u_minus is not None:
            parts.append(self.u_minus)
        if self.u_gamma is not None:
            parts.append(self.u_gamma)
        return np.concatenate(parts).astype(float)

    def validate(self, geom: CoupledGeometry) -> None:
        n = geom.sizes
        for name, arr, present in (("u_plus", self.u_plus, True),
                                   ("u_minus", self.u_minus, geom.has_minus),
                                   ("u_gamma", self.u_gamma, geom.has_interface)):
            key = name[2:]
            if present:
                if arr is None or len(arr) != n[key]:
                    raise ValueError(f"{name} must have {n[key]} entries")
                if not np.all(np.isfinite(arr)):
                    raise ValueError(f"{name} has non-finite entries")
            elif arr is not None:
                raise ValueError(f"{name} given but absent in mode {geom.mode!r}")


def _flat(geom, w) -> np.ndarray:
    if isinstance(w, StateVector):
        return w.flat
    w = np.asarray(w, dtype=float)
    if w.shape != (geom.n_dofs,):
        raise ValueError(f"expected {geom.n_dofs} values, got shape {w.shape}")
    return w


# ------------------------------------------------------------- sparse builder


class _Pattern:
    """Fixed COO -> CSR reduction so repeated assemblies are cheap and deterministic."""

    def __init__(self, rows, cols, n):
        keys = rows.astype(np.int64) * n + cols
        uniq, self.inverse = np.unique(keys, return_inverse=True)
        self.n = n
        self.indices = (uniq % n).astype(np.int32)
        counts = np.bincount(uniq // n, minlength=n)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        self.nnz = len(uniq)

    def build(self, values) -> sp.csr_matrix:
        data = np.bincount(self.inverse, weights=values, minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(self.n, self.n))


def _p1_unit_stiffness(vertices, triangles):
    """Local stiffness matrices with k = 1, shape (nt, 3, 3)."""
    p = vertices[triangles]
    # rotated opposite edges: grad phi_i = J e_i / (2 area)
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    return np.einsum("tik,tjk->tij", e, e) / (4.0 * area)[:, None, None]


class Assembler:
    """Precomputed element data for one geometry."""

    def __init__(self, geom: CoupledGeometry):
        self.geom = geom
        n = geom.n_dofs
        sl = geom.slices
        rows, cols = [], []

        self.bulk = []
        for name, mesh in (("plus", geom.plus), ("minus", geom.minus)):
            if mesh is None:
                continue
            local = mesh.triangles
            dofs = local + sl[name].start
            unit = _p1_unit_stiffness(mesh.vertices, mesh.triangles)
            self.bulk.append((name, local, dofs, unit))
            rows.append(np.repeat(dofs, 3, axis=1).ravel())
            cols.append(np.tile(dofs, (1, 3)).ravel())
        self.n_bulk_entries = sum(r.size for r in rows)

        self.segments = None
        self.trans = None
        if geom.has_interface:
            segs = geom.interface.segments
            sdofs = segs + sl["gamma"].start
            h = geom.interface.segment_lengths()
            unit = np.array([[1.0, -1.0], [-1.0, 1.0]])[None, :, :] / h[:, None, None]
            self.segments = (segs, sdofs, unit)
            rows.append(np.repeat(sdofs, 2, axis=1).ravel())
            cols.append(np.tile(sdofs, (1, 2)).ravel())

            g = np.arange(geom.interface.n_nodes) + sl["gamma"].start
            p = geom.trace_dofs("plus")
            if geom.has_minus:
                tdofs = np.column_stack([p, geom.trace_dofs("minus"), g])
            else:
                tdofs = np.column_stack([p, g])
            self.trans = tdofs
            k = tdofs.shape[1]
            rows.append(np.repeat(tdofs, k, axis=1).ravel())
            cols.append(np.tile(tdofs, (1, k)).ravel())

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        self.n_entries = rows.size
        self.pattern = _Pattern(rows, cols, n)

    # values in the same order as the pattern's coo entries
    def stiffness_values(self, model, w):
        sl = self.geom.slices
        vals = []
        for name, local, dofs, unit in self.bulk:
            wf = np.clip(w[sl[name]], model.clamp.l, model.clamp.L)
            kmean = np.asarray(model.k(name, wf[local].mean(axis=1)), dtype=float)
            vals.append((kmean[:, None, None] * unit).ravel())
        if self.segments is not None:
            segs, _, unit = self.segments
            wg = np.clip(w[sl["gamma"]], model.clamp.l, model.clamp.L)
            kseg = np.asarray(model.k("gamma", wg[segs].mean(axis=1)), dtype=float)
            vals.append((kseg[:, None, None] * unit).ravel())
        return vals

    def transmission_local(self, model, w):
        """Per-node local transmission matrices, already weighted by the lumped length."""
        geom = self.geom
        omega = geom.measures.lumped_interface
        t = self.trans
        vp = w[t[:, 0]]
        vg = w[t[:, -1]]
        if geom.has_minus:
            vm = w[t[:, 1]]
            mp = model.m("plus", vp, vm, vg)
            mm = model.m("minus", vp, vm, vg)
            mg = model.m("gamma", vp, vm, vg)
            loc = np.empty((len(omega), 3, 3))
            loc[:, 0, 0] = mp + mg
            loc[:, 0, 1] = loc[:, 1, 0] = -mg
            loc[:, 0, 2] = loc[:, 2, 0] = -mp
            loc[:, 1, 1] = mm + mg
            loc[:, 1, 2] = loc[:, 2, 1] = -mm
            loc[:, 2, 2] = mp + mm
        else:
            mp = model.m("plus", vp, np.full_like(vp, np.nan), vg)
            loc = np.empty((len(omega), 2, 2))
            loc[:, 0, 0] = loc[:, 1, 1] = mp
            loc[:, 0, 1] = loc[:, 1, 0] = -mp
        return omega[:, None, None] * loc

    def _zeros_for_transmission(self):
        return np.zeros(0 if self.trans is None else self.trans.shape[0] * self.trans.shape[1] ** 2)

    def stiffness(self, model, w):
        vals = self.stiffness_values(model, w)
        vals.append(self._zeros_for_transmission())
        return self.pattern.build(np.concatenate(vals))

    def transmission(self, model, w):
        if self.trans is None:
            raise ValueError("no interface in bulk_only mode")
        pre = np.zeros(self.pattern.inverse.size - self._zeros_for_transmission().size)
        return self.pattern.build(np.concatenate([pre, self.transmission_local(model, w).ravel()]))

    def operator(self, model, w):
        vals = self.stiffness_values(model, w)
        if self.trans is not None:
            vals.append(self.transmission_local(model, w).ravel())
        return self.pattern.build(np.concatenate(vals))


_CACHE: "weakref.WeakKeyDictionary[CoupledGeometry, Assembler]" = weakref.WeakKeyDictionary()


def get_assembler(geom: CoupledGeometry) -> Assembler:
    asm = _CACHE.get(geom)
    if asm is None:
        asm = _CACHE[geom] = Assembler(geom)
    return asm


# ----------------------------------------------------------------- public API


def capacity_weights(geom: CoupledGeometry, capacity=None) -> np.ndarray:
    """Diagonal of the (optionally capacity-weighted) lumped mass matrix."""
    w = np.array(geom.lumped_weights, dtype=float)
    if capacity:
        for name, sl in geom.slices.items():
            w[sl] *= capacity.get(name, 1.0)
    return w


def assemble_mass(geom: CoupledGeometry, capacity=None) -> sp.csr_matrix:
    return sp.diags(capacity_weights(geom, capacity)).tocsr()


def assemble_stiffness(geom, model, w) -> sp.csr_matrix:
    return get_assembler(geom).stiffness(model, _flat(geom, w))


def assemble_transmission(geom, model, w) -> sp.csr_matrix:
    from .errors import ModeError

    if not geom.has_interface:
        raise ModeError("transmission operator needs an interface (mode is bulk_only)")
    return get_assembler(geom).transmission(model, _flat(geom, w))


def assemble_operator(geom, model, w) -> sp.csr_matrix:
    """Frozen-coefficient operator: stiffness plus transmission."""
    return get_assembler(geom).operator(model, _flat(geom, w))


def assemble_rhs(geom: CoupledGeometry, forcing, w) -> np.ndarray:
    """Lumped load vector of the volume, interface and boundary forcing laws."""
    w = _flat(geom, w)
    b = np.zeros(geom.n_dofs)
    if forcing is None or forcing.is_zero:
        return b
    meas = geom.measures
    sl = geom.slices
    for name, mesh, lumped in (("plus", geom.plus, meas.lumped_plus),
                               ("minus", geom.minus, meas.lumped_minus)):
        if mesh is None:
            continue
        wb = w[sl[name]]
        rows = b[sl[name]]
        f = getattr(forcing, "f_" + name)
        if not f.is_zero:
            rows += lumped * f(wb)
        h = getattr(forcing, "h_" + name)
        if not h.is_zero:
            rows += boundary_weights(mesh, "outer") * h(wb)
        g = getattr(forcing, "g_" + name)
        if not g.is_zero and geom.has_interface:
            tr = getattr(geom, "trace_" + name)
            np.add.at(rows, tr, meas.lumped_interface * g(wb[tr]))
    if geom.has_interface:
        wg = w[sl["gamma"]]
        rows = b[sl["gamma"]]
        if not forcing.f_gamma.is_zero:
            rows += meas.lumped_interface * forcing.f_gamma(wg)
        if not forcing.h_gamma.is_zero:
            ends = list(geom.interface.endpoint_nodes)
            rows[ends] += forcing.h_gamma(wg[ends])
    return b
