"""Coupled bulk/interface geometry on structured right-triangle meshes.

Upper bulk is (0,1)x(0,1), lower bulk (0,1)x(-1,0); the interface is the
segment y = 0, 0 <= x <= 1.  Bulk meshes match the interface mesh node for
node, so traces are plain index maps.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ModeError

MODES = ("full", "upper_only", "bulk_only")
FIELDS = ("plus", "minus", "gamma")


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BulkMesh:
    vertices: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (nt, 3), counter-clockwise
    boundary_edges: np.ndarray  # (nb, 2) vertex pairs
    boundary_tags: tuple  # "interface" | "outer", one per boundary edge
    domain_tag: str

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def max_angles(self) -> np.ndarray:
        """Largest interior angle of every triangle, in radians."""
        p = self.vertices[self.triangles]
        angles = []
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.einsum("ij,ij->i", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.arccos(np.clip(cos, -1.0, 1.0)))
        return np.max(angles, axis=0)

    def edges_of(self, tag: str) -> np.ndarray:
        mask = np.array([t == tag for t in self.boundary_tags], dtype=bool)
        return self.boundary_edges[mask] if mask.size else self.boundary_edges[:0]


@dataclass(frozen=True, eq=False)
class InterfaceMesh:
    nodes: np.ndarray  # x-coordinates along y = 0, strictly increasing
    segments: np.ndarray  # (ns, 2)
    endpoint_nodes: tuple

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def segment_lengths(self) -> np.ndarray:
        return self.nodes[self.segments[:, 1]] - self.nodes[self.segments[:, 0]]


@dataclass(frozen=True, eq=False)
class Measures:
    lumped_plus: np.ndarray
    lumped_minus: Optional[np.ndarray]
    lumped_interface: Optional[np.ndarray]
    area_plus: float
    area_minus: float
    length_interface: float
    V: float


@dataclass(frozen=True, eq=False)
class CoupledGeometry:
    plus: BulkMesh
    minus: Optional[BulkMesh]
    interface: Optional[InterfaceMesh]
    trace_plus: Optional[np.ndarray]
    trace_minus: Optional[np.ndarray]
    mode: str
    nx: int
    ny: int

    @property
    def has_minus(self) -> bool:
        return self.minus is not None

    @property
    def has_interface(self) -> bool:
        return self.interface is not None

    @property
    def sizes(self) -> dict:
        return {
            "plus": self.plus.n_vertices,
            "minus": self.minus.n_vertices if self.minus is not None else 0,
            "gamma": self.interface.n_nodes if self.interface is not None else 0,
        }

    @cached_property
    def slices(self) -> dict:
        """Slice of each present field in the concatenated [plus; minus; gamma] ordering."""
        out, start = {}, 0
        for name, n in self.sizes.items():
            if n:
                out[name] = slice(start, start + n)
            start += n
        return out

    @property
    def n_dofs(self) -> int:
        return sum(self.sizes.values())

    @cached_property
    def dof_coordinates(self) -> np.ndarray:
        parts = [self.plus.vertices]
        if self.minus is not None:
            parts.append(self.minus.vertices)
        if self.interface is not None:
            parts.append(np.column_stack([self.interface.nodes,
                                          np.zeros(self.interface.n_nodes)]))
        return _frozen(np.vstack(parts))

    @cached_property
    def measures(self) -> Measures:
        return lumped_measures(self)

    @cached_property
    def lumped_weights(self) -> np.ndarray:
        """Lumped quadrature weight of every dof in the concatenated ordering."""
        m = self.measures
        parts = [m.lumped_plus]
        if m.lumped_minus is not None:
            parts.append(m.lumped_minus)
        if m.lumped_interface is not None:
            parts.append(m.lumped_interface)
        return _frozen(np.concatenate(parts))

    def trace_dofs(self, side: str) -> np.ndarray:
        """Global dof indices of the bulk vertices traced onto each interface node."""
        tr = self._trace_map(side)
        return tr + self.slices[side].start

    def _trace_map(self, side: str) -> np.ndarray:
        if side == "plus":
            tr = self.trace_plus
        elif side == "minus":
            tr = self.trace_minus
        else:
            raise ModeError(f"unknown trace side {side!r}")
        if tr is None:
            raise ModeError(f"no {side} trace in mode {self.mode!r}")
        return tr


def _bulk_mesh(nx: int, ny: int, sign: float, interface_tag: str, domain_tag: str) -> BulkMesh:
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = sign * np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row j holds y = sign * j / ny
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    tris = np.array(tris, dtype=np.int64)
    p = vertices[tris]
    area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = area2 < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    edges, tags = [], []
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        tags.append(interface_tag)
    for i in range(nx):
        edges.append((vid(i, ny), vid(i + 1, ny)))
        tags.append("outer")
    for j in range(ny):
        edges.append((vid(0, j), vid(0, j + 1)))
        tags.append("outer")
        edges.append((vid(nx, j), vid(nx, j + 1)))
        tags.append("outer")
    return BulkMesh(
        vertices=_frozen(vertices),
        triangles=_frozen(tris),
        boundary_edges=_frozen(np.array(edges, dtype=np.int64)),
        boundary_tags=tuple(tags),
        domain_tag=domain_tag,
    )


def build_rectangle_geometry(nx: int, ny: int, mode: str = "full") -> CoupledGeometry:
    """Structured right-triangle meshes of the unit squares above and below y = 0."""
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ConfigurationError(f"nx, ny must be positive integers, got {nx}, {ny}")
    if mode not in MODES:
        raise ConfigurationError(f"unknown geometry mode {mode!r}; expected one of {MODES}")
    nx, ny = int(nx), int(ny)

    with_interface = mode != "bulk_only"
    plus = _bulk_mesh(nx, ny, 1.0, "interface" if with_interface else "outer", "plus")
    minus = _bulk_mesh(nx, ny, -1.0, "interface", "minus") if mode == "full" else None

    interface = trace_plus = trace_minus = None
    if with_interface:
        nodes = np.linspace(0.0, 1.0, nx + 1)
        segs = np.column_stack([np.arange(nx), np.arange(1, nx + 1)])
        interface = InterfaceMesh(_frozen(nodes), _frozen(segs), (0, nx))
        # bottom grid row of each bulk sits on y = 0, indices 0..nx
        trace_plus = _frozen(np.arange(nx + 1))
        if minus is not None:
            trace_minus = _frozen(np.arange(nx + 1))
    return CoupledGeometry(plus, minus, interface, trace_plus, trace_minus, mode, nx, ny)


def _lumped_bulk(mesh: BulkMesh) -> np.ndarray:
    areas = mesh.signed_areas()
    w = np.zeros(mesh.n_vertices)
    np.add.at(w, mesh.triangles.ravel(), np.repeat(areas / 3.0, 3))
    return w


def lumped_measures(geom: CoupledGeometry) -> Measures:
    lp = _lumped_bulk(geom.plus)
    lm = _lumped_bulk(geom.minus) if geom.minus is not None else None
    li = None
    if geom.interface is not None:
        h = geom.interface.segment_lengths()
        li = np.zeros(geom.interface.n_nodes)
        np.add.at(li, geom.interface.segments.ravel(), np.repeat(h / 2.0, 2))
    area_plus = float(geom.plus.signed_areas().sum())
    area_minus = float(geom.minus.signed_areas().sum()) if lm is not None else 0.0
    length = float(geom.interface.segment_lengths().sum()) if li is not None else 0.0
    return Measures(
        lumped_plus=_frozen(lp),
        lumped_minus=None if lm is None else _frozen(lm),
        lumped_interface=None if li is None else _frozen(li),
        area_plus=area_plus,
        area_minus=area_minus,
        length_interface=length,
        V=area_plus + area_minus + length,
    )


def boundary_weights(mesh: BulkMesh, tag: str = "outer") -> np.ndarray:
    """Per-vertex lumped length of the boundary edges carrying `tag`."""
    w = np.zeros(mesh.n_vertices)
    edges = mesh.edges_of(tag)
    if len(edges):
        lengths = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
        np.add.at(w, edges.ravel(), np.repeat(lengths / 2.0, 2))
    return w


def take_trace(geom: CoupledGeometry, field, side: str) -> np.ndarray:
    """Restrict a bulk nodal field to the interface nodes."""
    tr = geom._trace_map(side)
    return np.asarray(field)[tr]
