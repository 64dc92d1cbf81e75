"""CSV and JSON writers.  Every float goes through ``fmt`` (17 significant digits)."""
from __future__ import annotations

import json
import os

import numpy as np
import scipy.sparse as sp

DIAGNOSTICS_HEADER = "t,mass,min_u,max_u,l22_dist,picard_iters,residual"
SNAPSHOT_HEADER = "domain,index,x,y,value"
MESH_HEADER = "domain,index,x,y"


def fmt(v) -> str:
    return format(float(v), ".17g")


def _write_lines(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def diagnostics_rows(trace):
    first = trace.snapshots[0].flat
    geom = trace.geom
    w = geom.lumped_weights
    yield [fmt(0.0), fmt(w @ first), fmt(first.min()), fmt(first.max()),
           fmt(np.sqrt(w @ (first - trace.u_infinity) ** 2)), "0", fmt(0.0)]
    for d in trace.diagnostics:
        yield [fmt(d.t), fmt(d.mass), fmt(d.min_u), fmt(d.max_u),
               fmt(d.l22_dist_to_equilibrium), str(d.picard_iters),
               fmt(d.last_fixed_point_residual)]


def write_diagnostics(path, trace):
    """One row for the initial state, then one per accepted step."""
    _write_lines(path, DIAGNOSTICS_HEADER, diagnostics_rows(trace))


def _domain_rows(geom, with_values=None):
    coords = geom.dof_coordinates
    for name, sl in geom.slices.items():
        for local, g in enumerate(range(sl.start, sl.stop)):
            row = [name, str(local), fmt(coords[g, 0]), fmt(coords[g, 1])]
            if with_values is not None:
                row.append(fmt(with_values[g]))
            yield row


def write_snapshot(path, geom, state):
    _write_lines(path, SNAPSHOT_HEADER, _domain_rows(geom, state.flat))


def write_mesh(path, geom):
    _write_lines(path, MESH_HEADER, _domain_rows(geom))


def write_operator(path, A):
    """Whitespace-separated ``row col value`` triples in row-major order."""
    coo = sp.coo_matrix(A)
    order = np.lexsort((coo.col, coo.row))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in order:
            fh.write(f"{coo.row[i]} {coo.col[i]} {fmt(coo.data[i])}\n")


def write_table(path, header, rows):
    """Generic CSV: floats formatted, ints and strings verbatim."""
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, str):
            return v
        return fmt(v)
    _write_lines(path, ",".join(header), ([cell(v) for v in row] for row in rows))


def write_config_echo(path, resolved: dict):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv(path):
    """Header list and rows as string lists; handy for tests and scripts."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]
