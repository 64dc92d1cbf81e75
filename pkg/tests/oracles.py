"""Independent dense reference implementations.

Nothing here calls the assembly module.  Local matrices come from barycentric
gradients, traces are matched by coordinates, and everything is summed in
plain Python loops into dense arrays.
"""
import numpy as np
import scipy.linalg


def p1_local_stiffness(p):
    """Stiffness of one triangle from the inverse of the barycentric system."""
    T = np.array([[1.0, *p[0]], [1.0, *p[1]], [1.0, *p[2]]])
    area = 0.5 * abs(np.linalg.det(T))
    grads = np.linalg.inv(T)[1:, :]  # column i holds grad(lambda_i)
    return area * grads.T @ grads, area


def interval_local_stiffness(a, b):
    h = abs(b - a)
    return np.array([[1.0, -1.0], [-1.0, 1.0]]) / h


def _blocks(geom):
    """Offsets of the plus, minus and interface unknowns, computed independently."""
    offsets, start = {}, 0
    for name, n in (("plus", geom.plus.vertices.shape[0]),
                    ("minus", 0 if geom.minus is None else geom.minus.vertices.shape[0]),
                    ("gamma", 0 if geom.interface is None else geom.interface.nodes.shape[0])):
        offsets[name] = start
        start += n
    return offsets, start


def _match(vertices, x):
    """Index of the vertex at (x, 0)."""
    d = np.hypot(vertices[:, 0] - x, vertices[:, 1])
    i = int(np.argmin(d))
    assert d[i] < 1e-12
    return i


def dense_system(geom, k=(1.0, 1.0, 1.0), m=(1.0, 1.0, 1.0)):
    """(M, A) for constant diffusivities k = (k+, k-, kG) and transmission m."""
    off, n = _blocks(geom)
    M = np.zeros((n, n))
    A = np.zeros((n, n))
    for name, mesh, kval in (("plus", geom.plus, k[0]), ("minus", geom.minus, k[1])):
        if mesh is None:
            continue
        for tri in mesh.triangles:
            K, area = p1_local_stiffness(mesh.vertices[tri])
            for a in range(3):
                M[off[name] + tri[a], off[name] + tri[a]] += area / 3.0
                for b in range(3):
                    A[off[name] + tri[a], off[name] + tri[b]] += kval * K[a, b]
    if geom.interface is None:
        return M, A
    nodes = geom.interface.nodes
    omega = np.zeros(nodes.size)
    for s in geom.interface.segments:
        x0, x1 = nodes[s[0]], nodes[s[1]]
        K = interval_local_stiffness(x0, x1)
        for a in range(2):
            omega[s[a]] += abs(x1 - x0) / 2.0
            for b in range(2):
                A[off["gamma"] + s[a], off["gamma"] + s[b]] += k[2] * K[a, b]
    mp, mm, mg = m
    for j, x in enumerate(nodes):
        M[off["gamma"] + j, off["gamma"] + j] += omega[j]
        ip = off["plus"] + _match(geom.plus.vertices, x)
        ig = off["gamma"] + j
        if geom.minus is None:
            # only the plus trace couples to the interface
            for r, c, v in ((ip, ip, mp), (ip, ig, -mp), (ig, ip, -mp), (ig, ig, mp)):
                A[r, c] += omega[j] * v
            continue
        im = off["minus"] + _match(geom.minus.vertices, x)
        idx = (ip, im, ig)
        local = np.array([[mp + mg, -mg, -mp],
                          [-mg, mm + mg, -mm],
                          [-mp, -mm, mp + mm]])
        for a in range(3):
            for b in range(3):
                A[idx[a], idx[b]] += omega[j] * local[a, b]
    return M, A


def implicit_step(geom, u, dt, k=(1.0, 1.0, 1.0), m=(1.0, 1.0, 1.0)):
    M, A = dense_system(geom, k, m)
    return np.linalg.solve(M / dt + A, M @ u / dt)


def dense_lambda1(geom, m=(1.0, 1.0, 1.0)):
    """Second generalised eigenvalue (first above the constant mode)."""
    M, A = dense_system(geom, (1.0, 1.0, 1.0), m)
    vals = scipy.linalg.eigh(A, M, eigvals_only=True)
    return float(vals[1])
