"""Structured triangulations of the closed unit disk.

The generator places vertices on concentric rings (radii j/m) and connects
consecutive rings quadrant by quadrant, so every mesh is deterministic and
invariant under 90-degree rotation with exact coordinate sign flips.  That
symmetry makes midpoint quadrature of odd integrands cancel to rounding
error, and it guarantees a vertex exactly at (0, 1) and (1, 0).
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np


@dataclass
class TriangleMesh:
    """Triangulation of the unit disk with an oriented boundary cycle.

    vertices : (V, 2) float array, all |x| <= 1
    triangles : (T, 3) int array, counterclockwise
    boundary_vertices : (n_b,) int array, cyclic CCW order on the circle
    target_h : requested edge length
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertices: np.ndarray
    target_h: float

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.boundary_vertices = np.ascontiguousarray(
            self.boundary_vertices, dtype=np.int64)
        for a in (self.vertices, self.triangles, self.boundary_vertices):
            a.setflags(write=False)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @cached_property
    def is_boundary(self):
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    @cached_property
    def interior_vertices(self):
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def triangle_areas(self):
        """Signed areas; positive for a valid CCW mesh."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def edges(self):
        """Unique undirected edges, (E, 2) with sorted vertex pairs."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def edge_triangle_counts(self):
        """Number of adjacent triangles per unique edge (1 or 2)."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return counts

    @cached_property
    def quadrature(self):
        """Edge-midpoint rule per triangle, exact for quadratics.

        Returns (points, weights, tri_index) where points is (3T, 2),
        weights is (3T,) with weight area/3 each, and tri_index maps
        each quadrature point back to its triangle.
        """
        p = self.vertices[self.triangles]
        mids = np.concatenate([
            0.5 * (p[:, 0] + p[:, 1]),
            0.5 * (p[:, 1] + p[:, 2]),
            0.5 * (p[:, 2] + p[:, 0]),
        ])
        w = np.tile(self.triangle_areas / 3.0, 3)
        idx = np.tile(np.arange(self.num_triangles), 3)
        return mids, w, idx

    @cached_property
    def vertex_lumped_areas(self):
        """One third of adjacent triangle area per vertex (lumped mass)."""
        areas = np.zeros(self.num_vertices)
        contrib = np.repeat(self.triangle_areas / 3.0, 3)
        np.add.at(areas, self.triangles.ravel(), contrib)
        return areas

    @cached_property
    def max_interior_angle(self):
        p = self.vertices[self.triangles]
        worst = 0.0
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.einsum("ij,ij->i", a, b)
            cosang /= np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            worst = max(worst, float(np.arccos(np.clip(cosang, -1, 1)).max()))
        return worst

    def dist_to_boundary(self, points):
        """Exact distance 1 - |x| to the unit circle (not the polygon)."""
        points = np.atleast_2d(points)
        return 1.0 - np.linalg.norm(points, axis=1)

    def find_triangles(self, points, tol=1e-10):
        """Containing triangle index and barycentric coords per query point."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        tri_idx = np.empty(points.shape[0], dtype=np.int64)
        bary = np.empty((points.shape[0], 3))
        for n, q in enumerate(points):
            r = q - p[:, 0]
            l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
            l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
            l0 = 1.0 - l1 - l2
            inside = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)
            if not inside.any():
                raise ValueError(f"point {q} is outside the triangulation")
            cand = np.flatnonzero(inside)
            best = cand[np.argmax(np.minimum.reduce(
                [l0[cand], l1[cand], l2[cand]]))]
            tri_idx[n] = best
            bary[n] = (l0[best], l1[best], l2[best])
        return tri_idx, bary


@dataclass
class BoundaryGeometry:
    """Outward normals, lumped dS weights and angles per boundary vertex."""

    outward_normals: np.ndarray
    lump_weights: np.ndarray
    vertex_angles: np.ndarray

    def __post_init__(self):
        for a in (self.outward_normals, self.lump_weights, self.vertex_angles):
            a.setflags(write=False)


def _ring_sizes(m):
    # 4*ceil(pi*j/2) nodes on ring j keeps chord spacing just under the
    # radial spacing and makes every count divisible by 4.
    return [4 * math.ceil(math.pi * j / 2.0) for j in range(1, m + 1)]


def _ring_coords(radius, n):
    """n points on the circle, built per quadrant so rotated copies are
    exact sign-flips of each other."""
    s = n // 4
    th = (np.pi / 2.0) * np.arange(s) / s
    x = radius * np.cos(th)
    y = radius * np.sin(th)
    x[0] = radius  # cos(0) == 1 but be explicit
    y[0] = 0.0
    q0 = np.column_stack([x, y])
    q1 = np.column_stack([-q0[:, 1], q0[:, 0]])
    q2 = -q0
    q3 = np.column_stack([q0[:, 1], -q0[:, 0]])
    return np.vstack([q0, q1, q2, q3])


def _strip_quadrant(p, q, r_in, r_out):
    """Triangulate one quadrant between an inner ring (p intervals) and an
    outer ring (q intervals).

    Node labels are ('i', idx) / ('o', idx) with idx in 0..p resp. 0..q;
    angle comparisons use exact integer fractions, ties close the strip
    with the shorter diagonal of the trapezoid.
    """

    def coords(kind, idx, intervals, radius):
        th = (np.pi / 2.0) * idx / intervals
        return np.array([radius * np.cos(th), radius * np.sin(th)])

    tris = []
    i = k = 0
    while i < p or k < q:
        inner_done = i >= p
        outer_done = k >= q
        if not inner_done and not outer_done:
            # compare (i+1)/p with (k+1)/q exactly
            lhs = (i + 1) * q
            rhs = (k + 1) * p
            if lhs == rhs:
                d_io = np.linalg.norm(coords("i", i, p, r_in)
                                      - coords("o", k + 1, q, r_out))
                d_oi = np.linalg.norm(coords("o", k, q, r_out)
                                      - coords("i", i + 1, p, r_in))
                if d_io <= d_oi:
                    tris.append((("i", i), ("o", k), ("o", k + 1)))
                    tris.append((("i", i), ("o", k + 1), ("i", i + 1)))
                else:
                    tris.append((("i", i), ("o", k), ("i", i + 1)))
                    tris.append((("i", i + 1), ("o", k), ("o", k + 1)))
                i += 1
                k += 1
            elif rhs < lhs:
                tris.append((("i", i), ("o", k), ("o", k + 1)))
                k += 1
            else:
                tris.append((("i", i), ("o", k), ("i", i + 1)))
                i += 1
        elif outer_done:
            tris.append((("i", i), ("o", q), ("i", i + 1)))
            i += 1
        else:
            tris.append((("i", i), ("o", k), ("o", k + 1)))
            k += 1
    return tris


def generate_disk_mesh(target_h):
    """Build the structured disk triangulation for a requested edge length.

    Parameters
    ----------
    target_h : float
        Requested edge length, 0 < target_h < 1.  The actual maximum edge
        never exceeds 2*target_h and the boundary resolves at least
        ceil(2*pi/target_h) vertices.

    Returns
    -------
    TriangleMesh
    """
    if not (0.0 < target_h < 1.0):
        raise ValueError(f"target_h must lie in (0, 1), got {target_h}")

    m = max(2, math.ceil(1.0 / target_h))
    sizes = _ring_sizes(m)

    coords = [np.zeros((1, 2))]
    ring_start = [0]
    start = 1
    for j, n in enumerate(sizes, start=1):
        ring_start.append(start)
        coords.append(_ring_coords(j / m, n))
        start += n
    vertices = np.vstack(coords)

    triangles = []
    # ring 1: fan around the center
    n1 = sizes[0]
    for k in range(n1):
        triangles.append((0, ring_start[1] + k, ring_start[1] + (k + 1) % n1))

    for j in range(2, m + 1):
        n_in, n_out = sizes[j - 2], sizes[j - 1]
        p, q = n_in // 4, n_out // 4
        pattern = _strip_quadrant(p, q, (j - 1) / m, j / m)
        s_in, s_out = ring_start[j - 1], ring_start[j]
        for quad in range(4):
            for tri in pattern:
                glob = []
                for kind, idx in tri:
                    if kind == "i":
                        glob.append(s_in + (quad * p + idx) % n_in)
                    else:
                        glob.append(s_out + (quad * q + idx) % n_out)
                triangles.append(tuple(glob))

    boundary = np.arange(ring_start[m], ring_start[m] + sizes[m - 1])
    mesh = TriangleMesh(vertices, np.array(triangles), boundary, target_h)
    if mesh.triangle_areas.min() <= 0.0:
        raise RuntimeError("mesh generator produced a degenerate triangle")
    return mesh


def boundary_geometry(mesh):
    """Outward unit normals, lump weights and angles along the boundary.

    On the disk the outward normal at a boundary vertex is the vertex
    itself normalized; the lump weight is half the length of the two
    adjacent boundary edges, so the weights sum to the polygon perimeter.
    """
    pts = mesh.vertices[mesh.boundary_vertices]
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    normals = pts / norms
    nxt = np.roll(pts, -1, axis=0)
    edge_len = np.linalg.norm(nxt - pts, axis=1)
    lump = 0.5 * (edge_len + np.roll(edge_len, 1))
    angles = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
    return BoundaryGeometry(normals, lump, angles)


def quadrature_integrate(mesh, f):
    """Integrate a point function over the meshed polygon.

    Uses the 3-point edge-midpoint rule per triangle (exact for
    quadratics).  ``f`` may be vectorized over an (N, 2) array of points
    or accept a single 2-vector.
    """
    pts, w, _ = mesh.quadrature
    try:
        vals = np.asarray(f(pts), dtype=float)
        if vals.shape != (pts.shape[0],):
            if vals.ndim == 0:
                vals = np.full(pts.shape[0], float(vals))
            else:
                raise TypeError
    except TypeError:
        vals = np.array([float(f(p)) for p in pts])
    return float(np.dot(w, vals))


def write_mesh(mesh, path):
    """Write the text format: header `V E_b T`, vertex lines `x y flag`,
    triangle lines `i j k`.  Output is deterministic for a given mesh."""
    nb = len(mesh.boundary_vertices)
    flags = mesh.is_boundary.astype(int)
    with open(path, "w") as fh:
        fh.write(f"{mesh.num_vertices} {nb} {mesh.num_triangles}\n")
        for (x, y), flag in zip(mesh.vertices, flags):
            fh.write(f"{x!r} {y!r} {flag}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_mesh(path, target_h=0.0):
    """Read the text format written by :func:`write_mesh`.

    The boundary cycle is reconstructed from triangle orientation: each
    boundary edge occurs in exactly one triangle, directed CCW around the
    domain; the cycle starts at the smallest boundary vertex index.
    """
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0
    nv, nb, nt = (int(tokens[pos + i]) for i in range(3))
    pos += 3
    verts = np.empty((nv, 2))
    flags = np.empty(nv, dtype=bool)
    for i in range(nv):
        verts[i, 0] = float(tokens[pos])
        verts[i, 1] = float(tokens[pos + 1])
        flags[i] = tokens[pos + 2] == "1"
        pos += 3
    tris = np.array(tokens[pos:pos + 3 * nt], dtype=np.int64).reshape(nt, 3)

    directed = {}
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            directed[(int(u), int(v))] = True
    succ = {}
    for (u, v) in directed:
        if (v, u) not in directed:
            succ[u] = v
    if len(succ) != nb:
        raise ValueError("boundary edge count disagrees with header")
    start = min(succ)
    cycle = [start]
    while True:
        nxt = succ[cycle[-1]]
        if nxt == start:
            break
        cycle.append(nxt)
    if len(cycle) != nb or not flags[cycle].all():
        raise ValueError("inconsistent boundary flags")

    # infer target_h from boundary resolution when not supplied
    if target_h <= 0.0:
        target_h = 2.0 * np.pi / nb
    return TriangleMesh(verts, tris, np.array(cycle), target_h)
