"""Discrete Green's functions and the Poisson-type kernel.

The kernel is built by the harmonic-measure route: one homogeneous solve
per boundary hat function, so the representation of any Dirichlet
solution through the kernel is an exact discrete identity up to solver
tolerance.  Green columns (unit nodal loads) are kept separately for the
symmetry and positivity checks.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from .mesh import boundary_geometry
from .solver import assemble_system
from .functionals import locate_max


@dataclass
class KernelMatrix:
    """Discrete Poisson-type kernel sampled at interior vertices times
    boundary vertices, with the boundary lump weights that turn row sums
    into boundary integrals."""

    interior_indices: np.ndarray
    interior_points: np.ndarray
    boundary_vertices: np.ndarray
    boundary_points: np.ndarray
    values: np.ndarray
    lump_weights: np.ndarray
    mesh: object
    field: object
    rel_tol: float

    def row_integrals(self):
        """Sum_j K(x_i, y_j) w_j; equals 1 up to solver tolerance."""
        return self.values @ self.lump_weights

    def column_area_sums(self):
        """Sum_i area_i K(x_i, y_j) over the sampled interior vertices,
        the discrete domain integral of the kernel per boundary point."""
        areas = self.mesh.vertex_lumped_areas[self.interior_indices]
        return areas @ self.values


@dataclass
class GreenColumn:
    """Discrete Green's function column for a unit load at ``source``."""

    source: int
    values: np.ndarray
    mesh: object
    field: object


def select_interior_samples(mesh, min_dist=0.1, min_radius=0.0, limit=None):
    """Vertex indices with dist(x, boundary) >= min_dist (and optionally
    |x| >= min_radius); deterministic, ordered by vertex index."""
    r = np.linalg.norm(mesh.vertices, axis=1)
    keep = (1.0 - r >= min_dist) & (r >= min_radius)
    keep[mesh.boundary_vertices] = False
    idx = np.flatnonzero(keep)
    if limit is not None and len(idx) > limit:
        stride = len(idx) / limit
        idx = idx[(np.arange(limit) * stride).astype(int)]
    return idx


def _interior_solver(mesh, field, rel_tol):
    """Shared CG driver over the interior block of the stiffness matrix."""
    system = assemble_system(mesh, field)
    a = system.matrix
    precond = sparse.diags(1.0 / a.diagonal())
    maxiter = int(np.ceil(20 * np.sqrt(a.shape[0])))

    def solve(rhs):
        x, info = cg(a, rhs, rtol=rel_tol, atol=0.0, M=precond, maxiter=maxiter)
        if info != 0:
            raise RuntimeError(f"CG failed (info={info})")
        return x

    return system, solve


def discrete_poisson_kernel(mesh, field, interior_samples, rel_tol=1e-12,
                            min_dist=0.1):
    """Build the kernel matrix by solving one BVP per boundary hat.

    interior_samples must be interior vertices with dist(x, boundary)
    >= min_dist; a failed column solve aborts with that column's index.
    """
    interior_samples = np.asarray(interior_samples, dtype=np.int64)
    dist = mesh.dist_to_boundary(mesh.vertices[interior_samples])
    if (dist < min_dist - 1e-12).any():
        bad = interior_samples[np.argmin(dist)]
        raise ValueError(
            f"sample vertex {bad} is closer than {min_dist} to the boundary")
    if mesh.is_boundary[interior_samples].any():
        raise ValueError("interior samples include a boundary vertex")

    geom = boundary_geometry(mesh)
    bverts = mesh.boundary_vertices
    iverts = mesh.interior_vertices
    system, solve = _interior_solver(mesh, field, rel_tol)
    coupling = system.full_matrix[iverts][:, bverts].tocsc()

    # map sampled vertices into the interior unknown ordering
    pos_of = np.full(mesh.num_vertices, -1, dtype=np.int64)
    pos_of[iverts] = np.arange(len(iverts))
    sample_pos = pos_of[interior_samples]

    values = np.empty((len(interior_samples), len(bverts)))
    for j in range(len(bverts)):
        rhs = -coupling[:, j].toarray().ravel()
        try:
            u = solve(rhs)
        except RuntimeError as exc:
            raise RuntimeError(f"kernel column {j} failed: {exc}") from exc
        values[:, j] = u[sample_pos] / geom.lump_weights[j]

    return KernelMatrix(interior_samples, mesh.vertices[interior_samples],
                        bverts.copy(), mesh.vertices[bverts], values,
                        geom.lump_weights.copy(), mesh, field, rel_tol)


def discrete_green(mesh, field, source_vertex, rel_tol=1e-12):
    """Green's function column: unit nodal load at an interior vertex,
    zero Dirichlet data."""
    source_vertex = int(source_vertex)
    if mesh.is_boundary[source_vertex]:
        raise ValueError(f"source vertex {source_vertex} is on the boundary")
    iverts = mesh.interior_vertices
    _, solve = _interior_solver(mesh, field, rel_tol)
    rhs = np.zeros(len(iverts))
    rhs[np.flatnonzero(iverts == source_vertex)[0]] = 1.0
    u = solve(rhs)
    nodal = np.zeros(mesh.num_vertices)
    nodal[iverts] = u
    return GreenColumn(source_vertex, nodal, mesh, field)


def disk_poisson_kernel(x, y):
    """Closed-form Poisson kernel of the unit disk for sigma = I."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d2 = ((x - y) ** 2).sum(axis=-1)
    return (1.0 - (x ** 2).sum(axis=-1)) / (2.0 * np.pi * d2)


def kernel_bound_ratios(kernel):
    """Extremes of R(x, y) = K(x, y) |x - y|^2 / dist(x, boundary).

    Returns (min_ratio, max_ratio, varkappa_obs); a non-positive ratio
    raises with the offending pairs listed.
    """
    dist = kernel.mesh.dist_to_boundary(kernel.interior_points)
    diff = kernel.interior_points[:, None, :] - kernel.boundary_points[None, :, :]
    d2 = (diff ** 2).sum(axis=2)
    ratios = kernel.values * d2 / dist[:, None]

    if ratios.min() <= 0.0:
        bad = np.argwhere(ratios <= 0.0)
        pairs = [(tuple(kernel.interior_points[i]), tuple(kernel.boundary_points[j]))
                 for i, j in bad[:10]]
        raise ValueError(
            f"{len(bad)} non-positive kernel ratios; first offenders: {pairs}")
    min_ratio = float(ratios.min())
    max_ratio = float(ratios.max())
    return min_ratio, max_ratio, max(max_ratio, 1.0 / min_ratio)


def representation_residual(kernel, solution):
    """Worst defect of the discrete boundary representation
    u(x0) - u(x_i) = sum_j K(x_i, y_j) (u(x0) - g(y_j)) w_j."""
    if kernel.mesh is not solution.mesh:
        raise ValueError("kernel and solution live on different meshes")
    if kernel.field is not solution.field:
        raise ValueError("kernel and solution use different coefficient fields")
    _, _, u_max = locate_max(solution)
    g = solution.boundary_values
    lhs = u_max - solution.nodal_values[kernel.interior_indices]
    rhs = kernel.values @ ((u_max - g) * kernel.lump_weights)
    return float(np.abs(lhs - rhs).max())


def lipschitz_spot_check(kernel, max_radius=0.3, points=None):
    """Max over close interior pairs of max_j |K(x1,y_j)-K(x2,y_j)| / |x1-x2|.

    Pairs are drawn from samples with |x| <= max_radius, or from the given
    points (which must coincide with sample vertices, so the statistic can
    be compared across refinements at shared locations)."""
    if points is not None:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        sel = []
        for q in points:
            hit = np.flatnonzero(
                ((kernel.interior_points - q) ** 2).sum(axis=1) < 1e-24)
            if len(hit) != 1:
                raise ValueError(f"{q} is not a sampled interior vertex")
            sel.append(hit[0])
        sel = np.array(sel)
    else:
        r = np.linalg.norm(kernel.interior_points, axis=1)
        sel = np.flatnonzero(r <= max_radius + 1e-12)
    if len(sel) < 2:
        raise ValueError("not enough interior samples inside the spot radius")
    worst = 0.0
    for a in range(len(sel)):
        for b in range(a + 1, len(sel)):
            i, j = sel[a], sel[b]
            dx = np.linalg.norm(kernel.interior_points[i] - kernel.interior_points[j])
            dk = np.abs(kernel.values[i] - kernel.values[j]).max()
            worst = max(worst, dk / dx)
    return worst


def write_kernel_csv(kernel, path):
    """Export `xi_index,yj_index,K,value_exact_if_available` rows; the
    exact column is filled for the identity field, empty otherwise."""
    has_exact = kernel.field.kind == "identity"
    with open(path, "w") as fh:
        fh.write("xi_index,yj_index,K,value_exact_if_available\n")
        for a, i in enumerate(kernel.interior_indices):
            for b, j in enumerate(kernel.boundary_vertices):
                exact = ""
                if has_exact:
                    exact = repr(float(disk_poisson_kernel(
                        kernel.interior_points[a], kernel.boundary_points[b])))
                fh.write(f"{i},{j},{kernel.values[a, b]!r},{exact}\n")


def write_bound_report(kernel, path):
    """Export (x, y, R) triples plus a min/max/varkappa summary line."""
    dist = kernel.mesh.dist_to_boundary(kernel.interior_points)
    with open(path, "w") as fh:
        fh.write("x1,x2,y1,y2,R\n")
        for a in range(len(kernel.interior_indices)):
            for b in range(len(kernel.boundary_vertices)):
                d2 = ((kernel.interior_points[a] - kernel.boundary_points[b]) ** 2).sum()
                ratio = kernel.values[a, b] * d2 / dist[a]
                fh.write(f"{kernel.interior_points[a, 0]!r},"
                         f"{kernel.interior_points[a, 1]!r},"
                         f"{kernel.boundary_points[b, 0]!r},"
                         f"{kernel.boundary_points[b, 1]!r},{ratio!r}\n")
        lo, hi, vk = kernel_bound_ratios(kernel)
        fh.write(f"# min_ratio={lo!r} max_ratio={hi!r} varkappa_obs={vk!r}\n")
