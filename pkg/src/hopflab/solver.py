"""P1 finite elements for -div(sigma grad u) = f with Dirichlet data.

Assembly samples sigma at triangle centroids and integrates the gradients
exactly; Dirichlet values are imposed strongly by elimination so boundary
nodal values equal g bit for bit.  The interior system is solved with
Jacobi-preconditioned conjugate gradients.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from .coefficients import symmetric_eigenvalues


def _eval_pointfun(fn, points):
    """Evaluate a point function on an (N, 2) batch, tolerating scalar
    returns and non-vectorized callables."""
    if fn is None:
        return np.zeros(points.shape[0])
    try:
        vals = np.asarray(fn(points), dtype=float)
        if vals.ndim == 0:
            return np.full(points.shape[0], float(vals))
        if vals.shape == (points.shape[0],):
            return vals
        raise TypeError
    except TypeError:
        return np.array([float(fn(p)) for p in points])


@dataclass
class StiffnessSystem:
    """Assembled Dirichlet system.

    matrix : SPD sparse matrix over interior vertices
    load : interior right-hand side including the Dirichlet lift
    lift : boundary nodal values g
    full_matrix : stiffness over all vertices (needed for flux recovery)
    rhs_full : (f, phi_i) for every vertex i
    """

    matrix: sparse.csr_matrix
    load: np.ndarray
    lift: np.ndarray
    full_matrix: sparse.csr_matrix
    rhs_full: np.ndarray
    mesh: object
    field: object


@dataclass
class Solution:
    """Nodal solution tied to its mesh, field and assembled system."""

    mesh: object
    field: object
    nodal_values: np.ndarray
    solve_residual: float
    iterations: int
    system: StiffnessSystem

    @property
    def boundary_values(self):
        return self.nodal_values[self.mesh.boundary_vertices]

    def evaluate(self, points):
        """P1 interpolation at arbitrary points of the meshed polygon."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tri_idx, bary = self.mesh.find_triangles(points)
        vals = self.nodal_values[self.mesh.triangles[tri_idx]]
        return np.einsum("ij,ij->i", bary, vals)

    def gradients(self):
        """Constant gradient per triangle, (T, 2)."""
        mesh = self.mesh
        p = mesh.vertices[mesh.triangles]
        u = self.nodal_values[mesh.triangles]
        area = mesh.triangle_areas
        gx = (u[:, 0] * (p[:, 1, 1] - p[:, 2, 1])
              + u[:, 1] * (p[:, 2, 1] - p[:, 0, 1])
              + u[:, 2] * (p[:, 0, 1] - p[:, 1, 1])) / (2 * area)
        gy = (u[:, 0] * (p[:, 2, 0] - p[:, 1, 0])
              + u[:, 1] * (p[:, 0, 0] - p[:, 2, 0])
              + u[:, 2] * (p[:, 1, 0] - p[:, 0, 0])) / (2 * area)
        return np.column_stack([gx, gy])

    def values_at_quadrature(self):
        """P1 values at the edge-midpoint quadrature points."""
        u = self.nodal_values[self.mesh.triangles]
        return np.concatenate([
            0.5 * (u[:, 0] + u[:, 1]),
            0.5 * (u[:, 1] + u[:, 2]),
            0.5 * (u[:, 2] + u[:, 0]),
        ])


def hat_gradients(mesh):
    """Gradients of the three hat functions per triangle, (T, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    area = mesh.triangle_areas
    grads = np.empty((mesh.num_triangles, 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / (2 * area)
        grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / (2 * area)
    return grads


def assemble_system(mesh, field, f=None, g=None):
    """Assemble the stiffness system for -div(sigma grad u) = f, u = g.

    Parameters
    ----------
    mesh : TriangleMesh
    field : ConductivityField
    f : source point-function or None for the homogeneous equation
    g : boundary data; callable on (n_b, 2) boundary points, an (n_b,)
        array of nodal values, or None for zero
    """
    area = mesh.triangle_areas
    if area.min() <= 0.0:
        raise ValueError("mesh contains a degenerate triangle")

    sigma = field.matrix_at(mesh.centroids)
    lo, _ = symmetric_eigenvalues(sigma)
    if lo.min() <= 0.0:
        raise ValueError("coefficient sample is not positive definite")

    grads = hat_gradients(mesh)
    # local stiffness: area * grad_i . sigma grad_j, symmetrized so the
    # assembled matrix equals its transpose bit for bit
    sig_g = np.einsum("tab,tjb->tja", sigma, grads)
    local = np.einsum("tia,tja,t->tij", grads, sig_g, area)
    local = 0.5 * (local + local.transpose(0, 2, 1))

    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    full = sparse.coo_matrix(
        (local.ravel(), (rows, cols)),
        shape=(mesh.num_vertices, mesh.num_vertices)).tocsr()

    # (f, phi_i) with the edge-midpoint rule: each midpoint feeds its two
    # edge endpoints with weight area/6
    rhs_full = np.zeros(mesh.num_vertices)
    if f is not None:
        pts, w, _ = mesh.quadrature
        fvals = _eval_pointfun(f, pts) * w * 0.5
        t = mesh.num_triangles
        pairs = [(0, 1), (1, 2), (2, 0)]
        for block, (a, b) in enumerate(pairs):
            seg = fvals[block * t:(block + 1) * t]
            np.add.at(rhs_full, mesh.triangles[:, a], seg)
            np.add.at(rhs_full, mesh.triangles[:, b], seg)

    bverts = mesh.boundary_vertices
    if g is None:
        lift = np.zeros(len(bverts))
    elif callable(g):
        lift = _eval_pointfun(g, mesh.vertices[bverts])
    else:
        lift = np.asarray(g, dtype=float)
        if lift.shape != (len(bverts),):
            raise ValueError("boundary data array has wrong length")

    iverts = mesh.interior_vertices
    matrix = full[iverts][:, iverts].tocsr()
    load = rhs_full[iverts] - full[iverts][:, bverts] @ lift
    return StiffnessSystem(matrix, load, lift, full, rhs_full, mesh, field)


def solve_dirichlet(system, rel_tol=1e-10):
    """Solve the interior system with Jacobi-preconditioned CG.

    Non-convergence within 20*sqrt(N) iterations indicates a broken (non
    SPD) assembly and raises.  The achieved relative residual and the
    iteration count are recorded on the solution.
    """
    if not (1e-14 < rel_tol < 1e-2):
        raise ValueError("rel_tol must lie in (1e-14, 1e-2)")
    mesh = system.mesh
    a = system.matrix
    b = system.load
    n = a.shape[0]

    diag = a.diagonal()
    if (diag <= 0).any():
        raise RuntimeError("non-positive diagonal entry; assembly is broken")
    precond = sparse.diags(1.0 / diag)

    iters = 0
    def count(_):
        nonlocal iters
        iters += 1

    maxiter = int(np.ceil(20 * np.sqrt(max(n, 1))))
    x, info = cg(a, b, rtol=rel_tol, atol=0.0, M=precond,
                 maxiter=maxiter, callback=count)
    if info != 0:
        raise RuntimeError(
            f"CG failed to converge in {maxiter} iterations (info={info}); "
            "the assembled matrix is not SPD")

    bnorm = np.linalg.norm(b)
    residual = float(np.linalg.norm(b - a @ x) / bnorm) if bnorm > 0 else 0.0

    nodal = np.zeros(mesh.num_vertices)
    nodal[mesh.interior_vertices] = x
    nodal[mesh.boundary_vertices] = system.lift
    return Solution(mesh, system.field, nodal, residual, iters, system)


def manufactured_error(solution, u_exact):
    """L2 (by quadrature) and vertex-max errors against an exact solution."""
    mesh = solution.mesh
    pts, w, _ = mesh.quadrature
    diff = solution.values_at_quadrature() - _eval_pointfun(u_exact, pts)
    l2 = float(np.sqrt(np.dot(w, diff ** 2)))
    vert_exact = _eval_pointfun(u_exact, mesh.vertices)
    linf = float(np.abs(solution.nodal_values - vert_exact).max())
    return l2, linf
