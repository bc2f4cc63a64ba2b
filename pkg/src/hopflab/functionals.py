"""Boundary-maximum functionals: maximum point, exterior normal
derivative, and the L1 deviations on the domain and the boundary.

The normal derivative at the maximum point is recovered variationally
(the discretely conservative flux) and converted from the conormal to the
geometric direction; an angle-weighted gradient average serves as an
independent cross-check.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mesh import boundary_geometry

MAX_PRINCIPLE_TOL = 1e-8
CONSTANT_GUARD = 1e-12


@dataclass
class FluxEstimates:
    """Normal-derivative estimates at a boundary vertex.

    variational is the consistent flux of the conormal derivative
    sigma grad u . nu; geometric divides out nu . sigma nu; the gradient
    average is the sigma-free cross-check from adjacent elements.
    """

    variational: float
    geometric: float
    gradient_average: float


@dataclass
class HopfReport:
    """All quantities entering the two boundary-maximum inequalities."""

    x0: np.ndarray
    x0_index: int
    u_max: float
    normal_derivative: float
    conormal_derivative: float
    gradient_average: float
    l1_omega: float
    l1_gamma: float
    ratio_me0: Optional[float]
    ratio_me: Optional[float]

    @property
    def is_constant(self):
        return self.ratio_me is None

    def csv_row(self, sigma_kind, k, h):
        cells = [sigma_kind, str(k), repr(h),
                 repr(self.x0[0]), repr(self.x0[1]), repr(self.u_max),
                 repr(self.normal_derivative), repr(self.l1_omega),
                 repr(self.l1_gamma)]
        for r in (self.ratio_me0, self.ratio_me):
            cells.append("na" if r is None else repr(r))
        return ",".join(cells)


CSV_HEADER = ("sigma_kind,k,h,x0_x,x0_y,u_max,dnu,"
              "l1_omega,l1_gamma,ratio_me0,ratio_me")


def locate_max(solution):
    """Boundary vertex attaining the maximum, ties to the smallest index.

    Raises if some interior vertex exceeds the boundary maximum by more
    than the maximum-principle tolerance (a discretization failure).
    """
    mesh = solution.mesh
    bvals = solution.boundary_values
    u_max = float(bvals.max())
    winners = mesh.boundary_vertices[bvals == u_max]
    idx = int(winners.min())

    interior_max = solution.nodal_values[mesh.interior_vertices].max()
    if interior_max > u_max + MAX_PRINCIPLE_TOL:
        raise RuntimeError(
            f"interior maximum {interior_max} exceeds boundary maximum "
            f"{u_max}: discrete maximum principle violated")
    return mesh.vertices[idx].copy(), idx, u_max


def flux_estimates(solution, x0_index):
    """Both normal-derivative estimators at a boundary vertex."""
    mesh = solution.mesh
    system = solution.system
    bverts = mesh.boundary_vertices
    pos = np.flatnonzero(bverts == x0_index)
    if len(pos) != 1:
        raise ValueError(f"vertex {x0_index} is not a boundary vertex")
    pos = int(pos[0])

    geom = boundary_geometry(mesh)
    w = geom.lump_weights[pos]
    if w <= 0:
        raise ValueError("degenerate boundary lump weight")
    nu = geom.outward_normals[pos]

    residual = system.full_matrix[x0_index] @ solution.nodal_values \
        - system.rhs_full[x0_index]
    conormal = float(residual / w)

    sigma = solution.field.matrix_at(mesh.vertices[x0_index][None, :])[0]
    geometric = conormal / float(nu @ sigma @ nu)

    # cross-check: angle-weighted average of grad u_h . nu over the
    # triangles meeting x0
    tri_mask = (mesh.triangles == x0_index).any(axis=1)
    tris = mesh.triangles[tri_mask]
    grads = solution.gradients()[tri_mask]
    p = mesh.vertices
    angles = np.empty(len(tris))
    for n, tri in enumerate(tris):
        others = [v for v in tri if v != x0_index]
        a = p[others[0]] - p[x0_index]
        b = p[others[1]] - p[x0_index]
        cosang = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
        angles[n] = np.arccos(np.clip(cosang, -1.0, 1.0))
    avg = float((grads @ nu) @ angles / angles.sum())
    return FluxEstimates(conormal, geometric, avg)


def boundary_flux(solution, x0_index):
    """Geometric exterior normal derivative at a boundary vertex,
    recovered from the variational flux."""
    return flux_estimates(solution, x0_index).geometric


def l1_deviation(solution, u_max):
    """L1 norms of (u_max - u) over the polygon and over the boundary."""
    if u_max < solution.boundary_values.max() - MAX_PRINCIPLE_TOL:
        raise ValueError("u_max is below the boundary maximum")
    mesh = solution.mesh
    _, w, _ = mesh.quadrature
    l1_omega = float(np.dot(w, np.abs(u_max - solution.values_at_quadrature())))
    geom = boundary_geometry(mesh)
    l1_gamma = float(np.dot(geom.lump_weights,
                            np.abs(u_max - solution.boundary_values)))
    return l1_omega, l1_gamma


def hopf_report(solution):
    """Assemble the full report; ratios are None for constant solutions."""
    x0, idx, u_max = locate_max(solution)
    fluxes = flux_estimates(solution, idx)
    l1_omega, l1_gamma = l1_deviation(solution, u_max)

    if l1_gamma <= CONSTANT_GUARD:
        ratio_me0 = ratio_me = None
    else:
        if fluxes.geometric <= 0:
            raise RuntimeError(
                f"non-positive normal derivative {fluxes.geometric} for a "
                "non-constant solution: flux recovery or maximum principle "
                "failed")
        ratio_me0 = l1_omega / l1_gamma
        ratio_me = (l1_omega + l1_gamma) / fluxes.geometric
    return HopfReport(x0, idx, u_max, fluxes.geometric, fluxes.variational,
                      fluxes.gradient_average, l1_omega, l1_gamma,
                      ratio_me0, ratio_me)
