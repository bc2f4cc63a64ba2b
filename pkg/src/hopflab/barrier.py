"""Interior-ball barrier certificates for the normal-derivative lower
bound at a boundary maximum.

The barrier is the radial Gaussian v(x) = exp(-lam |x - xt|^2) -
exp(-lam r^2) on the annulus rho < |x - xt| < r.  The certificate fixes
lam so that div(sigma grad v) >= 0 holds numerically on the annulus, then
evaluates the comparison constant, the Hopf constant gamma, and the
margin of the lower bound dnu(x0) >= gamma * min_circle(u(x0) - u).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import symmetric_eigenvalues
from .functionals import flux_estimates, l1_deviation, CONSTANT_GUARD

FD_STEP = 1e-6
SUBSOLUTION_TOL = 1e-8
CIRCLE_SAMPLES = 36


@dataclass
class BarrierCertificate:
    """Interior-ball data, barrier parameters and certified margins."""

    x0: np.ndarray
    x_tilde: np.ndarray
    r: float
    rho: float
    lam: float
    epsilon: float
    gamma: float
    subsolution_min: float
    ineq1_margin: float
    normal_derivative: float
    min_circle_drop: float
    chain_ratio: Optional[float]
    boundary_flux_ratio: Optional[float]

    def csv_row(self):
        return ",".join(repr(v) for v in (
            self.x0[0], self.x0[1], self.r, self.rho, self.lam,
            self.epsilon, self.gamma, self.subsolution_min,
            self.ineq1_margin))


CSV_HEADER = "x0_x,x0_y,r,rho,lambda,epsilon,gamma,subsol_min,ineq1_margin"


def interior_ball(x0, r):
    """Center of the interior ball of radius r tangent to the circle at x0."""
    x0 = np.asarray(x0, dtype=float)
    if abs(np.linalg.norm(x0) - 1.0) > 1e-9:
        raise ValueError(f"x0 = {x0} does not lie on the unit circle")
    if not (0.0 < r < 1.0):
        raise ValueError(
            f"ball radius must lie in (0, 1); r = {r} degenerates on the disk")
    x_tilde = (1.0 - r) * x0
    # tangency is automatic for the disk: |x_tilde| + r = 1
    assert np.linalg.norm(x_tilde) + r <= 1.0 + 1e-12
    return x_tilde


def barrier_gradient(points, x_tilde, lam):
    """grad v for the Gaussian barrier, vectorized over points."""
    d = points - x_tilde
    s2 = (d ** 2).sum(axis=1)
    return -2.0 * lam * np.exp(-lam * s2)[:, None] * d


def gamma_value(r, rho, lam):
    """Hopf constant 2 r lam e^{-lam r^2} / (e^{-lam rho^2} - e^{-lam r^2})."""
    denom = np.exp(-lam * rho ** 2) - np.exp(-lam * r ** 2)
    if denom <= 0.0:
        raise ValueError(f"barrier denominator underflowed for lam={lam}")
    return 2.0 * r * lam * np.exp(-lam * r ** 2) / denom


def _annulus_points(x_tilde, r, rho, mesh=None):
    if mesh is not None:
        pts, _, _ = mesh.quadrature
        s = np.linalg.norm(pts - x_tilde, axis=1)
        pts = pts[(s > rho) & (s < r)]
        if len(pts) >= 8:
            return pts
    # fallback polar grid when no mesh (or too coarse a mesh) is supplied
    radii = np.linspace(rho, r, 25)[1:-1]
    th = np.linspace(0.0, 2.0 * np.pi, 73)[:-1]
    pts = x_tilde + np.stack([
        np.outer(radii, np.cos(th)).ravel(),
        np.outer(radii, np.sin(th)).ravel()], axis=1)
    return pts[np.linalg.norm(pts, axis=1) < 1.0 - 1e-9]


def _divergence_of_flux(field, points, flux_fn, step=FD_STEP):
    """Centered finite-difference divergence of x -> sigma(x) flux_fn(x)."""
    def flux(pts):
        mats = field.matrix_at(pts, tol=1e-4)
        return np.einsum("nij,nj->ni", mats, flux_fn(pts))

    ex = np.array([step, 0.0])
    ey = np.array([0.0, step])
    div = (flux(points + ex)[:, 0] - flux(points - ex)[:, 0]) / (2 * step)
    div += (flux(points + ey)[:, 1] - flux(points - ey)[:, 1]) / (2 * step)
    return div


def subsolution_values(field, x_tilde, lam, points, step=FD_STEP):
    """div(sigma grad v) at the given points."""
    return _divergence_of_flux(
        field, points, lambda p: barrier_gradient(p, x_tilde, lam), step)


def lambda_min(field, x_tilde, r, rho, mesh=None):
    """Smallest certified barrier steepness for the annulus.

    Starts from lam = D / (2 rho^2 e_min), where D bounds
    |div(sigma (x - x_tilde))| = |trace(sigma) + (div sigma).(x - x_tilde)|
    over the annulus (div sigma by centered differences) and e_min is the
    smallest coefficient eigenvalue there (the coercivity constant of the
    admissibility inequality).  The subsolution property div(sigma grad v)
    >= 0 is then verified numerically, doubling lam up to 10 times.
    """
    if not (0.0 < rho < r):
        raise ValueError(f"need 0 < rho < r, got rho={rho}, r={r}")
    x_tilde = np.asarray(x_tilde, dtype=float)
    pts = _annulus_points(x_tilde, r, rho, mesh)

    mats = field.matrix_at(pts, tol=1e-4)
    trace = mats[:, 0, 0] + mats[:, 1, 1]
    lo, _ = symmetric_eigenvalues(mats)
    e_min = float(lo.min())
    if e_min <= 0.0:
        raise ValueError("coefficient loses ellipticity on the annulus")

    # (div sigma)_j = d_1 sigma_1j + d_2 sigma_2j by centered differences
    ex = np.array([FD_STEP, 0.0])
    ey = np.array([0.0, FD_STEP])
    dsig_x = (field.matrix_at(pts + ex, tol=1e-4)
              - field.matrix_at(pts - ex, tol=1e-4)) / (2 * FD_STEP)
    dsig_y = (field.matrix_at(pts + ey, tol=1e-4)
              - field.matrix_at(pts - ey, tol=1e-4)) / (2 * FD_STEP)
    div_sigma = dsig_x[:, 0, :] + dsig_y[:, 1, :]
    d = pts - x_tilde
    bound = np.abs(trace + np.einsum("nj,nj->n", div_sigma, d))
    big_d = float(bound.max())

    lam = big_d / (2.0 * rho ** 2 * e_min)
    for _ in range(11):
        vals = subsolution_values(field, x_tilde, lam, pts)
        if vals.min() >= -SUBSOLUTION_TOL:
            return lam
        lam *= 2.0
    worst = pts[np.argmin(vals)]
    raise RuntimeError(
        f"subsolution certification failed after 10 doublings; worst point "
        f"{worst} gives div(sigma grad v) = {vals.min():g}")


def _resolve_boundary_vertex(mesh, x0):
    if np.isscalar(x0) or isinstance(x0, (int, np.integer)):
        idx = int(x0)
        if not mesh.is_boundary[idx]:
            raise ValueError(f"vertex {idx} is not a boundary vertex")
        return idx
    x0 = np.asarray(x0, dtype=float)
    pts = mesh.vertices[mesh.boundary_vertices]
    k = int(np.argmin(((pts - x0) ** 2).sum(axis=1)))
    if np.linalg.norm(pts[k] - x0) > 1e-9:
        raise ValueError(f"{x0} is not a boundary vertex of the mesh")
    return int(mesh.boundary_vertices[k])


def barrier_certificate(solution, x0, r=0.5, rho=0.25):
    """Construct and check the full barrier certificate at a boundary
    maximum.

    x0 may be a boundary vertex index or its coordinates (normally the
    maximizer from locate_max).  Constant solutions yield the vacuous
    certificate (epsilon = 0, zero margins) without error.
    """
    mesh = solution.mesh
    field = solution.field
    idx = _resolve_boundary_vertex(mesh, x0)
    x0_pt = mesh.vertices[idx].copy()

    x_tilde = interior_ball(x0_pt, r)
    lam = lambda_min(field, x_tilde, r, rho, mesh=mesh)

    th = 2.0 * np.pi * np.arange(CIRCLE_SAMPLES) / CIRCLE_SAMPLES
    circle = x_tilde + rho * np.column_stack([np.cos(th), np.sin(th)])
    u_circle = solution.evaluate(circle)
    u0 = float(solution.nodal_values[idx])

    drop = u0 - float(u_circle.max())
    scale = max(1.0, abs(u0))
    if drop < -1e-8 * scale:
        raise RuntimeError(
            f"maximum principle violated: u on the inner circle exceeds "
            f"u(x0) by {-drop:g}")
    drop = max(drop, 0.0)

    denom = np.exp(-lam * rho ** 2) - np.exp(-lam * r ** 2)
    if denom <= 0.0:
        raise RuntimeError(f"barrier denominator underflowed for lam={lam}")
    epsilon = drop / denom
    gamma = gamma_value(r, rho, lam)

    annulus = _annulus_points(x_tilde, r, rho, mesh)
    subsol_min = float(subsolution_values(field, x_tilde, lam, annulus).min())

    fluxes = flux_estimates(solution, idx)
    dnu = fluxes.geometric
    margin = dnu - gamma * drop

    _, l1_gamma = l1_deviation(solution, u0)
    if l1_gamma > CONSTANT_GUARD:
        chain_ratio = drop / l1_gamma
        flux_ratio = l1_gamma / dnu if dnu > 0 else None
    else:
        chain_ratio = flux_ratio = None

    return BarrierCertificate(x0_pt, x_tilde, float(r), float(rho), lam,
                              epsilon, gamma, subsol_min, margin, dnu,
                              drop, chain_ratio, flux_ratio)
