import numpy as np
import pytest

from hopflab.barrier import (CSV_HEADER, barrier_certificate, barrier_gradient,
                             gamma_value, interior_ball, lambda_min,
                             subsolution_values)
from hopflab.coefficients import make_preset
from hopflab.functionals import locate_max
from hopflab.solver import assemble_system, solve_dirichlet

REL_TOL = 1e-10


@pytest.fixture(scope="module")
def sol_x2(mesh_fine, fields):
    system = assemble_system(mesh_fine, fields["identity"], None,
                             lambda p: p[:, 1])
    return solve_dirichlet(system, REL_TOL)


def test_interior_ball_geometry():
    assert np.allclose(interior_ball((0.0, 1.0), 0.5), [0.0, 0.5])
    assert np.allclose(interior_ball((1.0, 0.0), 0.25), [0.75, 0.0])


@pytest.mark.parametrize("r", (1.0, 0.0, -0.5, 1.5))
def test_interior_ball_rejects_degenerate_radius(r):
    with pytest.raises(ValueError):
        interior_ball((0.0, 1.0), r)


def test_interior_ball_requires_boundary_point():
    with pytest.raises(ValueError):
        interior_ball((0.0, 0.5), 0.25)


def test_lambda_min_identity_is_closed_form(mesh_fine, fields):
    # for sigma = I the trace bound gives D = 2 and lam = 1 / rho^2
    xt = interior_ball((0.0, 1.0), 0.5)
    lam = lambda_min(fields["identity"], xt, 0.5, 0.25, mesh=mesh_fine)
    assert lam == pytest.approx(16.0, rel=1e-9)


def test_lambda_min_invariant_under_constant_scaling(mesh_fine):
    xt = interior_ball((0.0, 1.0), 0.5)
    scaled = make_preset("manufactured",
                         {"scalar": lambda p: 2.5 * np.ones(len(p)),
                          "kappa": 2.5})
    lam = lambda_min(scaled, xt, 0.5, 0.25, mesh=mesh_fine)
    assert lam == pytest.approx(16.0, rel=1e-6)


def test_lambda_min_certifies_gaussian(mesh_fine, fields):
    xt = interior_ball((0.0, 1.0), 0.5)
    lam = lambda_min(fields["gaussian"], xt, 0.5, 0.25, mesh=mesh_fine)
    assert np.isfinite(lam) and lam > 0
    pts, _, _ = mesh_fine.quadrature
    s = np.linalg.norm(pts - xt, axis=1)
    annulus = pts[(s > 0.25) & (s < 0.5)]
    vals = subsolution_values(fields["gaussian"], xt, lam, annulus)
    assert vals.min() >= -1e-8


def test_lambda_min_without_mesh_uses_polar_grid(fields):
    xt = interior_ball((0.0, 1.0), 0.5)
    lam = lambda_min(fields["identity"], xt, 0.5, 0.25)
    assert lam == pytest.approx(16.0, rel=1e-9)


def test_lambda_min_rejects_bad_annulus(fields):
    with pytest.raises(ValueError):
        lambda_min(fields["identity"], (0.0, 0.5), 0.25, 0.5)


def test_subsolution_fd_matches_laplacian(fields):
    # for sigma = I: div(grad v) = 2 lam e^{-lam s^2} (2 lam s^2 - 2)
    xt = np.array([0.0, 0.5])
    lam = 16.0
    pts = xt + np.array([[0.3, 0.0], [0.0, -0.35], [0.2, 0.2]])
    fd = subsolution_values(fields["identity"], xt, lam, pts)
    s2 = ((pts - xt) ** 2).sum(axis=1)
    exact = 2 * lam * np.exp(-lam * s2) * (2 * lam * s2 - 2.0)
    assert np.abs(fd - exact).max() < 1e-6


def test_barrier_gradient_formula():
    xt = np.array([0.0, 0.5])
    pts = np.array([[0.3, 0.5], [0.0, 0.1]])
    grad = barrier_gradient(pts, xt, 2.0)
    d = pts - xt
    s2 = (d ** 2).sum(axis=1)
    assert np.allclose(grad, -4.0 * np.exp(-2.0 * s2)[:, None] * d)


def test_gamma_closed_form_values():
    assert gamma_value(1.0, 0.5, 2.0) == pytest.approx(1.14886766, rel=1e-6)
    lam = 16.0
    expected = 2 * 0.5 * lam * np.exp(-lam * 0.25) \
        / (np.exp(-lam * 0.0625) - np.exp(-lam * 0.25))
    assert gamma_value(0.5, 0.25, lam) == pytest.approx(expected, rel=1e-12)
    for lam in (0.5, 1.0, 4.0, 64.0, 300.0):
        assert gamma_value(0.5, 0.25, lam) > 0


def test_gamma_underflow_guard():
    with pytest.raises(ValueError):
        gamma_value(0.5, 0.25, 1e7)


def test_certificate_for_x2(sol_x2):
    _, idx, _ = locate_max(sol_x2)
    cert = barrier_certificate(sol_x2, idx, r=0.5, rho=0.25)
    assert cert.lam == pytest.approx(16.0, rel=1e-9)
    assert cert.epsilon == pytest.approx(0.71518, rel=0.02)
    assert cert.gamma == pytest.approx(0.83835, rel=0.02)
    assert cert.gamma == pytest.approx(gamma_value(0.5, 0.25, cert.lam),
                                       rel=1e-12)
    assert cert.min_circle_drop == pytest.approx(0.25, rel=0.02)
    assert cert.ineq1_margin == pytest.approx(0.7904, abs=0.02)
    assert cert.subsolution_min >= -1e-8
    assert np.allclose(cert.x_tilde, [0.0, 0.5])


def test_certificate_accepts_coordinates(sol_x2):
    cert = barrier_certificate(sol_x2, np.array([0.0, 1.0]))
    assert np.allclose(cert.x0, [0.0, 1.0], atol=1e-14)


def test_certificate_for_constant_is_vacuous(mesh_fine, fields):
    system = assemble_system(mesh_fine, fields["identity"], None,
                             lambda p: np.full(len(p), 3.0))
    sol = solve_dirichlet(system, REL_TOL)
    _, idx, _ = locate_max(sol)
    cert = barrier_certificate(sol, idx)
    assert cert.epsilon == 0.0
    assert cert.gamma > 0.0
    assert abs(cert.ineq1_margin) <= 1e-8
    assert cert.chain_ratio is None


def test_certificate_detects_wrong_maximum(mesh_fine, fields):
    # u = -x2 peaks at (0,-1); certifying at (0,1) must fail loudly
    system = assemble_system(mesh_fine, fields["identity"], None,
                             lambda p: -p[:, 1])
    sol = solve_dirichlet(system, REL_TOL)
    with pytest.raises(RuntimeError):
        barrier_certificate(sol, np.array([0.0, 1.0]))


def test_chain_ratio_positive_and_stable(mesh_coarse, mesh_fine, fields):
    ratios = {}
    for mesh in (mesh_coarse, mesh_fine):
        system = assemble_system(mesh, fields["gaussian"], None,
                                 lambda p: (p[:, 1] + 3.0) / 4.0)
        sol = solve_dirichlet(system, REL_TOL)
        _, idx, _ = locate_max(sol)
        cert = barrier_certificate(sol, idx)
        assert cert.chain_ratio is not None and cert.chain_ratio > 0
        ratios[mesh.target_h] = cert.chain_ratio
    assert 0.5 <= ratios[0.1] / ratios[0.05] <= 2.0


def test_certificate_csv_row(sol_x2):
    _, idx, _ = locate_max(sol_x2)
    cert = barrier_certificate(sol_x2, idx)
    row = cert.csv_row()
    assert len(row.split(",")) == len(CSV_HEADER.split(","))
    assert float(row.split(",")[4]) == cert.lam
