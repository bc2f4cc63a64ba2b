import numpy as np
import pytest

from hopflab.experiments import SweepConfig, run_sweep, build_field
from hopflab.kernels import discrete_poisson_kernel, select_interior_samples
from hopflab.mesh import generate_disk_mesh


@pytest.fixture(scope="session")
def mesh_coarse():
    return generate_disk_mesh(0.1)


@pytest.fixture(scope="session")
def mesh_fine():
    return generate_disk_mesh(0.05)


@pytest.fixture(scope="session")
def fields():
    kinds = ("identity", "linear", "gaussian", "oscillating", "realistic")
    return {kind: build_field(kind) for kind in kinds}


@pytest.fixture(scope="session")
def sweep_fine(mesh_fine):
    """Benchmark sweep at h=0.05 with the solutions kept for reuse."""
    solutions = {}
    rows = run_sweep(SweepConfig(target_h=0.05), mesh=mesh_fine,
                     solutions_out=solutions)
    return rows, solutions


@pytest.fixture(scope="session")
def sweep_coarse(mesh_coarse):
    solutions = {}
    rows = run_sweep(SweepConfig(target_h=0.1), mesh=mesh_coarse,
                     solutions_out=solutions)
    return rows, solutions


@pytest.fixture(scope="session")
def kernel_cache(mesh_coarse, mesh_fine, sweep_coarse, sweep_fine):
    """Lazily built kernels keyed by (sigma_kind, target_h).

    Kernels share field/mesh objects with the sweep solutions so the
    representation identity can be checked against them directly.
    """
    meshes = {0.1: mesh_coarse, 0.05: mesh_fine}
    sweeps = {0.1: sweep_coarse[1], 0.05: sweep_fine[1]}
    cache = {}

    def get(kind, h, field=None):
        key = (kind, h)
        if key not in cache:
            mesh = meshes[h]
            if field is None:
                hits = [s.field for (sk, _), s in sweeps[h].items() if sk == kind]
                field = hits[0] if hits else build_field(kind)
            samples = select_interior_samples(mesh, min_dist=0.1)
            cache[key] = discrete_poisson_kernel(mesh, field, samples,
                                                 rel_tol=1e-12)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def identity_field_fine(kernel_cache):
    """Identity field object shared with the cached h=0.05 kernel."""
    return kernel_cache("identity", 0.05).field
