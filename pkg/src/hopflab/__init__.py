"""Numerical certification lab for the quantitative Hopf boundary point
lemma: divergence-form Dirichlet solves on the unit disk, boundary-maximum
functionals, discrete Green's functions and Poisson-type kernels, barrier
certificates, and the boundary-data sweep experiment."""

from .mesh import (
    TriangleMesh,
    BoundaryGeometry,
    generate_disk_mesh,
    boundary_geometry,
    quadrature_integrate,
    read_mesh,
    write_mesh,
)
from .coefficients import (
    ConductivityField,
    RasterGrid,
    make_preset,
    evaluate,
    certify_ellipticity,
    default_realistic_raster,
    read_raster,
    write_raster,
)
from .solver import (
    StiffnessSystem,
    Solution,
    assemble_system,
    solve_dirichlet,
    manufactured_error,
)
from .functionals import (
    HopfReport,
    locate_max,
    boundary_flux,
    flux_estimates,
    l1_deviation,
    hopf_report,
)
from .kernels import (
    KernelMatrix,
    GreenColumn,
    discrete_poisson_kernel,
    discrete_green,
    kernel_bound_ratios,
    representation_residual,
    select_interior_samples,
)
from .barrier import (
    BarrierCertificate,
    interior_ball,
    lambda_min,
    barrier_certificate,
    gamma_value,
)
from .experiments import (
    SweepConfig,
    SweepRow,
    run_sweep,
    fit_convergence,
    estimate_constant,
    boundary_data,
)

__all__ = [name for name in dir() if not name.startswith("_")]
