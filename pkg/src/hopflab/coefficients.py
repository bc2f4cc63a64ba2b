"""Admissible conductivity fields on the unit disk.

A field maps points to 2x2 symmetric positive-definite matrices with
eigenvalues certified inside [1/kappa, kappa].  The four benchmark presets
(linear, gaussian, oscillating, realistic) are scalar fields with values in
[1, 4]; anisotropic fields enter through the ``manufactured`` kind.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

PRESET_KINDS = ("identity", "linear", "gaussian", "oscillating",
                "realistic", "manufactured")
BENCHMARK_PRESETS = ("linear", "gaussian", "oscillating", "realistic")

_EYE = np.eye(2)


@dataclass
class RasterGrid:
    """Rectangular raster backing the realistic preset.

    values has shape (ny, nx), row-major with y increasing.
    """

    nx: int
    ny: int
    x_range: tuple
    y_range: tuple
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.nx < 2 or self.ny < 2:
            raise ValueError("raster needs at least 2x2 samples")
        if self.values.shape != (self.ny, self.nx):
            raise ValueError("raster values must have shape (ny, nx)")
        if not np.isfinite(self.values).all():
            raise ValueError("raster contains non-finite values")
        self.values.setflags(write=False)

    def covers_disk(self):
        return (self.x_range[0] <= -1.0 and self.x_range[1] >= 1.0
                and self.y_range[0] <= -1.0 and self.y_range[1] >= 1.0)

    def interpolate(self, points):
        """Bilinear interpolation, coordinates clipped into the raster."""
        points = np.atleast_2d(points)
        fx = (points[:, 0] - self.x_range[0]) / (self.x_range[1] - self.x_range[0])
        fy = (points[:, 1] - self.y_range[0]) / (self.y_range[1] - self.y_range[0])
        gx = np.clip(fx * (self.nx - 1), 0.0, self.nx - 1)
        gy = np.clip(fy * (self.ny - 1), 0.0, self.ny - 1)
        ix = np.minimum(gx.astype(int), self.nx - 2)
        iy = np.minimum(gy.astype(int), self.ny - 2)
        tx = gx - ix
        ty = gy - iy
        v = self.values
        return ((1 - ty) * ((1 - tx) * v[iy, ix] + tx * v[iy, ix + 1])
                + ty * ((1 - tx) * v[iy + 1, ix] + tx * v[iy + 1, ix + 1]))

    def gradient_bound(self):
        """Upper bound for |grad| of the bilinear interpolant."""
        dx = (self.x_range[1] - self.x_range[0]) / (self.nx - 1)
        dy = (self.y_range[1] - self.y_range[0]) / (self.ny - 1)
        lx = np.abs(np.diff(self.values, axis=1)).max() / dx
        ly = np.abs(np.diff(self.values, axis=0)).max() / dy
        return float(np.hypot(lx, ly))


@dataclass
class ConductivityField:
    """Point-to-matrix coefficient with ellipticity metadata.

    kappa is a certified upper bound for max(lambda_max, 1/lambda_min)
    over the closed disk; beta is the Holder exponent carried as metadata
    (every preset here is smooth).  Fields are immutable and safe for
    concurrent evaluation.
    """

    kind: str
    matrix_fn: Callable[[np.ndarray], np.ndarray]
    kappa: float
    beta: float = 0.5
    grid: Optional[RasterGrid] = None
    scalar_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz_bound: Optional[float] = None

    @property
    def is_isotropic(self):
        return self.scalar_fn is not None

    def matrix_at(self, points, tol=1e-6):
        """Evaluate at an (N, 2) batch of points inside the closed disk."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(points, axis=1)
        if (r > 1.0 + tol).any():
            worst = points[np.argmax(r)]
            raise ValueError(f"point {worst} lies outside the closed disk")
        return self.matrix_fn(points)

    def scalar_at(self, points, tol=1e-6):
        if self.scalar_fn is None:
            raise ValueError(f"{self.kind} field is not isotropic")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(points, axis=1)
        if (r > 1.0 + tol).any():
            raise ValueError("point outside the closed disk")
        return self.scalar_fn(points)


def _isotropic(scalar_fn):
    def matrix_fn(points):
        s = np.asarray(scalar_fn(points), dtype=float)
        return s[:, None, None] * _EYE
    return matrix_fn


def symmetric_eigenvalues(mats):
    """Closed-form eigenvalues of a batch of symmetric 2x2 matrices."""
    a = mats[:, 0, 0]
    d = mats[:, 1, 1]
    b = mats[:, 0, 1]
    mid = 0.5 * (a + d)
    rad = np.sqrt((0.5 * (a - d)) ** 2 + b * b)
    return mid - rad, mid + rad


def default_realistic_raster(nx=33, ny=33):
    """Deterministic lumpy raster standing in for measured conductivity.

    A fixed sum of anisotropic bumps and a gentle trend, sampled on a grid
    that covers [-1.1, 1.1]^2 so finite-difference probes just outside the
    disk stay inside the raster.
    """
    bumps = [
        (0.45, 0.35, 0.30, 2.2),
        (-0.50, 0.10, 0.45, -1.4),
        (0.10, -0.55, 0.25, 1.6),
        (-0.25, -0.30, 0.35, 0.9),
        (0.65, -0.15, 0.40, -0.8),
        (-0.05, 0.65, 0.30, 1.1),
    ]
    xs = np.linspace(-1.1, 1.1, nx)
    ys = np.linspace(-1.1, 1.1, ny)
    gx, gy = np.meshgrid(xs, ys)
    vals = 0.3 * gx - 0.2 * gy
    for cx, cy, w, amp in bumps:
        vals = vals + amp * np.exp(-((gx - cx) ** 2 + (gy - cy) ** 2) / (2 * w * w))
    return RasterGrid(nx, ny, (-1.1, 1.1), (-1.1, 1.1), vals)


def _linear_preset(params):
    a = float(params.get("offset", 2.5))
    b = float(params.get("slope", 1.5))
    if a - abs(b) < 1.0 or a + abs(b) > 4.0:
        raise ValueError("linear parameters leave the admissible range [1, 4]")
    return (lambda p: a + b * p[:, 0]), a + abs(b)


def _gaussian_preset(params):
    cx, cy = params.get("center", (0.3, 0.2))
    width = float(params.get("width", 0.3))
    base = float(params.get("base", 1.0))
    amp = float(params.get("amplitude", 3.0))
    if width <= 0 or base < 1.0 or amp < 0 or base + amp > 4.0:
        raise ValueError("gaussian parameters leave the admissible range [1, 4]")
    def s(p):
        d2 = (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2
        return base + amp * np.exp(-d2 / (2.0 * width * width))
    return s, base + amp


def _oscillating_preset(params):
    mean = float(params.get("mean", 2.5))
    amp = float(params.get("amplitude", 1.5))
    freq = float(params.get("frequency", 1.0))
    if mean - abs(amp) < 1.0 or mean + abs(amp) > 4.0:
        raise ValueError("oscillating parameters leave the admissible range [1, 4]")
    def s(p):
        return mean + amp * np.sin(2 * np.pi * freq * p[:, 0]) \
            * np.sin(2 * np.pi * freq * p[:, 1])
    return s, mean + abs(amp)


def _realistic_preset(params):
    grid = params.get("raster")
    if grid is None:
        raise ValueError("realistic preset requires a 'raster' RasterGrid")
    if not grid.covers_disk():
        raise ValueError("raster does not cover the closed unit disk")
    vmin = float(grid.values.min())
    vmax = float(grid.values.max())
    if vmax - vmin < 1e-14:
        # constant raster: rescaling convention maps it to the midpoint 2.5
        scale, shift = 0.0, 2.5
    else:
        scale = 3.0 / (vmax - vmin)
        shift = 1.0 - scale * vmin
    def s(p):
        return scale * grid.interpolate(p) + shift
    lip = np.sqrt(2.0) * scale * grid.gradient_bound()
    return s, 4.0, grid, lip


def make_preset(kind, params=None):
    """Construct a coefficient field by preset tag.

    Scalar presets return sigma(x) = s(x) * I with s in [1, 4]; the
    reported kappa is a certified upper bound (identity carries the
    smallest admissible value just above 1).  ``manufactured`` accepts a
    vectorized ``scalar`` or ``matrix`` callable plus an optional
    ``kappa`` bound (estimated by dense disk sampling when omitted).
    """
    params = dict(params or {})
    beta = float(params.pop("beta", 0.5))
    if kind == "identity":
        return ConductivityField("identity", _isotropic(lambda p: np.ones(len(p))),
                                 kappa=np.nextafter(1.0, 2.0), beta=beta,
                                 scalar_fn=lambda p: np.ones(len(p)))
    if kind == "linear":
        s, kappa = _linear_preset(params)
        return ConductivityField("linear", _isotropic(s), kappa=kappa,
                                 beta=beta, scalar_fn=s)
    if kind == "gaussian":
        s, kappa = _gaussian_preset(params)
        return ConductivityField("gaussian", _isotropic(s), kappa=kappa,
                                 beta=beta, scalar_fn=s)
    if kind == "oscillating":
        s, kappa = _oscillating_preset(params)
        return ConductivityField("oscillating", _isotropic(s), kappa=kappa,
                                 beta=beta, scalar_fn=s)
    if kind == "realistic":
        s, kappa, grid, lip = _realistic_preset(params)
        return ConductivityField("realistic", _isotropic(s), kappa=kappa,
                                 beta=beta, grid=grid, scalar_fn=s,
                                 lipschitz_bound=lip)
    if kind == "manufactured":
        scalar = params.get("scalar")
        matrix = params.get("matrix")
        if scalar is not None:
            fld = ConductivityField("manufactured", _isotropic(scalar),
                                    kappa=0.0, beta=beta, scalar_fn=scalar)
        elif matrix is not None:
            fld = ConductivityField("manufactured", matrix, kappa=0.0, beta=beta)
        else:
            raise ValueError("manufactured preset needs 'scalar' or 'matrix'")
        kappa = params.get("kappa")
        fld.kappa = float(kappa) if kappa is not None else _sampled_kappa(fld)
        return fld
    raise ValueError(f"unknown preset kind {kind!r}")


def _sampled_kappa(field, n=101):
    xs = np.linspace(-1.0, 1.0, n)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
    lo, hi = symmetric_eigenvalues(field.matrix_fn(pts))
    if lo.min() <= 0:
        raise ValueError("manufactured field is not positive definite")
    return float(max(hi.max(), 1.0 / lo.min()))


def evaluate(field, x, tol=1e-6):
    """Coefficient matrix at a single point of the closed disk."""
    x = np.asarray(x, dtype=float)
    return field.matrix_at(x[None, :], tol=tol)[0]


def certify_ellipticity(field, mesh):
    """Certified ellipticity constant over the mesh quadrature points.

    Returns max(lambda_max, 1/lambda_min) over all quadrature points and
    raises if any sample is non-symmetric or not positive definite.
    """
    pts, _, _ = mesh.quadrature
    mats = field.matrix_at(pts)
    asym = np.abs(mats[:, 0, 1] - mats[:, 1, 0]).max()
    scale = np.abs(mats).max()
    if asym > 1e-12 * max(scale, 1.0):
        raise ValueError(f"non-symmetric coefficient sample (defect {asym:g})")
    lo, hi = symmetric_eigenvalues(mats)
    if lo.min() <= 0.0:
        raise ValueError("coefficient has a non-positive eigenvalue")
    kappa = float(max(hi.max(), 1.0 / lo.min()))
    if not np.isfinite(kappa):
        raise ValueError("ellipticity constant is not finite")
    return kappa


def write_raster(grid, path):
    """Write `nx ny xmin xmax ymin ymax` then ny rows of nx reals."""
    with open(path, "w") as fh:
        fh.write(f"{grid.nx} {grid.ny} {grid.x_range[0]!r} {grid.x_range[1]!r} "
                 f"{grid.y_range[0]!r} {grid.y_range[1]!r}\n")
        for row in grid.values:
            fh.write(" ".join(repr(v) for v in row) + "\n")


def read_raster(path):
    with open(path) as fh:
        header = fh.readline().split()
        nx, ny = int(header[0]), int(header[1])
        xmin, xmax, ymin, ymax = map(float, header[2:6])
        vals = np.loadtxt(fh, ndmin=2)
    if vals.shape != (ny, nx):
        raise ValueError(f"raster body has shape {vals.shape}, header says {(ny, nx)}")
    return RasterGrid(nx, ny, (xmin, xmax), (ymin, ymax), vals)
