"""Boundary-data sweep harness: the h_k family across coefficient
presets, log-log convergence fits, and the empirical constants of the two
boundary-maximum inequalities."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coefficients import BENCHMARK_PRESETS, make_preset, default_realistic_raster
from .functionals import HopfReport, hopf_report, CSV_HEADER
from .mesh import generate_disk_mesh
from .solver import assemble_system, solve_dirichlet

DEFAULT_K_VALUES = (1, 2, 4, 8, 16, 32, 64, 128, 256)


def boundary_data(k):
    """The boundary family h_k(x) = ((x2 + 3) / 4)^(1/k), vectorized."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    exponent = 1.0 / k
    def h(points):
        return ((points[:, 1] + 3.0) / 4.0) ** exponent
    return h


@dataclass
class SweepConfig:
    sigma_kinds: Sequence[str] = BENCHMARK_PRESETS
    k_values: Sequence[int] = DEFAULT_K_VALUES
    target_h: float = 0.05
    rel_tol: float = 1e-10
    output_path: Optional[str] = None
    with_kernel_checks: bool = False
    with_barrier: bool = False

    def __post_init__(self):
        ks = list(self.k_values)
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_values must be nonempty and strictly increasing")
        if not (0.0 < self.target_h < 1.0):
            raise ValueError("target_h must lie in (0, 1)")


@dataclass
class SweepRow:
    sigma_kind: str
    k: int
    h: float
    dnu: float
    l1_gamma: float
    l1_omega: float
    ratio_me0: Optional[float]
    ratio_me: Optional[float]
    report: HopfReport

    def csv_row(self):
        return self.report.csv_row(self.sigma_kind, self.k, self.h)


def build_field(kind, params=None):
    """Preset constructor that fills in the canned raster for 'realistic'."""
    params = dict(params or {})
    if kind == "realistic" and "raster" not in params:
        params["raster"] = default_realistic_raster()
    return make_preset(kind, params)


def run_sweep(config, mesh=None, solutions_out=None):
    """Solve the h_k family for every configured preset.

    Rows come back sorted by (sigma_kind order as configured, k).  Any
    solve or report failure aborts with the offending (sigma, k) named.
    If ``solutions_out`` is a dict it collects the Solution objects keyed
    by (sigma_kind, k) for reuse (kernel checks, barrier certificates).
    """
    if mesh is None:
        mesh = generate_disk_mesh(config.target_h)
    rows = []
    for kind in config.sigma_kinds:
        field = build_field(kind)
        for k in config.k_values:
            try:
                system = assemble_system(mesh, field, None, boundary_data(k))
                sol = solve_dirichlet(system, config.rel_tol)
                report = hopf_report(sol)
            except Exception as exc:
                raise RuntimeError(f"sweep failed at (sigma={kind}, k={k}): {exc}") from exc
            if not (abs(report.x0[0]) < 1e-12 and abs(report.x0[1] - 1.0) < 1e-12):
                raise RuntimeError(
                    f"sweep (sigma={kind}, k={k}): maximum located at "
                    f"{report.x0}, expected (0, 1)")
            if solutions_out is not None:
                solutions_out[(kind, k)] = sol
            rows.append(SweepRow(kind, k, config.target_h,
                                 report.normal_derivative, report.l1_gamma,
                                 report.l1_omega, report.ratio_me0,
                                 report.ratio_me, report))
    return rows


def fit_convergence(rows, sigma_kind, include_k1=True):
    """Least-squares slope of log(l1_gamma) against log(dnu).

    Returns (slope, intercept, r_squared); requires at least 4 rows for
    the preset with strictly positive dnu and l1_gamma.
    """
    sel = [r for r in rows
           if r.sigma_kind == sigma_kind and (include_k1 or r.k > 1)]
    if len(sel) < 4:
        raise ValueError(f"need at least 4 rows for {sigma_kind}, got {len(sel)}")
    dnu = np.array([r.dnu for r in sel])
    l1g = np.array([r.l1_gamma for r in sel])
    if (dnu <= 0).any() or (l1g <= 0).any():
        raise ValueError("non-positive data point in convergence fit")
    x = np.log(dnu)
    y = np.log(l1g)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = ((y - y.mean()) ** 2).sum()
    r2 = 1.0 - (resid ** 2).sum() / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def estimate_constant(rows):
    """Empirical constants: max of ratio_me0 and ratio_me over the sweep."""
    me0 = [r.ratio_me0 for r in rows if r.ratio_me0 is not None]
    me = [r.ratio_me for r in rows if r.ratio_me is not None]
    if not me0 or not me:
        raise ValueError("no rows with positive denominators")
    return max(me0), max(me)


def write_rows(rows, path):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")


def rows_to_csv(rows):
    return CSV_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in rows)


def read_rows(path):
    """Reread a sweep CSV into lightweight SweepRow records (no reports)."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header}")
        for line in fh:
            cells = line.strip().split(",")
            if not cells or cells == [""]:
                continue
            kind, k, h = cells[0], int(cells[1]), float(cells[2])
            dnu, l1_omega, l1_gamma = (float(cells[i]) for i in (6, 7, 8))
            me0 = None if cells[9] == "na" else float(cells[9])
            me = None if cells[10] == "na" else float(cells[10])
            rows.append(SweepRow(kind, k, h, dnu, l1_gamma, l1_omega,
                                 me0, me, report=None))
    return rows
