"""Command-line harness.

Subcommands: mesh, solve, kernel, barrier, sweep, fit.  Options may come
from a config file (JSON or key=value lines) with explicit flags taking
precedence.  Exit codes: 0 all certifications passed, 2 a certified
inequality failed, 1 runtime error.
"""

import argparse
import json
import sys

import numpy as np

from . import barrier as barrier_mod
from . import experiments, functionals, kernels, mesh as mesh_mod
from .solver import assemble_system, solve_dirichlet

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CERT_FAILED = 2


class _Parser(argparse.ArgumentParser):
    # usage errors are runtime errors (exit 1); 2 is reserved for failed
    # certifications
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_RUNTIME, f"{self.prog}: error: {message}\n")


def _parse_scalar(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    return text.strip()


def load_config(path):
    """Read a JSON or key=value config file into a flat dict."""
    with open(path) as fh:
        body = fh.read()
    if body.lstrip().startswith("{"):
        raw = json.loads(body)
    else:
        raw = {}
        for line in body.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, value = line.split("=", 1)
            raw[key.strip()] = _parse_scalar(value)
    out = {}
    for key, value in raw.items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            value = str(value)
        out[key.replace("-", "_")] = value
    return out


def _int_list(text):
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _str_list(text):
    return [tok.strip() for tok in str(text).split(",") if tok.strip()]


class Certifications:
    """Collects named pass/fail checks and prints one line each."""

    def __init__(self):
        self.failed = []

    def check(self, name, passed, detail=""):
        tag = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"[{tag}] {name}{suffix}")
        if not passed:
            self.failed.append(name)

    @property
    def exit_code(self):
        return EXIT_CERT_FAILED if self.failed else EXIT_OK


def _solve_one(kind, k, target_h, rel_tol):
    mesh = mesh_mod.generate_disk_mesh(target_h)
    field = experiments.build_field(kind)
    system = assemble_system(mesh, field, None, experiments.boundary_data(k))
    return mesh, field, solve_dirichlet(system, rel_tol)


def cmd_mesh(args):
    mesh = mesh_mod.generate_disk_mesh(args.target_h)
    mesh_mod.write_mesh(mesh, args.output)
    print(f"wrote {mesh.num_vertices} vertices, {mesh.num_triangles} "
          f"triangles to {args.output}")
    return EXIT_OK


def cmd_solve(args):
    _, _, sol = _solve_one(args.sigma, args.k, args.target_h, args.rel_tol)
    report = functionals.hopf_report(sol)
    print(functionals.CSV_HEADER)
    print(report.csv_row(args.sigma, args.k, args.target_h))
    if args.solution_out:
        with open(args.solution_out, "w") as fh:
            for i, v in enumerate(sol.nodal_values):
                fh.write(f"{i} {v!r}\n")
    if args.report_out:
        with open(args.report_out, "w") as fh:
            fh.write(functionals.CSV_HEADER + "\n")
            fh.write(report.csv_row(args.sigma, args.k, args.target_h) + "\n")
    certs = Certifications()
    if not report.is_constant:
        certs.check("normal-derivative positivity",
                    report.normal_derivative > 0,
                    f"dnu={report.normal_derivative:g}")
    return certs.exit_code


def cmd_kernel(args):
    mesh = mesh_mod.generate_disk_mesh(args.target_h)
    field = experiments.build_field(args.sigma)
    samples = kernels.select_interior_samples(mesh, min_dist=args.min_dist)
    kernel = kernels.discrete_poisson_kernel(mesh, field, samples,
                                             rel_tol=args.rel_tol,
                                             min_dist=args.min_dist)
    if args.kernel_out:
        kernels.write_kernel_csv(kernel, args.kernel_out)
    if args.bound_report_out:
        kernels.write_bound_report(kernel, args.bound_report_out)

    certs = Certifications()
    row_defect = np.abs(kernel.row_integrals() - 1.0).max()
    certs.check("kernel row stochasticity", row_defect <= 10 * args.rel_tol,
                f"defect={row_defect:.3e}")
    try:
        lo, hi, vk = kernels.kernel_bound_ratios(kernel)
        certs.check("two-sided kernel bound", lo > 0,
                    f"min={lo:.4f} max={hi:.4f} varkappa={vk:.4f}")
    except ValueError as exc:
        certs.check("two-sided kernel bound", False, str(exc))
    return certs.exit_code


def cmd_barrier(args):
    _, _, sol = _solve_one(args.sigma, args.k, args.target_h, args.rel_tol)
    _, idx, _ = functionals.locate_max(sol)
    cert = barrier_mod.barrier_certificate(sol, idx, r=args.r, rho=args.rho)
    print(barrier_mod.CSV_HEADER)
    print(cert.csv_row())
    certs = Certifications()
    certs.check("barrier subsolution", cert.subsolution_min >= -1e-8,
                f"min={cert.subsolution_min:.3e}")
    certs.check("normal-derivative lower bound", cert.ineq1_margin >= -1e-6,
                f"margin={cert.ineq1_margin:.3e}")
    return certs.exit_code


def cmd_sweep(args):
    config = experiments.SweepConfig(
        sigma_kinds=args.sigma_kinds, k_values=args.k_values,
        target_h=args.target_h, rel_tol=args.rel_tol,
        output_path=args.output, with_kernel_checks=args.with_kernel_checks,
        with_barrier=args.with_barrier)
    solutions = {}
    rows = experiments.run_sweep(config, solutions_out=solutions)
    if config.output_path:
        experiments.write_rows(rows, config.output_path)
        print(f"wrote {len(rows)} rows to {config.output_path}")

    certs = Certifications()
    worst_dnu = min(r.dnu for r in rows)
    certs.check("normal-derivative positivity over sweep", worst_dnu > 0,
                f"min dnu={worst_dnu:.3e}")
    c_me0, c_me = experiments.estimate_constant(rows)
    certs.check("empirical constants finite",
                np.isfinite(c_me0) and np.isfinite(c_me),
                f"C_me0={c_me0:.4f} C_me={c_me:.4f}")
    if sum(1 for k in config.k_values if k > 1) >= 4:
        for kind in config.sigma_kinds:
            slope, _, r2 = experiments.fit_convergence(rows, kind,
                                                       include_k1=False)
            print(f"{kind}: slope={slope:.4f} R^2={r2:.6f}")

    if config.with_kernel_checks:
        mesh = next(iter(solutions.values())).mesh
        for kind in config.sigma_kinds:
            field = next(s.field for (sk, _), s in solutions.items() if sk == kind)
            samples = kernels.select_interior_samples(mesh, min_dist=0.1)
            kernel = kernels.discrete_poisson_kernel(mesh, field, samples)
            try:
                lo, _, vk = kernels.kernel_bound_ratios(kernel)
                certs.check(f"kernel bound [{kind}]", lo > 0,
                            f"min={lo:.4f} varkappa={vk:.4f}")
            except ValueError as exc:
                certs.check(f"kernel bound [{kind}]", False, str(exc))
            worst = max(kernels.representation_residual(kernel, s)
                        for (sk, _), s in solutions.items() if sk == kind)
            certs.check(f"representation identity [{kind}]", worst <= 1e-8,
                        f"max residual={worst:.3e}")

    if config.with_barrier:
        for (kind, k), sol in solutions.items():
            _, idx, _ = functionals.locate_max(sol)
            cert = barrier_mod.barrier_certificate(sol, idx)
            ok = cert.subsolution_min >= -1e-8 and cert.ineq1_margin >= -1e-6
            certs.check(f"barrier [{kind}, k={k}]", ok,
                        f"subsol={cert.subsolution_min:.2e} "
                        f"margin={cert.ineq1_margin:.2e}")
    return certs.exit_code


def cmd_fit(args):
    rows = experiments.read_rows(args.input)
    slope, intercept, r2 = experiments.fit_convergence(
        rows, args.sigma, include_k1=not args.exclude_k1)
    print(f"sigma={args.sigma} slope={slope!r} intercept={intercept!r} "
          f"r_squared={r2!r}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="hopflab",
                     description="Hopf boundary-point lemma certification lab")
    parser.add_argument("--config", help="JSON or key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)
    common = {"target_h": 0.05, "rel_tol": 1e-10}

    p = sub.add_parser("mesh", parents=[], help="write a disk mesh file")
    p.add_argument("--target-h", type=float, default=0.1)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("solve", help="solve one BVP and report the functionals")
    p.add_argument("--sigma", default="identity")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--target-h", type=float, default=common["target_h"])
    p.add_argument("--rel-tol", type=float, default=common["rel_tol"])
    p.add_argument("--solution-out")
    p.add_argument("--report-out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("kernel", help="build the Poisson kernel and check bounds")
    p.add_argument("--sigma", default="identity")
    p.add_argument("--target-h", type=float, default=common["target_h"])
    p.add_argument("--rel-tol", type=float, default=1e-12)
    p.add_argument("--min-dist", type=float, default=0.1)
    p.add_argument("--kernel-out")
    p.add_argument("--bound-report-out")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("barrier", help="emit a barrier certificate row")
    p.add_argument("--sigma", default="identity")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=0.25)
    p.add_argument("--target-h", type=float, default=common["target_h"])
    p.add_argument("--rel-tol", type=float, default=common["rel_tol"])
    p.set_defaults(func=cmd_barrier)

    p = sub.add_parser("sweep", help="full boundary-data sweep CSV")
    p.add_argument("--sigma-kinds", type=_str_list,
                   default=list(experiments.BENCHMARK_PRESETS))
    p.add_argument("--k-values", type=_int_list,
                   default=list(experiments.DEFAULT_K_VALUES))
    p.add_argument("--target-h", type=float, default=common["target_h"])
    p.add_argument("--rel-tol", type=float, default=common["rel_tol"])
    p.add_argument("--output")
    p.add_argument("--with-kernel-checks", action="store_true")
    p.add_argument("--with-barrier", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="log-log slope from a sweep CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--exclude-k1", action="store_true")
    p.set_defaults(func=cmd_fit)
    return parser, sub


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    ns, _ = pre.parse_known_args(argv)
    if ns.config:
        overrides = load_config(ns.config)
        for choice in sub.choices.values():
            known = {a.dest for a in choice._actions}
            choice.set_defaults(**{k: v for k, v in overrides.items()
                                   if k in known})

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits; keep --help at 0
        return exc.code if isinstance(exc.code, int) else EXIT_RUNTIME
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_RUNTIME
    except Exception as exc:  # runtime errors map to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
