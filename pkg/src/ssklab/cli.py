"""Command-line front end: ``ssklab <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 runtime or
numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolve import Spectrum, eigenvalues_dense
from .errors import InvalidArgumentError, InvalidDimensionError, SSKError
from .fluctuations import (
    ENSEMBLES,
    ExperimentManifest,
    beta_from_alpha,
    load_reference_table,
    resolve_threads,
    run_experiment,
    sample_spectrum,
)
from .free_energy import free_energy, integrand_profile, sphere_mc_free_energy, trace_descent_contour
from .persistence import RunArtifact, summarize, write_run_artifact
from .saddle import find_saddle
from .sampling import SeedSpec, sample_goe_dense
from .spectral import rigidity_report

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_csv(path, header, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _check_n(n):
    if n < 2:
        raise UsageError(f"--n must be at least 2, got {n}")


def _betas(args, n):
    """Inverse temperatures for dimension n from --beta or --alpha."""
    if args.beta is not None:
        if any(not b > 0 for b in args.beta):
            raise UsageError("--beta values must be positive")
        return list(args.beta)
    if n < 2:
        raise UsageError("--alpha needs n >= 2")
    out = [beta_from_alpha(a, n) for a in args.alpha]
    if any(not b > 0 for b in out):
        raise UsageError("--alpha gives a non-positive beta at this n")
    return out


def _check_samples(args):
    if args.samples < 1:
        raise UsageError(f"--samples must be at least 1, got {args.samples}")


def cmd_sample(args) -> int:
    _check_n(args.n)
    _check_samples(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(args.samples):
        s = sample_spectrum(args.n, SeedSpec(args.seed, i), args.ensemble)
        path = out / f"spectrum_{i:05d}.txt"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# n={args.n} seed={args.seed} sample_index={i} ensemble={args.ensemble}\n")
            fh.writelines(format(float(x), ".17g") + "\n" for x in s.eigenvalues)
        r = rigidity_report(s)
        rows.append([i, s.lambda1, r.f_xi_ok, r.g_ka_ok, r.s_b_ok, r.j_d_ok, r.worst_f_xi_index,
                     r.worst_f_xi_ratio, r.lambda1_scaled, r.gap_value, r.j_d_value])
    _write_csv(out / "rigidity.csv",
               ["sample_index", "lambda1", "f_xi_ok", "g_ka_ok", "s_b_ok", "j_d_ok", "worst_f_xi_index",
                "worst_f_xi_ratio", "lambda1_scaled", "gap_value", "j_d_value"], rows)
    print(f"wrote {args.samples} spectra to {out}", file=sys.stderr)
    return EXIT_OK


def _load_spectrum(path) -> Spectrum:
    vals = np.loadtxt(path, comments="#", ndmin=1)
    return Spectrum(vals)


def cmd_free_energy(args) -> int:
    _check_samples(args)
    if args.budget is not None and not args.budget > 0:
        raise UsageError("--budget must be positive")
    budget = args.budget or 1e-9
    header = ["n", "sample_index", "beta", "f_n", "prefactor_log", "g_saddle_half_n", "contour_log",
              "gamma", "delta", "saddle_residual", "quad_points"]
    if args.oracle:
        header += ["mc_estimate", "mc_standard_error"]
    rows = []
    if args.spectrum_file or args.zero:
        if args.zero:
            _check_n(args.n)
            cases = [(Spectrum(np.zeros(args.n)), None)]
        else:
            cases = [(_load_spectrum(args.spectrum_file), None)]
        if args.oracle:
            raise UsageError("--oracle needs sampled matrices, not --zero or --spectrum-file")
    else:
        _check_n(args.n)
        if args.oracle:
            mats = [sample_goe_dense(args.n, SeedSpec(args.seed, i)) for i in range(args.samples)]
            cases = [(eigenvalues_dense(m), m) for m in mats]
        else:
            cases = [(sample_spectrum(args.n, SeedSpec(args.seed, i), args.ensemble), None)
                     for i in range(args.samples)]
    for idx, (s, mat) in enumerate(cases):
        for beta in _betas(args, s.n):
            fe = free_energy(s, beta, budget)
            row = [s.n, idx, beta, fe.f_n, fe.prefactor_log, fe.g_saddle_half_n, fe.contour_log,
                   fe.saddle.gamma, fe.saddle.delta, fe.saddle.residual, fe.quad.points_used]
            if args.oracle:
                est, se = sphere_mc_free_energy(mat, beta, args.oracle_draws, SeedSpec(args.seed, 1_000_000 + idx))
                row += [est, se]
            rows.append(row)
    _write_csv(args.output, header, rows)
    return EXIT_OK


def cmd_fluctuations(args) -> int:
    _check_samples(args)
    if any(n < 3 for n in args.n):
        raise UsageError("every --n must be at least 3")
    if args.budget is not None and not args.budget > 0:
        raise UsageError("--budget must be positive")
    threads = resolve_threads(args.threads)
    table = load_reference_table(args.tw_table) if args.tw_table else None
    man = ExperimentManifest(
        base_seed=args.seed,
        n_grid=tuple(sorted(set(args.n))),
        m_samples=args.samples,
        betas=tuple(args.beta) if args.beta is not None else None,
        alphas=tuple(args.alpha) if args.alpha is not None else None,
        q_list=tuple(args.q),
        ensemble=args.ensemble,
        budget=args.budget or 1e-9,
        output=str(args.output),
    )
    records = list(run_experiment(man, threads=threads))
    art = RunArtifact(manifest=man, records=records, summary=summarize(records, table))
    write_run_artifact(args.output, art)
    print(f"wrote {len(records)} records ({art.error_count} failed) to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    table = load_reference_table(args.tw_table) if args.tw_table else None
    results = run_checks(args.tier, table=table, report=lambda r: print(r.line(), flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


def cmd_contour(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be positive")
    if args.zero:
        _check_n(args.n)
        s = Spectrum(np.zeros(args.n))
    else:
        _check_n(args.n)
        s = sample_spectrum(args.n, SeedSpec(args.seed, args.sample_index), args.ensemble)
    beta = _betas(args, s.n)[0]
    sad = find_saddle(s, beta)
    max_eta = args.max_eta
    if max_eta is not None and not 0 < max_eta < math.pi / beta:
        raise UsageError(f"--max-eta must lie in (0, pi/beta = {math.pi / beta:.6g})")
    poly = trace_descent_contour(s, beta, sad, args.points, max_eta, geometric=args.geometric)
    _write_csv(args.output, ["E", "eta", "reG", "imG"], zip(poly.E, poly.eta, poly.re_g, poly.im_g))
    if args.profile:
        width = 1.0 / math.sqrt(s.n * sad.g2)
        t = np.linspace(0.0, 8.0 * width, args.points)
        vals = integrand_profile(s, beta, sad, t)
        _write_csv(args.profile, ["t", "re", "im", "abs"], zip(t, vals.real, vals.imag, np.abs(vals)))
    return EXIT_OK


def _add_common(p, beta=True, multi=False):
    p.add_argument("--n", type=int, nargs="+" if multi else None, required=multi, default=None if multi else 1000,
                   help="matrix dimension" + ("(s)" if multi else ""))
    p.add_argument("--seed", type=int, default=1, help="base seed (default 1)")
    p.add_argument("--ensemble", choices=ENSEMBLES, default="tridiagonal")
    if beta:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--beta", type=float, nargs="+", help="inverse temperature(s)")
        g.add_argument("--alpha", type=float, nargs="+",
                       help="critical-window coordinate(s): beta = 1 + alpha sqrt(log n) n^(-1/3)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ssklab", description="Free energy of the spherical SK model.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample spectra and rigidity reports")
    _add_common(p, beta=False)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--output", default="spectra", help="output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("free-energy", help="free energy breakdown per sample")
    _add_common(p)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--budget", type=float, default=None, help="error budget on log I (default 1e-9)")
    p.add_argument("--zero", action="store_true", help="use the zero coupling matrix")
    p.add_argument("--spectrum-file", help="read eigenvalues (one per line) instead of sampling")
    p.add_argument("--oracle", action="store_true", help="compare with sphere Monte Carlo (n <= 12)")
    p.add_argument("--oracle-draws", type=int, default=1_000_000)
    p.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    p.set_defaults(func=cmd_free_energy)

    p = sub.add_parser("fluctuations", help="run a Monte Carlo experiment into a run directory")
    _add_common(p, multi=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--q", type=float, nargs="+", default=[5.0])
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--tw-table", help="Tracy-Widom quantile table (CSV level,value)")
    p.add_argument("--threads", type=int, default=None, help="workers; 0 = all cores (default $SSKLAB_THREADS or 1)")
    p.add_argument("--output", required=True, help="run directory")
    p.set_defaults(func=cmd_fluctuations)

    p = sub.add_parser("verify", help="run acceptance checks")
    p.add_argument("--tier", choices=("quick", "full"), default="quick")
    p.add_argument("--tw-table", help="Tracy-Widom quantile table (CSV level,value)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("contour", help="steepest-descent contour and integrand profile as CSV")
    _add_common(p)
    p.add_argument("--sample-index", type=int, default=0)
    p.add_argument("--zero", action="store_true", help="use the zero coupling matrix")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--max-eta", type=float, default=None)
    p.add_argument("--geometric", action="store_true", help="geometric grid in eta")
    p.add_argument("--profile", help="also write the integrand on the vertical line to this CSV")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_contour)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidArgumentError, InvalidDimensionError) as exc:
        parser.print_usage(sys.stderr)
        print(f"ssklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SSKError, ArithmeticError, OSError) as exc:
        print(f"ssklab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
