"""Command-line interface.

Series files hold one decimal value per line; blank lines and ``#``
comments are skipped.  Reports are tab-separated ``key=value`` records (see
:mod:`wfarima.report`); the human table on stdout is rendered from them, and
a PNG figure is written next to the ``--out`` file unless ``--no-figure``.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import lobato
from .diagnose import diagnose
from .estimate import fit as fit_model
from .model import FarimaParams, simulate
from .montecarlo import FARIMA_BURN, McConfig, run_mc
from .noise import NoiseSpec, generate, make_rng
from .report import (
    diagnosis_records,
    format_records,
    mc_records,
    render_diagnosis,
    render_mc,
)

__all__ = ["main", "read_series", "ingest", "build_parser"]

log = logging.getLogger("wfarima")

NOISE_FAMILIES = {"gaussian": "iid_gaussian", "garch": "garch11", "etaprod": "eta_product"}


class CliError(Exception):
    pass


def read_series(path):
    """Values from a one-per-line text file; reports every bad line number."""
    values, bad = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            try:
                v = float(s)
            except ValueError:
                bad.append(lineno)
                continue
            if not np.isfinite(v):
                bad.append(lineno)
                continue
            values.append(v)
    if bad:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise CliError(f"{path}: non-numeric values on line(s) {shown}")
    return np.array(values)


def write_series(values, path):
    text = "".join(f"{v!r}\n" for v in map(float, values))
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def ingest(values, mode):
    """Apply ``raw``, ``returns`` (``100 log(p_t / p_{t-1})``) or ``squared_centered``."""
    values = np.asarray(values, dtype=float)
    if mode == "raw":
        return values
    if mode in ("returns", "squared_centered"):
        if values.size < 2:
            raise CliError("returns need at least two prices")
        if np.any(values <= 0):
            idx = int(np.flatnonzero(values <= 0)[0])
            raise CliError(f"non-positive price at data row {idx + 1}")
        r = 100.0 * np.diff(np.log(values))
        if mode == "returns":
            return r
        r2 = r * r
        return r2 - r2.mean()
    raise CliError(f"unknown mode {mode!r}")


def _floats(s):
    if s is None or s == "":
        return ()
    return tuple(float(v) for v in s.split(","))


def _ints(s):
    return tuple(int(v) for v in s.split(","))


def _noise(args, seed=0):
    return NoiseSpec(family=NOISE_FAMILIES[args.noise], omega=args.omega, alpha1=args.alpha1,
                     beta1=args.beta1, seed=seed)


def _ar_order(s):
    return "auto" if s == "auto" else int(s)


def _write_report(records, out, render, figure, plot):
    sys.stdout.write(render(records))
    if out:
        out = Path(out)
        out.write_text(format_records(records), encoding="utf-8")
        if figure:
            plot(records, out.with_suffix(".png"))


def cmd_ingest(args):
    write_series(ingest(read_series(args.path), args.mode), args.out)


def cmd_simulate(args):
    theta = FarimaParams(ar=_floats(args.ar), ma=_floats(args.ma), d=args.d)
    eps = generate(_noise(args), args.n + args.burn, rng=make_rng(args.seed))
    write_series(simulate(theta, eps, burn=args.burn), args.out)


def cmd_fit(args):
    x = read_series(args.path)
    f = fit_model(x, args.p, args.q, d_bounds=(args.d_min, args.d_max))
    th = f.theta_hat
    rec = {"n": f.n, "p": th.p, "q": th.q, "sigma2": f.sigma2_hat, "converged": f.converged,
           "iterations": f.iterations, "grad_norm": f.grad_norm}
    for i, v in enumerate(th.ar, 1):
        rec[f"ar{i}"] = v
    for j, v in enumerate(th.ma, 1):
        rec[f"ma{j}"] = v
    rec["d"] = th.d
    text = format_records([("fit", rec)])
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_diagnose(args):
    from .plotting import plot_acf_bands

    x = read_series(args.path)
    table = lobato.load_table(args.lobato) if args.lobato else None
    rep = diagnose(x, args.p, args.q, args.m_max, args.level, _ar_order(args.ar_order),
                   (args.d_min, args.d_max), table)
    for w in rep.warnings:
        log.warning(w)
    _write_report(diagnosis_records(rep), args.out, render_diagnosis, not args.no_figure, plot_acf_bands)


def _mc(args, theta_true, fit_p, fit_q):
    from .plotting import plot_mc

    cfg = McConfig(theta_true=theta_true, noise=_noise(args), n_list=_ints(args.n), m_list=_ints(args.m),
                   n_reps=args.reps, level=args.level, seed=args.seed, fit_p=fit_p, fit_q=fit_q,
                   burn=args.burn, ar_order=_ar_order(args.ar_order), d_bounds=(args.d_min, args.d_max))
    table = lobato.load_table(args.lobato) if args.lobato else None
    res = run_mc(cfg, workers=args.workers, table=table)
    _write_report(mc_records(res), args.out, render_mc, not args.no_figure, plot_mc)


def cmd_mc_size(args):
    theta = FarimaParams(ar=_floats(args.ar), ma=_floats(args.ma), d=args.d0)
    _mc(args, theta, theta.p, theta.q)


def cmd_mc_power(args):
    theta = FarimaParams(ar=_floats(args.true_ar), ma=_floats(args.true_ma), d=args.d0)
    _mc(args, theta, args.p, args.q)


def cmd_lobato(args):
    table = lobato.generate_table(args.k_max, args.paths, args.steps, args.seed, _floats(args.levels),
                                  workers=args.workers)
    if args.out:
        lobato.save_table(table, args.out)
    sys.stdout.write(lobato.format_table(table))


def _add_noise(p):
    p.add_argument("--noise", choices=sorted(NOISE_FAMILIES), default="gaussian")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--alpha1", type=float, default=0.0)
    p.add_argument("--beta1", type=float, default=0.0)


def _add_bounds(p):
    p.add_argument("--d-min", type=float, default=-0.49)
    p.add_argument("--d-max", type=float, default=0.49)


def _add_mc(p):
    _add_noise(p)
    _add_bounds(p)
    p.add_argument("--d0", type=float, default=0.2, help="true long-memory parameter")
    p.add_argument("--n", default="1000", help="comma-separated sample sizes")
    p.add_argument("--m", default="1,2,3,6,12,15", help="comma-separated lags")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn", type=int, default=FARIMA_BURN)
    p.add_argument("--ar-order", default="auto", help="VAR order for the spectral estimator, or 'auto'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lobato", help="critical-value table file (default: packaged table)")
    p.add_argument("--out")
    p.add_argument("--no-figure", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="wfarima", description="FARIMA diagnostics under weak white noise")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="turn prices into returns or centered squared returns")
    p.add_argument("path")
    p.add_argument("--mode", choices=("raw", "returns", "squared_centered"), default="raw")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("simulate", help="simulate a FARIMA series")
    p.add_argument("--ar", default="", help="comma-separated AR coefficients")
    p.add_argument("--ma", default="", help="comma-separated MA coefficients")
    p.add_argument("--d", type=float, default=0.2)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--burn", type=int, default=FARIMA_BURN)
    p.add_argument("--seed", type=int, default=0)
    _add_noise(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="least squares fit")
    p.add_argument("path")
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--q", type=int, default=0)
    _add_bounds(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="fit and run all portmanteau tests")
    p.add_argument("path")
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--q", type=int, default=0)
    _add_bounds(p)
    p.add_argument("--m-max", type=int, default=12)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--ar-order", default="auto")
    p.add_argument("--lobato")
    p.add_argument("--out")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("mc-size", help="empirical size table")
    p.add_argument("--ar", default="")
    p.add_argument("--ma", default="")
    _add_mc(p)
    p.set_defaults(func=cmd_mc_size)

    p = sub.add_parser("mc-power", help="empirical power table")
    p.add_argument("--true-ar", default="")
    p.add_argument("--true-ma", default="0.2")
    p.add_argument("--p", type=int, default=0, help="fitted AR order")
    p.add_argument("--q", type=int, default=0, help="fitted MA order")
    _add_mc(p)
    p.set_defaults(func=cmd_mc_power)

    p = sub.add_parser("lobato-table", help="simulate critical values of U_K")
    p.add_argument("--k-max", type=int, default=lobato.DEFAULT_K_MAX)
    p.add_argument("--paths", type=int, default=lobato.DEFAULT_PATHS)
    p.add_argument("--steps", type=int, default=lobato.DEFAULT_STEPS)
    p.add_argument("--seed", type=int, default=lobato.DEFAULT_SEED)
    p.add_argument("--levels", default="0.9,0.95,0.99")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lobato)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except (CliError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
