"""Machine-readable report records and the human tables rendered from them.

A record is one line of tab-separated ``key=value`` fields whose first
field is ``record=<kind>``.  Floats are written with ``repr`` so they parse
back to the identical value; missing values are ``NA``; booleans are
``true``/``false``.  Lines starting with ``#`` are comments.
"""

import math

import numpy as np

__all__ = [
    "format_record",
    "parse_records",
    "format_records",
    "diagnosis_records",
    "mc_records",
    "render_diagnosis",
    "render_mc",
]

NA = "NA"
_FORBIDDEN = ("\t", "\n", "\r")


def _fmt(v):
    if v is None:
        return NA
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    s = str(v)
    if any(c in s for c in _FORBIDDEN) or s == NA:
        raise ValueError(f"value {s!r} cannot be written to a record")
    return s


def _parse(s):
    if s == NA:
        return None
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def format_record(kind, fields):
    """One record line (without newline)."""
    parts = [f"record={_fmt(kind)}"]
    for key, val in fields.items():
        if "=" in key or any(c in key for c in _FORBIDDEN) or key == "record":
            raise ValueError(f"invalid key {key!r}")
        parts.append(f"{key}={_fmt(val)}")
    return "\t".join(parts)


def format_records(records):
    """Serialize ``(kind, fields)`` pairs, one per line."""
    return "".join(format_record(kind, fields) + "\n" for kind, fields in records)


def parse_records(text):
    """Inverse of :func:`format_records`: a list of ``(kind, fields)`` pairs."""
    out = []
    # only "\n" ends a record; str.splitlines would also break on \x1e, \x85, ...
    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.removesuffix("\r")
        if not line.strip() or line.startswith("#"):
            continue
        fields = {}
        for part in line.split("\t"):
            if "=" not in part:
                raise ValueError(f"line {lineno}: field {part!r} lacks '='")
            key, val = part.split("=", 1)
            fields[key] = _parse(val)
        if "record" not in fields:
            raise ValueError(f"line {lineno}: first field must be record=<kind>")
        kind = str(fields.pop("record"))
        out.append((kind, fields))
    return out


def _test_fields(r):
    level = None
    decision = None
    if r.reject_at:
        level, decision = next(iter(r.reject_at.items()))
    crit = None
    if r.critical_value:
        crit = r.critical_value.get(level, next(iter(r.critical_value.values())))
    return {
        "m": r.m,
        "method": r.method,
        "status": r.status,
        "statistic": r.statistic,
        "p_value": r.p_value,
        "critical_value": crit,
        "df": r.df,
        "level": level,
        "reject": decision,
        "message": r.message.replace("\t", " ") if r.message else None,
    }


def diagnosis_records(rep, names=None):
    """Records for a :class:`~wfarima.diagnose.DiagnosisReport`."""
    f = rep.fit
    theta = f.theta_hat
    if names is None:
        names = [f"ar{i}" for i in range(1, theta.p + 1)] + [f"ma{j}" for j in range(1, theta.q + 1)] + ["d"]
    recs = [("fit", {
        "n": f.n, "p": theta.p, "q": theta.q, "sigma2": f.sigma2_hat, "converged": f.converged,
        "iterations": f.iterations, "grad_norm": f.grad_norm, "var_order": rep.ar_order,
    })]
    for name, val, se, pv in zip(names, theta.as_vector(), rep.std_errors, rep.param_p_values):
        recs.append(("param", {"name": name, "estimate": float(val), "std_error": float(se),
                               "p_value": float(pv)}))
    for r in rep.tests:
        recs.append(("test", _test_fields(r)))
    b = rep.bands
    for i, lag in enumerate(b.lags):
        recs.append(("acf", {"lag": int(lag), "rho": float(b.rho[i]), "band_strong": float(b.strong[i]),
                             "band_weak": float(b.weak[i]), "band_sn": float(b.sn[i]), "level": b.level}))
    for w in rep.warnings:
        recs.append(("warning", {"message": w.replace("\t", " ")}))
    return recs


def mc_records(result):
    """Records for a :class:`~wfarima.montecarlo.McResult`: one per (n, m, method)."""
    cfg = result.config
    th = cfg.theta_true
    recs = [("mc", {
        "reps": cfg.n_reps, "seed": cfg.seed, "level": cfg.level, "noise": cfg.noise.family,
        "omega": cfg.noise.omega, "alpha1": cfg.noise.alpha1, "beta1": cfg.noise.beta1,
        "true_ar": ",".join(repr(v) for v in th.ar) or None,
        "true_ma": ",".join(repr(v) for v in th.ma) or None,
        "d0": th.d, "fit_p": cfg.fit_p, "fit_q": cfg.fit_q,
    })]
    for n, k in result.fit_failures.items():
        recs.append(("fit_failures", {"n": n, "count": k}))
    for c in result.cells:
        recs.append(("cell", {
            "n": c.n, "m": c.m, "method": c.method, "rejections": c.rejections, "valid": c.valid,
            "failures": c.failures, "frequency": c.frequency if c.valid else None,
            "band_lo": float(c.band[0]), "band_hi": float(c.band[1]), "flagged": c.flagged,
        }))
    return recs


def _num(v, fmt="{:.4f}"):
    if v is None:
        return "n.a."
    if isinstance(v, float) and math.isnan(v):
        return "failed"
    return fmt.format(v)


def render_diagnosis(records):
    """Human-readable tables built from diagnosis records."""
    lines = []
    params = [f for k, f in records if k == "param"]
    fit = next((f for k, f in records if k == "fit"), None)
    if fit:
        lines.append(f"FARIMA({fit['p']},d,{fit['q']}) fit on n={fit['n']}: sigma2={fit['sigma2']:.6g}, "
                     f"converged={fit['converged']}, VAR order={fit['var_order']}")
    if params:
        lines.append("parameter  estimate  (std. error)  p-value")
        for f in params:
            lines.append(f"{f['name']:<9} {f['estimate']:9.4f}  ({f['std_error']:.4f})  {f['p_value']:.4f}")
    tests = [f for k, f in records if k == "test"]
    if tests:
        ms = sorted({f["m"] for f in tests})
        by = {(f["m"], f["method"]): f for f in tests}
        lines.append("")
        lines.append("m    p_LB_W  p_BP_W  p_LB_S  p_BP_S    Q_LB_SN     Q_BP_SN   crit_SN")
        for m in ms:
            def pv(meth):
                f = by.get((m, meth))
                if f is None or f["status"] == "n.a.":
                    return "n.a."
                if f["status"] == "failed":
                    return "failed"
                return f"{f['p_value']:.4f}"

            def sn(meth):
                f = by.get((m, meth))
                if f is None or f["status"] != "ok":
                    return "failed"
                mark = "*" if f["reject"] else " "
                return f"{f['statistic']:.3f}{mark}"

            crit = by.get((m, "bp_sn"), {}).get("critical_value")
            lines.append(f"{m:<4} {pv('lb_weak'):>7} {pv('bp_weak'):>7} {pv('lb_standard'):>7} "
                         f"{pv('bp_standard'):>7} {sn('lb_sn'):>10} {sn('bp_sn'):>11}  {_num(crit, '{:.3f}'):>8}")
        lines.append("(* = self-normalized statistic exceeds its critical value)")
    acfs = [f for k, f in records if k == "acf"]
    if acfs:
        lines.append("")
        lines.append("lag    rho    strong    weak      sn")
        for f in acfs:
            lines.append(f"{f['lag']:<4} {f['rho']:7.4f} {f['band_strong']:7.4f} {f['band_weak']:7.4f} "
                         f"{f['band_sn']:7.4f}")
    for k, f in records:
        if k == "warning":
            lines.append(f"warning: {f['message']}")
    return "\n".join(lines) + "\n"


MC_COLUMNS = ("lb_sn", "bp_sn", "lb_weak", "bp_weak", "lb_standard", "bp_standard")


def render_mc(records):
    """Rejection percentages, one row per (n, m); ``!`` marks cells outside the band."""
    cells = [f for k, f in records if k == "cell"]
    head = next((f for k, f in records if k == "mc"), None)
    lines = []
    if head:
        lines.append(f"noise={head['noise']} d0={head['d0']} reps={head['reps']} level={head['level']} "
                     f"seed={head['seed']}")
    lines.append("n       m   " + "".join(f"{c:>13}" for c in MC_COLUMNS))
    by = {(f["n"], f["m"], f["method"]): f for f in cells}
    for n, m in sorted({(f["n"], f["m"]) for f in cells}):
        row = f"{n:<7} {m:<3} "
        for c in MC_COLUMNS:
            f = by.get((n, m, c))
            if f is None or f["frequency"] is None:
                row += f"{'n.a.':>13}"
            else:
                mark = "!" if f["flagged"] else " "
                row += f"{100 * f['frequency']:>12.1f}{mark}"
        lines.append(row)
    lines.append("(! = outside the binomial 95% band around the nominal level)")
    return "\n".join(lines) + "\n"
