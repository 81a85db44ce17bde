"""Figures rendered from report records (never from live objects)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_acf_bands", "plot_mc"]

# PNG metadata carries the matplotlib version by default; drop it so that
# identical inputs give identical files
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def plot_acf_bands(records, path):
    """Residual ACF bars with strong, weak and self-normalized bands."""
    acfs = [f for k, f in records if k == "acf"]
    if not acfs:
        raise ValueError("no acf records to plot")
    lag = np.array([f["lag"] for f in acfs])
    rho = np.array([f["rho"] for f in acfs])
    level = acfs[0]["level"]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.vlines(lag, 0, rho, color="k", lw=2)
    ax.axhline(0, color="k", lw=0.5)
    styles = (("band_strong", "strong", "tab:blue", "--"),
              ("band_weak", "weak", "tab:red", "-"),
              ("band_sn", "self-normalized", "tab:green", ":"))
    for key, label, color, ls in styles:
        b = np.array([f[key] for f in acfs])
        ax.step(lag, b, where="mid", color=color, ls=ls, label=label)
        ax.step(lag, -b, where="mid", color=color, ls=ls)
    ax.set_xlabel("lag")
    ax.set_ylabel("residual autocorrelation")
    ax.set_title(f"{100 * level:g}% significance limits")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_mc(records, path):
    """Rejection frequency against m, one line per method and sample size."""
    cells = [f for k, f in records if k == "cell" and f["frequency"] is not None]
    if not cells:
        raise ValueError("no cell records to plot")
    head = next((f for k, f in records if k == "mc"), {})
    fig, ax = plt.subplots(figsize=(7, 4))
    for n in sorted({c["n"] for c in cells}):
        for meth in sorted({c["method"] for c in cells}):
            pts = sorted((c["m"], 100 * c["frequency"]) for c in cells if c["n"] == n and c["method"] == meth)
            if pts:
                m, f = zip(*pts)
                ax.plot(m, f, marker="o", ms=3, label=f"{meth} n={n}")
    lo = cells[0]["band_lo"]
    hi = cells[0]["band_hi"]
    if "level" in head:
        ax.axhline(100 * head["level"], color="k", lw=0.5)
    ax.axhspan(100 * lo, 100 * hi, color="0.9", zorder=0)
    ax.set_xlabel("m")
    ax.set_ylabel("rejection frequency (%)")
    ax.legend(frameon=False, fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, path)
