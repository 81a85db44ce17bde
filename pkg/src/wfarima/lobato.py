"""Simulated critical values of the self-normalized limit ``U_K``.

``U_K = B(1)' V^{-1} B(1)`` with ``B`` a K-dimensional standard Brownian motion
and ``V = int_0^1 (B(r) - r B(1)) (B(r) - r B(1))' dr``.

Paths are discretized on a uniform grid.  The increments of coordinate ``j``
in batch ``b`` come from their own counter-keyed stream, so the first ``K``
coordinates of a path do not depend on ``k_max`` and the output does not
depend on how batches are spread over workers.  A single Cholesky factor
``V = L L'`` per path gives every ``U_K``, ``K <= k_max``, at once: with
``y = L^{-1} B(1)``, ``U_K = y_1^2 + ... + y_K^2``, because the leading
``K x K`` block of ``L`` is the Cholesky factor of the leading block of ``V``.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "LobatoTable",
    "u_from_increments",
    "simulate_u_all",
    "simulate_u_k",
    "generate_table",
    "critical_value",
    "save_table",
    "load_table",
    "load_or_generate",
    "default_table",
    "DEFAULT_SEED",
]

log = logging.getLogger(__name__)

DEFAULT_K_MAX = 20
DEFAULT_PATHS = 200_000
DEFAULT_STEPS = 2000
DEFAULT_LEVELS = (0.90, 0.95, 0.99)
DEFAULT_SEED = 20240607
BATCH = 250
FORMAT_VERSION = 1
_PACKAGED = "lobato_K20_P200000_N2000_S20240607.txt"


@dataclass(frozen=True)
class LobatoTable:
    """Quantiles of ``U_K`` for ``K = 1..k_max`` at the given probabilities.

    ``quantiles[K - 1, i]`` is the ``levels[i]`` quantile of ``U_K``, rounded
    to 6 significant digits so that a table and its file agree exactly.
    """

    k_max: int
    levels: tuple
    quantiles: np.ndarray
    n_paths: int
    n_steps: int
    seed: int
    n_singular: int = 0

    @property
    def key(self):
        return (self.k_max, self.n_paths, self.n_steps, self.seed)


def u_from_increments(increments):
    """``U_K`` for all ``K`` from Brownian increments.

    Parameters
    ----------
    increments : ndarray, shape (paths, n_steps, k_max)

    Returns
    -------
    u : ndarray, shape (paths, k_max)
        ``NaN`` rows mark paths whose ``V`` is not positive definite.
    """
    inc = np.asarray(increments)
    return _u_from_coord_major(np.transpose(inc, (2, 0, 1)))


def _u_from_coord_major(inc, scale=1.0):
    # inc has shape (k, paths, n_steps)
    k, paths, n_steps = inc.shape
    b = np.cumsum(inc, axis=2, dtype=np.float64)
    if scale != 1.0:
        b *= scale
    end = b[:, :, -1].T
    r = np.arange(1, n_steps + 1) / n_steps
    # int (B - rB(1))(B - rB(1))' dr expanded so the bridge is never formed
    bt = b.transpose(1, 0, 2)
    sbb = np.matmul(bt, bt.transpose(0, 2, 1))
    mr = (b @ r).T
    cross = mr[:, :, None] * end[:, None, :]
    v = (sbb - cross - cross.transpose(0, 2, 1) + (r @ r) * end[:, :, None] * end[:, None, :]) / n_steps
    out = np.full((paths, k), np.nan)
    try:
        chol = np.linalg.cholesky(v)
        good = np.ones(paths, dtype=bool)
    except np.linalg.LinAlgError:
        chol = np.zeros_like(v)
        good = np.zeros(paths, dtype=bool)
        for i in range(paths):
            try:
                chol[i] = np.linalg.cholesky(v[i])
                good[i] = True
            except np.linalg.LinAlgError:
                pass
    for i in np.flatnonzero(good):
        y = solve_triangular(chol[i], end[i], lower=True, check_finite=False)
        out[i] = np.cumsum(y * y)
    return out


def _stream(seed, coord, batch, attempt):
    ss = np.random.SeedSequence([int(seed), int(coord), int(batch), int(attempt)])
    return np.random.Generator(np.random.Philox(ss))


def _batch_u(k_max, size, n_steps, seed, batch, attempt):
    inc = np.empty((k_max, size, n_steps), dtype=np.float32)
    for j in range(k_max):
        inc[j] = _stream(seed, j, batch, attempt).standard_normal((size, n_steps), dtype=np.float32)
    # increments have variance 1/n_steps
    return _u_from_coord_major(inc, scale=1.0 / np.sqrt(n_steps))


def _simulate_batch(args):
    k_max, size, n_steps, seed, batch = args
    u = _batch_u(k_max, size, n_steps, seed, batch, 0)
    bad = np.isnan(u[:, 0])
    n_bad = int(bad.sum())
    attempt = 0
    while bad.any():
        attempt += 1
        if attempt > 100:
            raise np.linalg.LinAlgError("could not draw a non-singular V")
        redo = _batch_u(k_max, int(bad.sum()), n_steps, seed, batch, attempt)
        u[bad] = redo
        still = np.isnan(redo[:, 0])
        n_bad += int(still.sum())
        bad[bad] = still
    return u, n_bad


def simulate_u_all(k_max, n_paths, n_steps, seed, workers=1):
    """Draws of ``(U_1, ..., U_kmax)`` from ``n_paths`` simulated paths.

    Returns
    -------
    draws : ndarray, shape (n_paths, k_max)
    n_singular : int
        Paths redrawn because ``V`` was singular.
    """
    k_max, n_paths, n_steps = int(k_max), int(n_paths), int(n_steps)
    if k_max < 1:
        raise ValueError("k must be >= 1")
    if n_steps < 100:
        raise ValueError("n_steps must be >= 100")
    if n_paths < 1000:
        raise ValueError("n_paths must be >= 1000")
    jobs = []
    for b, start in enumerate(range(0, n_paths, BATCH)):
        jobs.append((k_max, min(BATCH, n_paths - start), n_steps, seed, b))
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_simulate_batch, jobs))
    else:
        results = [_simulate_batch(j) for j in jobs]
    draws = np.vstack([r[0] for r in results])
    n_singular = sum(r[1] for r in results)
    if n_singular:
        log.warning("%d singular V draws were redrawn", n_singular)
    return draws, n_singular


def simulate_u_k(k, n_paths, n_steps, seed, workers=1):
    """Draws of ``U_k`` alone (the ``k``-th column of :func:`simulate_u_all`)."""
    draws, _ = simulate_u_all(k, n_paths, n_steps, seed, workers)
    return draws[:, int(k) - 1]


def _round6(a):
    return np.array([float(f"{v:.6g}") for v in np.ravel(a)]).reshape(np.shape(a))


def generate_table(k_max=DEFAULT_K_MAX, n_paths=DEFAULT_PATHS, n_steps=DEFAULT_STEPS,
                   seed=DEFAULT_SEED, levels=DEFAULT_LEVELS, workers=1):
    """Simulate and tabulate ``U_K`` quantiles (linear interpolation between order statistics)."""
    levels = tuple(float(lv) for lv in levels)
    if not levels or any(not 0 < lv < 1 for lv in levels):
        raise ValueError("levels must lie in (0, 1)")
    draws, n_singular = simulate_u_all(k_max, n_paths, n_steps, seed, workers)
    q = np.quantile(draws, levels, axis=0, method="linear").T
    return LobatoTable(k_max=int(k_max), levels=levels, quantiles=_round6(q),
                       n_paths=int(n_paths), n_steps=int(n_steps), seed=int(seed),
                       n_singular=int(n_singular))


def critical_value(table, k, level):
    """Tabulated ``level`` quantile of ``U_k``.

    ``level`` is a probability such as 0.95 and must be one of
    ``table.levels``.
    """
    k = int(k)
    if not 1 <= k <= table.k_max:
        raise ValueError(f"k={k} outside 1..{table.k_max}")
    for i, lv in enumerate(table.levels):
        if abs(lv - level) < 1e-12:
            return float(table.quantiles[k - 1, i])
    raise ValueError(f"level {level} not in table levels {table.levels}")


def _header(table):
    return [
        f"# wfarima lobato table v{FORMAT_VERSION}",
        "# quantiles of U_K = B(1)' V^-1 B(1), rows K, columns probability levels",
        f"# k_max={table.k_max}",
        f"# n_paths={table.n_paths}",
        f"# n_steps={table.n_steps}",
        f"# seed={table.seed}",
        f"# n_singular={table.n_singular}",
    ]


def format_table(table):
    lines = _header(table)
    lines.append("\t".join(["K"] + [f"{lv:g}" for lv in table.levels]))
    for k in range(1, table.k_max + 1):
        lines.append("\t".join([str(k)] + [f"{v:.6g}" for v in table.quantiles[k - 1]]))
    return "\n".join(lines) + "\n"


def save_table(table, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_table(table), encoding="utf-8")
    return path


def parse_table(text):
    meta, rows, levels = {}, [], None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and " " not in body:
                key, val = body.split("=", 1)
                meta[key] = int(val)
            elif body.startswith("wfarima lobato table v"):
                version = int(body.rsplit("v", 1)[1])
                if version != FORMAT_VERSION:
                    raise ValueError(f"unsupported table version {version}")
            continue
        parts = line.split("\t")
        if levels is None:
            if parts[0] != "K":
                raise ValueError("missing column header line")
            levels = tuple(float(p) for p in parts[1:])
            continue
        rows.append([float(p) for p in parts[1:]])
    for key in ("k_max", "n_paths", "n_steps", "seed"):
        if key not in meta:
            raise ValueError(f"table header lacks {key}")
    q = np.array(rows)
    if q.shape != (meta["k_max"], len(levels)):
        raise ValueError(f"table body has shape {q.shape}, header says k_max={meta['k_max']}")
    return LobatoTable(k_max=meta["k_max"], levels=levels, quantiles=q, n_paths=meta["n_paths"],
                       n_steps=meta["n_steps"], seed=meta["seed"],
                       n_singular=meta.get("n_singular", 0))


def load_table(path):
    return parse_table(Path(path).read_text(encoding="utf-8"))


def cache_dir():
    env = os.environ.get("WFARIMA_CACHE")
    return Path(env) if env else Path.home() / ".cache" / "wfarima"


def _file_name(k_max, n_paths, n_steps, seed):
    return f"lobato_K{k_max}_P{n_paths}_N{n_steps}_S{seed}.txt"


def load_or_generate(k_max=DEFAULT_K_MAX, n_paths=DEFAULT_PATHS, n_steps=DEFAULT_STEPS,
                     seed=DEFAULT_SEED, levels=DEFAULT_LEVELS, directory=None, workers=1):
    """Read a cached table with these parameters, generating and caching it if needed."""
    name = _file_name(k_max, n_paths, n_steps, seed)
    levels = tuple(float(lv) for lv in levels)
    candidates = [Path(directory or cache_dir()) / name]
    packaged = resources.files("wfarima") / "data" / name
    for path in candidates + [packaged]:
        try:
            table = parse_table(path.read_text(encoding="utf-8"))
        except (FileNotFoundError, ValueError):
            continue
        if table.key == (k_max, n_paths, n_steps, seed) and set(levels) <= set(table.levels):
            return table
    table = generate_table(k_max, n_paths, n_steps, seed, levels, workers)
    try:
        save_table(table, candidates[0])
    except OSError as exc:
        log.warning("could not cache Lobato table: %s", exc)
    return table


_DEFAULT = None


def default_table():
    """The packaged table: 200000 paths, 2000 steps, ``K <= 20``."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = parse_table((resources.files("wfarima") / "data" / _PACKAGED).read_text(encoding="utf-8"))
    return _DEFAULT
