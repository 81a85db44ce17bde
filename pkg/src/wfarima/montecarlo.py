"""Empirical size and power of the portmanteau tests by simulation.

Replication ``i`` draws its innovations from ``make_rng(seed, i)``, so a
table is the same whether replications run serially or in a pool.  For
several sample sizes the shorter series are prefixes of the longest one.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnose import run_tests
from .estimate import fit as fit_model
from .model import DEFAULT_D_BOUNDS, FarimaParams, simulate
from .noise import NoiseSpec, generate, make_rng
from .portmanteau import METHODS

__all__ = ["McConfig", "McCell", "McResult", "run_mc", "one_replication", "binomial_band"]

log = logging.getLogger(__name__)

FARIMA_BURN = 1000


@dataclass(frozen=True)
class McConfig:
    """Design of a size or power experiment.

    ``theta_true`` generates the data; a FARIMA(``fit_p``, d, ``fit_q``) model
    is fitted.  Size runs use the true orders, power runs a smaller model.
    """

    theta_true: FarimaParams
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    n_list: tuple = (1000,)
    m_list: tuple = (1, 2, 3, 6, 12, 15)
    n_reps: int = 200
    level: float = 0.05
    seed: int = 0
    fit_p: int = None
    fit_q: int = None
    burn: int = FARIMA_BURN
    ar_order: object = "auto"
    d_bounds: tuple = DEFAULT_D_BOUNDS

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(sorted(int(n) for n in self.n_list)))
        object.__setattr__(self, "m_list", tuple(sorted(int(m) for m in self.m_list)))
        if self.fit_p is None:
            object.__setattr__(self, "fit_p", self.theta_true.p)
        if self.fit_q is None:
            object.__setattr__(self, "fit_q", self.theta_true.q)
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        if not self.n_list or not self.m_list:
            raise ValueError("n_list and m_list must be non-empty")
        if self.m_list[0] < 1 or self.m_list[-1] >= self.n_list[0]:
            raise ValueError("every m must satisfy 1 <= m < min(n_list)")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        self.theta_true.check_admissible()


def binomial_band(level, n_valid, z=1.96):
    """Normal-approximation band ``level +- z sqrt(level (1 - level) / N)``."""
    half = z * np.sqrt(level * (1 - level) / max(n_valid, 1))
    return level - half, level + half


@dataclass
class McCell:
    n: int
    m: int
    method: str
    rejections: int
    valid: int
    failures: int
    band: tuple

    @property
    def frequency(self):
        return self.rejections / self.valid if self.valid else float("nan")

    @property
    def flagged(self):
        f = self.frequency
        return bool(self.valid) and not (self.band[0] <= f <= self.band[1])


@dataclass
class McResult:
    config: McConfig
    cells: list
    fit_failures: dict

    def cell(self, n, m, method):
        for c in self.cells:
            if (c.n, c.m, c.method) == (n, m, method):
                return c
        raise KeyError((n, m, method))

    def frequency(self, n, m, method):
        return self.cell(n, m, method).frequency


def one_replication(config, index, table=None):
    """Rejection decisions of replication ``index``.

    Returns a dict keyed by ``(n, m, method)`` with values ``True``/``False``,
    or ``None`` when that test failed or was not applicable.
    """
    rng = make_rng(config.seed, index)
    n_max = config.n_list[-1]
    eps = generate(config.noise, n_max + config.burn, rng=rng)
    x = simulate(config.theta_true, eps, burn=config.burn)
    out = {}
    for n in config.n_list:
        try:
            f = fit_model(x[:n], config.fit_p, config.fit_q, d_bounds=config.d_bounds)
            reports = run_tests(f, config.m_list, (config.level,), config.ar_order, table)
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.warning("replication %d, n=%d failed: %s", index, n, exc)
            for m in config.m_list:
                for meth in METHODS:
                    out[(n, m, meth)] = None
            continue
        for r in reports:
            ok = r.status == "ok"
            out[(n, r.m, r.method)] = r.reject_at[config.level] if ok else None
    return out


def _worker(args):
    config, index, table = args
    return index, one_replication(config, index, table)


def run_mc(config, workers=1, table=None, progress=None):
    """Run all replications and tabulate rejection frequencies.

    ``progress``, if given, is called with the number of finished replications.
    """
    if table is None:
        from .lobato import default_table

        table = default_table()
    jobs = [(config, i, table) for i in range(config.n_reps)]
    results = {}
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for i, res in ex.map(_worker, jobs):
                results[i] = res
                if progress:
                    progress(len(results))
    else:
        for job in jobs:
            i, res = _worker(job)
            results[i] = res
            if progress:
                progress(len(results))

    cells = []
    fit_failures = {}
    for n in config.n_list:
        fit_failures[n] = sum(
            all(results[i][(n, m, meth)] is None for m in config.m_list for meth in METHODS)
            for i in range(config.n_reps)
        )
        for m in config.m_list:
            for meth in METHODS:
                vals = [results[i][(n, m, meth)] for i in range(config.n_reps)]
                valid = [v for v in vals if v is not None]
                cells.append(McCell(
                    n=n, m=m, method=meth, rejections=int(sum(valid)), valid=len(valid),
                    failures=len(vals) - len(valid), band=binomial_band(config.level, len(valid)),
                ))
    return McResult(config=config, cells=cells, fit_failures=fit_failures)
