"""Power surfaces over the (sparsity, strength) exponent grid."""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .model import build_coupling
from .samplers import GlauberConfig
from .statistics import StatisticKind
from .testing import POWER_STREAM, CriticalValue, ModelSpec, calibrate, estimate_power
from .theory import boundary_line

log = logging.getLogger(__name__)

THREADS_ENV = "ISING_DETECT_THREADS"
CSV_HEADER = "a,r,s,B,crit,p_hat,ci"


def grid_values(bounds) -> np.ndarray:
    """Inclusive arithmetic grid from ``(start, stop, step)``."""
    start, stop, step = (float(v) for v in bounds)
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(round((stop - start) / step)) + 1
    if count < 1:
        raise ValueError("grid stop lies before its start")
    return np.round(start + step * np.arange(count), 10)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 400
    theta: float = 0.5
    kind: str = "curie_weiss"
    stat: str = "cond_centered"
    alpha: float = 0.05
    m_null: int = 500
    replicates: int = 300
    a_grid: tuple = (0.05, 0.5, 0.05)
    r_grid: tuple = (0.05, 0.5, 0.05)
    master_seed: int = 42
    sampler: str = "auto"
    # graph parameters for the non-Curie-Weiss kinds
    p: Optional[float] = None
    graph_seed: Optional[int] = None
    degree: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "a_grid", tuple(float(v) for v in self.a_grid))
        object.__setattr__(self, "r_grid", tuple(float(v) for v in self.r_grid))
        a, r = self.a_values, self.r_values
        if np.any(a <= 0) or np.any(a >= 1):
            raise ValueError("sparsity exponents must lie in (0, 1)")
        if np.any(r <= 0):
            raise ValueError("strength exponents must be positive so that B is finite")

    @property
    def a_values(self) -> np.ndarray:
        return grid_values(self.a_grid)

    @property
    def r_values(self) -> np.ndarray:
        return grid_values(self.r_grid)

    def sparsity(self, a: float) -> int:
        return max(1, int(round(self.n ** (1.0 - a))))

    def strength(self, r: float) -> float:
        return float(np.arctanh(self.n ** (-r)))

    def model(self) -> ModelSpec:
        Q = build_coupling(self.kind, self.n, self.theta, p=self.p, seed=self.graph_seed, degree=self.degree)
        glauber = GlauberConfig.for_size(self.n) if self.sampler in ("auto", "glauber") else None
        return ModelSpec(Q=Q, sampler=self.sampler, glauber=glauber)

    def statistic(self, model: ModelSpec) -> StatisticKind:
        return StatisticKind(self.stat, model.Q if self.stat == "cond_centered" else None)

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


FULL_SCALE = dict(n=1000, m_null=500, replicates=500)


@dataclass(frozen=True)
class Cell:
    a: float
    r: float
    s: int
    B: float
    crit: float
    p_hat: float
    ci_halfwidth: float
    error: Optional[str] = None


@dataclass
class PowerSurface:
    config: ExperimentConfig
    cells: list = field(default_factory=list)
    critical_value: Optional[CriticalValue] = None

    def boundary(self, a):
        return boundary_line(self.config.theta, a)

    def p_hat_matrix(self) -> np.ndarray:
        """``(len(r_values), len(a_values))`` power with rows in ascending ``r``."""
        na, nr = len(self.config.a_values), len(self.config.r_values)
        out = np.full((nr, na), np.nan)
        for k, c in enumerate(self.cells):
            out[k % nr, k // nr] = c.p_hat
        return out


def worker_count(threads: Optional[int] = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "0") or 0)
    if threads < 0:
        raise ValueError("thread count must be nonnegative")
    return threads or (os.cpu_count() or 1)


def run_power_grid(config: ExperimentConfig, threads: Optional[int] = None) -> PowerSurface:
    """Calibrate once, then estimate power in every ``(a, r)`` cell.

    Cells are ordered by ``a`` index, then ``r`` index, whatever the number of
    workers. A cell whose computation raises is kept with NaN power and the
    error message.
    """
    model = config.model()
    kind = config.statistic(model)
    crit = calibrate(model, kind, config.alpha, config.m_null, config.master_seed)
    jobs = [(ia, ir, a, r) for ia, a in enumerate(config.a_values) for ir, r in enumerate(config.r_values)]

    def run(job):
        ia, ir, a, r = job
        s, B = config.sparsity(a), config.strength(r)
        try:
            est = estimate_power(
                model, s, B, kind, crit, config.replicates, config.master_seed, key=(POWER_STREAM, ia, ir)
            )
        except Exception as exc:  # recorded per cell, never dropped
            log.warning("cell a=%s r=%s failed: %s", a, r, exc)
            return Cell(float(a), float(r), s, B, crit.value, math.nan, math.nan, error=str(exc))
        return Cell(float(a), float(r), s, B, crit.value, est.p_hat, est.ci_halfwidth)

    workers = worker_count(threads)
    if workers == 1:
        cells = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run, jobs))
    return PowerSurface(config=config, cells=cells, critical_value=crit)


def _fmt(v) -> str:
    return repr(float(v))


def surface_csv(surface: PowerSurface) -> str:
    lines = [CSV_HEADER]
    for c in surface.cells:
        if c.error is not None:
            lines.append(f"{_fmt(c.a)},{_fmt(c.r)},{c.s},{_fmt(c.B)},{_fmt(c.crit)},failed,failed")
        else:
            lines.append(f"{_fmt(c.a)},{_fmt(c.r)},{c.s},{_fmt(c.B)},{_fmt(c.crit)},{_fmt(c.p_hat)},{_fmt(c.ci_halfwidth)}")
    return "\n".join(lines) + "\n"


def boundary_csv(surface: PowerSurface) -> str:
    lines = ["a,r_boundary"]
    for a in surface.config.a_values:
        lines.append(f"{_fmt(a)},{_fmt(surface.boundary(float(a)))}")
    return "\n".join(lines) + "\n"


def surface_pgm(surface: PowerSurface) -> str:
    """Plain PGM raster, one pixel per cell, largest ``r`` in the top row."""
    pm = surface.p_hat_matrix()[::-1]
    gray = np.where(np.isnan(pm), 0, np.rint(255 * np.nan_to_num(pm))).astype(int)
    h, w = gray.shape
    rows = [" ".join(str(v) for v in row) for row in gray]
    return f"P2\n{w} {h}\n255\n" + "\n".join(rows) + "\n"


def emit_surface(surface: PowerSurface, prefix, figure: bool = False) -> list:
    """Write ``<prefix>.csv``, ``<prefix>_boundary.csv`` and ``<prefix>.pgm``.

    With ``figure=True`` also renders ``<prefix>.png``. Returns the written paths.
    """
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    out = {
        prefix.with_name(prefix.name + ".csv"): surface_csv(surface),
        prefix.with_name(prefix.name + "_boundary.csv"): boundary_csv(surface),
        prefix.with_name(prefix.name + ".pgm"): surface_pgm(surface),
    }
    for path, text in out.items():
        path.write_text(text)
    paths = list(out)
    if figure:
        from .plotting import render_surface

        paths.append(render_surface(surface, prefix.with_name(prefix.name + ".png")))
    return paths


from .verify import CheckResult, format_report, verify_suite  # noqa: E402,F401
