"""Two-parameter pulse optimization: (peak energy, peak separation).

A dense grid scan locates candidate basins; downhill-simplex refinement
polishes the best few of them.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import stirap
from .pulses import CoinPhases, make_coin_schedule, make_translation_schedule

Cost = Callable[[float, float], float]


@dataclass(frozen=True)
class SearchBox:
    e_range: tuple[float, float] = (0.25, 3.0)
    dt_range: tuple[float, float] = (1.0, 15.0)
    resolution: int = 50

    def __post_init__(self):
        if not self.e_range[0] < self.e_range[1]:
            raise ValueError(f"bad energy range {self.e_range}")
        if not self.dt_range[0] < self.dt_range[1]:
            raise ValueError(f"bad delta_t range {self.dt_range}")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if self.e_range[0] < 0 or self.dt_range[0] <= 0:
            raise ValueError("energies must be >= 0 and delta_t > 0")

    @property
    def energies(self) -> np.ndarray:
        return np.linspace(*self.e_range, self.resolution)

    @property
    def delta_ts(self) -> np.ndarray:
        return np.linspace(*self.dt_range, self.resolution)

    def contains(self, e: float, dt: float) -> bool:
        return (self.e_range[0] <= e <= self.e_range[1]
                and self.dt_range[0] <= dt <= self.dt_range[1])

    def on_boundary(self, e: float, dt: float, rel: float = 1e-3) -> bool:
        de = rel * (self.e_range[1] - self.e_range[0])
        dd = rel * (self.dt_range[1] - self.dt_range[0])
        return (min(abs(e - self.e_range[0]), abs(e - self.e_range[1])) <= de
                or min(abs(dt - self.dt_range[0]), abs(dt - self.dt_range[1])) <= dd)


@dataclass
class Surface:
    """Cost samples; ``values[i, j]`` is the cost at (energies[j], delta_ts[i]).

    Failed evaluations are stored as NaN.
    """

    energies: np.ndarray
    delta_ts: np.ndarray
    values: np.ndarray

    def best_cells(self, k: int = 1, min_separation: int = 2):
        """Indices (i, j) of the k lowest cells that are mutually separated
        by at least ``min_separation`` grid steps along some axis."""
        order = np.argsort(np.where(np.isnan(self.values), np.inf, self.values),
                           axis=None)
        picked: list[tuple[int, int]] = []
        for flat in order:
            i, j = np.unravel_index(flat, self.values.shape)
            if np.isnan(self.values[i, j]):
                break
            if all(max(abs(i - a), abs(j - b)) >= min_separation for a, b in picked):
                picked.append((int(i), int(j)))
                if len(picked) == k:
                    break
        return picked

    def to_csv(self) -> str:
        """Header row of energies, first column delta_t, blanks for gaps."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta_t\\energy"] + [repr(float(e)) for e in self.energies])
        for dt, row in zip(self.delta_ts, self.values):
            w.writerow([repr(float(dt))] +
                       ["" if math.isnan(v) else repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Surface":
        rows = list(csv.reader(io.StringIO(text)))
        energies = np.array([float(x) for x in rows[0][1:]])
        delta_ts = np.array([float(r[0]) for r in rows[1:]])
        values = np.array([[float(x) if x else math.nan for x in r[1:]]
                           for r in rows[1:]])
        return cls(energies, delta_ts, values)


@dataclass
class Optimum:
    e_star: float
    dt_star: float
    cost: float
    evaluations: int
    converged: bool = True
    on_boundary: bool = False
    degenerate: bool = False
    surface: Optional[Surface] = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "e_star": self.e_star,
            "dt_star": self.dt_star,
            "cost": self.cost,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "on_boundary": self.on_boundary,
            "degenerate": self.degenerate,
        }


def _safe_eval(cost: Cost, point: tuple[float, float]) -> float:
    try:
        v = float(cost(*point))
    except Exception:
        return math.nan
    return v if math.isfinite(v) else math.nan


def grid_scan(cost: Cost, box: SearchBox, workers: int = 1) -> Surface:
    """Evaluate ``cost(e, dt)`` on the box grid; rows follow delta_t.

    With ``workers > 1`` cells are evaluated in a process pool, in which case
    ``cost`` must be picklable. Failures are recorded as NaN.
    """
    E, T = box.energies, box.delta_ts
    points = [(float(e), float(t)) for t in T for e in E]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(partial(_safe_eval, cost), points,
                                 chunksize=max(1, len(points) // (4 * workers))))
    else:
        flat = [_safe_eval(cost, p) for p in points]
    return Surface(E.copy(), T.copy(), np.array(flat).reshape(T.size, E.size))


def refine(cost: Cost, start: tuple[float, float], tol: float = 1e-10,
           max_evals: int = 2000, box: Optional[SearchBox] = None,
           step: float = 0.05) -> Optimum:
    """Downhill-simplex minimization from ``start``.

    The initial simplex is ``start`` plus a 5% step along each axis. Stops
    when the spread of simplex costs falls below ``tol`` or after
    ``max_evals`` evaluations (then ``converged`` is False). Never returns a
    point worse than ``start``.
    """
    x0 = np.asarray(start, dtype=float)
    steps = np.where(x0 != 0, step * x0, step)
    simplex = np.array([x0, x0 + [steps[0], 0.0], x0 + [0.0, steps[1]]])
    bounds = None
    if box is not None:
        # keep the initial simplex inside the box
        for k, (lo, hi) in enumerate((box.e_range, box.dt_range)):
            if simplex[k + 1, k] > hi:
                simplex[k + 1, k] = x0[k] - steps[k]
            simplex[:, k] = np.clip(simplex[:, k], lo, hi)
        bounds = [box.e_range, box.dt_range]

    f0 = _safe_eval(cost, tuple(x0))

    def fun(x):
        v = _safe_eval(cost, (float(x[0]), float(x[1])))
        return math.inf if math.isnan(v) else v

    res = minimize(fun, x0, method="Nelder-Mead", bounds=bounds,
                   options={"initial_simplex": simplex, "xatol": math.inf,
                            "fatol": tol, "maxfev": max_evals})
    x, fx = res.x, float(res.fun)
    if not fx < f0:
        x, fx = x0, f0
    return Optimum(float(x[0]), float(x[1]), fx, int(res.nfev),
                   converged=bool(res.success))


def optimize(cost: Cost, box: SearchBox, n_starts: int = 5, tol: float = 1e-10,
             max_evals: int = 2000, workers: int = 1,
             flat_tol: float = 1e-12) -> Optimum:
    """Grid scan, then refine from the ``n_starts`` best separated cells.

    The lowest refined result is returned with the scanned surface attached.
    A surface whose finite values span less than ``flat_tol`` is reported as
    degenerate without refinement.
    """
    surface = grid_scan(cost, box, workers)
    finite = surface.values[np.isfinite(surface.values)]
    if finite.size == 0:
        raise RuntimeError("cost evaluation failed at every grid point")
    evals = surface.values.size
    cells = surface.best_cells(max(1, n_starts))
    if finite.max() - finite.min() < flat_tol:
        i, j = cells[0]
        e, t = float(surface.energies[j]), float(surface.delta_ts[i])
        return Optimum(e, t, float(surface.values[i, j]), evals, converged=True,
                       on_boundary=box.on_boundary(e, t), degenerate=True,
                       surface=surface)
    best: Optional[Optimum] = None
    for i, j in cells:
        start = (float(surface.energies[j]), float(surface.delta_ts[i]))
        opt = refine(cost, start, tol=tol, max_evals=max_evals, box=box)
        evals += opt.evaluations
        if best is None or opt.cost < best.cost:
            best = opt
    assert best is not None
    return replace(best, evaluations=evals,
                   on_boundary=box.on_boundary(best.e_star, best.dt_star),
                   surface=surface)


# -- process-specific cost functions (module level so they pickle) ---------

@dataclass(frozen=True)
class TranslationCost:
    """kappa_T as a function of (pump peak energy, delta_t)."""

    e_s: float = 1.5
    sigma_p: float = 4.0
    sigma_s: float = 4.0
    alpha_p: float = 0.0
    alpha_s: float = 0.0
    convention: str = "modulus"
    dt: Optional[float] = None
    rwa_factor: float = stirap.RWA_FACTOR

    def __call__(self, e_p: float, delta_t: float) -> float:
        s = make_translation_schedule(e_p, self.e_s, self.sigma_p, self.sigma_s,
                                      self.alpha_p, self.alpha_s, delta_t)
        U = stirap.evolution_2ph(s, dt=self.dt, rwa_factor=self.rwa_factor)
        return stirap.cost_translation(U, self.convention)


@dataclass(frozen=True)
class CoinCost:
    """kappa_C as a function of (P1/P2 peak energy, S-to-P1 delay)."""

    e_a: float = 1.0
    sigma: float = 4.0
    phases: CoinPhases = CoinPhases()
    gap: Optional[float] = None
    convention: str = "unitary"
    dt: Optional[float] = None
    rwa_factor: float = stirap.RWA_FACTOR

    def __call__(self, e_b: float, delta_t: float) -> float:
        s = make_coin_schedule(self.e_a, e_b, self.sigma, self.phases, delta_t,
                               self.gap)
        U = stirap.evolution_3ph(s, dt=self.dt, rwa_factor=self.rwa_factor)
        return stirap.cost_coin(U, self.convention)


def optimize_translation(fixed: Optional[TranslationCost] = None,
                         box: Optional[SearchBox] = None, **kwargs) -> Optimum:
    """Optimize pump peak energy and delta_t with everything else fixed."""
    return optimize(fixed or TranslationCost(), box or SearchBox(), **kwargs)


def optimize_coin(fixed: Optional[CoinCost] = None,
                  box: Optional[SearchBox] = None, **kwargs) -> Optimum:
    """Optimize the P1/P2 peak energy and delta_t with everything else fixed."""
    return optimize(fixed or CoinCost(), box or SearchBox(), **kwargs)


def basin_report(surface: Surface, level: float) -> dict:
    """Connected regions of the surface with cost below ``level``.

    Returns the number of regions and the cell count of each (largest
    first); used to check that the landscape has one dominant basin.
    """
    from scipy import ndimage

    mask = np.isfinite(surface.values) & (surface.values < level)
    labels, n = ndimage.label(mask)
    sizes = sorted((int((labels == k).sum()) for k in range(1, n + 1)),
                   reverse=True)
    return {"n_regions": n, "sizes": sizes}
