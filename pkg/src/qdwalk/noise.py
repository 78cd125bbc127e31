"""Pulse-parameter noise and its effect on the walk distribution.

Random streams come from numpy's Philox counter-based generator keyed by
``numpy.random.SeedSequence(seed, spawn_key=...)``; a given seed therefore
reproduces the same draws on any platform running the same numpy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .pulses import (CoinSchedule, GaussianPulse, StirapParams,
                     TranslationSchedule)
from .walk import (ArrayState, Distribution, StirapOperators, compare,
                   run_walk, stirap_step, measure)

SIGMA_FLOOR = 0.01
TWO_PI = 2.0 * math.pi


class NoiseTarget(str, Enum):
    PEAK_ENERGY = "peak_energy"
    PHASE = "phase"
    SIGMA = "sigma"
    TIMING = "timing"


class NoiseMode(str, Enum):
    PER_STEP = "per_step"
    PER_PULSE = "per_pulse"
    FIXED = "fixed"


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded random error on one class of pulse parameter.

    ``magnitude`` is fractional: peak energies and widths are scaled by
    (1 + u), phases shifted by u * 2*pi, pulse centres shifted by u * delta_t
    of their schedule, with u drawn from [-m, m] (uniform) or N(0, m^2).
    With ``phase_reference="nominal"`` phases are instead scaled like the
    other parameters, phase * (1 + u), so zero phases stay exact.

    Modes: ``per_step`` draws one parameter set per walk step, with the
    return transfer using the mirror of that step's perturbed translation
    pulses; ``per_pulse`` draws independently for each of the three STIRAP
    applications in a step; ``fixed`` draws once for the whole run.
    """

    target: NoiseTarget = NoiseTarget.PEAK_ENERGY
    magnitude: float = 0.0
    seed: int = 0
    mode: NoiseMode = NoiseMode.PER_STEP
    distribution: str = "uniform"
    phase_reference: str = "two_pi"

    def __post_init__(self):
        object.__setattr__(self, "target", NoiseTarget(self.target))
        object.__setattr__(self, "mode", NoiseMode(self.mode))
        if self.magnitude < 0:
            raise ValueError("noise magnitude must be >= 0")
        if self.distribution not in ("uniform", "gaussian"):
            raise ValueError(f"unknown noise distribution {self.distribution!r}")
        if self.phase_reference not in ("two_pi", "nominal"):
            raise ValueError(f"unknown phase reference {self.phase_reference!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


def make_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def _draw(spec: NoiseSpec, rng: np.random.Generator) -> float:
    m = spec.magnitude
    if spec.distribution == "uniform":
        return float(rng.uniform(-m, m))
    return float(rng.normal(0.0, m))


def _perturb_pulse(p: GaussianPulse, spec: NoiseSpec, rng, t_ref: float,
                   flags: list) -> GaussianPulse:
    u = _draw(spec, rng)
    if spec.target is NoiseTarget.PEAK_ENERGY:
        return replace(p, peak_energy=max(p.peak_energy * (1.0 + u), 0.0))
    if spec.target is NoiseTarget.PHASE:
        if spec.phase_reference == "nominal":
            return replace(p, phase=p.phase * (1.0 + u))
        return replace(p, phase=p.phase + u * TWO_PI)
    if spec.target is NoiseTarget.TIMING:
        return replace(p, center=p.center + u * t_ref)
    sigma = p.sigma * (1.0 + u)
    if sigma <= 0:
        flags.append("sigma_clamped")
        sigma = SIGMA_FLOOR * p.sigma
    return replace(p, sigma=sigma)


def perturb_schedule(s, spec: NoiseSpec, rng, flags: Optional[list] = None):
    """Copy of a translation or coin schedule with every pulse perturbed."""
    flags = [] if flags is None else flags
    names = (("pump", "stokes") if isinstance(s, TranslationSchedule)
             else ("p1", "p2", "s", "s1", "s2", "p"))
    return replace(s, **{n: _perturb_pulse(getattr(s, n), spec, rng, s.delta_t, flags)
                         for n in names})


def perturb(params: StirapParams, spec: NoiseSpec,
            rng: np.random.Generator) -> StirapParams:
    """Fresh independent draw for every pulse of both schedules.

    Draw order is fixed (translation pump, Stokes, then the six coin pulses)
    so results are reproducible for a given generator state.
    """
    flags: list = []
    translation = perturb_schedule(params.translation, spec, rng, flags)
    coin = perturb_schedule(params.coin, spec, rng, flags)
    return StirapParams(translation, coin, tuple(params.flags) + tuple(flags))


def noisy_operators(params: StirapParams, spec: NoiseSpec, rng,
                    **evolution_kwargs) -> StirapOperators:
    """Evolution matrices for one noisy walk step (see :class:`NoiseSpec` modes)."""
    from .stirap import evolution_2ph, evolution_3ph

    if spec.mode is NoiseMode.PER_PULSE:
        coin = perturb_schedule(params.coin, spec, rng)
        fwd = perturb_schedule(params.translation, spec, rng)
        back = perturb_schedule(params.translation, spec, rng).mirrored()
        return StirapOperators(evolution_3ph(coin, **evolution_kwargs),
                               evolution_2ph(fwd, **evolution_kwargs),
                               evolution_2ph(back, **evolution_kwargs))
    p = perturb(params, spec, rng)
    return StirapOperators.from_schedules(p.coin, p.translation, **evolution_kwargs)


def noisy_walk(n: int, spec: NoiseSpec, base: StirapParams, init: ArrayState,
               rng: Optional[np.random.Generator] = None,
               **evolution_kwargs) -> Distribution:
    """Walk with evolution matrices re-derived from perturbed pulses.

    Runtime is dominated by recomputing three evolutions per step. A zero
    magnitude uses the unperturbed operators throughout, so the result
    equals :func:`run_walk` bit for bit.
    """
    if spec.magnitude == 0:
        ops = StirapOperators.from_schedules(base.coin, base.translation,
                                             **evolution_kwargs)
        _, dist = run_walk(n, ops, init)
        dist.metadata["noise"] = _spec_meta(spec)
        return dist
    if init.n_nodes < n + 2:
        raise ValueError(f"need at least {n + 2} nodes for {n} steps")
    rng = make_rng(spec.seed) if rng is None else rng
    fixed = None
    if spec.mode is NoiseMode.FIXED:
        fixed = noisy_operators(base, spec, rng, **evolution_kwargs)
    state = init
    for _ in range(n):
        ops = fixed or noisy_operators(base, spec, rng, **evolution_kwargs)
        state = stirap_step(state, ops.coin, ops.translation, ops.translation_rev)
    dist = measure(state)
    dist.metadata.update(steps=n, noise=_spec_meta(spec))
    return dist


def _spec_meta(spec: NoiseSpec) -> dict:
    return {"target": spec.target.value, "magnitude": spec.magnitude,
            "seed": int(spec.seed), "mode": spec.mode.value,
            "distribution": spec.distribution, "phase_reference": spec.phase_reference}


@dataclass(frozen=True)
class SweepRow:
    magnitude: float
    median_tvd: float
    iqr: float
    tvds: tuple


def noise_sweep(template: NoiseSpec, magnitudes: Sequence[float], ensemble: int,
                seed: int, base: StirapParams, init: ArrayState, n: int,
                reference: Distribution, **evolution_kwargs) -> list[SweepRow]:
    """Median and inter-quartile range of the TVD to ``reference`` per magnitude.

    Member k at magnitude index i uses the stream ``make_rng(seed, i, k)``.
    """
    if ensemble < 1:
        raise ValueError("ensemble must be >= 1")
    rows = []
    for i, m in enumerate(magnitudes):
        spec = replace(template, magnitude=float(m), seed=seed)
        tvds = []
        for k in range(ensemble):
            dist = noisy_walk(n, spec, base, init, rng=make_rng(seed, i, k),
                              **evolution_kwargs)
            tvds.append(compare(dist.on(reference.nodes), reference)["tvd"])
        q25, q50, q75 = np.percentile(tvds, [25, 50, 75])
        rows.append(SweepRow(float(m), float(q50), float(q75 - q25), tuple(tvds)))
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["magnitude,median_tvd,iqr,ensemble"]
    lines += [f"{r.magnitude!r},{r.median_tvd!r},{r.iqr!r},{len(r.tvds)}" for r in rows]
    return "\n".join(lines) + "\n"
