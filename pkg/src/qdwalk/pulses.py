"""Gaussian laser pulses and the STIRAP pulse schedules built from them.

Two schedules are used by the walk:

* a translation schedule (pump + Stokes) that moves population between a
  coin level and the auxiliary level, applied in the counter-intuitive order
  (Stokes first);
* a coin schedule made of two three-pulse stages. The first stage (S, then
  P1 and P2 together) parks the bright coin superposition in the auxiliary
  level; the second stage (S1 and S2 together, then P) brings it back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GaussianPulse:
    """One pulse envelope: peak interaction energy (meV), width (ps),
    center (ps) and optical phase (rad, stored in [0, 2*pi))."""

    peak_energy: float
    sigma: float
    center: float
    phase: float = 0.0

    def __post_init__(self):
        if self.peak_energy < 0:
            raise ValueError(f"peak energy must be >= 0, got {self.peak_energy}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "phase", float(self.phase) % TWO_PI)

    def shifted(self, delta: float) -> "GaussianPulse":
        return replace(self, center=self.center + delta)

    def window(self, n_sigma: float = 5.0) -> tuple[float, float]:
        return self.center - n_sigma * self.sigma, self.center + n_sigma * self.sigma


def envelope(p: GaussianPulse, t):
    """Pulse envelope at time(s) ``t`` in meV."""
    t = np.asarray(t, dtype=float)
    out = p.peak_energy * np.exp(-((t - p.center) ** 2) / (2.0 * p.sigma ** 2))
    return float(out) if out.ndim == 0 else out


def field(p: GaussianPulse, t):
    """Complex field amplitude: envelope times exp(i*phase)."""
    return envelope(p, t) * np.exp(1j * p.phase)


def _union_window(pulses, n_sigma: float) -> tuple[float, float]:
    lo = min(p.window(n_sigma)[0] for p in pulses)
    hi = max(p.window(n_sigma)[1] for p in pulses)
    return lo, hi


@dataclass(frozen=True)
class TranslationSchedule:
    """Pump (coin level <-> |e>) and Stokes (|e> <-> |A>) pulse pair."""

    pump: GaussianPulse
    stokes: GaussianPulse
    delta_t: float
    reversed: bool = False

    @property
    def pulses(self) -> tuple[GaussianPulse, ...]:
        return (self.pump, self.stokes)

    def window(self, n_sigma: float = 5.0) -> tuple[float, float]:
        return _union_window(self.pulses, n_sigma)

    def mirrored(self) -> "TranslationSchedule":
        """Time reflection about t = 0 (pump-before-Stokes <-> Stokes-before-pump)."""
        return replace(
            self,
            pump=replace(self.pump, center=-self.pump.center),
            stokes=replace(self.stokes, center=-self.stokes.center),
            reversed=not self.reversed,
        )

    def shifted(self, delta: float) -> "TranslationSchedule":
        return replace(self, pump=self.pump.shifted(delta),
                       stokes=self.stokes.shifted(delta))


def make_translation_schedule(e_p: float, e_s: float, sigma_p: float,
                              sigma_s: float, alpha_p: float = 0.0,
                              alpha_s: float = 0.0, delta_t: float = 5.87,
                              reversed: bool = False) -> TranslationSchedule:
    """Pump/Stokes pair with peaks ``delta_t`` apart, centred on t = 0.

    Stokes peaks at -delta_t/2 and pump at +delta_t/2 unless ``reversed``,
    which swaps the two (used for the return transfer after re-pairing).
    """
    if not delta_t > 0:
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    if not (sigma_p > 0 and sigma_s > 0):
        raise ValueError("pulse widths must be positive")
    half = 0.5 * delta_t
    t_pump, t_stokes = (-half, half) if reversed else (half, -half)
    return TranslationSchedule(
        pump=GaussianPulse(e_p, sigma_p, t_pump, alpha_p),
        stokes=GaussianPulse(e_s, sigma_s, t_stokes, alpha_s),
        delta_t=delta_t,
        reversed=reversed,
    )


@dataclass(frozen=True)
class CoinPhases:
    """Optical phases of the six coin pulses (rad)."""

    alpha_p1: float = math.pi
    alpha_p2: float = 0.0
    alpha_s: float = 0.0
    beta_s1: float = math.pi
    beta_s2: float = 0.0
    beta_p: float = math.pi / 2

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("alpha_p1", "alpha_p2", "alpha_s", "beta_s1", "beta_s2", "beta_p")}


# Two different assignments are printed for the same experiment; both are
# kept so either can be selected by name.
PHASE_PRESETS: dict[str, CoinPhases] = {
    "coin-pi4": CoinPhases(math.pi, 0.0, 0.0, math.pi, 0.0, math.pi / 2),
    "coin-pi6": CoinPhases(math.pi, 0.0, 0.0, math.pi, 0.0, math.pi / 3),
    "coin-asym": CoinPhases(math.pi, math.pi / 2, 0.0, math.pi, math.pi / 2, math.pi / 2),
    "coin-alt": CoinPhases(0.0, math.pi, 0.0, math.pi, math.pi, 0.0),
}


@dataclass(frozen=True)
class CoinSchedule:
    """Six-pulse double three-photon schedule.

    P1 drives |down> <-> |e>, P2 drives |up> <-> |e>, S drives |A> <-> |e>.
    In the second stage S1, S2 and P address the same three transitions.
    """

    p1: GaussianPulse
    p2: GaussianPulse
    s: GaussianPulse
    s1: GaussianPulse
    s2: GaussianPulse
    p: GaussianPulse
    delta_t: float
    sigma: float
    gap: float

    @property
    def pulses(self) -> tuple[GaussianPulse, ...]:
        return (self.p1, self.p2, self.s, self.s1, self.s2, self.p)

    def window(self, n_sigma: float = 5.0) -> tuple[float, float]:
        return _union_window(self.pulses, n_sigma)

    def shifted(self, delta: float) -> "CoinSchedule":
        return replace(self, **{name: getattr(self, name).shifted(delta)
                                for name in ("p1", "p2", "s", "s1", "s2", "p")})

    @property
    def phases(self) -> CoinPhases:
        return CoinPhases(self.p1.phase, self.p2.phase, self.s.phase,
                          self.s1.phase, self.s2.phase, self.p.phase)


def make_coin_schedule(e_a: float, e_b: float, sigma: float,
                       phases: Optional[CoinPhases] = None,
                       delta_t: float = 6.12,
                       gap: Optional[float] = None) -> CoinSchedule:
    """Double three-photon schedule symmetric about t = 0.

    Peak times: S at -(delta_t + gap/2), P1/P2 at -gap/2, S1/S2 at +gap/2,
    P at +(delta_t + gap/2). ``gap`` (time between P1/P2 and S1/S2) defaults
    to ``delta_t``. ``phases`` may be a :class:`CoinPhases` or a mapping.
    """
    if not delta_t > 0:
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if phases is None:
        phases = PHASE_PRESETS["coin-pi4"]
    elif not isinstance(phases, CoinPhases):
        phases = CoinPhases(**phases)
    gap = delta_t if gap is None else float(gap)
    if gap < 0:
        raise ValueError("gap must be non-negative")
    t_s = -(delta_t + 0.5 * gap)
    t_p12 = -0.5 * gap
    return CoinSchedule(
        p1=GaussianPulse(e_b, sigma, t_p12, phases.alpha_p1),
        p2=GaussianPulse(e_b, sigma, t_p12, phases.alpha_p2),
        s=GaussianPulse(e_a, sigma, t_s, phases.alpha_s),
        s1=GaussianPulse(e_b, sigma, -t_p12, phases.beta_s1),
        s2=GaussianPulse(e_b, sigma, -t_p12, phases.beta_s2),
        p=GaussianPulse(e_a, sigma, -t_s, phases.beta_p),
        delta_t=delta_t,
        sigma=sigma,
        gap=gap,
    )


@dataclass(frozen=True)
class StirapParams:
    """Pulse schedules for one walk step.

    The return transfer uses ``translation.mirrored()``. ``flags`` collects
    notes from noise injection (e.g. clamped widths).
    """

    translation: TranslationSchedule
    coin: CoinSchedule
    flags: tuple = ()
