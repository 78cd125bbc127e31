"""Selective-addressing check for a node's energy-level structure.

Each laser frequency in the scheme is meant to drive exactly one
transition. A level pair is a spurious hit when its gap lies within the
absorption linewidth of some intended frequency, at least one of the two
levels can be populated during the walk, and the pair is not itself
intended. Populated levels are those appearing in an intended pair; a
pair starting from one of them covers both the secondary-excitation
case (a partner level at E_low + hbar*Omega) and one-photon ladder steps
(E_e + hbar*Omega). Deeper multi-photon paths are not considered.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class EnergySpectrum:
    """Labelled levels in meV, listed in strictly increasing energy."""

    levels: tuple[tuple[str, float], ...]
    linewidth: float = 1.0

    def __post_init__(self):
        levels = tuple((str(k), float(e)) for k, e in self.levels)
        object.__setattr__(self, "levels", levels)
        labels = [k for k, _ in levels]
        dup = sorted({k for k in labels if labels.count(k) > 1})
        if dup:
            raise ValueError(f"duplicate level labels: {dup}")
        energies = [e for _, e in levels]
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise ValueError("level energies must be strictly increasing")
        if not self.linewidth > 0:
            raise ValueError("linewidth must be positive")

    def energy(self, label: str) -> float:
        for k, e in self.levels:
            if k == label:
                return e
        raise KeyError(f"unknown level {label!r}")

    @classmethod
    def from_json(cls, text: str) -> "EnergySpectrum":
        d = json.loads(text)
        return cls(tuple((k, e) for k, e in d["levels"]), d.get("linewidth", 1.0))

    def to_json(self) -> str:
        return json.dumps({"levels": [list(l) for l in self.levels],
                           "linewidth": self.linewidth}, indent=1)


@dataclass(frozen=True)
class SpuriousTransition:
    lower: str
    upper: str
    gap: float
    drive: tuple[str, str]
    frequency: float
    detuning: float

    def as_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "gap": self.gap,
                "drive": list(self.drive), "frequency": self.frequency,
                "detuning": self.detuning}

    def __str__(self):
        return (f"{self.lower} <-> {self.upper}: gap {self.gap:.3f} meV within "
                f"{abs(self.detuning):.3f} meV of the {self.drive[0]}-{self.drive[1]} "
                f"drive at {self.frequency:.3f} meV")


def _ordered(spec: EnergySpectrum, a: str, b: str) -> tuple[str, str]:
    return (a, b) if spec.energy(a) <= spec.energy(b) else (b, a)


def check_selective_coupling(spec: EnergySpectrum,
                             intended: Iterable[Sequence[str]]) -> list[SpuriousTransition]:
    """Spurious near-resonant transitions; an empty list means the spectrum passes.

    Pairs are reported lower level first, so the report does not depend on
    the order in which intended pairs are written.
    """
    drives = []
    for pair in intended:
        if len(pair) != 2:
            raise ValueError(f"intended transitions are level pairs, got {pair!r}")
        drives.append(_ordered(spec, *pair))
    drives = sorted(set(drives), key=lambda p: (spec.energy(p[0]), spec.energy(p[1])))
    wanted = set(drives)
    occupied = {k for p in drives for k in p}

    hits = []
    for d in drives:
        omega = spec.energy(d[1]) - spec.energy(d[0])
        for i, (lo, e_lo) in enumerate(spec.levels):
            for hi, e_hi in spec.levels[i + 1:]:
                if (lo, hi) in wanted or not ({lo, hi} & occupied):
                    continue
                gap = e_hi - e_lo
                if abs(gap - omega) <= spec.linewidth:
                    hits.append(SpuriousTransition(lo, hi, gap, d, omega, gap - omega))
    return hits


def report_text(hits: Sequence[SpuriousTransition]) -> str:
    if not hits:
        return "PASS: no spurious transitions\n"
    return "FAIL: {} spurious transition(s)\n".format(len(hits)) + \
        "".join(f"  {h}\n" for h in hits)


# Level layout of a single node: up/down sit 15 meV either side of A; e and u
# each have neighbours 20 and 30 meV away. The up/down ordering is a choice.
REFERENCE_LEVELS = (
    ("down", 158.0), ("A", 173.0), ("up", 188.0),
    ("e-", 1025.0), ("e", 1045.0), ("e+", 1065.0),
    ("u-", 1882.0), ("u", 1912.0), ("u+", 1942.0),
)
REFERENCE_INTENDED = (("down", "e"), ("up", "e"), ("A", "e"))


def reference_spectrum(linewidth: float = 1.0) -> EnergySpectrum:
    return EnergySpectrum(REFERENCE_LEVELS, linewidth)


def counterexample_spectrum(linewidth: float = 1.0) -> EnergySpectrum:
    """Reference node plus a level at E_down + (E_e - E_up)."""
    extra = 158.0 + (1045.0 - 188.0)
    levels = sorted(REFERENCE_LEVELS + (("e'", extra),), key=lambda l: l[1])
    return EnergySpectrum(tuple(levels), linewidth)
