"""Coined quantum walk on a line: ideal references and the STIRAP-driven
dot-array simulation.

Array layout: ``amplitudes[i, level]`` with levels ordered (up, down, e, A)
as in the coin-process basis. Walk dot i carries up/down/e; auxiliary dot i
carries A. In the original barrier setting aux i is paired with walk dot i;
after the barrier swap it is paired with walk dot i + 1.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .stirap import A, DOWN, E, UP, CoinSpec, ideal_coin

NORM_TOL = 1e-9
BOUNDARY_TOL = 1e-15
LEVELS = ("up", "down", "e", "A")


class BoundaryError(RuntimeError):
    """Amplitude reached the edge of the allocated array."""


class BarrierPhase(str, Enum):
    ORIGINAL = "original"
    SWAPPED = "swapped"


@dataclass
class ArrayState:
    """Electron amplitudes over the dot array.

    ``origin`` is the node label of row 0, so row k is node ``origin + k``.
    """

    amplitudes: np.ndarray
    origin: int = 0
    barrier_phase: BarrierPhase = BarrierPhase.ORIGINAL

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 2 or self.amplitudes.shape[1] != 4:
            raise ValueError("amplitudes must have shape (n_nodes, 4)")

    @classmethod
    def localized(cls, n_nodes: int, node: int = 0, up: complex = 1.0,
                  down: complex = 0.0, origin: int = 0) -> "ArrayState":
        """Electron on walk dot ``node`` with coin amplitudes (up, down)."""
        amps = np.zeros((n_nodes, 4), dtype=complex)
        k = node - origin
        if not 0 <= k < n_nodes:
            raise ValueError(f"node {node} outside array")
        amps[k, UP] = up
        amps[k, DOWN] = down
        return cls(amps, origin)

    @property
    def n_nodes(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return self.origin + np.arange(self.n_nodes)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def copy(self) -> "ArrayState":
        return ArrayState(self.amplitudes.copy(), self.origin, self.barrier_phase)


@dataclass
class Distribution:
    """Probability per walk node, labelled by ``nodes``."""

    nodes: np.ndarray
    probabilities: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=int)
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.nodes.shape != self.probabilities.shape:
            raise ValueError("nodes and probabilities must have equal length")

    def total(self) -> float:
        return float(self.probabilities.sum())

    def mean(self) -> float:
        return float(np.dot(self.nodes, self.probabilities))

    def std(self) -> float:
        mu = self.mean()
        return float(np.sqrt(np.dot((self.nodes - mu) ** 2, self.probabilities)))

    def on(self, nodes) -> "Distribution":
        """Re-index onto ``nodes``; nodes outside the current range get 0."""
        nodes = np.asarray(nodes, dtype=int)
        lookup = dict(zip(self.nodes.tolist(), self.probabilities.tolist()))
        return Distribution(nodes, [lookup.get(n, 0.0) for n in nodes.tolist()],
                            dict(self.metadata))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "probability"])
        for n, p in zip(self.nodes.tolist(), self.probabilities.tolist()):
            w.writerow([n, repr(p)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Distribution":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        return cls([int(r[0]) for r in rows], [float(r[1]) for r in rows])

    def to_json(self) -> str:
        return json.dumps({"nodes": self.nodes.tolist(),
                           "probabilities": self.probabilities.tolist(),
                           "metadata": self.metadata}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        d = json.loads(text)
        return cls(d["nodes"], d["probabilities"], d.get("metadata", {}))


# -- ideal walks ------------------------------------------------------------

def _coin_amplitudes(init: ArrayState):
    amps = init.amplitudes
    if np.any(np.abs(amps[:, [E, A]]) > 0):
        raise ValueError("ideal walks take states with empty e and A levels")
    return amps[:, UP].copy(), amps[:, DOWN].copy()


def _shift(x: np.ndarray, k: int) -> np.ndarray:
    """Move every amplitude k places (k = +1 or -1); the edge must be empty."""
    edge = x[-1] if k > 0 else x[0]
    if abs(edge) > BOUNDARY_TOL:
        raise BoundaryError("walker reached the edge of the array")
    out = np.zeros_like(x)
    if k > 0:
        out[1:] = x[:-1]
    else:
        out[:-1] = x[1:]
    return out


def _ideal(n: int, c: CoinSpec, init: ArrayState, shift_down: bool):
    C = ideal_coin(c)
    up, down = _coin_amplitudes(init)
    for _ in range(n):
        up, down = C[0, 0] * up + C[0, 1] * down, C[1, 0] * up + C[1, 1] * down
        up = _shift(up, +1)
        if shift_down:
            down = _shift(down, -1)
    probs = np.abs(up) ** 2 + np.abs(down) ** 2
    return Distribution(init.nodes, probs, {
        "steps": n, "coin": [c.theta, c.phi1, c.phi2],
        "operator": "U" if shift_down else "U_tilde"})


def ideal_walk_U(n: int, c: CoinSpec, init: ArrayState) -> Distribution:
    """n steps of U = T_down(-1) T_up(+1) C."""
    return _ideal(n, c, init, shift_down=True)


def ideal_walk_Utilde(n: int, c: CoinSpec, init: ArrayState) -> Distribution:
    """n steps of U~ = T_up(+1) C: up moves right, down stays."""
    return _ideal(n, c, init, shift_down=False)


# -- STIRAP-driven walk -----------------------------------------------------

_TRANSLATION_LEVELS = [UP, E, A]


def _check_norm(state: ArrayState, reference: float, where: str):
    if abs(state.norm() - reference) > NORM_TOL:
        raise FloatingPointError(f"norm drifted at {where}: {state.norm()!r}")


def stirap_step(state: ArrayState, U_C, U_T, U_T_rev) -> ArrayState:
    """One walk step: coin, transfer to A, re-pair, transfer on, restore.

    ``U_C`` is 4x4 in (up, down, e, A); ``U_T`` and ``U_T_rev`` are 3x3 in
    (up, e, A). After re-pairing, the return transfer acts on
    (up_{i+1}, e_{i+1}, A_i).
    """
    if state.barrier_phase is not BarrierPhase.ORIGINAL:
        raise ValueError("stirap_step expects the original barrier setting")
    U_C, U_T, U_T_rev = (np.asarray(M, dtype=complex) for M in (U_C, U_T, U_T_rev))
    out = state.copy()
    amps = out.amplitudes
    norm0 = state.norm()

    amps[:] = amps @ U_C.T
    _check_norm(out, norm0, "coin")

    amps[:, _TRANSLATION_LEVELS] = amps[:, _TRANSLATION_LEVELS] @ U_T.T
    _check_norm(out, norm0, "transfer")

    out.barrier_phase = BarrierPhase.SWAPPED
    if abs(amps[-1, A]) > BOUNDARY_TOL:
        raise BoundaryError("auxiliary level of the last dot has no partner")
    paired = np.stack([amps[1:, UP], amps[1:, E], amps[:-1, A]], axis=1)
    paired = paired @ U_T_rev.T
    amps[1:, UP], amps[1:, E], amps[:-1, A] = paired[:, 0], paired[:, 1], paired[:, 2]
    _check_norm(out, norm0, "return transfer")

    out.barrier_phase = BarrierPhase.ORIGINAL
    return out


@dataclass(frozen=True)
class StirapOperators:
    """The three evolution matrices one walk step needs."""

    coin: np.ndarray
    translation: np.ndarray
    translation_rev: np.ndarray

    @classmethod
    def from_schedules(cls, coin_schedule, translation_schedule,
                       **evolution_kwargs) -> "StirapOperators":
        from .stirap import evolution_2ph, evolution_3ph
        return cls(
            evolution_3ph(coin_schedule, **evolution_kwargs),
            evolution_2ph(translation_schedule, **evolution_kwargs),
            evolution_2ph(translation_schedule.mirrored(), **evolution_kwargs),
        )

    @classmethod
    def ideal(cls, c: CoinSpec) -> "StirapOperators":
        from .stirap import embed_coin, ideal_swap
        return cls(embed_coin(ideal_coin(c)), ideal_swap(), ideal_swap())


def run_walk(n: int, ops: StirapOperators, init: ArrayState):
    """Repeat :func:`stirap_step` n times; returns (final state, distribution)."""
    if init.n_nodes < n + 2:
        raise ValueError(f"need at least {n + 2} nodes for {n} steps")
    if abs(init.norm() - 1.0) > NORM_TOL:
        raise ValueError("initial state is not normalized")
    state = init
    for _ in range(n):
        state = stirap_step(state, ops.coin, ops.translation, ops.translation_rev)
    dist = measure(state)
    dist.metadata["steps"] = n
    return state, dist


def measure(state: ArrayState) -> Distribution:
    """Probability of finding the electron at each walk node.

    Walk-dot levels (up, down, e) count for their node; auxiliary
    population counts for the walk node it is currently paired with.
    Residual e and A populations are reported in the metadata.
    """
    amps = state.amplitudes
    pop = np.abs(amps) ** 2
    probs = pop[:, UP] + pop[:, DOWN] + pop[:, E]
    if state.barrier_phase is BarrierPhase.ORIGINAL:
        probs = probs + pop[:, A]
    else:
        probs[1:] += pop[:-1, A]
    return Distribution(state.nodes, probs, {
        "residual_e": float(pop[:, E].sum()),
        "residual_A": float(pop[:, A].sum()),
    })


def compare(a: Distribution, b: Distribution) -> dict:
    """Total variation distance and classical fidelity of two distributions."""
    if a.nodes.shape != b.nodes.shape or np.any(a.nodes != b.nodes):
        raise ValueError("distributions cover different node ranges")
    p, q = a.probabilities, b.probabilities
    tvd = 0.5 * float(np.abs(p - q).sum())
    fid = float(np.sum(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None))) ** 2)
    return {"tvd": min(tvd, 1.0), "fidelity": min(fid, 1.0)}


def two_peak_ratios(dist: Distribution, first: int, steps: int):
    """Outer-peak heights relative to the central mean for a U~ walk.

    The support of an n-step U~ walk started on node ``first`` is
    [first, first + n]; it is split into thirds and each outer third's
    maximum is divided by the mean of the middle third.
    """
    d = dist.on(np.arange(first, first + steps + 1))
    p = d.probabilities
    k = (steps + 1) // 3
    centre = p[k:steps + 1 - k].mean()
    return float(p[:k].max() / centre), float(p[steps + 1 - k:].max() / centre)
