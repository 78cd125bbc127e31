"""Command-line entry point: ``qdwalk {optimize,propagate,walk,noise,check-dots}``.

Configuration is one JSON document whose sections mirror :class:`RunConfig`.
Values are layered: built-in defaults, then ``--preset``, then the
``--config`` file, then ``--seed``. Unknown keys are rejected.

Output directory: ``--out``, else ``$QDWALK_OUT``, else ``output.dir`` from
the config, else the current directory. Files are written atomically.

Exit codes: 0 success, 1 runtime or convergence failure, 2 configuration
error. ``check-dots`` also exits 1 when spurious transitions are found.

Noise draws use numpy's Philox generator keyed by
``SeedSequence(seed, spawn_key=...)``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
import typing
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import dotmodel, noise, optimizer, stirap, walk
from .propagator import ConvergenceError
from .pulses import (PHASE_PRESETS, CoinPhases, StirapParams,
                     make_coin_schedule, make_translation_schedule)

ENV_OUT = "QDWALK_OUT"
PI = math.pi


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""


# -- configuration schema ----------------------------------------------------

@dataclass
class TranslationConfig:
    e_p: float = 1.50
    e_s: float = 1.5
    sigma_p: float = 4.0
    sigma_s: float = 4.0
    alpha_p: float = 0.0
    alpha_s: float = 0.0
    delta_t: float = 5.87


@dataclass
class CoinTarget:
    theta: float = PI / 4
    phi1: float = PI / 2
    phi2: float = PI / 2


@dataclass
class CoinConfig:
    e_a: float = 1.0
    e_b: float = 1.34
    sigma: float = 4.0
    delta_t: float = 6.12
    gap: Optional[float] = None
    phases: CoinPhases = field(default_factory=CoinPhases)
    target: CoinTarget = field(default_factory=CoinTarget)
    # tune beta_p so the coin block matches ``target`` before walking
    calibrate_beta_p: bool = True


@dataclass
class EvolutionConfig:
    dt: Optional[float] = None
    n_sigma: float = 5.0
    tol: float = 1e-12
    rwa_factor: float = stirap.RWA_FACTOR


@dataclass
class OptimizeConfig:
    process: str = "translation"
    e_range: list = field(default_factory=lambda: [0.25, 3.0])
    dt_range: list = field(default_factory=lambda: [1.0, 15.0])
    resolution: int = 50
    n_starts: int = 5
    tol: float = 1e-10
    max_evals: int = 2000
    workers: int = 1
    translation_convention: str = "modulus"
    coin_convention: str = "unitary"


@dataclass
class PropagateConfig:
    process: str = "translation"
    init: dict = field(default_factory=lambda: {"up": 1.0})


@dataclass
class WalkConfig:
    steps: int = 100
    start_node: int = 1
    up: Any = 1 / math.sqrt(2)
    down: Any = 1 / math.sqrt(2)


@dataclass
class NoiseConfig:
    target: str = "peak_energy"
    magnitude: float = 0.02
    seed: int = 0
    mode: str = "per_step"
    distribution: str = "uniform"
    phase_reference: str = "two_pi"
    sweep_magnitudes: Optional[list] = None
    ensemble: int = 1


@dataclass
class DotsConfig:
    levels: list = field(default_factory=lambda: [list(l) for l in dotmodel.REFERENCE_LEVELS])
    linewidth: float = 1.0
    intended: list = field(default_factory=lambda: [list(p) for p in dotmodel.REFERENCE_INTENDED])


@dataclass
class OutputConfig:
    dir: Optional[str] = None
    timestamp: bool = True


@dataclass
class RunConfig:
    translation: TranslationConfig = field(default_factory=TranslationConfig)
    coin: CoinConfig = field(default_factory=CoinConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    optimize: OptimizeConfig = field(default_factory=OptimizeConfig)
    propagate: PropagateConfig = field(default_factory=PropagateConfig)
    walk: WalkConfig = field(default_factory=WalkConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    dots: DotsConfig = field(default_factory=DotsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _coin_preset(name: str, theta: float, phi2: float = PI / 2,
                 calibrate: bool = True) -> dict:
    return {"coin": {"phases": PHASE_PRESETS[name].as_dict(),
                     "target": {"theta": theta, "phi1": PI / 2, "phi2": phi2},
                     "calibrate_beta_p": calibrate},
            "optimize": {"process": "coin"}, "propagate": {"process": "coin"}}


PRESETS: dict[str, dict] = {
    "translation-paper": {"translation": {"e_p": 1.50, "delta_t": 5.87},
                          "optimize": {"process": "translation"},
                          "propagate": {"process": "translation"}},
    "coin-pi4": _coin_preset("coin-pi4", PI / 4),
    "coin-pi6": _coin_preset("coin-pi6", PI / 6),
    # beta_p alone cannot reach these targets, so they run with published phases
    "coin-asym": _coin_preset("coin-asym", PI / 4, -PI / 2, calibrate=False),
    "coin-alt": _coin_preset("coin-alt", PI / 4, calibrate=False),
}


def _check_scalar(tp, value, path: str):
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
    elif tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
    elif tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    elif tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
    elif tp is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    elif tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object, got {value!r}")
    return value


def _apply(obj, patch: dict, path: str = ""):
    """Copy of dataclass ``obj`` with ``patch`` overlaid, validating keys and types."""
    if not isinstance(patch, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    hints = typing.get_type_hints(type(obj))
    names = {f.name for f in dataclasses.fields(obj)}
    changes = {}
    for key, value in patch.items():
        where = f"{path}.{key}" if path else key
        if key not in names:
            raise ConfigError(f"unknown config key {where!r}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            changes[key] = _apply(current, value, where)
            continue
        tp = hints[key]
        if typing.get_origin(tp) is typing.Union:
            if value is None:
                changes[key] = None
                continue
            tp = next(a for a in typing.get_args(tp) if a is not type(None))
        changes[key] = _check_scalar(tp, value, where)
    try:
        return dataclasses.replace(obj, **changes)
    except ValueError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def load_config(path: Optional[str] = None, preset: Optional[str] = None,
                seed: Optional[int] = None) -> RunConfig:
    cfg = RunConfig()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = _apply(cfg, PRESETS[preset])
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if "preset" in data:
            name = data.pop("preset")
            if name not in PRESETS:
                raise ConfigError(f"unknown preset {name!r}")
            cfg = _apply(RunConfig(), PRESETS[name])
            if preset is not None:
                cfg = _apply(cfg, PRESETS[preset])
        cfg = _apply(cfg, data)
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.noise.seed = seed
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.optimize.process not in ("translation", "coin"):
        raise ConfigError("optimize.process must be 'translation' or 'coin'")
    if cfg.propagate.process not in ("translation", "translation-reversed", "coin"):
        raise ConfigError("propagate.process must be translation, translation-reversed or coin")
    if cfg.walk.steps < 0:
        raise ConfigError("walk.steps must be >= 0")
    if cfg.noise.ensemble < 1:
        raise ConfigError("noise.ensemble must be >= 1")
    for name, r in (("e_range", cfg.optimize.e_range), ("dt_range", cfg.optimize.dt_range)):
        if len(r) != 2:
            raise ConfigError(f"optimize.{name} must have two entries")
    try:
        noise.NoiseSpec(cfg.noise.target, cfg.noise.magnitude, cfg.noise.seed,
                        cfg.noise.mode, cfg.noise.distribution,
                        cfg.noise.phase_reference)
        _complex(cfg.walk.up, "walk.up")
        _complex(cfg.walk.down, "walk.down")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _complex(v, path: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"{path}: expected a number or [re, im], got {v!r}")


# -- object builders ---------------------------------------------------------

def _evolution_kwargs(cfg: RunConfig) -> dict:
    e = cfg.evolution
    return {"dt": e.dt, "n_sigma": e.n_sigma, "tol": e.tol, "rwa_factor": e.rwa_factor}


def build_translation(cfg: RunConfig, reversed: bool = False):
    t = cfg.translation
    return make_translation_schedule(t.e_p, t.e_s, t.sigma_p, t.sigma_s, t.alpha_p,
                                     t.alpha_s, t.delta_t, reversed)


def build_coin(cfg: RunConfig):
    c = cfg.coin
    return make_coin_schedule(c.e_a, c.e_b, c.sigma, c.phases, c.delta_t, c.gap)


def coin_target(cfg: RunConfig) -> stirap.CoinSpec:
    t = cfg.coin.target
    return stirap.CoinSpec(t.theta, t.phi1, t.phi2)


def build_params(cfg: RunConfig) -> tuple[StirapParams, dict]:
    """Walk schedules plus calibration notes."""
    coin = build_coin(cfg)
    info: dict = {"beta_p_nominal": coin.p.phase}
    if cfg.coin.calibrate_beta_p:
        coin, resid = stirap.calibrate_beta_p(coin, coin_target(cfg), **_evolution_kwargs(cfg))
        info.update(beta_p_calibrated=coin.p.phase, calibration_mismatch=resid)
    return StirapParams(build_translation(cfg), coin), info


def build_init(cfg: RunConfig) -> walk.ArrayState:
    w = cfg.walk
    up, down = _complex(w.up, "walk.up"), _complex(w.down, "walk.down")
    norm = math.sqrt(abs(up) ** 2 + abs(down) ** 2)
    if abs(norm - 1.0) > 1e-6:
        raise ConfigError(f"initial coin state has norm {norm}, expected 1")
    up, down = up / norm, down / norm
    return walk.ArrayState.localized(w.steps + 2, w.start_node, up, down,
                                     origin=w.start_node)


# -- output helpers ----------------------------------------------------------

def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def complex_pairs(M) -> list:
    """Nested lists with each complex entry as [re, im]."""
    M = np.asarray(M, dtype=complex)
    return np.stack([M.real, M.imag], axis=-1).tolist()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


class Emitter:
    def __init__(self, out: Path, timestamp: bool):
        self.out = out
        self.timestamp = timestamp
        self.written: list[Path] = []

    def text(self, name: str, text: str):
        path = self.out / name
        atomic_write(path, text)
        self.written.append(path)

    def json(self, name: str, payload: dict, cfg: RunConfig):
        payload = dict(payload)
        payload["config"] = dataclasses.asdict(cfg)
        if self.timestamp:
            payload["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.text(name, json.dumps(_jsonable(payload), indent=1, sort_keys=True) + "\n")


# -- subcommands -------------------------------------------------------------

def cmd_optimize(cfg: RunConfig, em: Emitter) -> int:
    o = cfg.optimize
    try:
        box = optimizer.SearchBox(tuple(o.e_range), tuple(o.dt_range), o.resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ev = cfg.evolution
    if o.process == "translation":
        t = cfg.translation
        cost = optimizer.TranslationCost(t.e_s, t.sigma_p, t.sigma_s, t.alpha_p, t.alpha_s,
                                         o.translation_convention, ev.dt, ev.rwa_factor)
    else:
        c = cfg.coin
        cost = optimizer.CoinCost(c.e_a, c.sigma, c.phases, c.gap, o.coin_convention,
                                  ev.dt, ev.rwa_factor)
    opt = optimizer.optimize(cost, box, n_starts=o.n_starts, tol=o.tol,
                             max_evals=o.max_evals, workers=o.workers)
    payload = {"process": o.process, "optimum": opt.as_dict(),
               "basins": {str(lv): optimizer.basin_report(opt.surface, lv)
                          for lv in (0.1, 0.01)}}
    if o.process == "translation":
        s = make_translation_schedule(opt.e_star, t.e_s, t.sigma_p, t.sigma_s,
                                      t.alpha_p, t.alpha_s, opt.dt_star)
        U = stirap.evolution_2ph(s, **_evolution_kwargs(cfg))
        Ur = stirap.evolution_2ph(s.mirrored(), **_evolution_kwargs(cfg))
        payload.update(evolution=complex_pairs(U), transfer_up_to_A=abs(U[2, 0]) ** 2,
                       reverse_transfer_A_to_up=abs(Ur[0, 2]) ** 2)
    else:
        s = make_coin_schedule(c.e_a, opt.e_star, c.sigma, c.phases, opt.dt_star, c.gap)
        U = stirap.evolution_3ph(s, **_evolution_kwargs(cfg))
        B, defect = stirap.extract_coin(U)
        payload.update(evolution=complex_pairs(U), coin=complex_pairs(B),
                       unitarity_defect=defect)
    em.json("optimum.json", payload, cfg)
    em.text("surface.csv", opt.surface.to_csv())
    if not opt.converged:
        print("optimization did not converge within the evaluation budget", file=sys.stderr)
        return 1
    return 0


_LEVELS = {"translation": stirap.BASIS_2PH, "translation-reversed": stirap.BASIS_2PH,
           "coin": stirap.BASIS_3PH}


def cmd_propagate(cfg: RunConfig, em: Emitter) -> int:
    p = cfg.propagate
    levels = _LEVELS[p.process]
    if p.process == "coin":
        sched = build_coin(cfg)
    else:
        sched = build_translation(cfg)
        if p.process == "translation-reversed":
            sched = sched.mirrored()
    psi0 = np.zeros(len(levels), dtype=complex)
    for name, amp in p.init.items():
        if name not in levels:
            raise ConfigError(f"propagate.init: unknown level {name!r} for {p.process}")
        psi0[levels.index(name)] = _complex(amp, f"propagate.init.{name}")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
        raise ConfigError("propagate.init must be normalized")
    times, pops = stirap.population_trace(sched, psi0, **_evolution_kwargs(cfg))
    lines = [",".join(["t"] + [f"pop_{l}" for l in levels])]
    lines += [",".join([repr(float(t))] + [repr(float(x)) for x in row])
              for t, row in zip(times, pops)]
    em.text("trace.csv", "\n".join(lines) + "\n")
    return 0


def _walk_payload(cfg, params, info, dist, ideal):
    B, defect = stirap.extract_coin(stirap.evolution_3ph(params.coin, **_evolution_kwargs(cfg)))
    return {"stirap": {"nodes": dist.nodes, "probabilities": dist.probabilities,
                       "metadata": dist.metadata},
            "ideal_Utilde": {"nodes": ideal.nodes, "probabilities": ideal.probabilities,
                             "metadata": ideal.metadata},
            "metrics": walk.compare(dist, ideal), "coin": complex_pairs(B),
            "unitarity_defect": defect, "calibration": info}


def cmd_walk(cfg: RunConfig, em: Emitter) -> int:
    params, info = build_params(cfg)
    init = build_init(cfg)
    ops = walk.StirapOperators.from_schedules(params.coin, params.translation,
                                              **_evolution_kwargs(cfg))
    _, dist = walk.run_walk(cfg.walk.steps, ops, init)
    ideal = walk.ideal_walk_Utilde(cfg.walk.steps, coin_target(cfg), init)
    em.text("distribution.csv", dist.to_csv())
    em.text("ideal_distribution.csv", ideal.to_csv())
    em.json("distribution.json", _walk_payload(cfg, params, info, dist, ideal), cfg)
    return 0


def cmd_noise(cfg: RunConfig, em: Emitter) -> int:
    n = cfg.noise
    spec = noise.NoiseSpec(n.target, n.magnitude, n.seed, n.mode, n.distribution,
                           n.phase_reference)
    params, info = build_params(cfg)
    init = build_init(cfg)
    kw = _evolution_kwargs(cfg)
    ideal = walk.ideal_walk_Utilde(cfg.walk.steps, coin_target(cfg), init)
    dist = noise.noisy_walk(cfg.walk.steps, spec, params, init, **kw)
    mags = n.sweep_magnitudes if n.sweep_magnitudes is not None else [0.0, n.magnitude]
    rows = noise.noise_sweep(spec, mags, n.ensemble, n.seed, params, init,
                             cfg.walk.steps, ideal, **kw)
    em.text("noisy_distribution.csv", dist.to_csv())
    em.text("sweep.csv", noise.sweep_to_csv(rows))
    payload = {"noisy": {"nodes": dist.nodes, "probabilities": dist.probabilities,
                         "metadata": dist.metadata},
               "metrics": walk.compare(dist, ideal),
               "sweep": [dataclasses.asdict(r) for r in rows],
               "calibration": info}
    if cfg.walk.steps >= 3:
        payload["peak_ratios"] = walk.two_peak_ratios(dist, cfg.walk.start_node,
                                                      cfg.walk.steps)
    em.json("noise.json", payload, cfg)
    return 0


def cmd_check_dots(cfg: RunConfig, em: Emitter) -> int:
    d = cfg.dots
    try:
        spectrum = dotmodel.EnergySpectrum(tuple(tuple(l) for l in d.levels), d.linewidth)
        hits = dotmodel.check_selective_coupling(spectrum, d.intended)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"dots: {exc}") from exc
    em.text("dots_report.txt", dotmodel.report_text(hits))
    em.json("dots_report.json", {"passed": not hits,
                                 "spurious": [h.as_dict() for h in hits]}, cfg)
    return 1 if hits else 0


COMMANDS = {"optimize": cmd_optimize, "propagate": cmd_propagate, "walk": cmd_walk,
            "noise": cmd_noise, "check-dots": cmd_check_dots}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdwalk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--seed", type=_u64)
        sp.add_argument("--out", help=f"output directory (default ${ENV_OUT} or .)")
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit the creation time from JSON outputs")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.preset, args.seed)
        if args.no_timestamp:
            cfg.output.timestamp = False
        out = Path(args.out or os.environ.get(ENV_OUT) or cfg.output.dir or ".")
        em = Emitter(out, cfg.output.timestamp)
        code = COMMANDS[args.command](cfg, em)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, walk.BoundaryError, FloatingPointError,
            RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in em.written:
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
