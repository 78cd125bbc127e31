import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdwalk import noise
from qdwalk.noise import NoiseSpec, make_rng, noise_sweep, noisy_walk, perturb, sweep_to_csv
from qdwalk.pulses import StirapParams, make_coin_schedule, make_translation_schedule
from qdwalk.stirap import CoinSpec
from qdwalk.walk import ArrayState, StirapOperators, compare, ideal_walk_Utilde, run_walk

R2 = 1 / math.sqrt(2)
STEPS = 12


@pytest.fixture(scope="module")
def base():
    return StirapParams(make_translation_schedule(1.50, 1.5, 4.0, 4.0, 0, 0, 5.87),
                        make_coin_schedule(1.0, 1.34, 4.0, None, 6.12))


@pytest.fixture(scope="module")
def init():
    return ArrayState.localized(STEPS + 2, 1, R2, R2, origin=1)


def all_pulses(params):
    return params.translation.pulses + params.coin.pulses


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(magnitude=-0.1)
    with pytest.raises(ValueError):
        NoiseSpec(target="colour")
    with pytest.raises(ValueError):
        NoiseSpec(mode="sometimes")
    with pytest.raises(ValueError):
        NoiseSpec(distribution="cauchy")
    with pytest.raises(ValueError):
        NoiseSpec(seed=-1)
    assert NoiseSpec(target="phase", mode="fixed").mode is noise.NoiseMode.FIXED


@pytest.mark.parametrize("target", ["peak_energy", "phase", "sigma", "timing"])
def test_zero_magnitude_leaves_params_unchanged(base, target):
    assert perturb(base, NoiseSpec(target, 0.0), make_rng(1)) == base


def test_same_seed_is_bit_identical(base):
    spec = NoiseSpec("peak_energy", 0.02, seed=99)
    a = perturb(base, spec, make_rng(99))
    b = perturb(base, spec, make_rng(99))
    assert a == b
    assert a != perturb(base, spec, make_rng(100))


def test_peak_energy_is_multiplicative_and_bounded(base):
    p = perturb(base, NoiseSpec("peak_energy", 0.02), make_rng(5))
    for old, new in zip(all_pulses(base), all_pulses(p)):
        assert abs(new.peak_energy / old.peak_energy - 1) <= 0.02 + 1e-15
        assert (new.sigma, new.center, new.phase) == (old.sigma, old.center, old.phase)
    ratios = {new.peak_energy / old.peak_energy for old, new in zip(all_pulses(base), all_pulses(p))}
    assert len(ratios) == 8  # fresh draw per pulse


def test_timing_uses_schedule_delta_t(base):
    p = perturb(base, NoiseSpec("timing", 0.003), make_rng(2))
    for old, new in zip(base.translation.pulses, p.translation.pulses):
        assert abs(new.center - old.center) <= 0.003 * 5.87 + 1e-12
    for old, new in zip(base.coin.pulses, p.coin.pulses):
        assert abs(new.center - old.center) <= 0.003 * 6.12 + 1e-12


def test_phase_is_fraction_of_two_pi(base):
    p = perturb(base, NoiseSpec("phase", 0.05), make_rng(3))
    shifts = []
    for old, new in zip(all_pulses(base), all_pulses(p)):
        d = (new.phase - old.phase + math.pi) % (2 * math.pi) - math.pi
        assert abs(d) <= 0.05 * 2 * math.pi + 1e-12
        shifts.append(d)
    assert max(abs(x) for x in shifts) > 0.05   # not a relative perturbation of zero


def test_nominal_phase_reference_keeps_zero_phases(base):
    p = perturb(base, NoiseSpec("phase", 0.05, phase_reference="nominal"), make_rng(3))
    assert p.translation.pump.phase == 0.0
    assert p.coin.p1.phase != base.coin.p1.phase


def test_sigma_clamped_and_flagged(base):
    p = perturb(base, NoiseSpec("sigma", 3.0, distribution="gaussian"), make_rng(0))
    assert all(x.sigma > 0 for x in all_pulses(p))
    assert "sigma_clamped" in p.flags
    clamped = [new for old, new in zip(all_pulses(base), all_pulses(p))
               if new.sigma == pytest.approx(0.01 * old.sigma)]
    assert len(clamped) == p.flags.count("sigma_clamped")


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 0.5), st.integers(0, 2 ** 63), st.sampled_from(["uniform", "gaussian"]))
def test_draws_are_deterministic(m, seed, dist):
    spec = NoiseSpec("peak_energy", m, seed, distribution=dist)
    base = StirapParams(make_translation_schedule(1.5, 1.5, 4, 4, 0, 0, 5.87),
                        make_coin_schedule(1.0, 1.34, 4.0))
    assert perturb(base, spec, make_rng(seed)) == perturb(base, spec, make_rng(seed))


def test_member_streams_are_independent():
    a = make_rng(7, 0, 0).random(4)
    b = make_rng(7, 0, 1).random(4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, make_rng(7, 0, 0).random(4))


def test_zero_noise_walk_equals_clean_walk(base, init):
    clean = StirapOperators.from_schedules(base.coin, base.translation)
    _, ref = run_walk(STEPS, clean, init)
    for mode in ("per_step", "per_pulse", "fixed"):
        d = noisy_walk(STEPS, NoiseSpec("peak_energy", 0.0, mode=mode), base, init)
        np.testing.assert_array_equal(d.probabilities, ref.probabilities)


@pytest.mark.parametrize("mode", ["per_step", "per_pulse", "fixed"])
def test_noisy_walk_is_normalized_and_reproducible(base, init, mode):
    spec = NoiseSpec("peak_energy", 0.05, seed=11, mode=mode)
    a = noisy_walk(STEPS, spec, base, init)
    b = noisy_walk(STEPS, spec, base, init)
    np.testing.assert_array_equal(a.probabilities, b.probabilities)
    assert a.total() == pytest.approx(1.0, abs=1e-9)
    assert a.metadata["noise"]["mode"] == mode


def test_heavy_phase_noise_destroys_agreement(base, init):
    ideal = ideal_walk_Utilde(STEPS, CoinSpec(math.pi / 4, math.pi / 2, math.pi / 2), init)
    clean = noisy_walk(STEPS, NoiseSpec("phase", 0.0), base, init)
    noisy = noisy_walk(STEPS, NoiseSpec("phase", 0.5, seed=4), base, init)
    assert compare(noisy, ideal)["tvd"] > 5 * compare(clean, ideal)["tvd"]


def test_sweep_zero_magnitude_is_clean_tvd(base, init):
    ideal = ideal_walk_Utilde(STEPS, CoinSpec(math.pi / 4, math.pi / 2, math.pi / 2), init)
    clean = noisy_walk(STEPS, NoiseSpec(), base, init)
    rows = noise_sweep(NoiseSpec(), [0.0], 3, 5, base, init, STEPS, ideal)
    assert rows[0].median_tvd == compare(clean, ideal)["tvd"]
    assert rows[0].iqr == 0.0


def test_sweep_single_member_and_determinism(base, init):
    ideal = ideal_walk_Utilde(STEPS, CoinSpec(math.pi / 4, math.pi / 2, math.pi / 2), init)
    spec = NoiseSpec("sigma", 0.0)
    rows = noise_sweep(spec, [0.02, 0.05], 1, 8, base, init, STEPS, ideal)
    again = noise_sweep(spec, [0.02, 0.05], 1, 8, base, init, STEPS, ideal)
    assert rows == again
    assert [len(r.tvds) for r in rows] == [1, 1]
    assert rows[0].median_tvd == rows[0].tvds[0]
    text = sweep_to_csv(rows)
    assert text.splitlines()[0] == "magnitude,median_tvd,iqr,ensemble"
    assert len(text.splitlines()) == 3
    with pytest.raises(ValueError):
        noise_sweep(spec, [0.01], 0, 8, base, init, STEPS, ideal)
