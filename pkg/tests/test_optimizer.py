import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdwalk.optimizer import (CoinCost, SearchBox, Surface, TranslationCost, basin_report,
                              grid_scan, optimize, optimize_coin, refine)
from qdwalk.pulses import PHASE_PRESETS


def bowl(e, dt):
    return (e - 1.0) ** 2 + (dt - 5.0) ** 2


def test_search_box_validation():
    with pytest.raises(ValueError):
        SearchBox((2.0, 1.0), (1.0, 2.0))
    with pytest.raises(ValueError):
        SearchBox((1.0, 2.0), (3.0, 3.0))
    with pytest.raises(ValueError):
        SearchBox(resolution=1)
    b = SearchBox((0.0, 1.0), (1.0, 3.0), 3)
    np.testing.assert_allclose(b.energies, [0, 0.5, 1])
    assert b.contains(0.5, 2.0) and not b.contains(1.5, 2.0)
    assert b.on_boundary(0.0, 2.0) and not b.on_boundary(0.5, 2.0)


def test_grid_scan_constant_cost():
    s = grid_scan(lambda e, t: 1.0, SearchBox((0, 1), (1, 2), 3))
    assert s.values.shape == (3, 3)
    assert np.all(s.values == 1.0)


def test_grid_scan_orientation_and_failures():
    def cost(e, dt):
        if e > 0.9:
            raise RuntimeError("boom")
        return 10 * dt + e
    s = grid_scan(cost, SearchBox((0, 1), (1, 2), 3))
    assert s.values[2, 0] == pytest.approx(20.0)   # row follows delta_t
    assert s.values[0, 1] == pytest.approx(10.5)
    assert np.all(np.isnan(s.values[:, 2]))


def test_grid_scan_parallel_matches_serial():
    box = SearchBox((0.5, 2.5), (2, 12), 4)
    serial = grid_scan(bowl, box)
    parallel = grid_scan(bowl, box, workers=2)
    np.testing.assert_array_equal(serial.values, parallel.values)


def test_refine_quadratic_bowl():
    opt = refine(bowl, (2.0, 7.0), tol=1e-14)
    assert opt.converged
    assert abs(opt.e_star - 1) < 1e-6 and abs(opt.dt_star - 5) < 1e-6


def test_refine_constant_returns_start():
    opt = refine(lambda e, t: 3.0, (1.2, 4.5))
    assert (opt.e_star, opt.dt_star, opt.cost) == (1.2, 4.5, 3.0)
    assert opt.converged


def test_refine_evaluation_cap_flags_unconverged():
    opt = refine(lambda e, t: (e - 1) ** 2 + 100 * (t - e ** 2) ** 2, (-1.0, 3.0),
                 tol=1e-16, max_evals=20)
    assert not opt.converged
    assert opt.cost <= (-1 - 1) ** 2 + 100 * (3 - 1) ** 2


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 2.8), st.floats(1.5, 14), st.floats(0.1, 3), st.floats(2, 12))
def test_refine_never_worse_than_start(e0, t0, a, b):
    def cost(e, t):
        return math.sin(3 * e) * math.cos(t) + 0.1 * (e - a) ** 2 + 0.01 * (t - b) ** 2
    opt = refine(cost, (e0, t0), box=SearchBox())
    assert opt.cost <= cost(e0, t0)
    assert SearchBox().contains(opt.e_star, opt.dt_star)


def test_optimize_finds_bowl_and_attaches_surface():
    opt = optimize(bowl, SearchBox((0, 3), (1, 10), 10))
    assert opt.e_star == pytest.approx(1, abs=1e-4)
    assert opt.dt_star == pytest.approx(5, abs=1e-4)
    assert opt.surface is not None and opt.surface.values.shape == (10, 10)
    assert not opt.degenerate and not opt.on_boundary


def test_optimize_box_excluding_minimum_flags_boundary():
    opt = optimize(bowl, SearchBox((2, 3), (6, 10), 5))
    assert opt.on_boundary
    assert opt.e_star == pytest.approx(2, abs=1e-6)


def test_optimize_resolution_two_returns_a_cell():
    opt = optimize(bowl, SearchBox((0, 3), (1, 10), 2), n_starts=1)
    assert math.isfinite(opt.cost)


def test_flat_surface_is_degenerate():
    # zero-amplitude fixed pulses: kappa_C does not depend on (e_b, delta_t)
    opt = optimize_coin(CoinCost(e_a=0.0), SearchBox((0.0, 0.0 + 1e-9), (2, 3), 2))
    assert opt.degenerate or opt.cost == pytest.approx(0.0, abs=1e-12)
    flat = optimize(lambda e, t: 0.5, SearchBox((0, 1), (1, 2), 3))
    assert flat.degenerate


def test_surface_csv_round_trip_with_gaps():
    s = Surface(np.array([0.1, 0.2]), np.array([1.0, 2.0]),
                np.array([[1 / 3, math.nan], [2e-17, 5.0]]))
    text = s.to_csv()
    assert text.splitlines()[0] == "delta_t\\energy,0.1,0.2"
    assert ",," in text or text.splitlines()[1].endswith(",")
    back = Surface.from_csv(text)
    np.testing.assert_array_equal(back.energies, s.energies)
    np.testing.assert_array_equal(np.isnan(back.values), np.isnan(s.values))
    assert back.values[0, 0] == 1 / 3 and back.values[1, 0] == 2e-17


def test_best_cells_are_separated():
    v = np.array([[0.0, 0.1, 5], [5, 5, 5], [5, 5, 0.2]])
    s = Surface(np.arange(3.0), np.arange(3.0), v)
    assert s.best_cells(2) == [(0, 0), (2, 2)]


def test_basin_report_counts_regions():
    v = np.ones((5, 5))
    v[0, 0] = v[0, 1] = 0.0
    v[4, 4] = 0.0
    r = basin_report(Surface(np.arange(5.0), np.arange(5.0), v), 0.5)
    assert r == {"n_regions": 2, "sizes": [2, 1]}


def test_translation_refine_from_nearby_seed():
    opt = refine(TranslationCost(), (1.45, 5.7), box=SearchBox())
    assert opt.cost < 0.05
    assert abs(opt.e_star - 1.50) < 0.15 and abs(opt.dt_star - 5.87) < 0.6


@pytest.mark.slow
def test_coin_optimum_is_phase_independent():
    box = SearchBox((1.0, 1.7), (4.5, 7.5), 8)
    for name in ("coin-pi4", "coin-pi6", "coin-alt"):
        opt = optimize_coin(CoinCost(phases=PHASE_PRESETS[name]), box, n_starts=2)
        assert abs(opt.e_star - 1.34) < 0.15, name
        assert abs(opt.dt_star - 6.12) < 0.6, name
