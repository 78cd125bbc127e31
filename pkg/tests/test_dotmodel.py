import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdwalk.dotmodel import (REFERENCE_INTENDED, EnergySpectrum, check_selective_coupling,
                             counterexample_spectrum, reference_spectrum, report_text)


def brute_force_hits(levels, intended, w):
    # every unordered pair, every drive; independent of the implementation
    energy = dict(levels)
    occupied = {k for p in intended for k in p}
    wanted = {frozenset(p) for p in intended}
    hits = set()
    for a, b in itertools.combinations(energy, 2):
        if frozenset((a, b)) in wanted or not ({a, b} & occupied):
            continue
        for p in intended:
            omega = abs(energy[p[0]] - energy[p[1]])
            if abs(abs(energy[a] - energy[b]) - omega) <= w:
                hits.add(frozenset((a, b)))
    return hits


def test_two_level_spectrum_passes():
    spec = EnergySpectrum((("g", 0.0), ("x", 10.0)), 1.0)
    assert check_selective_coupling(spec, [("g", "x")]) == []


def test_reference_spectrum_passes():
    assert check_selective_coupling(reference_spectrum(1.0), REFERENCE_INTENDED) == []


def test_reference_gaps():
    s = reference_spectrum()
    assert s.energy("A") - s.energy("down") == s.energy("up") - s.energy("A") == 15.0
    assert s.energy("e") - s.energy("e-") == 20.0
    assert s.energy("u+") - s.energy("u") == 30.0
    assert (s.energy("A"), s.energy("e"), s.energy("u")) == (173.0, 1045.0, 1912.0)


def test_counterexample_reports_exactly_one_pair():
    hits = check_selective_coupling(counterexample_spectrum(), REFERENCE_INTENDED)
    assert len(hits) == 1
    h = hits[0]
    assert (h.lower, h.upper) == ("down", "e'")
    assert h.drive == ("up", "e")
    assert h.detuning == pytest.approx(0.0)
    assert "down <-> e'" in report_text(hits)


def test_empty_intended_list_passes():
    assert check_selective_coupling(reference_spectrum(), []) == []
    assert report_text([]).startswith("PASS")


def test_report_independent_of_pair_order():
    flipped = [(b, a) for a, b in REFERENCE_INTENDED][::-1]
    a = check_selective_coupling(counterexample_spectrum(), REFERENCE_INTENDED)
    b = check_selective_coupling(counterexample_spectrum(), flipped)
    assert a == b


def test_spectrum_validation():
    with pytest.raises(ValueError):
        EnergySpectrum((("a", 0.0), ("a", 1.0)))
    with pytest.raises(ValueError):
        EnergySpectrum((("a", 1.0), ("b", 1.0)))
    with pytest.raises(ValueError):
        EnergySpectrum((("a", 0.0), ("b", 1.0)), linewidth=0.0)
    with pytest.raises(KeyError):
        check_selective_coupling(reference_spectrum(), [("up", "nowhere")])


def test_json_round_trip():
    s = counterexample_spectrum(0.5)
    assert EnergySpectrum.from_json(s.to_json()) == s


gaps = st.lists(st.floats(0.5, 40.0), min_size=3, max_size=7)


@given(gaps, st.floats(0.1, 8.0), st.floats(0.0, 1.0))
def test_matches_brute_force_and_is_monotone_in_linewidth(steps, w, shrink):
    levels, e = [], 0.0
    for i, g in enumerate(steps):
        e += g
        levels.append((f"l{i}", e))
    intended = [(levels[0][0], levels[-1][0]), (levels[1][0], levels[-1][0])]
    wide = check_selective_coupling(EnergySpectrum(tuple(levels), w), intended)
    assert {frozenset((h.lower, h.upper)) for h in wide} == brute_force_hits(levels, intended, w)
    narrow = check_selective_coupling(EnergySpectrum(tuple(levels), max(w * shrink, 1e-6)),
                                      intended)
    assert set(narrow) <= set(wide)
