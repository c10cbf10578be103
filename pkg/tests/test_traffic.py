import numpy as np
import pytest

from lbcsim.topology import SwitchGeometry
from lbcsim.traffic import (PATTERNS, RateMatrix, TrafficSpec,
                            TrafficSpecError, check_admissible,
                            empirical_rate_matrix, make_generator,
                            rate_matrix_for, rate_matrix_hotspot,
                            rate_matrix_unbalanced)

G4 = SwitchGeometry.symmetric(2)   # N = 4
G16 = SwitchGeometry.symmetric(4)  # N = 16


def test_uniform_rates_are_admissible_at_full_load():
    r = rate_matrix_for(TrafficSpec("bernoulli_uniform", 1.0), G16)
    assert check_admissible(r)
    assert np.allclose(r.row_sums(), 1.0) and np.allclose(r.col_sums(), 1.0)


def test_single_oversized_entry_is_inadmissible():
    r = np.full((4, 4), 0.01)
    r[1, 2] = 1.5
    assert not check_admissible(r)


def test_unbalanced_rates_worked_values():
    r = rate_matrix_unbalanced(1.0, 0.6, G4).rates
    assert np.allclose(np.diag(r), 0.7)
    off = r[~np.eye(4, dtype=bool)]
    assert np.allclose(off, 0.1)
    assert check_admissible(RateMatrix(r))


def test_unbalanced_limits():
    uniform = rate_matrix_unbalanced(0.8, 0.0, G4).rates
    assert np.allclose(uniform, 0.2)
    directional = rate_matrix_unbalanced(0.8, 1.0, G4).rates
    assert np.allclose(np.diag(directional), 0.8)
    assert np.allclose(directional[~np.eye(4, dtype=bool)], 0.0)


def test_hotspot_rates():
    r = rate_matrix_hotspot(1.0, 2, G4).rates
    assert np.allclose(r[:, 2], 0.25)
    assert r[:, [0, 1, 3]].sum() == 0
    assert check_admissible(RateMatrix(r))
    assert rate_matrix_hotspot(0.0, 2, G4).rates.sum() == 0


def test_stress_pattern_rates():
    g = SwitchGeometry.symmetric(3)
    ra = rate_matrix_for(TrafficSpec("stress_a", 1.0), g).rates
    sources = {i * 3 + i for i in range(3)}
    assert {u for u in range(9) if ra[u].sum() > 0} == sources
    assert np.allclose(ra[list(sources)][:, :3], 1 / 9)
    assert ra[:, 3:].sum() == 0
    rb = rate_matrix_for(TrafficSpec("stress_b", 1.0), g).rates
    for u in range(9):
        j = u // 3
        assert np.allclose(rb[u, 3 * j:3 * j + 3], 1 / 3)
    assert check_admissible(RateMatrix(ra)) and check_admissible(RateMatrix(rb))


def test_spec_validation():
    with pytest.raises(TrafficSpecError):
        TrafficSpec("nonsense", 0.5).validate(G4)
    with pytest.raises(TrafficSpecError):
        TrafficSpec("bernoulli_uniform", 1.2).validate(G4)
    with pytest.raises(TrafficSpecError):
        TrafficSpec("unbalanced", 0.5, unbalance=1.5).validate(G4)
    with pytest.raises(TrafficSpecError):
        TrafficSpec("hotspot", 0.5, hotspot_port=4).validate(G4)
    with pytest.raises(TrafficSpecError):
        TrafficSpec("bursty", 0.5, burst_mean=0.5).validate(G4)
    TrafficSpec("hotspot", 1.2, hotspot_port=0).validate(G4)  # overload allowed


def test_identical_seeds_reproduce_the_arrival_sequence():
    for pattern in PATTERNS:
        spec = TrafficSpec(pattern, 0.7, burst_mean=5, unbalance=0.4, hotspot_port=1)
        a = make_generator(spec, G4, seed=99)
        b = make_generator(spec, G4, seed=99)
        seq_a = [next(a) for _ in range(400)]
        seq_b = [next(b) for _ in range(400)]
        assert seq_a == seq_b, pattern
        c = make_generator(spec, G4, seed=100)
        assert [next(c) for _ in range(400)] != seq_a


def test_extreme_loads():
    gen0 = make_generator(TrafficSpec("bernoulli_uniform", 0.0), G4, 1)
    assert all(next(gen0) == [] for _ in range(500))
    gen1 = make_generator(TrafficSpec("bernoulli_uniform", 1.0), G4, 1)
    assert all(len(next(gen1)) == 4 for _ in range(500))
    burst1 = make_generator(TrafficSpec("bursty", 1.0, burst_mean=7), G4, 1)
    assert all(len(next(burst1)) == 4 for _ in range(500))  # never OFF


@pytest.mark.parametrize("spec", [
    TrafficSpec("bernoulli_uniform", 0.5),
    TrafficSpec("bursty", 0.5, burst_mean=10),
    TrafficSpec("bursty", 0.6, burst_mean=30),
    TrafficSpec("unbalanced", 0.8, unbalance=0.6),
    TrafficSpec("hotspot", 0.8, hotspot_port=7),
    TrafficSpec("stress_a", 0.9),
    TrafficSpec("stress_b", 0.9),
], ids=lambda s: f"{s.pattern}-{s.burst_mean:g}" if s.pattern == "bursty" else s.pattern)
def test_long_run_rates_converge_to_declared_matrix(spec):
    slots = 1_000_000
    measured = empirical_rate_matrix(spec, G16, slots, seed=5).rates
    declared = rate_matrix_for(spec, G16).rates
    assert np.abs(measured - declared).max() <= 0.01


def test_bursty_mean_burst_length():
    spec = TrafficSpec("bursty", 0.5, burst_mean=10)
    gen = make_generator(spec, G16, seed=31)
    slots = 1_000_000
    dests = np.full((16, slots), -1, dtype=np.int64)
    for t in range(slots):
        for u, v in next(gen):
            dests[u, t] = v
    # a burst is a maximal run of consecutive ON slots with one destination
    bursts = 0
    cells = 0
    for u in range(16):
        row = dests[u]
        on = row >= 0
        cells += int(on.sum())
        starts = on & (~np.roll(on, 1) | (row != np.roll(row, 1)))
        starts[0] = on[0]
        bursts += int(starts.sum())
    measured_load = cells / (16 * slots)
    assert abs(measured_load - 0.5) <= 0.01
    assert abs(cells / bursts - 10.0) <= 0.2
