import numpy as np
import pytest

from lbcsim.analysis import (DriftReport, StageTraffic, cb_rates, compute_r2,
                             compute_r2_om, compute_r3, compute_r4, compute_r5,
                             drift_check, output_rates,
                             random_admissible_matrix)
from lbcsim.engine import FabricState
from lbcsim.metrics import MetricsRecorder
from lbcsim.schedule import compound_p1, compound_p2
from lbcsim.topology import SwitchGeometry
from lbcsim.traffic import TrafficSpec, make_generator

G2 = SwitchGeometry.symmetric(2)
G3 = SwitchGeometry.symmetric(3)
RNG = np.random.default_rng(20240817)


def test_r2_structure_on_4x4():
    lam = RNG.uniform(0.0, 0.25, size=(4, 4))
    r2 = compute_r2(lam, compound_p1(G2), 2)
    rowsum = lam.sum(axis=1)
    assert np.allclose(r2[0, [0, 3]], rowsum[0] / 2)
    assert np.allclose(r2[0, [1, 2]], 0.0)
    assert np.allclose(r2[1, [1, 2]], rowsum[1] / 2)


def test_r2_zero_in_zero_out():
    assert compute_r2(np.zeros((4, 4)), compound_p1(G2), 2).sum() == 0


def test_r2_conserves_row_sums_and_support():
    p1 = compound_p1(G3)
    r1 = random_admissible_matrix(RNG, 9, load=0.9)
    r2 = compute_r2(r1, p1, 3)
    assert np.allclose(r2.sum(axis=1), r1.sum(axis=1), atol=1e-12)
    assert ((r2 > 0) == (p1.entries > 0)).all()  # every row sum positive here
    assert (r2[0] > 0).sum() == 3


def test_r3_per_port_split_matches_worked_example():
    lam = RNG.uniform(0.0, 0.25, size=(4, 4))
    p1, p2 = compound_p1(G2), compound_p2(G2)
    r3_0, ports = compute_r3(lam, p1, p2, G2, j=0)
    # cells for OP(0,0): entries lam[:, 0]/2 at the stage-one support
    expected = (lam[:, 0] / 2)[:, None] * p1.entries
    assert np.allclose(ports[0], expected)
    assert np.allclose(sum(ports), r3_0)
    r2_0 = compute_r2_om(lam, p1, G2, 0)
    assert np.allclose(r3_0, r2_0)


def test_r3_zero_in_zero_out():
    r3_j, ports = compute_r3(np.zeros((4, 4)), compound_p1(G2), compound_p2(G2), G2, 1)
    assert r3_j.sum() == 0 and all(p.sum() == 0 for p in ports)


def test_r4_matches_worked_example():
    lam = RNG.uniform(0.0, 0.25, size=(4, 4))
    p1, p2 = compound_p1(G2), compound_p2(G2)
    _, ports = compute_r3(lam, p1, p2, G2, j=0)
    r4_0 = compute_r4(ports[0], G2)
    expected = lam[:, 0].sum() / 2
    assert r4_0.shape == (2, 1)
    assert np.allclose(r4_0, expected)


def test_r4_uniform_sixteenth():
    lam = np.full((4, 4), 1 / 16)
    _, ports = compute_r3(lam, compound_p1(G2), compound_p2(G2), G2, j=0)
    assert np.allclose(compute_r4(ports[0], G2), 0.5 * 0.25)


def test_r5_equals_column_sums_end_to_end():
    for load in (0.4, 1.0):
        r1 = random_admissible_matrix(RNG, 4, load=load)
        assert np.allclose(output_rates(r1, G2), r1.sum(axis=0), atol=1e-9)
    r1 = random_admissible_matrix(RNG, 9, load=0.85)
    assert np.allclose(output_rates(r1, G3), r1.sum(axis=0), atol=1e-9)
    assert compute_r5(np.zeros((3, 1))) == 0.0


def test_stage_traffic_container_is_consistent():
    r1 = random_admissible_matrix(RNG, 9, load=0.7)
    st = StageTraffic.from_rates(r1, G3)
    assert np.allclose(sum(st.r2_by_om), st.r2)
    for j in range(3):
        assert np.allclose(sum(st.r3_by_port[j]), st.r3_by_om[j])
    assert np.allclose(st.r5, r1.sum(axis=0), atol=1e-9)


@pytest.mark.parametrize("k,pattern,expected", [
    (3, "a", (1 / 9, 1 / 3)),
    (3, "b", (1 / 3, 1 / 3)),
    (3, "c", (1 / 3, 1 / 3)),
    (1, "a", (1.0, 1.0)),
    (4, "a", (1 / 16, 1 / 4)),
])
def test_cb_rate_bounds(k, pattern, expected):
    arrival, service = cb_rates(pattern, SwitchGeometry.symmetric(k))
    assert (arrival, service) == pytest.approx(expected)
    assert service >= arrival


def test_cb_rates_rejects_unknown_pattern():
    with pytest.raises(ValueError):
        cb_rates("d", G3)


def test_drift_check_empty_traffic():
    n = [0] * 50
    report = drift_check(n, [0] * 50, [0] * 50, drift_cap=10)
    assert report.ok and report.max_drift == 0


def test_drift_check_detects_identity_violation():
    occ = [0, 1, 2, 4]  # jump inconsistent with arrivals - departures
    report = drift_check(occ, [0, 1, 1, 1], [0, 0, 0, 0], drift_cap=100)
    assert not report.identity_ok


def test_drift_check_flags_linear_growth():
    arr = [3] * 1000
    dep = [2] * 1000
    occ = np.cumsum(np.array(arr) - np.array(dep))
    report = drift_check(occ, arr, dep, drift_cap=500)
    assert report.identity_ok and not report.bounded


def test_drift_check_service_cap():
    report = drift_check([1, 1], [1, 5], [0, 5], drift_cap=10, service_cap=4)
    assert not report.service_ok


def test_random_admissible_matrices_are_admissible():
    for _ in range(5):
        r = random_admissible_matrix(RNG, 9, load=float(RNG.uniform(0.1, 1.0)))
        assert (r >= 0).all()
        assert r.sum(axis=0).max() <= 1 + 1e-9
        assert r.sum(axis=1).max() <= 1 + 1e-9


def test_simulated_central_stage_rates_match_r2():
    """Measured per-(input, central link) forwarding rates agree with the
    stage-one transform of the declared traffic matrix."""
    g = G3
    spec = TrafficSpec("bernoulli_uniform", 0.6)
    rec = MetricsRecorder(g.N, 0, 10**9)
    state = FabricState(g, recorder=rec, record_lcim_flows=True)
    state.attach_traffic(make_generator(spec, g, 77))
    slots = 300_000
    state.run_slots(slots)
    measured = np.asarray(state.lcim_flow_counts, dtype=float).reshape(9, 9) / slots
    declared = compute_r2(np.full((9, 9), 0.6 / 9), compound_p1(g), 3)
    assert np.abs(measured - declared).max() <= 0.01


def test_stage_matrix_debug_dump(tmp_path):
    r1 = random_admissible_matrix(RNG, 4, load=0.8)
    from lbcsim.analysis import dump_stage_matrices
    paths = dump_stage_matrices(StageTraffic.from_rates(r1, G2), str(tmp_path))
    assert any(p.endswith("r5.csv") for p in paths)
    r5 = np.loadtxt(tmp_path / "r5.csv", delimiter=",")
    assert np.allclose(r5, r1.sum(axis=0), atol=1e-6)
