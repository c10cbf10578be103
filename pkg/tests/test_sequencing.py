import pytest

from lbcsim.engine import FabricState, scripted_stream
from lbcsim.sequencing import (HoldDownTimer, InputPortCounters, hold_expiry,
                               hold_slots, on_cell_forwarded,
                               replay_hold_down_example)
from lbcsim.topology import SwitchGeometry


@pytest.mark.parametrize("sigma,k,expected", [
    (1, 3, 0),    # empty queue: no hold
    (4, 3, 9),    # three cells ahead
    (2, 4, 4),
    (2, 1, 1),    # degenerate single-module fabric
])
def test_hold_slots(sigma, k, expected):
    assert hold_slots(sigma, k) == expected


def test_hold_slots_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        hold_slots(0, 3)


def test_timer_blocks_through_expiry_slot():
    timer = HoldDownTimer()
    on_cell_forwarded(timer, sigma=4, t=3, k=3)
    assert timer.expires_at == hold_expiry(3, 4, 3) == 12
    assert not timer.may_serve(4)
    assert not timer.may_serve(12)
    assert timer.may_serve(13)


def test_zero_hold_allows_next_slot():
    timer = HoldDownTimer()
    on_cell_forwarded(timer, sigma=1, t=2, k=3)
    assert timer.may_serve(3)


def test_fresh_timer_never_blocks():
    timer = HoldDownTimer()
    assert all(timer.may_serve(t) for t in range(5))


def test_walkthrough_replay_insertion_slots():
    got = replay_hold_down_example()
    assert got == [(0, 1, 2), (1, 2, 3), (2, 3, 13), (3, 1, 14)]


def test_walkthrough_with_empty_queues_everywhere():
    got = replay_hold_down_example(preset_backlog={})
    assert [slot for _, _, slot in got] == [2, 3, 5, 6]


def test_walkthrough_degenerate_k1():
    got = replay_hold_down_example(k=1, arrival_slots=(1, 2), preset_backlog={1: 2})
    # first forwarding meets 2 parked cells: hold 2*1 slots, next serve 3 later
    assert [slot for _, _, slot in got] == [2, 5]


def test_input_port_counters_cover_reachable_queues():
    g = SwitchGeometry.symmetric(3)
    state = FabricState(g)
    for ip in range(g.N):
        ipc = state.input_port_counters(ip)
        assert len(ipc.vomq_ids) == g.N  # m * k counters
        i, s = ip // g.k, ip % g.k
        for vid in ipc.vomq_ids:
            lcim, j = vid // g.k, vid % g.k
            r, p = lcim // g.k, lcim % g.k
            assert (r - p) % g.k == (s - i) % g.k
    with pytest.raises(KeyError):
        state.input_port_counters(0).count(10**6)


def test_counters_track_true_occupancy_with_zero_delay():
    g = SwitchGeometry.symmetric(3)
    state = FabricState(g)
    sched = {t: [(t % 9, (3 * t) % 9)] for t in range(40)}
    state.attach_traffic(scripted_stream(sched))
    state.run_slots(60)
    for ip in (0, 4, 8):
        ipc = state.input_port_counters(ip)
        for vid, count in ipc.counts().items():
            assert count == len(state.vomqs[vid].cells)
