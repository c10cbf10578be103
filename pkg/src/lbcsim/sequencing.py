"""In-sequence forwarding: per-VOMQ occupancy counters and VOQ hold-down timers.

After a cell is forwarded into a central queue whose occupancy (counting the
new cell) is sigma, its VOQ is held for (sigma - 1) * k slots: service is
blocked during slots t+1 .. t+(sigma-1)*k and allowed again from
t + (sigma-1)*k + 1. A cell landing in an empty queue causes no hold.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Iterable

from .topology import SwitchGeometry

INACTIVE = -1


def hold_slots(sigma: int, k: int) -> int:
    """Hold duration after inserting into a queue at occupancy sigma (>= 1)."""
    if sigma < 1:
        raise ValueError(f"occupancy including the new cell must be >= 1, got {sigma}")
    return (sigma - 1) * k


def hold_expiry(t: int, sigma: int, k: int) -> int:
    """Last blocked slot after a forwarding at slot t; next service at expiry + 1."""
    return t + hold_slots(sigma, k)


class HoldDownTimer:
    """Per-VOQ hold-down timer, armed by the occupancy seen at forwarding time."""

    __slots__ = ("expires_at",)

    def __init__(self) -> None:
        self.expires_at = INACTIVE

    def arm(self, t: int, sigma: int, k: int) -> None:
        self.expires_at = hold_expiry(t, sigma, k)

    def active(self, t: int) -> bool:
        return t <= self.expires_at

    def may_serve(self, t: int) -> bool:
        """True iff the guarded VOQ is past its hold window at slot t."""
        return t > self.expires_at


class InputPortCounters:
    """One input port's view of the occupancy of every central queue it reaches.

    An IP reaches the k central links (r, p) with r - p = s - i (mod k), each
    hosting k per-OM queues: N counters in total. With zero signaling delay
    the counts equal the true occupancies; with delay D_v they are a
    D_v-slot-old snapshot (the occupancy_fn decides).
    """

    def __init__(self, owner_ip: int, geometry: SwitchGeometry,
                 occupancy_fn: Callable[[int], int]):
        self.owner = owner_ip
        self._geometry = geometry
        self._occupancy = occupancy_fn
        k = geometry.k
        i, s = owner_ip // k, owner_ip % k
        ids = []
        for r in range(geometry.m):
            p = (r - (s - i)) % k
            for j in range(k):
                ids.append((r * k + p) * k + j)
        self.vomq_ids = tuple(sorted(ids))

    def count(self, vomq_id: int) -> int:
        if vomq_id not in self.vomq_ids:
            raise KeyError(f"VOMQ {vomq_id} is not reachable from IP {self.owner}")
        return self._occupancy(vomq_id)

    def counts(self) -> dict[int, int]:
        return {vid: self._occupancy(vid) for vid in self.vomq_ids}


def on_cell_forwarded(timer: HoldDownTimer, sigma: int, t: int, k: int) -> None:
    """Arm the forwarding VOQ's timer from the occupancy sigma seen at insertion."""
    timer.arm(t, sigma, k)


def replay_hold_down_example(
    k: int = 3,
    arrival_slots: Iterable[int] = (1, 2, 4, 5),
    preset_backlog: dict[int, int] | None = None,
    horizon: int = 200,
) -> list[tuple[int, int, int]]:
    """Replay the canonical single-flow hold-down scenario.

    One VOQ receives cells at the given slots; consecutive forwardings land in
    cyclically successive central queues, labeled 1..k in order of first use.
    preset_backlog maps a queue label to a frozen count of foreign cells
    (their service is suspended for the walkthrough); the flow's own cells
    drain after one full period (k slots), before any same-slot insertion.

    Returns (cell_seq, queue_label, slot) per forwarding, in slot order.
    With the defaults this yields insertions at slots 2, 3, 13, 14.
    """
    preset = dict(preset_backlog) if preset_backlog is not None else {2: 3}
    arrivals = sorted(arrival_slots)
    voq: deque[int] = deque()
    timer = HoldDownTimer()
    labels: dict[int, int] = {}          # slot position mod k -> label
    own_inserts: dict[int, list[int]] = {}  # label -> own-cell insertion slots
    out: list[tuple[int, int, int]] = []
    next_arrival = 0
    for t in range(horizon):
        if voq and timer.may_serve(t):
            pos = t % k
            label = labels.setdefault(pos, len(labels) + 1)
            parked = [x for x in own_inserts.get(label, ()) if x + k > t]
            sigma = preset.get(label, 0) + len(parked) + 1
            seq = voq.popleft()
            own_inserts.setdefault(label, []).append(t)
            on_cell_forwarded(timer, sigma, t, k)
            out.append((seq, label, t))
        while next_arrival < len(arrivals) and arrivals[next_arrival] == t:
            voq.append(next_arrival)
            next_arrival += 1
        if next_arrival == len(arrivals) and not voq:
            break
    return out
