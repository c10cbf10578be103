"""Slot-synchronous simulation loop for the fabric, plus the OQ reference switch.

Phase order inside one slot is fixed and contract-bearing:

  1. output departures      (round-robin over each output's crosspoint buffers)
  2. VOMQ -> CB transfers   (COM configuration selects one queue per link)
  3. VOQ -> VOMQ transfers  (turn-preserving round-robin per input port)
  4. new arrivals           (enqueue into VOQs)
  5. flow-control signals   (raised at the threshold crossing, queued with
                             their delays, applied at slot starts)
  6. slot counter advances

The input arbiter skips empty VOQs but lets a held or paused VOQ keep its
turn (the input idles that slot). Serving a later VOQ out of turn inserts
cells out of cadence with the periodic stage schedule; the resulting
occupancy noise lengthens hold-down times, which scrambles the cadence
further, and the feedback costs several percent of saturation throughput.
With turns preserved, a fully backlogged fabric settles into a collision-free
time-division pattern and carries full line rate.

Departures run before transfers, so a cell spends at least one slot in every
stage; reordering the phases changes every timestamp downstream.

Phases 1 and 2 carry a per-flow in-sequence mask: a head cell is served only
if no older cell of its flow is still queued in the same stage. The input-side
hold-down spaces a flow's cells so the mask is a no-op whenever each output
holds at most one cell per flow, but under transient crosspoint contention
(or crosspoint-full blocking during overload) two cells of a flow can coexist
in different buffers of one output, and an unmasked round-robin arbiter would
reorder them. Serving the first eligible head in round-robin order stays work
conserving: the oldest head at an output is always eligible.

The step loop mutates flat lists through local aliases and updates the
attached recorder's counters in place; multi-million-slot sweeps run in pure
Python, so this function trades a little tidiness for a lot of speed.
"""

from __future__ import annotations

from array import array
from collections import deque
from dataclasses import dataclass
from typing import Iterator

from .flow_control import PauseState, ThresholdConfig
from .metrics import MetricsRecorder, MetricsReport
from .queueing import Cell, CrosspointBuffer, SimulationFault, Voq, Vomq
from .schedule import cim_route, com_route, im_route
from .sequencing import InputPortCounters
from .topology import SwitchGeometry
from .traffic import TrafficSpec, make_generator

DEFAULT_C_VOMQ = 64
DEFAULT_C_CB = 8


@dataclass(frozen=True)
class Scenario:
    """Everything one simulation run needs, fully reproducible from the seed."""

    geometry: SwitchGeometry
    traffic: TrafficSpec
    thresholds: ThresholdConfig | None = None   # None: defaults for the capacities
    c_vomq: int = DEFAULT_C_VOMQ
    c_cb: int = DEFAULT_C_CB
    warmup: int | None = None                   # None: 10 * N * k
    measure: int = 100_000
    seed: int = 0
    record_traces: bool = False
    freeze_hold_timers_during_pause: bool = False

    def resolved_thresholds(self) -> ThresholdConfig:
        cfg = self.thresholds or ThresholdConfig.defaults_for(self.c_vomq, self.c_cb)
        cfg.validate(self.c_vomq, self.c_cb)
        return cfg

    def resolved_warmup(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return 10 * self.geometry.N * self.geometry.k

    def validate(self) -> None:
        if self.measure <= 0:
            raise ValueError(f"measure slots must be positive, got {self.measure}")
        if self.resolved_warmup() < 0:
            raise ValueError("warmup must be nonnegative")
        if self.c_vomq < 1 or self.c_cb < 1:
            raise ValueError("queue capacities must be >= 1")
        self.resolved_thresholds()
        self.traffic.validate(self.geometry)


def scripted_stream(arrivals_by_slot: dict[int, list[tuple[int, int]]]) -> Iterator[list]:
    """Arrival stream from an explicit slot -> [(u, v), ...] schedule (for replays)."""
    t = 0
    while True:
        yield arrivals_by_slot.get(t, [])
        t += 1


class FabricState:
    """All queues, counters, timers, and pause flags of one fabric instance.

    Owned by a single simulation; independent instances may run in parallel.
    """

    def __init__(self, geometry: SwitchGeometry,
                 thresholds: ThresholdConfig | None = None,
                 c_vomq: int = DEFAULT_C_VOMQ, c_cb: int = DEFAULT_C_CB,
                 recorder: MetricsRecorder | None = None,
                 record_traces: bool = False,
                 record_lcim_flows: bool = False,
                 departure_sink: list | None = None,
                 freeze_hold_timers_during_pause: bool = False,
                 abort_on_reorder: bool = True):
        g = geometry
        N, k, m = g.N, g.k, g.m
        self.geometry = g
        self.t = 0
        self.c_vomq = c_vomq
        self.c_cb = c_cb
        cfg = thresholds or ThresholdConfig.defaults_for(c_vomq, c_cb)
        cfg.validate(c_vomq, c_cb)
        self.thresholds = cfg
        self.recorder = recorder
        self.departure_sink = departure_sink
        self.abort_on_reorder = abort_on_reorder
        self.freeze_hold_timers = freeze_hold_timers_during_pause

        # queues, instantiated eagerly: N^2 VOQs, N*k central queues, N*m CBs
        self.voqs = [Voq(u, v) for u in range(N) for v in range(N)]
        self.vomqs = [Vomq(x // k, x % k, j, c_vomq)
                      for x in range(N) for j in range(k)]
        self.cbs = [CrosspointBuffer(r, v, c_cb) for v in range(N) for r in range(m)]
        self._voq_cells = [q.cells for q in self.voqs]
        self._vomq_cells = [q.cells for q in self.vomqs]
        self._cb_cells = [q.cells for q in self.cbs]

        self.timers = [-1] * (N * N)          # hold-down expiry per VOQ
        self.rr_ip = [0] * N
        self.rr_op = [0] * N
        self.pause = PauseState(N * k, N, m, cfg)

        # routing tables over one period
        self._lcim_at = [
            [im_route(u % k, tm, g) * k + cim_route(u // k, tm, g) for u in range(N)]
            for tm in range(k)
        ]
        # per slot phase: central queue selected at link x, and that link's COM
        self._serve_vid_at = [
            [x * k + com_route(x % k, tm, g) for x in range(N)] for tm in range(k)
        ]
        self._com_of_link = [x // k for x in range(N)]

        # occupancy bookkeeping
        self._voq_mask = [0] * N              # bit vv set: VOQ (ip, vv) non-empty
        self._full_mask = (1 << N) - 1
        self._op_cb_cells = [0] * N
        self._voq_total = 0
        self._vomq_total = 0
        self._cb_total = 0
        self._voq_max = 0
        self._vomq_max = 0
        self._cb_max = 0
        self._voq_used = [False] * (N * N)
        self._vomq_used = [False] * (N * k)
        self._cb_used = [False] * (N * m)

        self._next_seq_in = [0] * (N * N)
        # per-flow in-sequence masks: count of the flow's cells in the stage
        # and the seq of its oldest one (windows are contiguous in seq)
        self._vomq_flow_cnt = [0] * (N * N)
        self._vomq_flow_lo = [0] * (N * N)
        self._cb_flow_cnt = [0] * (N * N)
        self._cb_flow_lo = [0] * (N * N)
        self.guard_hits_cb = 0     # output-arbiter skips to preserve flow order
        self.guard_hits_vomq = 0   # central-stage serves idled to preserve order
        self.cb_full_blocks = 0    # central-stage serves idled by a full buffer

        self._traffic: Iterator[list] | None = None
        self._inject_next: list[tuple[int, int]] = []

        self._vomq_hist = ([array("l", [0] * (cfg.d_v + 1)) for _ in range(N * k)]
                           if cfg.d_v > 0 else None)

        self.lcim_flow_counts = array("q", [0] * (N * N)) if record_lcim_flows else None

        self._traces = None
        if record_traces:
            self._traces = {name: array("q") for name in
                            ("arr_voq", "dep_voq", "dep_vomq", "dep_cb",
                             "n_voq", "n_vomq", "n_cb")}

    # -- wiring ------------------------------------------------------------

    def attach_traffic(self, stream: Iterator[list]) -> None:
        self._traffic = stream

    def inject(self, u: int, v: int) -> None:
        """Queue one manual arrival for this slot's arrival phase (tests/replays)."""
        self._inject_next.append((u, v))

    def input_port_counters(self, ip: int) -> InputPortCounters:
        return InputPortCounters(ip, self.geometry, self.ipc_count)

    def ipc_count(self, vomq_id: int) -> int:
        """Occupancy of one central queue as the input ports currently see it."""
        if self._vomq_hist is not None:
            return self._vomq_hist[vomq_id][0]
        return len(self._vomq_cells[vomq_id])

    # -- simulation --------------------------------------------------------

    def step(self) -> None:
        """Advance the fabric by one slot."""
        g = self.geometry
        N, k, m = g.N, g.k, g.m
        t = self.t
        pause = self.pause
        if pause._pending:
            pause.apply_pending(t)
        rec = self.recorder
        if rec is not None:
            win_lo, win_hi = rec.window_start, rec.window_stop
            hist = rec._hist
            dep_seq = rec._next_seq_out
            in_window = win_lo <= t < win_hi
        else:
            in_window = False
        cb_cells = self._cb_cells
        vomq_cells = self._vomq_cells
        voq_cells = self._voq_cells
        cfg = self.thresholds
        t_pv, t_rv, t_pc, t_rc = cfg.t_pv, cfg.t_rv, cfg.t_pc, cfg.t_rc
        d_v, d_c = cfg.d_v, cfg.d_c
        vomq_sig = pause._vomq_signaled
        cb_sig = pause._cb_signaled
        pending = pause._pending
        cb_flow_cnt = self._cb_flow_cnt
        cb_flow_lo = self._cb_flow_lo
        vomq_flow_cnt = self._vomq_flow_cnt
        vomq_flow_lo = self._vomq_flow_lo
        dep_cb = dep_vomq = dep_voq = 0

        # (1) output departures: first in-sequence-eligible head in RR order
        op_cb_cells = self._op_cb_cells
        if self._cb_total:
            rr_op = self.rr_op
            sink = self.departure_sink
            abort = self.abort_on_reorder
            for v in range(N):
                if not op_cb_cells[v]:
                    continue
                ptr = rr_op[v]
                base = v * m
                for off in range(m):
                    r = ptr + off
                    if r >= m:
                        r -= m
                    q = cb_cells[base + r]
                    if not q:
                        continue
                    cell = q[0]
                    flow = cell.src * N + v
                    if cell.seq != cb_flow_lo[flow]:
                        self.guard_hits_cb += 1
                        continue  # an older cell of this flow waits in a sibling CB
                    q.popleft()
                    cell.t_op_depart = t
                    cb_flow_cnt[flow] -= 1
                    cb_flow_lo[flow] = cell.seq + 1
                    op_cb_cells[v] -= 1
                    self._cb_total -= 1
                    dep_cb += 1
                    if cb_sig[base + r] and len(q) < t_rc:
                        cb_sig[base + r] = False
                        pending.setdefault(t + d_c, []).append(("cb", base + r, False))
                        pause.signals_issued += 1
                    rr_op[v] = r + 1 if r + 1 < m else 0
                    if rec is not None:
                        if cell.seq != dep_seq[flow]:
                            rec.in_order_violations += 1
                            if abort:
                                raise SimulationFault(
                                    f"out-of-order departure at OP {v}, slot {t}: "
                                    f"flow {cell.src}->{cell.dst} seq {cell.seq}")
                        dep_seq[flow] = cell.seq + 1
                        rec.departed_total += 1
                        if in_window:
                            rec.departed_window += 1
                            d = t - cell.t_arrival
                            if d >= len(hist):
                                hist.extend([0] * (d - len(hist) + 1))
                            hist[d] += 1
                    if sink is not None:
                        sink.append(cell)
                    break

        # (2) VOMQ -> CB transfers, one candidate per central link
        if self._vomq_total:
            serve_vid = self._serve_vid_at[t % k]
            com_of = self._com_of_link
            c_cb = self.c_cb
            cb_used = self._cb_used
            for x in range(N):
                vid = serve_vid[x]
                q = vomq_cells[vid]
                if not q:
                    continue
                cell = q[0]
                flow = cell.src * N + cell.dst
                if cell.seq != vomq_flow_lo[flow]:
                    # an older cell of this flow is still in a sibling central
                    # queue (possible only after crosspoint-full blocking)
                    self.guard_hits_vomq += 1
                    continue
                cbid = cell.dst * m + com_of[x]
                cbq = cb_cells[cbid]
                occ = len(cbq)
                if occ >= c_cb:
                    self.cb_full_blocks += 1
                    continue  # full crosspoint buffer: the link stays idle
                q.popleft()
                cell.t_vomq_depart = t
                vomq_flow_cnt[flow] -= 1
                vomq_flow_lo[flow] = cell.seq + 1
                cbq.append(cell)
                occ += 1
                if cb_flow_cnt[flow] == 0:
                    cb_flow_lo[flow] = cell.seq
                cb_flow_cnt[flow] += 1
                if occ > self._cb_max:
                    self._cb_max = occ
                if not cb_used[cbid]:
                    cb_used[cbid] = True
                self._vomq_total -= 1
                self._cb_total += 1
                dep_vomq += 1
                op_cb_cells[cell.dst] += 1
                if occ > t_pc and not cb_sig[cbid]:
                    cb_sig[cbid] = True
                    pending.setdefault(t + d_c, []).append(("cb", cbid, True))
                    pause.signals_issued += 1
                vocc = len(q)
                if vocc < t_rv and vomq_sig[vid]:
                    vomq_sig[vid] = False
                    pending.setdefault(t + d_v, []).append(("vomq", vid, False))
                    pause.signals_issued += 1

        # (3) VOQ -> VOMQ transfers, one eligible VOQ per input port
        voq_mask = self._voq_mask
        if self._voq_total:
            lcim_row = self._lcim_at[t % k]
            timers = self.timers
            rr_ip = self.rr_ip
            op_pause = pause._op_pause_count
            vomq_pause = pause._vomq_paused
            c_vomq = self.c_vomq
            vomq_used = self._vomq_used
            flow_counts = self.lcim_flow_counts
            for ip in range(N):
                mask = voq_mask[ip]
                if not mask:
                    continue
                vomq_base = lcim_row[ip] * k
                vbase = ip * N
                ptr = rr_ip[ip]
                # first backlogged VOQ in pointer order owns the slot; if it
                # is held or paused the input idles (see module docstring)
                rot = ((mask >> ptr) | (mask << (N - ptr))) & self._full_mask
                vv = ptr + (rot & -rot).bit_length() - 1
                if vv >= N:
                    vv -= N
                flow = vbase + vv
                if t <= timers[flow]:
                    continue
                if op_pause[vv]:
                    continue
                vid = vomq_base + vv // m
                if vomq_pause[vid]:
                    continue
                q = voq_cells[flow]
                cell = q.popleft()
                if not q:
                    voq_mask[ip] = mask & ~(1 << vv)
                cell.t_voq_depart = t
                vq = vomq_cells[vid]
                occ = len(vq)
                if occ >= c_vomq:
                    raise SimulationFault(
                        f"central queue {vid} overflow at slot {t}: "
                        "flow control failed to pause its inputs")
                vq.append(cell)
                occ += 1
                if vomq_flow_cnt[flow] == 0:
                    vomq_flow_lo[flow] = cell.seq
                vomq_flow_cnt[flow] += 1
                sigma = occ if self._vomq_hist is None \
                    else self._vomq_hist[vid][0] + 1
                timers[flow] = t + (sigma - 1) * k
                if occ > self._vomq_max:
                    self._vomq_max = occ
                if not vomq_used[vid]:
                    vomq_used[vid] = True
                self._voq_total -= 1
                self._vomq_total += 1
                dep_voq += 1
                if occ > t_pv and not vomq_sig[vid]:
                    vomq_sig[vid] = True
                    pending.setdefault(t + d_v, []).append(("vomq", vid, True))
                    pause.signals_issued += 1
                if flow_counts is not None:
                    flow_counts[ip * N + lcim_row[ip]] += 1
                rr_ip[ip] = vv + 1 if vv + 1 < N else 0

        # (4) new arrivals
        if self._traffic is not None:
            arrivals = next(self._traffic)
            if self._inject_next:
                arrivals = self._inject_next + list(arrivals)
                self._inject_next = []
        else:
            arrivals = self._inject_next
            self._inject_next = []
        arr_voq = 0
        if arrivals:
            next_seq = self._next_seq_in
            voq_used = self._voq_used
            for u, v in arrivals:
                idx = u * N + v
                seq = next_seq[idx]
                next_seq[idx] = seq + 1
                q = voq_cells[idx]
                q.append(Cell(u, v, seq, t))
                occ = len(q)
                if occ > self._voq_max:
                    self._voq_max = occ
                if occ == 1:
                    voq_mask[u] |= 1 << v
                if not voq_used[idx]:
                    voq_used[idx] = True
                arr_voq += 1
                if rec is not None:
                    rec.injected_total += 1
                    if in_window:
                        rec.injected_window += 1
            self._voq_total += arr_voq

        # (5) flow-control crossings were raised inline where occupancies changed

        # (6) end-of-slot accounting
        if self._vomq_hist is not None:
            for vid, ring in enumerate(self._vomq_hist):
                ring.append(len(vomq_cells[vid]))
                ring.pop(0)
        if self.freeze_hold_timers and pause.any_pause_active():
            self._extend_frozen_timers(t)
        if in_window:
            rec.record_occupancy(self._voq_total, self._vomq_total, self._cb_total)
        if self._traces is not None:
            tr = self._traces
            tr["arr_voq"].append(arr_voq)
            tr["dep_voq"].append(dep_voq)
            tr["dep_vomq"].append(dep_vomq)
            tr["dep_cb"].append(dep_cb)
            tr["n_voq"].append(self._voq_total)
            tr["n_vomq"].append(self._vomq_total)
            tr["n_cb"].append(self._cb_total)
        self.t = t + 1

    def _extend_frozen_timers(self, t: int) -> None:
        """Optional mode: hold-down timers do not count while their VOQ is paused."""
        g = self.geometry
        N, k, m = g.N, g.k, g.m
        lcim_row = self._lcim_at[t % k]
        for ip in range(N):
            vomq_base = lcim_row[ip] * k
            vbase = ip * N
            for vv in range(N):
                if self.timers[vbase + vv] >= t:
                    if (self.pause._op_pause_count[vv]
                            or self.pause._vomq_paused[vomq_base + vv // m]):
                        self.timers[vbase + vv] += 1

    def run_slots(self, count: int) -> None:
        step = self.step
        for _ in range(count):
            step()

    # -- integrity and reporting --------------------------------------------

    def inflight(self) -> int:
        return self._voq_total + self._vomq_total + self._cb_total

    def audit(self) -> None:
        """Cell-conservation check: recount every queue against the running totals."""
        sums = (sum(len(q) for q in self._voq_cells),
                sum(len(q) for q in self._vomq_cells),
                sum(len(q) for q in self._cb_cells))
        totals = (self._voq_total, self._vomq_total, self._cb_total)
        if sums != totals:
            raise SimulationFault(f"occupancy accounting drifted: {sums} != {totals}")
        if self.recorder is not None:
            flown = self.recorder.injected_total - self.recorder.departed_total
            if flown != self.inflight():
                raise SimulationFault(
                    f"cell conservation violated: injected - departed = {flown}, "
                    f"in flight = {self.inflight()}")

    def occupancy_maxima(self) -> tuple[int, int, int]:
        return self._voq_max, self._vomq_max, self._cb_max

    def queues_used(self) -> tuple[int, int, int]:
        return (sum(self._voq_used), sum(self._vomq_used), sum(self._cb_used))

    def traces(self) -> dict | None:
        return self._traces


def run(scenario: Scenario) -> MetricsReport:
    """Simulate one scenario and return its metrics."""
    scenario.validate()
    g = scenario.geometry
    warmup = scenario.resolved_warmup()
    recorder = MetricsRecorder(g.N, warmup, warmup + scenario.measure)
    state = FabricState(
        g,
        thresholds=scenario.thresholds,
        c_vomq=scenario.c_vomq,
        c_cb=scenario.c_cb,
        recorder=recorder,
        record_traces=scenario.record_traces,
        freeze_hold_timers_during_pause=scenario.freeze_hold_timers_during_pause,
    )
    state.attach_traffic(make_generator(scenario.traffic, g, scenario.seed))
    state.run_slots(warmup + scenario.measure)
    state.audit()
    return recorder.finalize(
        offered_load=scenario.traffic.load,
        maxima=state.occupancy_maxima(),
        queues_used=state.queues_used(),
        traces=state.traces(),
    )


def run_oq_baseline(scenario: Scenario) -> MetricsReport:
    """Ideal output-queued reference: same arrivals, one departure per output per slot."""
    scenario.validate()
    g = scenario.geometry
    N = g.N
    warmup = scenario.resolved_warmup()
    recorder = MetricsRecorder(N, warmup, warmup + scenario.measure)
    stream = make_generator(scenario.traffic, g, scenario.seed)
    queues = [deque() for _ in range(N)]
    next_seq = [0] * (N * N)
    max_q = 0
    total = 0
    for t in range(warmup + scenario.measure):
        if total:
            for v in range(N):
                q = queues[v]
                if q:
                    cell = q.popleft()
                    cell.t_op_depart = t
                    total -= 1
                    recorder.record_departure(cell, t)
        for u, v in next(stream):
            idx = u * N + v
            cell = Cell(u, v, next_seq[idx], t)
            next_seq[idx] += 1
            cell.t_voq_depart = t
            q = queues[v]
            q.append(cell)
            total += 1
            if len(q) > max_q:
                max_q = len(q)
            recorder.record_injection(u, v, t)
        if recorder.in_window(t):
            recorder.record_occupancy(total, 0, 0)
    return recorder.finalize(
        offered_load=scenario.traffic.load,
        maxima=(max_q, 0, 0),
        queues_used=(N, 0, 0),
    )
