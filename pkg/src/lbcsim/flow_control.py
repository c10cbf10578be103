"""Two-level pause/resume backpressure with configurable signaling delays.

Central queues pause their feeding input ports above T_pv and resume below
T_rv; crosspoint buffers pause, through the central queues, every input port's
traffic for the congested output port above T_pc and resume below T_rc. A
signal raised by a crossing in slot t takes effect for decisions from slot
t + D onward, so a capacity margin of C - T_p >= D guarantees bounded queues
under any traffic.
"""

from __future__ import annotations

from dataclasses import dataclass

PAUSE = "pause"
RESUME = "resume"


class FlowControlConfigError(ValueError):
    """Threshold configuration that cannot guarantee bounded queues."""


@dataclass(frozen=True)
class ThresholdConfig:
    """Pause/resume thresholds (cells) and signaling delays (slots)."""

    t_pv: int
    t_rv: int
    t_pc: int
    t_rc: int
    d_v: int = 0
    d_c: int = 0

    def validate(self, c_vomq: int, c_cb: int) -> None:
        if self.t_pv <= self.t_rv:
            raise FlowControlConfigError(f"need t_pv > t_rv, got {self.t_pv} <= {self.t_rv}")
        if self.t_pc <= self.t_rc:
            raise FlowControlConfigError(f"need t_pc > t_rc, got {self.t_pc} <= {self.t_rc}")
        if self.t_rv < 0 or self.t_rc < 0 or self.d_v < 0 or self.d_c < 0:
            raise FlowControlConfigError("thresholds and delays must be nonnegative")
        if self.t_pv >= c_vomq:
            raise FlowControlConfigError(
                f"central-queue pause threshold {self.t_pv} must be below capacity {c_vomq}")
        if self.t_pc >= c_cb:
            raise FlowControlConfigError(
                f"crosspoint pause threshold {self.t_pc} must be below capacity {c_cb}")
        if c_vomq - self.t_pv < self.d_v:
            raise FlowControlConfigError(
                f"need c_vomq - t_pv >= d_v, got {c_vomq} - {self.t_pv} < {self.d_v}")
        if c_cb - self.t_pc < self.d_c:
            raise FlowControlConfigError(
                f"need c_cb - t_pc >= d_c, got {c_cb} - {self.t_pc} < {self.d_c}")

    @classmethod
    def defaults_for(cls, c_vomq: int, c_cb: int) -> "ThresholdConfig":
        """Ideal-signaling defaults leaving a small margin under each capacity."""
        t_pv = max(1, c_vomq - 4)
        t_pc = max(1, c_cb - 2)
        cfg = cls(t_pv=t_pv, t_rv=max(0, t_pv - 4), t_pc=t_pc, t_rc=max(0, t_pc - 2))
        cfg.validate(c_vomq, c_cb)
        return cfg


def vomq_backpressure(occupancy: int, cfg: ThresholdConfig) -> str | None:
    """Signal a central queue emits at the given occupancy, if any.

    Strict thresholds: pause above t_pv, resume below t_rv, nothing inside
    the hysteresis band (both ends inclusive).
    """
    if occupancy > cfg.t_pv:
        return PAUSE
    if occupancy < cfg.t_rv:
        return RESUME
    return None


def cb_backpressure(occupancy: int, cfg: ThresholdConfig) -> str | None:
    """Signal a crosspoint buffer emits at the given occupancy, if any."""
    if occupancy > cfg.t_pc:
        return PAUSE
    if occupancy < cfg.t_rc:
        return RESUME
    return None


def apply_signal_delay(signal: str, issued_at: int, delay: int) -> int:
    """Slot from which a signal issued at issued_at becomes effective."""
    return issued_at + delay


class PauseState:
    """Active and pending pause flags for central queues and output ports.

    Central-queue flags gate VOQ->VOMQ forwarding of the queue's member IPs;
    per-output flags (driven by any of the output's crosspoint buffers) gate
    every IP's VOQ for that output port. Transitions issued in slot t become
    visible to decisions from slot t + delay via apply_pending.
    """

    def __init__(self, num_vomqs: int, num_outputs: int, num_cbs_per_output: int,
                 cfg: ThresholdConfig):
        self.cfg = cfg
        self._vomq_paused = [False] * num_vomqs     # active flag
        self._vomq_signaled = [False] * num_vomqs   # latest issued state
        n_cbs = num_outputs * num_cbs_per_output
        self._cb_paused = [False] * n_cbs
        self._cb_signaled = [False] * n_cbs
        self._op_pause_count = [0] * num_outputs
        self._cbs_per_op = num_cbs_per_output
        self._pending: dict[int, list[tuple[str, int, bool]]] = {}
        self.signals_issued = 0

    # -- signal generation (call when an occupancy changed during slot t) --

    def note_vomq(self, vomq_id: int, occupancy: int, t: int) -> None:
        sig = vomq_backpressure(occupancy, self.cfg)
        if sig == PAUSE and not self._vomq_signaled[vomq_id]:
            self._vomq_signaled[vomq_id] = True
            self._queue("vomq", vomq_id, True, t, self.cfg.d_v)
        elif sig == RESUME and self._vomq_signaled[vomq_id]:
            self._vomq_signaled[vomq_id] = False
            self._queue("vomq", vomq_id, False, t, self.cfg.d_v)

    def note_cb(self, cb_id: int, occupancy: int, t: int) -> None:
        sig = cb_backpressure(occupancy, self.cfg)
        if sig == PAUSE and not self._cb_signaled[cb_id]:
            self._cb_signaled[cb_id] = True
            self._queue("cb", cb_id, True, t, self.cfg.d_c)
        elif sig == RESUME and self._cb_signaled[cb_id]:
            self._cb_signaled[cb_id] = False
            self._queue("cb", cb_id, False, t, self.cfg.d_c)

    def _queue(self, kind: str, ident: int, paused: bool, t: int, delay: int) -> None:
        at = apply_signal_delay(PAUSE if paused else RESUME, t, delay)
        self._pending.setdefault(at, []).append((kind, ident, paused))
        self.signals_issued += 1

    # -- activation --

    def apply_pending(self, t: int) -> None:
        """Activate all transitions whose effective slot is <= t (call at slot start)."""
        if not self._pending:
            return
        for at in sorted(s for s in self._pending if s <= t):
            for kind, ident, paused in self._pending.pop(at):
                if kind == "vomq":
                    self._vomq_paused[ident] = paused
                else:
                    was = self._cb_paused[ident]
                    if was != paused:
                        self._cb_paused[ident] = paused
                        v = ident // self._cbs_per_op
                        self._op_pause_count[v] += 1 if paused else -1

    # -- queries (reflect transitions applied so far) --

    def vomq_paused(self, vomq_id: int) -> bool:
        return self._vomq_paused[vomq_id]

    def op_paused(self, v: int) -> bool:
        return self._op_pause_count[v] > 0

    def any_pause_active(self) -> bool:
        return any(self._vomq_paused) or any(self._op_pause_count)
