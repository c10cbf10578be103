"""Delay, throughput, occupancy, and in-order statistics, plus CSV export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .queueing import Cell

CSV_COLUMNS = [
    "scenario_id", "switch", "pattern", "N", "k", "load", "omega_or_l_or_h",
    "throughput_abs", "throughput_rel", "mean_delay", "p99_delay",
    "max_vomq", "max_cb", "mean_cb", "in_order_violations", "seed",
]


@dataclass
class OccupancyStats:
    """One buffering stage's occupancy summary over the measurement window."""

    max_single: int = 0       # largest single-queue occupancy ever seen
    mean_total: float = 0.0   # time-averaged total occupancy across the stage
    mean_per_queue: float = 0.0  # mean_total / queues that ever held a cell


@dataclass
class MetricsReport:
    """Result of one simulation run."""

    offered_load: float
    measure_slots: int
    num_ports: int
    cells_injected: int
    cells_departed: int
    mean_delay: float
    p99_delay: int
    max_delay: int
    delay_histogram: dict[int, int]
    in_order_violations: int
    voq: OccupancyStats = field(default_factory=OccupancyStats)
    vomq: OccupancyStats = field(default_factory=OccupancyStats)
    cb: OccupancyStats = field(default_factory=OccupancyStats)
    traces: dict | None = None

    @property
    def throughput_abs(self) -> float:
        """Departures per output per slot over the measurement window."""
        return self.cells_departed / (self.num_ports * self.measure_slots)

    @property
    def throughput_rel(self) -> float:
        """Departures relative to arrivals inside the measurement window."""
        if self.cells_injected == 0:
            return 0.0
        return self.cells_departed / self.cells_injected


def throughput(report: MetricsReport) -> tuple[float, float]:
    """(absolute, relative) throughput of a finished run."""
    return report.throughput_abs, report.throughput_rel


class MetricsRecorder:
    """Collects per-slot statistics during a run; window is [start, stop) slots.

    In-order accounting covers the whole run (the guarantee is absolute);
    delay/throughput/occupancy statistics cover the measurement window only.
    """

    def __init__(self, num_ports: int, window_start: int, window_stop: int):
        self.num_ports = num_ports
        self.window_start = window_start
        self.window_stop = window_stop
        n_flows = num_ports * num_ports
        self._next_seq_out = [0] * n_flows
        self.in_order_violations = 0
        self.injected_window = 0
        self.departed_window = 0
        self.injected_total = 0
        self.departed_total = 0
        self._hist: list[int] = []
        self._occ_slots = 0
        self._occ_sums = [0, 0, 0]  # voq, vomq, cb totals integrated per slot

    def in_window(self, t: int) -> bool:
        return self.window_start <= t < self.window_stop

    def record_injection(self, u: int, v: int, t: int) -> None:
        self.injected_total += 1
        if self.window_start <= t < self.window_stop:
            self.injected_window += 1

    def record_departure(self, cell: Cell, t: int) -> bool:
        """Account one OP departure; returns False on an in-order violation."""
        ok = True
        flow = cell.src * self.num_ports + cell.dst
        if cell.seq != self._next_seq_out[flow]:
            self.in_order_violations += 1
            ok = False
        self._next_seq_out[flow] = cell.seq + 1
        self.departed_total += 1
        if self.window_start <= t < self.window_stop:
            self.departed_window += 1
            d = t - cell.t_arrival
            hist = self._hist
            if d >= len(hist):
                hist.extend([0] * (d - len(hist) + 1))
            hist[d] += 1
        return ok

    def record_occupancy(self, voq_total: int, vomq_total: int, cb_total: int) -> None:
        """End-of-slot stage totals; call once per slot inside the window."""
        self._occ_slots += 1
        s = self._occ_sums
        s[0] += voq_total
        s[1] += vomq_total
        s[2] += cb_total

    # -- finalization --

    def _delay_summary(self) -> tuple[float, int, int]:
        total = sum(self._hist)
        if total == 0:
            return 0.0, 0, 0
        mean = sum(d * c for d, c in enumerate(self._hist)) / total
        target = 0.99 * total
        seen = 0
        p99 = 0
        for d, c in enumerate(self._hist):
            seen += c
            if seen >= target:
                p99 = d
                break
        return mean, p99, len(self._hist) - 1

    def finalize(self, offered_load: float,
                 maxima: tuple[int, int, int] = (0, 0, 0),
                 queues_used: tuple[int, int, int] = (0, 0, 0),
                 traces: dict | None = None) -> MetricsReport:
        mean, p99, dmax = self._delay_summary()
        slots = max(1, self._occ_slots)
        voq, vomq, cb = (
            OccupancyStats(
                max_single=maxima[i],
                mean_total=self._occ_sums[i] / slots,
                mean_per_queue=(self._occ_sums[i] / slots / queues_used[i]
                                if queues_used[i] else 0.0),
            )
            for i in range(3)
        )
        return MetricsReport(
            offered_load=offered_load,
            measure_slots=max(1, self.window_stop - self.window_start),
            num_ports=self.num_ports,
            cells_injected=self.injected_window,
            cells_departed=self.departed_window,
            mean_delay=mean,
            p99_delay=p99,
            max_delay=dmax,
            delay_histogram={d: c for d, c in enumerate(self._hist) if c},
            in_order_violations=self.in_order_violations,
            voq=voq,
            vomq=vomq,
            cb=cb,
            traces=traces,
        )


def format_row(scenario_id: str, switch: str, pattern: str, N: int, k: int,
               load: float, shape_param, report: MetricsReport, seed: int) -> list[str]:
    """One CSV row; fixed float formatting keeps reruns byte-identical."""
    return [
        scenario_id,
        switch,
        pattern,
        str(N),
        str(k),
        f"{load:.4f}",
        "" if shape_param == "" else f"{shape_param:g}",
        f"{report.throughput_abs:.6f}",
        f"{report.throughput_rel:.6f}",
        f"{report.mean_delay:.4f}",
        str(report.p99_delay),
        str(report.vomq.max_single),
        str(report.cb.max_single),
        f"{report.cb.mean_per_queue:.6f}",
        str(report.in_order_violations),
        str(seed),
    ]


def render_csv(rows: list[list[str]], version: str | None = None) -> str:
    """CSV text: optional comment line with the tool version, then header + rows."""
    buf = io.StringIO()
    if version is not None:
        buf.write(f"# lbcsim {version}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(path: str, rows: list[list[str]], version: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(rows, version))
