"""Buffering stages: per-input VOQs, central VOMQs, and output crosspoint buffers.

All queues are strict FIFOs. VOQs are unbounded; VOMQs and crosspoint buffers
are bounded and may never overflow -- flow control must prevent it, and a
violation is a simulation fault, not a drop.
"""

from __future__ import annotations

from collections import deque

from .topology import PortAddress, SwitchGeometry


class SimulationFault(RuntimeError):
    """A fabric invariant was violated (overflow, underflow, or reordering)."""


class Cell:
    """A fixed-size data unit moving through the fabric.

    src and dst are flat input/output indices; seq counts a flow's cells in
    arrival order from 0. Stage timestamps are -1 until the event happens.
    """

    __slots__ = ("src", "dst", "seq", "t_arrival", "t_voq_depart",
                 "t_vomq_depart", "t_op_depart")

    def __init__(self, src: int, dst: int, seq: int, t_arrival: int = -1):
        self.src = src
        self.dst = dst
        self.seq = seq
        self.t_arrival = t_arrival
        self.t_voq_depart = -1
        self.t_vomq_depart = -1
        self.t_op_depart = -1

    def source_address(self, geometry: SwitchGeometry) -> PortAddress:
        return PortAddress(self.src // geometry.k, self.src % geometry.k)

    def dest_address(self, geometry: SwitchGeometry) -> PortAddress:
        return PortAddress(self.dst // geometry.m, self.dst % geometry.m)

    def __repr__(self) -> str:  # debugging aid
        return f"Cell({self.src}->{self.dst} #{self.seq} @{self.t_arrival})"


class _Fifo:
    """FIFO with optional capacity. Subclasses name the timestamps they stamp."""

    _stamp_in: str | None = None
    _stamp_out: str | None = None

    def __init__(self, capacity: int | None = None):
        self.cells: deque[Cell] = deque()
        self.capacity = capacity

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def occupancy(self) -> int:
        return len(self.cells)

    def enqueue(self, cell: Cell, t: int) -> None:
        if self.capacity is not None and len(self.cells) >= self.capacity:
            raise SimulationFault(
                f"overflow on {self!r} at slot {t}: capacity {self.capacity} "
                "reached; flow control failed to hold traffic back"
            )
        if self._stamp_in is not None:
            setattr(cell, self._stamp_in, t)
        self.cells.append(cell)

    def dequeue_head(self, t: int) -> Cell:
        if not self.cells:
            raise SimulationFault(f"dequeue from empty {self!r} at slot {t}")
        cell = self.cells.popleft()
        if self._stamp_out is not None:
            setattr(cell, self._stamp_out, t)
        return cell


class Voq(_Fifo):
    """Virtual output queue at one input port, holding one flow (owner -> dest)."""

    _stamp_in = "t_arrival"
    _stamp_out = "t_voq_depart"

    def __init__(self, owner: int, dest: int):
        super().__init__(capacity=None)
        self.owner = owner  # flat input index
        self.dest = dest    # flat output index

    def __repr__(self) -> str:
        return f"Voq(ip={self.owner}, op={self.dest}, n={len(self.cells)})"


class Vomq(_Fifo):
    """Central queue at link L_CIM(r, p) holding cells bound for one OM."""

    _stamp_out = "t_vomq_depart"

    def __init__(self, cim: int, port: int, dest_om: int, capacity: int):
        super().__init__(capacity=capacity)
        self.cim = cim
        self.port = port
        self.dest_om = dest_om

    def __repr__(self) -> str:
        return (f"Vomq(r={self.cim}, p={self.port}, j={self.dest_om}, "
                f"n={len(self.cells)}/{self.capacity})")


class CrosspointBuffer(_Fifo):
    """Per-(COM, output-port) buffer inside an output module."""

    _stamp_out = "t_op_depart"

    def __init__(self, com: int, dest: int, capacity: int):
        super().__init__(capacity=capacity)
        self.com = com   # COM index r
        self.dest = dest  # flat output index

    def __repr__(self) -> str:
        return f"CB(r={self.com}, op={self.dest}, n={len(self.cells)}/{self.capacity})"


def vomq_for(cell: Cell, link: tuple[int, int], geometry: SwitchGeometry) -> tuple[int, int, int]:
    """Identity (r, p, j) of the central queue a cell joins at link (r, p).

    The queue is selected by the cell's destination output module alone; all
    output ports of that module share it.
    """
    r, p = link
    return r, p, cell.dst // geometry.m


def vomq_index(r: int, p: int, j: int, geometry: SwitchGeometry) -> int:
    """Flat index of VOMQ(r, p, j) in [0, N*k)."""
    return (r * geometry.k + p) * geometry.k + j
