"""Slot-synchronous traffic generators and rate-matrix tools.

Each generator yields one list of (input, output) arrivals per slot, forever.
Generation is block-based on top of numpy's PCG64 so a (spec, seed) pair
always produces the same arrival sequence, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import SwitchGeometry

PATTERNS = ("bernoulli_uniform", "bursty", "unbalanced", "hotspot", "stress_a", "stress_b")

_BLOCK = 2048
ADMISSIBILITY_TOL = 1e-9


class TrafficSpecError(ValueError):
    """Traffic parameters outside their valid ranges."""


@dataclass(frozen=True)
class TrafficSpec:
    """Declarative description of one traffic pattern at one load point."""

    pattern: str
    load: float
    burst_mean: float = 10.0      # bursty only: mean ON-period length (cells)
    unbalance: float = 0.0        # unbalanced only: omega in [0, 1]
    hotspot_port: int = 0         # hotspot only: flat output index
    seed: int | None = None       # None: the scenario seed is used
    stress_dest: str = "uniform"  # stress_a only: per-cell OP choice in the target OM

    def validate(self, geometry: SwitchGeometry) -> None:
        if self.pattern not in PATTERNS:
            raise TrafficSpecError(f"unknown pattern {self.pattern!r}; expected one of {PATTERNS}")
        if self.pattern == "hotspot":
            # loads above 1 are allowed here so overload runs can be exercised;
            # the per-input emission probability load/N must stay a probability
            if not 0.0 <= self.load <= geometry.N:
                raise TrafficSpecError(f"hotspot load must be in [0, N], got {self.load}")
        elif not 0.0 <= self.load <= 1.0:
            raise TrafficSpecError(f"load must be in [0, 1], got {self.load}")
        if self.pattern == "bursty" and self.burst_mean < 1.0:
            raise TrafficSpecError(f"burst_mean must be >= 1, got {self.burst_mean}")
        if self.pattern == "unbalanced" and not 0.0 <= self.unbalance <= 1.0:
            raise TrafficSpecError(f"unbalance must be in [0, 1], got {self.unbalance}")
        if self.pattern == "hotspot" and not 0 <= self.hotspot_port < geometry.N:
            raise TrafficSpecError(
                f"hotspot_port {self.hotspot_port} out of range [0, {geometry.N})")
        if self.stress_dest not in ("uniform", "round_robin"):
            raise TrafficSpecError(f"stress_dest must be uniform or round_robin, got {self.stress_dest!r}")

    def shape_parameter(self) -> float | int | str:
        """The pattern-specific knob reported in CSV (omega, burst length, or hot port)."""
        if self.pattern == "bursty":
            return self.burst_mean
        if self.pattern == "unbalanced":
            return self.unbalance
        if self.pattern == "hotspot":
            return self.hotspot_port
        return ""


@dataclass(frozen=True)
class RateMatrix:
    """N x N nonnegative long-run rates, input u to output v."""

    rates: np.ndarray = field(repr=False)

    def row_sums(self) -> np.ndarray:
        return self.rates.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.rates.sum(axis=0)


def check_admissible(rates: RateMatrix | np.ndarray, tol: float = ADMISSIBILITY_TOL) -> bool:
    """True iff every row sum and column sum is <= 1 (within tol)."""
    r = rates.rates if isinstance(rates, RateMatrix) else rates
    if (r < 0).any():
        return False
    return bool(r.sum(axis=0).max(initial=0.0) <= 1.0 + tol
                and r.sum(axis=1).max(initial=0.0) <= 1.0 + tol)


def rate_matrix_uniform(load: float, geometry: SwitchGeometry) -> RateMatrix:
    N = geometry.N
    return RateMatrix(np.full((N, N), load / N))


def rate_matrix_unbalanced(load: float, omega: float, geometry: SwitchGeometry) -> RateMatrix:
    """Diagonal flows carry load*(omega + (1-omega)/N); all others load*(1-omega)/N."""
    N = geometry.N
    r = np.full((N, N), load * (1.0 - omega) / N)
    np.fill_diagonal(r, load * (omega + (1.0 - omega) / N))
    return RateMatrix(r)


def rate_matrix_hotspot(load: float, hot: int, geometry: SwitchGeometry) -> RateMatrix:
    """Every input sends load/N to the hot output port; nothing anywhere else."""
    N = geometry.N
    r = np.zeros((N, N))
    r[:, hot] = load / N
    return RateMatrix(r)


def rate_matrix_stress_a(load: float, geometry: SwitchGeometry) -> RateMatrix:
    """k diagonal-source flows IP(i, i), each at rate load/k spread over OM(0)'s ports."""
    N, k, n = geometry.N, geometry.k, geometry.n
    r = np.zeros((N, N))
    for i in range(k):
        r[i * k + i, 0:n] = load / (k * n)
    return RateMatrix(r)


def rate_matrix_stress_b(load: float, geometry: SwitchGeometry) -> RateMatrix:
    """Every IP of IM(i) sends rate load/k to each OP of OM(i)."""
    N, k, m, n = geometry.N, geometry.k, geometry.m, geometry.n
    r = np.zeros((N, N))
    for u in range(N):
        i = u // k
        r[u, i * m:i * m + n] = load / k
    return RateMatrix(r)


def rate_matrix_for(spec: TrafficSpec, geometry: SwitchGeometry) -> RateMatrix:
    """Declared long-run rate matrix of a traffic spec."""
    if spec.pattern in ("bernoulli_uniform", "bursty"):
        return rate_matrix_uniform(spec.load, geometry)
    if spec.pattern == "unbalanced":
        return rate_matrix_unbalanced(spec.load, spec.unbalance, geometry)
    if spec.pattern == "hotspot":
        return rate_matrix_hotspot(spec.load, spec.hotspot_port, geometry)
    if spec.pattern == "stress_a":
        return rate_matrix_stress_a(spec.load, geometry)
    if spec.pattern == "stress_b":
        return rate_matrix_stress_b(spec.load, geometry)
    raise TrafficSpecError(f"unknown pattern {spec.pattern!r}")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _split_block(slot_idx: np.ndarray, us: np.ndarray, vs: np.ndarray, block: int):
    """Turn block-wide event arrays (sorted by slot) into per-slot lists."""
    events = list(zip(us.tolist(), vs.tolist()))
    counts = np.bincount(slot_idx, minlength=block).tolist()
    pos = 0
    for c in counts:
        yield events[pos:pos + c]
        pos += c


def _bernoulli_stream(geometry, rng, p_emit, dest_of):
    """Common i.i.d. scaffold: each source fires with prob p_emit[source]."""
    n_src = len(p_emit)
    p = np.asarray(p_emit)
    while True:
        mask = rng.random((_BLOCK, n_src)) < p
        slot_idx, src_idx = np.nonzero(mask)
        us, vs = dest_of(src_idx, rng)
        yield from _split_block(slot_idx, us, vs, _BLOCK)


def _uniform_gen(spec, geometry, rng):
    N = geometry.N

    def dest(src_idx, rng):
        return src_idx, rng.integers(0, N, size=src_idx.shape[0])

    return _bernoulli_stream(geometry, rng, [spec.load] * N, dest)


def _unbalanced_gen(spec, geometry, rng):
    N, omega = geometry.N, spec.unbalance

    def dest(src_idx, rng):
        n_ev = src_idx.shape[0]
        vs = rng.integers(0, N, size=n_ev)
        stay = rng.random(n_ev) < omega
        vs[stay] = src_idx[stay]
        return src_idx, vs

    return _bernoulli_stream(geometry, rng, [spec.load] * N, dest)


def _hotspot_gen(spec, geometry, rng):
    N, hot = geometry.N, spec.hotspot_port

    def dest(src_idx, rng):
        return src_idx, np.full(src_idx.shape[0], hot, dtype=np.int64)

    return _bernoulli_stream(geometry, rng, [spec.load / N] * N, dest)


def _stress_a_gen(spec, geometry, rng):
    k, n = geometry.k, geometry.n
    sources = np.array([i * k + i for i in range(k)])
    if spec.stress_dest == "round_robin":
        counter = [0]

        def dest(src_idx, rng):
            n_ev = src_idx.shape[0]
            start = counter[0]
            counter[0] = (start + n_ev) % n
            return sources[src_idx], (start + np.arange(n_ev)) % n

    else:
        def dest(src_idx, rng):
            return sources[src_idx], rng.integers(0, n, size=src_idx.shape[0])

    return _bernoulli_stream(geometry, rng, [spec.load / k] * k, dest)


def _stress_b_gen(spec, geometry, rng):
    N, k, m, n = geometry.N, geometry.k, geometry.m, geometry.n

    def dest(src_idx, rng):
        oms = (src_idx // k) * m
        return src_idx, oms + rng.integers(0, n, size=src_idx.shape[0])

    return _bernoulli_stream(geometry, rng, [spec.load] * N, dest)


def _bursty_gen(spec, geometry, rng):
    """ON-OFF modulated arrivals: ON emits one cell/slot to a per-burst target.

    ON lengths are geometric on {1, 2, ...} with mean burst_mean; OFF lengths
    are geometric on {0, 1, ...} with mean burst_mean*(1-load)/load, so the
    long-run per-input load is exactly the requested one (zero-length OFF
    periods are required for load > burst_mean/(burst_mean+1)).
    """
    N, load, l = geometry.N, spec.load, spec.burst_mean
    if load <= 0.0:
        while True:
            yield []
    p_end = 1.0 / l
    off_mean = l * (1.0 - load) / load
    p_wake = 1.0 / (off_mean + 1.0)
    on_left = np.zeros(N, dtype=np.int64)
    off_left = np.zeros(N, dtype=np.int64)
    dest = np.zeros(N, dtype=np.int64)
    grid = np.empty((N, _BLOCK), dtype=np.int64)
    while True:
        grid.fill(-1)
        for u in range(N):
            pos = 0
            while pos < _BLOCK:
                if on_left[u] > 0:
                    take = min(int(on_left[u]), _BLOCK - pos)
                    grid[u, pos:pos + take] = dest[u]
                    on_left[u] -= take
                    pos += take
                    if on_left[u] == 0:
                        off_left[u] = rng.geometric(p_wake) - 1
                elif off_left[u] > 0:
                    take = min(int(off_left[u]), _BLOCK - pos)
                    off_left[u] -= take
                    pos += take
                else:
                    on_left[u] = rng.geometric(p_end)
                    dest[u] = rng.integers(0, N)
        src_idx, slot_idx = np.nonzero(grid >= 0)
        order = np.argsort(slot_idx, kind="stable")
        slot_idx, src_idx = slot_idx[order], src_idx[order]
        vs = grid[src_idx, slot_idx]
        yield from _split_block(slot_idx, src_idx, vs, _BLOCK)


_GENERATORS = {
    "bernoulli_uniform": _uniform_gen,
    "bursty": _bursty_gen,
    "unbalanced": _unbalanced_gen,
    "hotspot": _hotspot_gen,
    "stress_a": _stress_a_gen,
    "stress_b": _stress_b_gen,
}


def make_generator(spec: TrafficSpec, geometry: SwitchGeometry, seed: int):
    """Infinite per-slot arrival stream for a validated spec. spec.seed wins over seed."""
    spec.validate(geometry)
    rng = np.random.default_rng(spec.seed if spec.seed is not None else seed)
    return _GENERATORS[spec.pattern](spec, geometry, rng)


def empirical_rate_matrix(spec: TrafficSpec, geometry: SwitchGeometry,
                          slots: int, seed: int = 0) -> RateMatrix:
    """Measured per-flow arrival rates over the given horizon."""
    N = geometry.N
    counts = np.zeros((N, N), dtype=np.int64)
    gen = make_generator(spec, geometry, seed)
    for _ in range(slots):
        for u, v in next(gen):
            counts[u, v] += 1
    return RateMatrix(counts / slots)
