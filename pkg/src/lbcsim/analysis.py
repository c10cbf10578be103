"""Independent matrix oracle for the fabric: per-stage traffic transforms,
crosspoint-buffer rate bounds, and weak-stability drift checks.

The pipeline follows an admissible N x N rate matrix R1 through the stages:
R2 spreads every input's aggregate rate evenly over its k central links
(support = P1), R3 carries it across the central-output stage (every central
queue reaches its output module exactly once per period, verified against
P2), R4 collapses each output port's share onto its m crosspoint buffers,
and R5 is the scalar rate leaving each output port. For any admissible input,
R5(v) equals the column-v sum of R1: nothing is lost on the way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedule import CompoundPermutation, compound_p1, compound_p2
from .topology import SwitchGeometry

CONSERVATION_TOL = 1e-9


def _entries(p) -> np.ndarray:
    return p.entries if isinstance(p, CompoundPermutation) else np.asarray(p)


def compute_r2(r1: np.ndarray, p1, k: int) -> np.ndarray:
    """Central-stage traffic: each input's row sum, split 1/k over P1's support."""
    r1 = np.asarray(r1, dtype=float)
    return (r1.sum(axis=1) / k)[:, None] * _entries(p1)


def compute_r2_om(r1: np.ndarray, p1, geometry: SwitchGeometry, j: int) -> np.ndarray:
    """The slice of R2 held in central queues bound for output module j."""
    r1 = np.asarray(r1, dtype=float)
    m = geometry.m
    partial = r1[:, j * m:j * m + geometry.n].sum(axis=1)
    return (partial / geometry.k)[:, None] * _entries(p1)


def compute_r3(r1: np.ndarray, p1, p2, geometry: SwitchGeometry,
               j: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """COM-stage traffic for OM(j) and its per-output-port split.

    Every central queue feeding OM(j) is connected to it exactly once per
    period; that link's existence is verified against P2 and the aggregated
    rates pass through unchanged, so R3(j) keeps R2(j)'s support and
    sum_d R3(j, d) = R3(j).
    """
    k, m = geometry.k, geometry.m
    p2e = _entries(p2)
    for x in range(geometry.N):
        r = x // k
        if not p2e[x, j * k + r]:
            raise ValueError(
                f"COM compound permutation misses link {x} -> OM {j}; "
                "schedule is not a valid mirrored cycle")
    r1 = np.asarray(r1, dtype=float)
    p1e = _entries(p1)
    per_port = [(r1[:, j * m + d] / k)[:, None] * p1e for d in range(geometry.n)]
    r3_j = sum(per_port)
    return r3_j, per_port


def compute_r4(r3_jd: np.ndarray, geometry: SwitchGeometry) -> np.ndarray:
    """Per-crosspoint-buffer rates at one output port (m x 1 column).

    Literally D_s * R3(j,d) * A_s with D_s the m x N all-ones matrix and A_s
    the N x 1 selector picking the first column of every k-block.
    """
    m, k, N = geometry.m, geometry.k, geometry.N
    d_s = np.ones((m, N))
    a_s = np.zeros((N, 1))
    a_s[::k, 0] = 1.0
    return d_s @ np.asarray(r3_jd, dtype=float) @ a_s


def compute_r5(r4_v: np.ndarray) -> float:
    """Rate leaving one output port: the sum over its crosspoint buffers."""
    r4_v = np.asarray(r4_v, dtype=float)
    return float((np.ones((1, r4_v.shape[0])) @ r4_v).item())


def output_rates(r1: np.ndarray, geometry: SwitchGeometry) -> np.ndarray:
    """R5 for every output, via the full per-stage pipeline."""
    p1 = compound_p1(geometry)
    p2 = compound_p2(geometry)
    out = np.zeros(geometry.N)
    for j in range(geometry.k):
        _, per_port = compute_r3(r1, p1, p2, geometry, j)
        for d, r3_jd in enumerate(per_port):
            out[j * geometry.m + d] = compute_r5(compute_r4(r3_jd, geometry))
    return out


@dataclass(frozen=True)
class StageTraffic:
    """All per-stage transforms of one rate matrix, computed eagerly."""

    r1: np.ndarray
    r2: np.ndarray
    r2_by_om: tuple[np.ndarray, ...]
    r3_by_om: tuple[np.ndarray, ...]
    r3_by_port: tuple[tuple[np.ndarray, ...], ...]
    r4: tuple[np.ndarray, ...]   # one m x 1 column per output
    r5: np.ndarray               # one scalar per output

    @classmethod
    def from_rates(cls, r1: np.ndarray, geometry: SwitchGeometry) -> "StageTraffic":
        r1 = np.asarray(r1, dtype=float)
        p1 = compound_p1(geometry)
        p2 = compound_p2(geometry)
        k = geometry.k
        r2 = compute_r2(r1, p1, k)
        r2_by_om, r3_by_om, r3_by_port = [], [], []
        r4, r5 = [], []
        for j in range(k):
            r2_by_om.append(compute_r2_om(r1, p1, geometry, j))
            r3_j, per_port = compute_r3(r1, p1, p2, geometry, j)
            r3_by_om.append(r3_j)
            r3_by_port.append(tuple(per_port))
            for r3_jd in per_port:
                col = compute_r4(r3_jd, geometry)
                r4.append(col)
                r5.append(compute_r5(col))
        return cls(r1=r1, r2=r2, r2_by_om=tuple(r2_by_om), r3_by_om=tuple(r3_by_om),
                   r3_by_port=tuple(r3_by_port), r4=tuple(r4), r5=np.array(r5))


def dump_stage_matrices(stages: StageTraffic, directory: str) -> list[str]:
    """Debug emission: one CSV per stage transform, returned as paths."""
    import os

    os.makedirs(directory, exist_ok=True)
    written = []

    def save(name: str, matrix) -> None:
        path = os.path.join(directory, f"{name}.csv")
        np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt="%.9g")
        written.append(path)

    save("r1", stages.r1)
    save("r2", stages.r2)
    for j, m in enumerate(stages.r2_by_om):
        save(f"r2_om{j}", m)
    for j, m in enumerate(stages.r3_by_om):
        save(f"r3_om{j}", m)
    save("r4", np.hstack(stages.r4))
    save("r5", stages.r5)
    return written


def cb_rates(pattern: str, geometry: SwitchGeometry) -> tuple[float, float]:
    """(arrival-rate bound, service-rate lower bound) for one crosspoint buffer.

    pattern a: every input sends only to one OM's ports  -> arrivals 1/k^2
    pattern b: one IM's inputs each send 1/k to one OM's ports -> arrivals 1/k
    pattern c: a single full-rate flow                   -> arrivals 1/k
    The round-robin output arbiter guarantees service of at least 1/k, so no
    crosspoint buffer grows in any of the three cases.
    """
    k = geometry.k
    s_cb = 1.0 / k
    if pattern == "a":
        return 1.0 / (k * k), s_cb
    if pattern == "b":
        return 1.0 / k, s_cb
    if pattern == "c":
        return 1.0 / k, s_cb
    raise ValueError(f"unknown stress pattern {pattern!r}; expected a, b, or c")


@dataclass(frozen=True)
class DriftReport:
    identity_ok: bool       # N(t) = N(0) + sum A - sum D holds exactly
    service_ok: bool        # per-slot departures never exceed the service cap
    max_drift: int          # max_t N(t) - N(0)
    bounded: bool           # max_drift below the configured cap

    @property
    def ok(self) -> bool:
        return self.identity_ok and self.service_ok and self.bounded


def drift_check(occupancy, arrivals, departures, drift_cap: int,
                service_cap: int | None = None) -> DriftReport:
    """Weak-stability check for one stage's per-slot traces.

    occupancy[t] is the end-of-slot total, arrivals/departures the per-slot
    counts. The recursion N(t) = N(t-1) + A(t) - D(t) must hold exactly;
    boundedness means the occupancy never drifts more than drift_cap above
    its starting point.
    """
    occ = np.asarray(occupancy, dtype=np.int64)
    arr = np.asarray(arrivals, dtype=np.int64)
    dep = np.asarray(departures, dtype=np.int64)
    if not (occ.shape == arr.shape == dep.shape) or occ.size == 0:
        raise ValueError("traces must be equally sized and non-empty")
    reconstructed = np.cumsum(arr - dep)
    start = int(occ[0] - arr[0] + dep[0])  # N(0), before the first traced slot
    identity_ok = bool((occ == start + reconstructed).all())
    service_ok = True if service_cap is None else bool((dep <= service_cap).all())
    max_drift = int((occ - start).max(initial=0))
    return DriftReport(identity_ok=identity_ok, service_ok=service_ok,
                       max_drift=max_drift, bounded=max_drift < drift_cap)


def random_admissible_matrix(rng: np.random.Generator, N: int,
                             load: float = 1.0) -> np.ndarray:
    """Random admissible rate matrix: a convex mix of N permutation matrices.

    Row and column sums all equal load, so any load <= 1 is admissible by
    construction.
    """
    weights = rng.dirichlet(np.ones(N)) * load
    r = np.zeros((N, N))
    for w in weights:
        perm = rng.permutation(N)
        r[np.arange(N), perm] += w
    return r
