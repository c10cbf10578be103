"""Addressing and geometry for the four-stage load-balancing Clos fabric.

The fabric has k input modules (IMs) and k output modules (OMs) with n
external ports each, and m central modules split into an input half (CIM)
and an output half (COM) with queues in between. Only the symmetric setting
n = k = m is supported; every routing rule in this package assumes it.
All indices are zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass


class GeometryError(ValueError):
    """Invalid geometry, or an address outside the geometry's bounds."""


@dataclass(frozen=True)
class SwitchGeometry:
    """Symmetric fabric geometry with N = n*k external ports."""

    n: int  # ports per IM / OM
    k: int  # number of IMs / OMs
    m: int  # number of CIMs / COMs

    def __post_init__(self) -> None:
        if min(self.n, self.k, self.m) < 1:
            raise GeometryError(
                f"geometry fields must be >= 1, got n={self.n} k={self.k} m={self.m}"
            )
        if not (self.n == self.k == self.m):
            raise GeometryError(
                "only symmetric fabrics (n = k = m) are supported, "
                f"got n={self.n} k={self.k} m={self.m}"
            )

    @classmethod
    def symmetric(cls, k: int) -> "SwitchGeometry":
        return cls(n=k, k=k, m=k)

    @property
    def N(self) -> int:
        """Total number of input (and output) ports."""
        return self.n * self.k


@dataclass(frozen=True)
class PortAddress:
    """An external port: (module, port) = IP(i, s) on input, OP(j, d) on output."""

    module: int
    port: int


@dataclass(frozen=True)
class LinkAddress:
    """A CIM output link L_CIM(r, p): port p of central module r."""

    cim: int
    port: int


def _check(value: int, upper: int, what: str) -> None:
    if not 0 <= value < upper:
        raise GeometryError(f"{what} {value} out of range [0, {upper})")


def flat_input_index(addr: PortAddress, geometry: SwitchGeometry) -> int:
    """Flat input index u = i*k + s for IP(i, s)."""
    _check(addr.module, geometry.k, "input module")
    _check(addr.port, geometry.n, "input port")
    return addr.module * geometry.k + addr.port


def flat_output_index(addr: PortAddress, geometry: SwitchGeometry) -> int:
    """Flat output index v = j*m + d for OP(j, d)."""
    _check(addr.module, geometry.k, "output module")
    _check(addr.port, geometry.n, "output port")
    return addr.module * geometry.m + addr.port


def link_flat_index(link: LinkAddress, geometry: SwitchGeometry) -> int:
    """Flat central-link index = r*k + p for L_CIM(r, p)."""
    _check(link.cim, geometry.m, "central module")
    _check(link.port, geometry.k, "central link port")
    return link.cim * geometry.k + link.port


def input_address(u: int, geometry: SwitchGeometry) -> PortAddress:
    """Inverse of flat_input_index."""
    _check(u, geometry.N, "flat input index")
    return PortAddress(u // geometry.k, u % geometry.k)


def output_address(v: int, geometry: SwitchGeometry) -> PortAddress:
    """Inverse of flat_output_index."""
    _check(v, geometry.N, "flat output index")
    return PortAddress(v // geometry.m, v % geometry.m)


def link_address(x: int, geometry: SwitchGeometry) -> LinkAddress:
    """Inverse of link_flat_index."""
    _check(x, geometry.N, "flat link index")
    return LinkAddress(x // geometry.k, x % geometry.k)
