"""Ring geometry: sites mod n = 4L, distances, regions and the named blocks of the
four-block circuit."""
from __future__ import annotations

import numbers
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Tuple

from ..common.errors import DomainError

MIN_CIRCUIT_L = 2

__all__ = [
    "MIN_CIRCUIT_L",
    "RingLattice",
    "Region",
    "ring_distance",
    "set_distance",
    "state_regions",
    "paper_regions",
    "half_chains",
]


def _as_int(x: object, what: str = "site label") -> int:
    if isinstance(x, bool) or not isinstance(x, numbers.Integral):
        raise DomainError(f"{what} must be an integer, got {x!r}")
    return int(x)


@dataclass(frozen=True)
class RingLattice:
    """The ring Z_n with n = 4*l."""

    l: int

    def __post_init__(self) -> None:
        l = _as_int(self.l, "L")
        if l < 1:
            raise DomainError(f"L must be >= 1, got {l}")
        object.__setattr__(self, "l", l)

    @classmethod
    def from_sites(cls, n: int) -> RingLattice:
        n = _as_int(n, "n")
        if n < 4 or n % 4:
            raise DomainError(f"ring size must be a positive multiple of 4, got {n}")
        return cls(n // 4)

    @property
    def n(self) -> int:
        return 4 * self.l

    def site(self, x: int) -> int:
        """Reduce a label (possibly negative, as in 1-L) mod n."""
        return _as_int(x) % self.n

    def distance(self, x: int, y: int) -> int:
        d = abs(self.site(y) - self.site(x))
        return min(d, self.n - d)

    def region(self, sites: Iterable[int]) -> Region:
        labels = [self.site(s) for s in sites]
        if len(set(labels)) != len(labels):
            raise DomainError(f"duplicate sites after reduction mod {self.n}: {labels}")
        return Region(self, tuple(sorted(labels)))

    def span(self, start: int, stop: int) -> Region:
        """Sites start..stop inclusive, walking upward around the ring."""
        return self.region(range(start, stop + 1))

    def all_sites(self) -> Region:
        return Region(self, tuple(range(self.n)))

    def bond(self, x: int) -> Tuple[int, int]:
        x = self.site(x)
        return x, (x + 1) % self.n

    def check_bond(self, cut: Tuple[int, int]) -> Tuple[int, int]:
        if len(cut) != 2:
            raise DomainError(f"a bond is a pair of sites, got {cut!r}")
        a, b = self.site(cut[0]), self.site(cut[1])
        if b != (a + 1) % self.n:
            raise DomainError(f"({cut[0]}, {cut[1]}) is not a nearest-neighbour bond on n={self.n}")
        return a, b


@dataclass(frozen=True)
class Region:
    lattice: RingLattice
    sites: Tuple[int, ...]

    def __post_init__(self) -> None:
        sites = tuple(_as_int(s) for s in self.sites)
        n = self.lattice.n
        if any(s < 0 or s >= n for s in sites):
            raise DomainError(f"site labels must lie in 0..{n - 1}: {sites}")
        if len(set(sites)) != len(sites):
            raise DomainError(f"duplicate sites: {sites}")
        object.__setattr__(self, "sites", tuple(sorted(sites)))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self) -> Iterator[int]:
        return iter(self.sites)

    def __contains__(self, x: object) -> bool:
        return x in self.sites

    def _same(self, other: Region) -> None:
        if other.lattice != self.lattice:
            raise DomainError("regions live on different lattices")

    def complement(self) -> Region:
        return Region(self.lattice, tuple(s for s in range(self.lattice.n) if s not in self.sites))

    def union(self, other: Region) -> Region:
        self._same(other)
        return Region(self.lattice, tuple(set(self.sites) | set(other.sites)))

    def intersection(self, other: Region) -> Region:
        self._same(other)
        return Region(self.lattice, tuple(set(self.sites) & set(other.sites)))

    def difference(self, other: Region) -> Region:
        self._same(other)
        return Region(self.lattice, tuple(set(self.sites) - set(other.sites)))

    def issubset(self, other: Region) -> bool:
        self._same(other)
        return set(self.sites) <= set(other.sites)

    def isdisjoint(self, other: Region) -> bool:
        self._same(other)
        return not set(self.sites) & set(other.sites)

    @property
    def is_full(self) -> bool:
        return len(self.sites) == self.lattice.n

    def expand(self, r: int) -> Region:
        """All sites within ring distance r of the region (S_r)."""
        r = _as_int(r, "radius")
        if r < 0:
            raise DomainError(f"radius must be >= 0, got {r}")
        if not self.sites:
            return self
        lat = self.lattice
        return Region(
            lat,
            tuple(x for x in range(lat.n) if min(lat.distance(x, s) for s in self.sites) <= r),
        )

    def shifted(self, offset: int) -> Region:
        return self.lattice.region(s + offset for s in self.sites)


def ring_distance(x: int, y: int, lat: RingLattice) -> int:
    return lat.distance(x, y)


def set_distance(a: Region, b: Region) -> int:
    if not a.sites or not b.sites:
        raise DomainError("set distance of an empty region")
    a._same(b)
    lat = a.lattice
    return min(lat.distance(x, y) for x in a.sites for y in b.sites)


def half_chains(lat: RingLattice) -> Dict[str, Region]:
    """left = {1..2L}, right = {2L+1..4L}."""
    L = lat.l
    return {"left": lat.span(1, 2 * L), "right": lat.span(2 * L + 1, 4 * L)}


def state_regions(lat: RingLattice) -> Dict[str, Region]:
    """Blocks of the hard states; valid for any L >= 1."""
    L = lat.l
    out = half_chains(lat)
    out.update(
        zero_block_i=lat.span(1 - L, L),
        identity_block_i=lat.span(L + 1, 3 * L),
        zero_block_f=lat.span(-L, L - 1),
        identity_block_f=lat.span(L, 3 * L - 1),
    )
    return out


def paper_regions(lat: RingLattice) -> Dict[str, Region]:
    """State blocks plus the supports of U_0 and U_I; needs L >= 2."""
    L = lat.l
    if L < MIN_CIRCUIT_L:
        raise DomainError(f"circuit geometry needs L >= {MIN_CIRCUIT_L}, got L={L}")
    out = state_regions(lat)
    out.update(
        u0_support=lat.span(2 - L, L - 1),
        uI_support=lat.span(L + 2, 3 * L - 1),
    )
    return out
