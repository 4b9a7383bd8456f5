"""System model: file library, decentralized cache placement, subfile records.

Fog access points (F-APs) are numbered 1..K.  Sets of F-APs appear in two
forms: ``frozenset[int]`` at API boundaries and integer bitmasks (bit k-1
set for F-AP k) inside the delivery hot path.  Subfile record keys are
``(requester, exclusivity_mask)`` pairs, where the mask names the other
F-APs that cache exactly those bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import InvalidParams

FapSet = frozenset[int]

SubfileKey = tuple[int, int]  # (requester, exclusivity bitmask)


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for k in ids:
        m |= 1 << (k - 1)
    return m


def set_of(mask: int) -> FapSet:
    out = []
    k = 1
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return frozenset(out)


def iter_ids(mask: int) -> Iterator[int]:
    """Yield F-AP ids in a mask in ascending order."""
    k = 1
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def masks_excluding(K: int, k: int) -> Iterator[int]:
    """All 2^(K-1) bitmasks over {1..K} that do not contain F-AP k."""
    low = (1 << (k - 1)) - 1
    for m in range(1 << (K - 1)):
        yield (m & low) | ((m & ~low) << 1)


@dataclass(frozen=True)
class SystemParams:
    """Global system parameters.

    K      number of fog access points
    N      number of library files, N >= K
    M      normalized per-F-AP cache size in file units, 0 < M < N
    F      file size in bits
    B      number of time slots covering the request interval
    delta_b  maximum request delay in slots: a request arriving in slot b
             must be served by the end of slot b + delta_b - 1
    T      optional wall-clock length of the request interval (informational)
    """

    K: int
    N: int
    M: float
    F: int
    B: int
    delta_b: int
    T: float | None = None

    def __post_init__(self) -> None:
        if self.K < 1:
            raise InvalidParams(f"K must be >= 1, got {self.K}")
        if self.N < self.K:
            raise InvalidParams(f"need N >= K, got N={self.N}, K={self.K}")
        if not (0 < self.M < self.N):
            raise InvalidParams(f"need 0 < M < N, got M={self.M}, N={self.N}")
        if self.F < 1:
            raise InvalidParams(f"F must be >= 1, got {self.F}")
        if self.B < 2:
            raise InvalidParams(f"B must be >= 2, got {self.B}")
        if not (1 <= self.delta_b <= self.B):
            raise InvalidParams(
                f"delta_b must be in [1, B], got delta_b={self.delta_b}, B={self.B}"
            )

    @property
    def delta_t(self) -> float | None:
        return None if self.T is None else self.T / self.B

    @property
    def cache_ratio(self) -> float:
        return self.M / self.N

    @property
    def cached_bits_per_file(self) -> int:
        """Bits of each file held by one cache, rounded half-up."""
        return int(math.floor(self.M * self.F / self.N + 0.5))

    def rounding_error(self) -> float:
        """Relative gap |rounded - exact| / F of the per-file cache quota."""
        return abs(self.cached_bits_per_file - self.M * self.F / self.N) / self.F


@dataclass(frozen=True)
class Library:
    """N files of F bits each, stored as a (N, F) uint8 array of 0/1."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.bits.ndim != 2:
            raise InvalidParams("library bits must be a 2-D array")

    @property
    def N(self) -> int:
        return self.bits.shape[0]

    @property
    def F(self) -> int:
        return self.bits.shape[1]

    def file(self, n: int) -> np.ndarray:
        """Bits of file n (1-based)."""
        return self.bits[n - 1]


def generate_library(params: SystemParams, seed: int) -> Library:
    """Draw N uniformly random files of F bits; deterministic given seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    bits = rng.integers(0, 2, size=(params.N, params.F), dtype=np.uint8)
    return Library(bits)


@dataclass(frozen=True)
class CacheLayout:
    """Which bit positions of which file each F-AP caches.

    ``cached[k-1, n-1, p]`` is True when F-AP k holds bit p of file n.
    """

    cached: np.ndarray

    @property
    def K(self) -> int:
        return self.cached.shape[0]

    def positions(self, k: int, n: int) -> np.ndarray:
        """Sorted cached bit positions of file n at F-AP k."""
        return np.flatnonzero(self.cached[k - 1, n - 1])

    def file_matrix(self, n: int) -> np.ndarray:
        """(K, F) bool view of who caches each bit of file n."""
        return self.cached[:, n - 1, :]


def place_caches(library: Library, params: SystemParams, seed: int) -> CacheLayout:
    """Decentralized placement: every F-AP independently caches a uniform
    random subset of round(M*F/N) bit positions of every file."""
    quota = params.cached_bits_per_file
    if not (0 <= quota <= params.F):
        raise InvalidParams(f"per-file cache quota {quota} outside [0, F]")
    rng = np.random.Generator(np.random.PCG64(seed))
    cached = np.zeros((params.K, params.N, params.F), dtype=bool)
    for k in range(params.K):
        for n in range(params.N):
            picks = rng.choice(params.F, size=quota, replace=False)
            cached[k, n, picks] = True
    return CacheLayout(cached)


@dataclass(frozen=True)
class RequestSchedule:
    """Per-slot requester sets plus the demand map.

    slots[b-1] is the set of F-APs whose request arrives during slot b.
    Every F-AP requests exactly once, every slot is nonempty, and the
    slots are pairwise disjoint and cover {1..K}.
    """

    slots: tuple[FapSet, ...]
    demand: Mapping[int, int]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for b, u in enumerate(self.slots, start=1):
            if not u:
                raise InvalidParams(f"slot {b} has no requesters")
            if seen & u:
                raise InvalidParams(f"slot {b} repeats requesters {sorted(seen & u)}")
            seen |= u
        if seen != set(range(1, len(seen) + 1)):
            raise InvalidParams("slots must cover exactly {1..K}")
        for k in seen:
            if k not in self.demand:
                raise InvalidParams(f"no demand recorded for F-AP {k}")

    @property
    def B(self) -> int:
        return len(self.slots)

    @property
    def K(self) -> int:
        return sum(len(u) for u in self.slots)

    def requesters(self, b: int) -> FapSet:
        return self.slots[b - 1]

    def slot_mask(self, b: int) -> int:
        return mask_of(self.slots[b - 1])

    def slot_of(self, k: int) -> int:
        for b, u in enumerate(self.slots, start=1):
            if k in u:
                return b
        raise KeyError(k)

    def deadline_slot(self, k: int, delta_b: int) -> int:
        return min(self.slot_of(k) + delta_b - 1, self.B)

    def has_distinct_demands(self) -> bool:
        return len(set(self.demand.values())) == self.K


def _worst_case_demand(K: int) -> dict[int, int]:
    # All-distinct demands maximize the load; file ids simply mirror F-AP ids.
    return {k: k for k in range(1, K + 1)}


def make_fixed_L_schedule(
    K: int, B: int, L: int, seed: int | None = None
) -> RequestSchedule:
    """Schedule with exactly L requesters per slot.

    Without a seed, slot b holds F-APs (b-1)*L+1 .. b*L.  With a seed, the
    membership is a uniformly random partition of {1..K} into B blocks of L.
    """
    if K != B * L:
        raise InvalidParams(f"fixed-L schedule needs K = B*L, got K={K}, B={B}, L={L}")
    ids = list(range(1, K + 1))
    if seed is not None:
        rng = np.random.Generator(np.random.PCG64(seed))
        ids = [int(x) for x in rng.permutation(K) + 1]
    slots = tuple(
        frozenset(ids[(b - 1) * L : b * L]) for b in range(1, B + 1)
    )
    return RequestSchedule(slots, _worst_case_demand(K))


def make_random_schedule(K: int, B: int, seed: int) -> RequestSchedule:
    """Uniformly random surjective assignment of the K F-APs to B slots.

    Sampled by rejection from the uniform assignment distribution, which is
    exactly uniform over surjections.  K = B short-circuits to a random
    permutation (the surjections are then the bijections).
    """
    if K < B:
        raise InvalidParams(f"need K >= B for nonempty slots, got K={K}, B={B}")
    rng = np.random.Generator(np.random.PCG64(seed))
    if K == B:
        perm = rng.permutation(K) + 1
        slots = tuple(frozenset({int(perm[b])}) for b in range(B))
        return RequestSchedule(slots, _worst_case_demand(K))
    while True:
        assign = rng.integers(1, B + 1, size=K)
        if len(np.unique(assign)) == B:
            break
    slots = tuple(
        frozenset(int(k + 1) for k in np.flatnonzero(assign == b))
        for b in range(1, B + 1)
    )
    return RequestSchedule(slots, _worst_case_demand(K))


def expected_subfile_size(params: SystemParams, s: int) -> float:
    """Law-of-large-numbers size in bits of one subfile of type s.

    A type-s subfile is requested by one F-AP and cached at exactly s-1
    others, so each bit lands in it with probability
    (M/N)^(s-1) * (1 - M/N)^(K-(s-1)).
    """
    if not (1 <= s <= params.K):
        raise InvalidParams(f"type s must be in [1, K], got {s}")
    p = params.cache_ratio
    return (p ** (s - 1)) * ((1.0 - p) ** (params.K - (s - 1))) * params.F


@dataclass
class SubfileRecordTable:
    """The cloud's live record of subfiles, keyed by (requester, mask).

    Entry (k, E) holds the bits of the file requested by F-AP k that are
    cached at every F-AP in E and at none outside E; in particular they
    are not cached at k itself.  Bits cached at k never enter the table:
    they are tracked per requester as the locally held class, which only
    the decoder consumes.  Recovered entries count as empty for every
    later encoding decision.

    mode "bitexact": entries carry concrete bit positions and contents.
    mode "analytic": every class is represented by its expected length,
    so entries are implicit and only recovered flags are stored.
    """

    mode: str
    K: int
    F: int
    demand: Mapping[int, int]
    cache_ratio: float | None = None
    positions: dict[SubfileKey, np.ndarray] | None = None
    contents: dict[SubfileKey, np.ndarray] | None = None
    locally_held: dict[int, np.ndarray] | None = None
    recovered: set[SubfileKey] = field(default_factory=set)

    def raw_length(self, key: SubfileKey) -> float:
        """Length in bits of the entry, ignoring the recovered flag."""
        if self.mode == "analytic":
            s = key[1].bit_count() + 1
            p = self.cache_ratio
            return (p ** (s - 1)) * ((1.0 - p) ** (self.K - (s - 1))) * self.F
        pos = self.positions.get(key)
        return 0 if pos is None else len(pos)

    def live_length(self, key: SubfileKey) -> float:
        return 0 if key in self.recovered else self.raw_length(key)

    def is_live(self, key: SubfileKey) -> bool:
        """True while the entry is nonempty and not yet delivered."""
        if key in self.recovered:
            return False
        if self.mode == "analytic":
            return True
        return key in self.positions

    def mark_recovered(self, key: SubfileKey) -> None:
        self.recovered.add(key)

    def keys_for(self, k: int) -> Iterator[SubfileKey]:
        """All nonempty record keys of requester k."""
        if self.mode == "analytic":
            for m in masks_excluding(self.K, k):
                yield (k, m)
        else:
            kb = 1 << (k - 1)
            for key in self.positions:
                if key[0] == k and not key[1] & kb:
                    yield key

    def table_bits(self, k: int) -> float:
        return sum(self.raw_length(key) for key in self.keys_for(k))

    def locally_held_bits(self, k: int) -> int:
        return len(self.locally_held[k]) if self.locally_held else 0


def partition_into_subfiles(
    library: Library, caches: CacheLayout, schedule: RequestSchedule
) -> SubfileRecordTable:
    """Split every requested file into exclusivity classes (bit-exact mode).

    For requester k the classes over all exclusivity sets, together with
    the locally held class, partition the F bits of its file.
    """
    K, F = caches.K, library.F
    weights = 1 << np.arange(K, dtype=np.uint64)
    positions: dict[SubfileKey, np.ndarray] = {}
    contents: dict[SubfileKey, np.ndarray] = {}
    locally_held: dict[int, np.ndarray] = {}
    for k in range(1, K + 1):
        n = schedule.demand[k]
        who = caches.file_matrix(n)
        w = weights.copy()
        w[k - 1] = 0
        signature = (who * w[:, None]).sum(axis=0)
        own = who[k - 1]
        locally_held[k] = np.flatnonzero(own)
        foreign = np.flatnonzero(~own)
        foreign_sig = signature[foreign]
        for sig in np.unique(foreign_sig):
            pos = foreign[foreign_sig == sig]
            key = (k, int(sig))
            positions[key] = pos
            contents[key] = library.file(n)[pos]
    return SubfileRecordTable(
        mode="bitexact",
        K=K,
        F=F,
        demand=dict(schedule.demand),
        positions=positions,
        contents=contents,
        locally_held=locally_held,
    )


def analytic_subfile_table(
    params: SystemParams, schedule: RequestSchedule
) -> SubfileRecordTable:
    """Record table whose entries are the expected class lengths."""
    return SubfileRecordTable(
        mode="analytic",
        K=params.K,
        F=params.F,
        demand=dict(schedule.demand),
        cache_ratio=params.cache_ratio,
    )
