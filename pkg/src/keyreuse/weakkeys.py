"""Tables of public keys whose private scalar is trivially guessable.

Two classes are covered: small scalars (``k < scalar_bound``) and 256-bit
scalars with few set bits (Hamming weight ``<= max_hamming_weight``).

The table only stores a 64-bit x-coordinate prefix plus a compact scalar
code per entry (17 bytes), sorted for binary search. A prefix hit is
confirmed by recomputing ``k*G``, so lookups never return false positives.
"""

from __future__ import annotations

import logging
from math import comb
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .curve import G, N, PublicKey, base_mul, batch_add, point_add
from .errors import BoundsTooLarge

log = logging.getLogger(__name__)

BYTES_PER_ENTRY = 17
DEFAULT_SCALAR_BOUND = 2**20
DEFAULT_MAX_WEIGHT = 3
DEFAULT_MEMORY_BUDGET = 1 << 30
MAX_WEIGHT_GUARD = 8

_KIND_SMALL = 0
_KIND_WEIGHT = 1
_CHUNK = 4096


def estimate_entries(scalar_bound: int, max_hamming_weight: int) -> int:
    """Upper bound on table size (overlap between the classes not removed)."""
    return (scalar_bound - 1) + sum(comb(256, w) for w in range(1, max_hamming_weight + 1))


def _pack_bits(bits: Tuple[int, ...]) -> int:
    # positions are strictly increasing, so only slot 0 can hold 0;
    # a zero in any later slot marks it unused
    code = 0
    for i, b in enumerate(bits):
        code |= b << (8 * i)
    return code


def _unpack_bits(code: int) -> int:
    k = 1 << (code & 0xFF)
    code >>= 8
    while code:
        slot = code & 0xFF
        if slot:
            k |= 1 << slot
        code >>= 8
    return k


def _prefix(x: int) -> int:
    return x >> 192


class WeakKeyTable:
    def __init__(self, scalar_bound: int, max_hamming_weight: int,
                 prefixes: np.ndarray, kinds: np.ndarray, codes: np.ndarray):
        self.scalar_bound = scalar_bound
        self.max_hamming_weight = max_hamming_weight
        order = np.argsort(prefixes, kind="stable")
        self._prefixes = prefixes[order]
        self._kinds = kinds[order]
        self._codes = codes[order]

    def __len__(self) -> int:
        return int(self._prefixes.shape[0])

    def _scalar(self, i: int) -> int:
        code = int(self._codes[i])
        if self._kinds[i] == _KIND_SMALL:
            return code
        return _unpack_bits(code)

    def scalars(self) -> Iterator[int]:
        for i in range(len(self)):
            yield self._scalar(i)

    def items(self) -> Iterator[Tuple[PublicKey, int]]:
        """(key, scalar) pairs; recomputes each point, meant for small tables."""
        for k in self.scalars():
            x, y = base_mul(k)
            yield PublicKey(x, y), k

    def lookup(self, key: PublicKey) -> Optional[int]:
        pre = np.uint64(_prefix(key.x))
        lo = int(np.searchsorted(self._prefixes, pre, side="left"))
        hi = int(np.searchsorted(self._prefixes, pre, side="right"))
        for i in range(lo, hi):
            k = self._scalar(i)
            if base_mul(k) == key.point:
                return k
        return None

    def __contains__(self, key: PublicKey) -> bool:
        return self.lookup(key) is not None

    def save(self, path) -> None:
        np.savez(path, prefixes=self._prefixes, kinds=self._kinds, codes=self._codes,
                 meta=np.array([self.scalar_bound, self.max_hamming_weight], dtype=np.uint64))

    @classmethod
    def load(cls, path) -> "WeakKeyTable":
        with np.load(path) as z:
            bound, weight = (int(v) for v in z["meta"])
            return cls(bound, weight, z["prefixes"], z["kinds"], z["codes"])


def _small_scalar_points(bound: int):
    """Yield (k, point) for 1 <= k < bound, in blocks sharing one inversion."""
    if bound <= 1:
        return
    step = min(_CHUNK, bound - 1)
    # offsets j*G for j = 1..step
    offsets = [G]
    for _ in range(step - 1):
        offsets.append(point_add(offsets[-1], G))
    for j, pt in enumerate(offsets, start=1):
        if j < bound:
            yield j, pt
    start = step
    while start + 1 < bound:
        base = base_mul(start)
        m = min(step, bound - 1 - start)
        pts = batch_add((base, offsets[j]) for j in range(m))
        for j, pt in enumerate(pts, start=1):
            yield start + j, pt
        start += step


def _weight_points(max_weight: int):
    """Yield (bit-positions, point) for every scalar of weight 1..max_weight."""
    powers: List[Tuple[int, int]] = [G]
    for _ in range(255):
        powers.append(point_add(powers[-1], powers[-1]))
    level = [((i,), powers[i]) for i in range(256)]
    yield from level
    for _ in range(2, max_weight + 1):
        nxt = []
        buf_bits, buf_pairs = [], []
        for bits, pt in level:
            for k in range(bits[-1] + 1, 256):
                buf_bits.append(bits + (k,))
                buf_pairs.append((pt, powers[k]))
                if len(buf_pairs) >= _CHUNK:
                    nxt.extend(zip(buf_bits, batch_add(buf_pairs)))
                    buf_bits, buf_pairs = [], []
        if buf_pairs:
            nxt.extend(zip(buf_bits, batch_add(buf_pairs)))
        yield from nxt
        level = nxt


def build_weak_key_table(
    scalar_bound: int = DEFAULT_SCALAR_BOUND,
    max_hamming_weight: int = DEFAULT_MAX_WEIGHT,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> WeakKeyTable:
    if scalar_bound < 2:
        raise ValueError("scalar_bound must be >= 2")
    if not 0 <= max_hamming_weight <= MAX_WEIGHT_GUARD:
        raise BoundsTooLarge(f"max_hamming_weight must be in [0, {MAX_WEIGHT_GUARD}]")
    est = estimate_entries(scalar_bound, max_hamming_weight)
    if est * BYTES_PER_ENTRY > memory_budget:
        raise BoundsTooLarge(
            f"~{est} entries need {est * BYTES_PER_ENTRY} bytes, budget is {memory_budget}")
    if scalar_bound - 1 >= N:
        raise BoundsTooLarge("scalar_bound exceeds the group order")

    prefixes = np.empty(est, dtype=np.uint64)
    kinds = np.empty(est, dtype=np.uint8)
    codes = np.empty(est, dtype=np.uint64)
    n = 0
    for k, pt in _small_scalar_points(scalar_bound):
        prefixes[n] = _prefix(pt[0])
        kinds[n] = _KIND_SMALL
        codes[n] = k
        n += 1
    log.debug("small scalars done: %d", n)
    if max_hamming_weight:
        for bits, pt in _weight_points(max_hamming_weight):
            # scalars below the bound are already present
            if sum(1 << b for b in bits) < scalar_bound:
                continue
            prefixes[n] = _prefix(pt[0])
            kinds[n] = _KIND_WEIGHT
            codes[n] = _pack_bits(bits)
            n += 1
    return WeakKeyTable(scalar_bound, max_hamming_weight,
                        prefixes[:n].copy(), kinds[:n].copy(), codes[:n].copy())
