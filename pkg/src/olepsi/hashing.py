"""Permutation-based hashing: Alice's cuckoo table and Bob's padded bin table.

An element x splits into prefix x1 (sigma1 bits) and suffix x2 (sigma2 bits).
Bin index = (h_j(x2) + x1) mod alpha, which absorbs the prefix injectively
because 2^sigma1 <= alpha, so tables only store the suffix together with the
hash index that placed it: enc = j * 2^sigma2 + x2. Empty slots hold one of
two reserved dummy encodings (one per party) that can never match anything.
"""

import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np

from .modvec import dtype_for

HASH_SEED_LEN = 16


class HashingError(Exception):
    pass


class CuckooFailure(HashingError):
    pass


class BinOverflow(HashingError):
    pass


@dataclass(frozen=True)
class HashSeeds:
    """k bin-hash seeds plus one keyed-hash seed, shared by both parties."""

    bin_seeds: tuple
    keyed_seed: bytes

    def __post_init__(self):
        for s in self.bin_seeds:
            if len(s) != HASH_SEED_LEN:
                raise ValueError("bin seed of wrong length")
        if len(self.keyed_seed) != HASH_SEED_LEN:
            raise ValueError("keyed seed of wrong length")

    @classmethod
    def generate(cls, k, randbytes=os.urandom):
        return cls(
            bin_seeds=tuple(randbytes(HASH_SEED_LEN) for _ in range(k)),
            keyed_seed=randbytes(HASH_SEED_LEN),
        )

    def to_bytes(self):
        return b"".join(self.bin_seeds) + self.keyed_seed

    @classmethod
    def from_bytes(cls, data, k):
        if len(data) != (k + 1) * HASH_SEED_LEN:
            raise ValueError("seed block of wrong length")
        parts = [
            data[i * HASH_SEED_LEN : (i + 1) * HASH_SEED_LEN] for i in range(k + 1)
        ]
        return cls(bin_seeds=tuple(parts[:k]), keyed_seed=parts[k])


@dataclass(frozen=True)
class EncodedItem:
    """A table entry: enc = hash_index * 2^sigma2 + suffix."""

    enc: int
    hash_index: int
    origin: int = None


def split_element(x, params):
    """(sigma1-bit prefix, sigma2-bit suffix) of x."""
    return x >> params.sigma2, x & ((1 << params.sigma2) - 1)


def _hash_raw(seed, j, value):
    digest = hashlib.sha256(
        seed + bytes([j]) + value.to_bytes(8, "little")
    ).digest()
    return int.from_bytes(digest[:8], "little")


def bin_hash(j, x2, seeds, params):
    """h_j(x2): seeded hash of the suffix, reduced into [0, alpha)."""
    return _hash_raw(seeds.bin_seeds[j], j, x2) % params.alpha


def bin_index(j, x1, x2, seeds, params):
    """Bin for prefix x1, suffix x2 under hash function j."""
    return (bin_hash(j, x2, seeds, params) + x1) % params.alpha


def encode_item(j, x2, params, origin=None):
    if not 0 <= j < params.k:
        raise ValueError(f"hash index {j} not in [0, {params.k})")
    if not 0 <= x2 < (1 << params.sigma2):
        raise ValueError("suffix out of range")
    return EncodedItem(enc=(j << params.sigma2) + x2, hash_index=j, origin=origin)


def keyed_hash(seed, x, range_size):
    """The shared keyed hash H, reduced into [0, range_size)."""
    digest = hashlib.sha256(seed + x.to_bytes(8, "little")).digest()
    return int.from_bytes(digest[:8], "little") % range_size


def stash_encode(x, seeds, params):
    """Field encoding of a full element for stash comparisons.

    Reduced into [0, k * 2^sigma2) so it can never equal a dummy encoding.
    """
    return keyed_hash(seeds.keyed_seed, x, params.dummy_alice)


def invert_placement(i, enc, seeds, params):
    """Recover the original element from (bin, encoding), or None."""
    j = enc >> params.sigma2
    x2 = enc & ((1 << params.sigma2) - 1)
    if j >= params.k:
        return None
    x1 = (i - bin_hash(j, x2, seeds, params)) % params.alpha
    if x1 >= (1 << params.sigma1):
        return None
    return (x1 << params.sigma2) + x2


def _suffix_hash_map(seeds, params, suffixes):
    """{suffix: [h_0(suffix), ..., h_{k-1}(suffix)]} for the given suffixes."""
    out = {}
    for x2 in suffixes:
        x2 = int(x2)
        out[x2] = [bin_hash(j, x2, seeds, params) for j in range(params.k)]
    return out


def _check_input_set(elements, params):
    arr = np.asarray(list(elements), dtype=np.int64)
    if arr.size > params.n:
        raise ValueError(f"set larger than n={params.n}")
    if arr.size:
        if arr.min() < 0 or arr.max() >= (1 << params.sigma):
            raise ValueError(f"elements must be in [0, 2^{params.sigma})")
        if np.unique(arr).size != arr.size:
            raise ValueError("duplicate elements in input set")
    return arr


@dataclass
class CuckooTable:
    """Alice's table: at most one encoded item per bin, overflow on a stash."""

    bins: np.ndarray      # encoding per bin, dummy_alice when empty
    origins: np.ndarray   # original element per bin, -1 when empty
    stash: list           # original elements that failed to place
    seeds: HashSeeds
    params: object

    def occupied(self):
        return int((self.origins >= 0).sum())


def build_cuckoo_table(elements, params, seed_source=None, seeds=None):
    """Cuckoo-hash the elements; resample seeds on failure when allowed.

    seed_source is a zero-argument callable returning fresh HashSeeds. When
    only fixed seeds are given, a placement failure beyond the stash raises
    CuckooFailure immediately.
    """
    arr = _check_input_set(elements, params)
    if seeds is None and seed_source is None:
        seed_source = lambda: HashSeeds.generate(params.k)
    budget = 16 * max(1, math.ceil(math.log2(max(params.n, 2))))
    attempts = 8 if seed_source is not None else 1

    last_error = None
    for _ in range(attempts):
        if seeds is None:
            seeds = seed_source()
        table = _try_build_cuckoo(arr, params, seeds, budget)
        if table is not None:
            return table
        last_error = CuckooFailure(
            f"placement failed for {arr.size} elements, stash {params.stash_size}"
        )
        seeds = None
        if seed_source is None:
            break
    raise last_error


def _try_build_cuckoo(arr, params, seeds, budget):
    alpha = params.alpha
    sigma2 = params.sigma2
    mask2 = (1 << sigma2) - 1
    bins = np.full(alpha, params.dummy_alice, dtype=np.int64)
    origins = np.full(alpha, -1, dtype=np.int64)
    hash_used = np.full(alpha, -1, dtype=np.int8)
    stash = []

    hmap = _suffix_hash_map(seeds, params, np.unique(arr & mask2))

    for start in arr:
        x = int(start)
        j = 0
        placed = False
        for _ in range(budget):
            x1 = x >> sigma2
            x2 = x & mask2
            i = (hmap[x2][j] + x1) % alpha
            if origins[i] < 0:
                bins[i] = (j << sigma2) + x2
                origins[i] = x
                hash_used[i] = j
                placed = True
                break
            # evict the occupant and reinsert it under its next hash
            evicted, j_ev = int(origins[i]), int(hash_used[i])
            bins[i] = (j << sigma2) + x2
            origins[i] = x
            hash_used[i] = j
            x = evicted
            j = (j_ev + 1) % params.k
        if not placed:
            if len(stash) < params.stash_size:
                stash.append(x)
            else:
                return None
    return CuckooTable(
        bins=bins, origins=origins, stash=stash, seeds=seeds, params=params
    )


@dataclass
class BinTable:
    """Bob's table: every element under each of its k hashes, padded to beta."""

    bins: np.ndarray  # shape (alpha, beta), dummy_bob padding
    seeds: HashSeeds
    params: object


def build_bin_table(elements, params, seeds):
    arr = _check_input_set(elements, params)
    alpha, beta, k = params.alpha, params.beta, params.k
    sigma2 = params.sigma2
    mask2 = (1 << sigma2) - 1

    table = np.full((alpha, beta), params.dummy_bob, dtype=dtype_for(params.dummy_bob + 1))
    if arr.size == 0:
        return BinTable(bins=table, seeds=seeds, params=params)

    y1 = arr >> sigma2
    y2 = arr & mask2
    uniq, inv = np.unique(y2, return_inverse=True)
    hmap = _suffix_hash_map(seeds, params, uniq)
    hvals = np.array([hmap[int(s)] for s in uniq], dtype=np.int64)  # (u, k)

    all_bins = np.concatenate(
        [(hvals[inv, j] + y1) % alpha for j in range(k)]
    )
    all_encs = np.concatenate([(j << sigma2) + y2 for j in range(k)])

    counts = np.bincount(all_bins, minlength=alpha)
    if counts.max() > beta:
        raise BinOverflow(
            f"bin load {int(counts.max())} exceeds beta={beta}; "
            "parameter guarantee violated"
        )
    order = np.argsort(all_bins, kind="stable")
    sorted_bins = all_bins[order]
    sorted_encs = all_encs[order]
    starts = np.zeros(alpha, dtype=np.int64)
    starts[1:] = np.cumsum(counts)[:-1]
    slots = np.arange(sorted_bins.size, dtype=np.int64) - starts[sorted_bins]
    table[sorted_bins, slots] = sorted_encs
    return BinTable(bins=table, seeds=seeds, params=params)
