"""Shared seed-to-array expansion for the seeded and dealer backends.

Every stream is domain-separated by a PRG tag of the form role|section so
the bins and stash sections of one run never reuse stream positions, and
so Alice-side and Bob-side material come from disjoint streams even when
expanded from the same seed.
"""

from __future__ import annotations

import numpy as np

from ..modvec import dtype_for, mod_inv
from ..prg import Prg


def _row_chunk(slot_len):
    return max(1, (1 << 21) // max(slot_len, 1))


def expand_s_a(seed, modulus, count, domain):
    """The per-batch shared s_A values, one stream per section."""
    prg = Prg(seed, tag=b"sA|" + domain)
    return prg.elements(modulus, count, dtype=dtype_for(modulus.q))


def expand_bob_arrays(seed, modulus, count, slot_len, domain):
    """Bob's (r_B, r_B_inv, s_B), each (count, slot_len); r_B is nonzero."""
    dt = dtype_for(modulus.q)
    total = count * slot_len
    r_B = Prg(seed, tag=b"rB|" + domain).nonzero_elements(modulus, total, dtype=dt)
    s_B = Prg(seed, tag=b"sB|" + domain).elements(modulus, total, dtype=dt)
    r_B = r_B.reshape(count, slot_len)
    s_B = s_B.reshape(count, slot_len)
    r_B_inv = np.empty_like(r_B)
    step = _row_chunk(slot_len)
    for lo in range(0, count, step):
        hi = lo + step
        r_B_inv[lo:hi] = mod_inv(r_B[lo:hi], modulus.q)
    return r_B, r_B_inv, s_B


def derive_r_a_arrays(s_A, s_B, r_B_inv, q):
    """r_A = (s_A + s_B) / r_B per slot, chunked to bound temporaries."""
    count, slot_len = s_B.shape
    out = np.empty((count, slot_len), dtype=dtype_for(q))
    wide = np.int32 if q < (1 << 15) else np.int64
    step = _row_chunk(slot_len)
    for lo in range(0, count, step):
        hi = lo + step
        t = s_A[lo:hi, None].astype(wide) + s_B[lo:hi]
        t %= q
        t *= r_B_inv[lo:hi]
        t %= q
        out[lo:hi] = t
    return out
