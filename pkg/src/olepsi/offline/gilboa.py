"""Product sharing from bitwise oblivious transfer.

One multiplication r_A * r_B is shared through ell = ceil(log2 q) OTs:
for bit position i (1-based) Alice offers (-rho_i, r_A*2^(i-1) - rho_i)
and Bob selects with bit i-1 of r_B, receiving o_i.  Then

    rho_i + o_i = b_i * r_A * 2^(i-1)

so s_A = sum rho_i and s_B = sum o_i satisfy s_A + s_B = r_A * r_B.

The batch form shares one s_A across all slots of a batch by constraining
each slot's rho list to sum to it.
"""

from __future__ import annotations

import secrets

import numpy as np

from ..modvec import dtype_for
from ..prg import Prg, Seed
from ..tuples import AliceInventory, BobInventory


def gilboa_share(ot, alice_in, bob_in, ell=None, rho=None):
    """Share the product of two field elements; returns (s_A, s_B).

    rho may be injected for reproducibility; by default each rho_i is
    drawn fresh.  Costs exactly ell OT invocations.
    """
    modulus = alice_in.modulus
    if bob_in.modulus != modulus:
        raise ValueError("inputs from different fields")
    if bob_in.value == 0:
        raise ValueError("bob_in must be nonzero")
    q = modulus.q
    ell = modulus.bit_len if ell is None else ell
    if bob_in.value >> ell:
        raise ValueError("ell too small to decompose bob_in")
    if rho is None:
        rho = [secrets.randbelow(q) for _ in range(ell)]
    if len(rho) != ell:
        raise ValueError("rho must have exactly ell entries")
    r_A, r_B = alice_in.value, bob_in.value
    s_A = 0
    s_B = 0
    for i in range(1, ell + 1):
        m0 = (-rho[i - 1]) % q
        m1 = (r_A * pow(2, i - 1, q) - rho[i - 1]) % q
        ot.ot_send(modulus.element(m0), modulus.element(m1))
        o = ot.ot_receive((r_B >> (i - 1)) & 1)
        s_A = (s_A + rho[i - 1]) % q
        s_B = (s_B + o.value) % q
    return modulus.element(s_A), modulus.element(s_B)


def gilboa_batch(ot, params, count, *, slot_len=None, seed=None, rho_sink=None):
    """Generate `count` batches over OT: slot_len * ell invocations each.

    Per batch: one shared s_A, independent (r_A, r_B) per slot, and per
    slot a rho list constrained to sum to s_A, so every slot's Gilboa run
    lands on the same Alice share.  rho_sink, if given, receives the
    (chunk, slot, ell) rho arrays for inspection.
    """
    modulus = params.modulus
    q = modulus.q
    L = params.beta if slot_len is None else slot_len
    ell = modulus.bit_len
    prg = Prg(seed if seed is not None else Seed.random(), tag=b"gilboa")
    dt = dtype_for(q)
    s_A = prg.elements(modulus, count, dtype=dt)
    r_A = prg.elements(modulus, count * L, dtype=dt).reshape(count, L)
    r_B = prg.nonzero_elements(modulus, count * L, dtype=dt).reshape(count, L)
    s_B = np.empty((count, L), dtype=dt)
    pow2 = np.array([pow(2, i, q) for i in range(ell)], dtype=np.int64)
    positions = np.arange(ell, dtype=np.int64)
    step = max(1, (1 << 20) // max(L * ell, 1))
    for lo in range(0, count, step):
        hi = min(lo + step, count)
        c = hi - lo
        rho = np.empty((c, L, ell), dtype=np.int64)
        if ell > 1:
            rho[:, :, : ell - 1] = prg.elements(
                modulus, c * L * (ell - 1)
            ).reshape(c, L, ell - 1)
        partial = rho[:, :, : ell - 1].sum(axis=2) % q
        rho[:, :, ell - 1] = (s_A[lo:hi, None].astype(np.int64) - partial) % q
        if rho_sink is not None:
            rho_sink.append(rho.copy())
        m0 = (-rho) % q
        m1 = (r_A[lo:hi, :, None].astype(np.int64) * pow2 - rho) % q
        bits = (r_B[lo:hi, :, None].astype(np.int64) >> positions) & 1
        ot.ot_send_many(m0.ravel(), m1.ravel())
        o = ot.ot_receive_many(bits.ravel()).reshape(c, L, ell)
        s_B[lo:hi] = o.sum(axis=2) % q
    alice = AliceInventory(modulus, s_A, r_A)
    bob = BobInventory.from_r_b_s_b(modulus, r_B, s_B)
    return alice, bob
