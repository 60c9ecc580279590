"""Trusted-dealer backend.

A dealer expands Bob's half and the shared s_A values from two seeds,
derives every r_A, then distributes: Alice receives her seed, the full
r_A matrices, and a short token identifying Bob's half; Bob receives
nothing but his 32-byte seed and re-expands locally.  The asymmetry is
the point: the dealer-to-Bob message stays seed-sized no matter how many
tuples the run needs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..field import PrimeModulus
from ..modvec import dtype_for
from ..prg import SEED_LEN, Seed
from ..tuples import (
    AliceInventory,
    BobInventory,
    _pack_array,
    _unpack_array,
    inventory_token,
)
from ._expand import derive_r_a_arrays, expand_bob_arrays, expand_s_a

_SECTION_DOMAINS = (b"bins", b"stash")


@dataclass(frozen=True)
class DealerMessages:
    """What the dealer sends out: to_alice = (R_A, r_A arrays), to_bob = R_B.

    token identifies Bob's expanded half (it rides along to Alice so a
    later run can detect mismatched tuple material before any comparison).
    """

    to_alice: tuple
    to_bob: Seed
    token: bytes


def _sections(params, bin_count=None):
    bins = (params.alpha if bin_count is None else bin_count, params.beta)
    stash = (params.stash_size, params.n)
    return (bins, stash)


def dealer_generate_raw(R_A, R_B, modulus, sections):
    """One dealer run over explicit (count, slot_len) sections."""
    if len(sections) > len(_SECTION_DOMAINS):
        raise ValueError("too many sections for the domain-separation labels")
    r_A_lists = []
    bob_invs = []
    for (count, slot_len), domain in zip(sections, _SECTION_DOMAINS):
        s_A = expand_s_a(R_A, modulus, count, domain)
        r_B, r_B_inv, s_B = expand_bob_arrays(R_B, modulus, count, slot_len, domain)
        r_A_lists.append(derive_r_a_arrays(s_A, s_B, r_B_inv, modulus.q))
        bob_invs.append(BobInventory(modulus, r_B, r_B_inv, s_B))
    token = inventory_token(bob_invs)
    return DealerMessages(to_alice=(R_A, tuple(r_A_lists)), to_bob=R_B, token=token)


def dealer_generate(R_A, R_B, count, params):
    """PSI-shaped dealer run: `count` bin batches plus the stash section."""
    return dealer_generate_raw(R_A, R_B, params.modulus, _sections(params, count))


def expand_alice_raw(R_A, r_A_lists, modulus):
    invs = []
    for r_A, domain in zip(r_A_lists, _SECTION_DOMAINS):
        s_A = expand_s_a(R_A, modulus, r_A.shape[0], domain)
        invs.append(AliceInventory(modulus, s_A, r_A))
    return invs


def expand_alice(R_A, r_A_lists, params):
    """Alice's side of the dealer protocol: seed plus received r_A arrays."""
    return expand_alice_raw(R_A, r_A_lists, params.modulus)


def expand_bob_raw(R_B, modulus, sections):
    invs = []
    for (count, slot_len), domain in zip(sections, _SECTION_DOMAINS):
        r_B, r_B_inv, s_B = expand_bob_arrays(R_B, modulus, count, slot_len, domain)
        invs.append(BobInventory(modulus, r_B, r_B_inv, s_B))
    return invs


def expand_bob(R_B, params, *, bin_count=None):
    """Bob's side: everything re-expanded from the 32-byte seed."""
    return expand_bob_raw(R_B, params.modulus, _sections(params, bin_count))


_ALICE_HEAD = struct.Struct("<32s16sQB")
_SECTION_HEAD = struct.Struct("<II")


def encode_to_alice(msg, modulus):
    """Wire form of the dealer-to-Alice message."""
    R_A, r_A_lists = msg.to_alice
    parts = [_ALICE_HEAD.pack(R_A.value, msg.token, modulus.q, len(r_A_lists))]
    for r_A in r_A_lists:
        count, slot_len = r_A.shape
        parts.append(_SECTION_HEAD.pack(count, slot_len))
        parts.append(_pack_array(r_A, modulus.byte_len))
    return b"".join(parts)


def decode_to_alice(data):
    """Inverse of encode_to_alice; returns (R_A, r_A arrays, token, modulus)."""
    seed_bytes, token, q, nsec = _ALICE_HEAD.unpack_from(data, 0)
    modulus = PrimeModulus(q)
    off = _ALICE_HEAD.size
    r_A_lists = []
    for _ in range(nsec):
        count, slot_len = _SECTION_HEAD.unpack_from(data, off)
        off += _SECTION_HEAD.size
        nbytes = count * slot_len * modulus.byte_len
        block = _unpack_array(data[off : off + nbytes], modulus.byte_len, count * slot_len)
        off += nbytes
        r_A_lists.append(block.reshape(count, slot_len).astype(dtype_for(modulus.q)))
    if off != len(data):
        raise ValueError("trailing bytes in dealer message")
    return Seed(seed_bytes), tuple(r_A_lists), token, modulus


def encode_to_bob(msg):
    """Wire form of the dealer-to-Bob message: the bare 32-byte seed."""
    return msg.to_bob.value


def decode_to_bob(data):
    if len(data) != SEED_LEN:
        raise ValueError(f"dealer-to-Bob message must be {SEED_LEN} bytes")
    return Seed(data)
