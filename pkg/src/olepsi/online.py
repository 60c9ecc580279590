"""The cryptography-free online phase: masked comparisons over prepared tuples.

One comparison consumes one tuple slot. Alice sends c = s_A - enc(x); Bob
answers d = (c + enc(y) + s_B) * r_B_inv. Because r_A * r_B = s_A + s_B,
the reply collapses to d = r_A exactly when the encodings agree, and lands
uniformly on the rest of the field when they do not. Matching d against the
precomputed r_A values therefore decides equality with zero error, using
nothing but field additions and one multiplication per slot.

The set protocol runs the comparison over the hashing layout: one c-value per
cuckoo bin (alpha + stash_size of them), beta d-values back per bin plus n per
stash slot. Bins without a real element still send well-formed messages under
a reserved dummy encoding, so traffic never depends on the inputs.
"""

import hashlib
import os
from dataclasses import dataclass

import numpy as np

from .hashing import (
    HASH_SEED_LEN,
    HashSeeds,
    build_bin_table,
    build_cuckoo_table,
    stash_encode,
)
from .modvec import dtype_for
from .prg import Prg, Seed
from .transport import (
    ALICE_C,
    BOB_D,
    SETUP,
    Frame,
    UnexpectedType,
    recv_elements,
    recv_frame,
    send_elements,
    send_frame,
)
from .tuples import TOKEN_LEN

PROTOCOL_VERSION = 1

# all-zero token means "inventory digest unknown": the check is skipped
UNKNOWN_TOKEN = bytes(TOKEN_LEN)

_CHUNK = 1 << 22  # field elements per vectorized block


class OnlineError(Exception):
    pass


class TupleExhausted(OnlineError):
    """The run needs more (or longer) tuple batches than the inventory holds."""


class SeedMismatch(OnlineError):
    """Setup exchange shows the parties disagree on parameters, seeds or tuples."""


def compare_alice_c(x_enc, s_A):
    """Alice's message for one comparison: c = s_A - x_enc."""
    return s_A - x_enc


def compare_bob_d(c, y_enc, s_B, r_B_inv):
    """Bob's reply: d = (c + y_enc + s_B) * r_B_inv."""
    return (c + y_enc + s_B) * r_B_inv


def compare_alice_check(d, r_A):
    """True exactly when the compared encodings were equal."""
    return d == r_A


def derive_hash_seeds(params, token=UNKNOWN_TOKEN):
    """Shared hash seeds derived from public setup data.

    Binding the seeds to (parameter digest, inventory token) lets both
    parties compute identical seeds without an agreement round. Callers who
    want independently sampled seeds pass an explicit HashSeeds instead.
    """
    material = hashlib.sha256(b"hash-seeds|" + params.digest() + token).digest()
    prg = Prg(Seed(material), tag=b"hash-seeds")
    return HashSeeds.generate(params.k, randbytes=prg.read)


@dataclass
class PsiSession:
    """One party's agreed state for a single protocol run.

    inventories holds the bin batches first and, when stash_size > 0, the
    stash batches second (the layout produced by the offline generators).
    Batches are single-use: a session refuses to run twice.
    """

    role: str
    params: object
    inventories: tuple
    token: bytes = UNKNOWN_TOKEN
    seeds: HashSeeds = None

    def __post_init__(self):
        if self.role not in ("alice", "bob"):
            raise ValueError(f"role must be alice or bob, got {self.role!r}")
        if len(self.token) != TOKEN_LEN:
            raise ValueError(f"token must be {TOKEN_LEN} bytes")
        q = self.params.modulus.q
        for inv in self.inventories:
            if inv is not None and inv.modulus.q != q:
                raise ValueError(
                    f"inventory modulus {inv.modulus.q} does not match params ({q})"
                )
        if self.seeds is None:
            self.seeds = derive_hash_seeds(self.params, self.token)
        self._used = False

    def _sections(self):
        invs = [inv for inv in self.inventories if inv is not None]
        bins = invs[0] if invs else None
        stash = invs[1] if len(invs) > 1 else None
        return bins, stash

    def _claim(self):
        if self._used:
            raise TupleExhausted("session already ran; tuple batches are single-use")
        self._used = True


def _need(inv, count, slot_len, label):
    if count == 0:
        return
    have = 0 if inv is None else len(inv)
    if have < count:
        raise TupleExhausted(f"{label}: need {count} batches, have {have}")
    if inv.slot_len != slot_len:
        raise TupleExhausted(
            f"{label}: need slot length {slot_len}, have {inv.slot_len}"
        )


def _setup_payload(session):
    return (
        bytes([PROTOCOL_VERSION])
        + session.params.digest()
        + session.token
        + session.seeds.to_bytes()
    )


def _verify_setup(session, payload):
    digest = session.params.digest()
    expect = 1 + len(digest) + TOKEN_LEN + (session.params.k + 1) * HASH_SEED_LEN
    if len(payload) != expect:
        raise SeedMismatch(f"setup frame is {len(payload)} bytes, expected {expect}")
    if payload[0] != PROTOCOL_VERSION:
        raise SeedMismatch(
            f"peer speaks protocol version {payload[0]}, ours is {PROTOCOL_VERSION}"
        )
    off = 1
    if payload[off : off + len(digest)] != digest:
        raise SeedMismatch("parameter digest mismatch")
    off += len(digest)
    peer_token = payload[off : off + TOKEN_LEN]
    off += TOKEN_LEN
    if (
        session.token != UNKNOWN_TOKEN
        and peer_token != UNKNOWN_TOKEN
        and peer_token != session.token
    ):
        raise SeedMismatch(
            "tuple inventory tokens differ; the halves are not from one offline run"
        )
    if payload[off:] != session.seeds.to_bytes():
        raise SeedMismatch("hash seed mismatch")


def _setup_exchange(session, channel):
    """Verify agreement before any comparison traffic. Alice speaks first."""
    mine = Frame(SETUP, _setup_payload(session))
    if session.role == "alice":
        send_frame(channel, mine)
        reply = recv_frame(channel)
        if reply.msg_type != SETUP:
            raise UnexpectedType(f"wanted SETUP, got type {reply.msg_type}")
        _verify_setup(session, reply.payload)
    else:
        frame = recv_frame(channel)
        if frame.msg_type != SETUP:
            raise UnexpectedType(f"wanted SETUP, got type {frame.msg_type}")
        _verify_setup(session, frame.payload)
        send_frame(channel, mine)


def psi_alice(session, elements, channel):
    """Run the protocol as Alice; returns the intersection as a set of ints.

    Sends alpha + stash_size c-values, receives alpha*beta + stash_size*n
    d-values in fixed row-major order, and matches them against r_A. The
    element counts are asserted against the channel's accounting on every
    run. Placement failure beyond the stash raises CuckooFailure, since the
    session's seeds are pinned and cannot be resampled mid-protocol.
    """
    if session.role != "alice":
        raise ValueError("session role is not alice")
    session._claim()
    p = session.params
    q = p.modulus.q
    bins_inv, stash_inv = session._sections()
    _need(bins_inv, p.alpha, p.beta, "bin batches")
    _need(stash_inv, p.stash_size, p.n, "stash batches")

    table = build_cuckoo_table(elements, p, seeds=session.seeds)
    sent0 = channel.stats.elements_sent
    recv0 = channel.stats.elements_received
    _setup_exchange(session, channel)

    c = (bins_inv.s_A[: p.alpha].astype(np.int64) - table.bins) % q
    send_elements(channel, ALICE_C, c, p.modulus)

    stash_items = list(table.stash)
    if p.stash_size:
        enc_st = np.full(p.stash_size, p.dummy_alice, dtype=np.int64)
        for t, x in enumerate(stash_items):
            enc_st[t] = stash_encode(int(x), session.seeds, p)
        c_st = (stash_inv.s_A[: p.stash_size].astype(np.int64) - enc_st) % q
        send_elements(channel, ALICE_C, c_st, p.modulus)

    d = recv_elements(channel, BOB_D, p.modulus)
    if d.size != p.alpha * p.beta:
        raise OnlineError(f"expected {p.alpha * p.beta} d-values, got {d.size}")
    d = d.reshape(p.alpha, p.beta)

    out = set()
    r_A = bins_inv.r_A[: p.alpha]
    real = np.flatnonzero(table.origins >= 0)
    hits = (d[real] == r_A[real]).any(axis=1)
    for i in real[np.flatnonzero(hits)]:
        out.add(int(table.origins[i]))

    if p.stash_size:
        d_st = recv_elements(channel, BOB_D, p.modulus)
        if d_st.size != p.stash_size * p.n:
            raise OnlineError(
                f"expected {p.stash_size * p.n} stash d-values, got {d_st.size}"
            )
        d_st = d_st.reshape(p.stash_size, p.n)
        for t, x in enumerate(stash_items):
            if (d_st[t] == stash_inv.r_A[t]).any():
                out.add(int(x))

    sent = channel.stats.elements_sent - sent0
    received = channel.stats.elements_received - recv0
    if sent != p.alpha + p.stash_size:
        raise OnlineError(f"sent {sent} elements, protocol requires {p.alpha + p.stash_size}")
    if received != p.alpha * p.beta + p.stash_size * p.n:
        raise OnlineError(
            f"received {received} elements, protocol requires "
            f"{p.alpha * p.beta + p.stash_size * p.n}"
        )
    return out


def psi_bob(session, elements, channel):
    """Run the protocol as Bob; sends the d-values and learns nothing.

    Replies to every bin's c-value with beta d-values (row-major: bin-major,
    slot-minor), then to every stash c-value with one d per slot for each of
    n shuffled element encodings. Padding slots reply under Bob's dummy
    encoding, which can never match.
    """
    if session.role != "bob":
        raise ValueError("session role is not bob")
    session._claim()
    p = session.params
    q = p.modulus.q
    bins_inv, stash_inv = session._sections()
    _need(bins_inv, p.alpha, p.beta, "bin batches")
    _need(stash_inv, p.stash_size, p.n, "stash batches")

    table = build_bin_table(elements, p, session.seeds)
    sent0 = channel.stats.elements_sent
    recv0 = channel.stats.elements_received
    _setup_exchange(session, channel)

    c = recv_elements(channel, ALICE_C, p.modulus)
    if c.size != p.alpha:
        raise OnlineError(f"expected {p.alpha} c-values, got {c.size}")
    if p.stash_size:
        c_st = recv_elements(channel, ALICE_C, p.modulus)
        if c_st.size != p.stash_size:
            raise OnlineError(
                f"expected {p.stash_size} stash c-values, got {c_st.size}"
            )

    d = _bob_reply(c, table.bins, bins_inv, q)
    send_elements(channel, BOB_D, d.ravel(), p.modulus)

    if p.stash_size:
        enc = _stash_encodings(elements, session.seeds, p)
        d_st = _bob_reply(
            c_st, np.broadcast_to(enc, (p.stash_size, p.n)), stash_inv, q
        )
        send_elements(channel, BOB_D, d_st.ravel(), p.modulus)

    sent = channel.stats.elements_sent - sent0
    received = channel.stats.elements_received - recv0
    if received != p.alpha + p.stash_size:
        raise OnlineError(
            f"received {received} elements, protocol requires {p.alpha + p.stash_size}"
        )
    if sent != p.alpha * p.beta + p.stash_size * p.n:
        raise OnlineError(
            f"sent {sent} elements, protocol requires "
            f"{p.alpha * p.beta + p.stash_size * p.n}"
        )
    return None


def _bob_reply(c, enc_rows, inv, q):
    """d[i, j] = (c[i] + enc[i, j] + s_B[i, j]) * r_B_inv[i, j], chunked."""
    rows, slot = enc_rows.shape
    out = np.empty((rows, slot), dtype=dtype_for(q))
    step = max(1, _CHUNK // max(slot, 1))
    c = c.astype(np.int64)
    for lo in range(0, rows, step):
        hi = min(rows, lo + step)
        t = (c[lo:hi, None] + enc_rows[lo:hi] + inv.s_B[lo:hi]) % q
        t *= inv.r_B_inv[lo:hi]
        t %= q
        out[lo:hi] = t
    return out


def _stash_encodings(elements, seeds, params, rng=None):
    """Keyed encodings of Bob's whole set, shuffled and padded to n slots.

    The shuffle hides insertion order from positional matches; padding uses
    Bob's dummy encoding, which no keyed encoding can equal.
    """
    vals = [stash_encode(int(y), seeds, params) for y in elements]
    enc = np.full(params.n, params.dummy_bob, dtype=np.int64)
    enc[: len(vals)] = vals
    if rng is None:
        rng = np.random.default_rng(list(os.urandom(16)))
    rng.shuffle(enc)
    return enc


def ot_via_psi(choice, y0, y1, psi):
    """1-of-2 bit OT from a single PSI call.

    The receiver's set is {choice}; the sender adds, for each of its bits,
    either the matching choice value (bit 1) or an unmatchable filler (bit
    0). The intersection is nonempty exactly when y_choice = 1. psi is any
    callable mapping (receiver set, sender set) to their intersection.
    """
    if choice not in (0, 1) or y0 not in (0, 1) or y1 not in (0, 1):
        raise ValueError("choice and both sender bits must be 0 or 1")
    sender = {0 if y0 else 2, 1 if y1 else 3}
    return 1 if psi({choice}, sender) else 0
