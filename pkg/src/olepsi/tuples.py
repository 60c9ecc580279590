"""OLE tuple types, batch validation, array inventories, and the batch file format.

One plain tuple (r_A, r_B, s_A, s_B) with r_A * r_B = s_A + s_B backs one
equality comparison. The communication-optimized batch shares a single s_A
across beta slots of independent (r_A, r_B, s_B). Bob's half stores r_B's
inverse alongside so the online phase never inverts anything.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .field import FieldElement, PrimeModulus
from .modvec import dtype_for, mod_inv

FILE_VERSION = 1
TOKEN_LEN = 16
_HEADER = struct.Struct(f"<4sBQII{TOKEN_LEN}s")

SIDE_ALICE = "alice"
SIDE_BOB = "bob"
_MAGIC = {SIDE_ALICE: b"OLEA", SIDE_BOB: b"OLEB"}


class TupleFileError(Exception):
    pass


@dataclass(frozen=True)
class OleTuple:
    """Correlated randomness for one comparison: r_A * r_B = s_A + s_B."""

    r_A: FieldElement
    r_B: FieldElement
    r_B_inv: FieldElement
    s_A: FieldElement
    s_B: FieldElement

    @classmethod
    def from_values(cls, modulus, r_A, r_B, s_A, s_B):
        rb = modulus.element(r_B)
        return cls(
            r_A=modulus.element(r_A),
            r_B=rb,
            r_B_inv=rb.inv(),
            s_A=modulus.element(s_A),
            s_B=modulus.element(s_B),
        )

    def is_valid(self):
        if self.r_B.value == 0:
            return False
        if (self.r_B * self.r_B_inv).value != 1:
            return False
        return self.r_A * self.r_B == self.s_A + self.s_B


@dataclass(frozen=True)
class OleBatchAlice:
    """Alice's half of an optimized batch: one s_A, a list of r_A values."""

    s_A: FieldElement
    r_A: tuple


@dataclass(frozen=True)
class OleBatchBob:
    """Bob's half: per slot (r_B, r_B_inv, s_B)."""

    slots: tuple


def validate_batch(alice, bob):
    """True iff every slot satisfies r_A * r_B = s_A + s_B with valid inverses."""
    if len(alice.r_A) != len(bob.slots):
        raise ValueError(
            f"batch length mismatch: {len(alice.r_A)} vs {len(bob.slots)}"
        )
    for r_A, (r_B, r_B_inv, s_B) in zip(alice.r_A, bob.slots):
        if r_B.value == 0:
            return False
        if (r_B * r_B_inv).value != 1:
            return False
        if r_A * r_B != alice.s_A + s_B:
            return False
    return True


def derive_r_A(s_A, s_B, r_B):
    """(s_A + s_B) / r_B, the dealer's formula for Alice's check values."""
    return (s_A + s_B) * r_B.inv()


def _as_int_array(a):
    # keep compact storage dtypes (uint16 at PSI scale); widen anything else
    a = np.asarray(a)
    if a.dtype.kind not in "iu":
        a = a.astype(np.int64)
    return a


class AliceInventory:
    """Array-backed sequence of OleBatchAlice: s_A (count,), r_A (count, L)."""

    def __init__(self, modulus, s_A, r_A):
        s_A = _as_int_array(s_A)
        r_A = _as_int_array(r_A)
        if r_A.ndim != 2 or s_A.shape != (r_A.shape[0],):
            raise ValueError("s_A must be (count,), r_A must be (count, L)")
        self.modulus = modulus
        self.s_A = s_A
        self.r_A = r_A

    @property
    def slot_len(self):
        return self.r_A.shape[1]

    def __len__(self):
        return self.s_A.shape[0]

    def __getitem__(self, i):
        m = self.modulus
        return OleBatchAlice(
            s_A=m.element(int(self.s_A[i])),
            r_A=tuple(m.element(int(v)) for v in self.r_A[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


class BobInventory:
    """Array-backed sequence of OleBatchBob: r_B, r_B_inv, s_B all (count, L)."""

    def __init__(self, modulus, r_B, r_B_inv, s_B):
        r_B = _as_int_array(r_B)
        r_B_inv = _as_int_array(r_B_inv)
        s_B = _as_int_array(s_B)
        if not (r_B.shape == r_B_inv.shape == s_B.shape) or r_B.ndim != 2:
            raise ValueError("r_B, r_B_inv, s_B must share one (count, L) shape")
        self.modulus = modulus
        self.r_B = r_B
        self.r_B_inv = r_B_inv
        self.s_B = s_B

    @classmethod
    def from_r_b_s_b(cls, modulus, r_B, s_B):
        r_B = _as_int_array(r_B)
        inv = mod_inv(r_B, modulus.q).astype(r_B.dtype, copy=False)
        return cls(modulus, r_B, inv, s_B)

    @property
    def slot_len(self):
        return self.r_B.shape[1]

    def __len__(self):
        return self.r_B.shape[0]

    def __getitem__(self, i):
        m = self.modulus
        return OleBatchBob(
            slots=tuple(
                (m.element(int(r)), m.element(int(ri)), m.element(int(s)))
                for r, ri, s in zip(self.r_B[i], self.r_B_inv[i], self.s_B[i])
            )
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def validate_inventories(alice, bob):
    """Vectorized validate_batch over whole inventories."""
    if len(alice) != len(bob) or alice.slot_len != bob.slot_len:
        raise ValueError("inventory shape mismatch")
    q = alice.modulus.q
    step = max(1, (1 << 22) // max(alice.slot_len, 1))
    for lo in range(0, len(alice), step):
        hi = lo + step
        r_B = bob.r_B[lo:hi].astype(np.int64)
        if (r_B % q == 0).any():
            return False
        if (r_B * bob.r_B_inv[lo:hi] % q != 1).any():
            return False
        lhs = alice.r_A[lo:hi].astype(np.int64) * r_B % q
        rhs = (alice.s_A[lo:hi, None].astype(np.int64) + bob.s_B[lo:hi]) % q
        if not (lhs == rhs).all():
            return False
    return True


def sample_tuple_arrays(modulus, count, prg):
    """count independent plain tuples as arrays (r_A, r_B, r_B_inv, s_A, s_B)."""
    q = modulus.q
    r_B = prg.nonzero_elements(modulus, count)
    s_A = prg.elements(modulus, count)
    s_B = prg.elements(modulus, count)
    r_B_inv = mod_inv(r_B, q)
    r_A = (s_A + s_B) % q * r_B_inv % q
    return r_A, r_B, r_B_inv, s_A, s_B


def random_batch(modulus, slot_len, prg):
    """One communication-optimized batch pair with a shared s_A."""
    s_A = modulus.element(prg.element(modulus))
    r_A = []
    slots = []
    for _ in range(slot_len):
        r_B = modulus.element(prg.nonzero_element(modulus))
        s_B = modulus.element(prg.element(modulus))
        r_A.append((s_A + s_B) * r_B.inv())
        slots.append((r_B, r_B.inv(), s_B))
    return OleBatchAlice(s_A=s_A, r_A=tuple(r_A)), OleBatchBob(slots=tuple(slots))


def random_tuple(modulus, prg):
    r_A, r_B, r_B_inv, s_A, s_B = (
        int(a[0]) for a in sample_tuple_arrays(modulus, 1, prg)
    )
    m = modulus
    return OleTuple(
        r_A=m.element(r_A),
        r_B=m.element(r_B),
        r_B_inv=m.element(r_B_inv),
        s_A=m.element(s_A),
        s_B=m.element(s_B),
    )


# widths with a native little-endian dtype skip the per-byte loop
_EXACT_WIDTH = {1: "<u1", 2: "<u2", 4: "<u4", 8: "<u8"}


def _pack_array(vals, width):
    a = np.asarray(vals).ravel()
    code = _EXACT_WIDTH.get(width)
    if code is not None:
        return a.astype(code, copy=False).tobytes()
    a = a.astype(np.uint64, copy=False)
    out = np.empty((a.size, width), dtype=np.uint8)
    for b in range(width):
        out[:, b] = (a >> np.uint64(8 * b)).astype(np.uint8)
    return out.tobytes()


def _unpack_array(data, width, count, dtype=np.int64):
    code = _EXACT_WIDTH.get(width)
    if code is not None:
        return np.frombuffer(data, dtype=code).astype(dtype, copy=False)
    a = np.frombuffer(data, dtype=np.uint8).reshape(count, width)
    vals = np.zeros(count, dtype=np.uint64)
    for b in range(width):
        vals |= a[:, b].astype(np.uint64) << np.uint64(8 * b)
    return vals.astype(dtype)


def _alice_payload(inv):
    block = np.concatenate([inv.s_A[:, None], inv.r_A], axis=1)
    return _pack_array(block, inv.modulus.byte_len)


def _bob_payload(inv):
    block = np.stack([inv.r_B, inv.r_B_inv, inv.s_B], axis=2)
    return _pack_array(block, inv.modulus.byte_len)


def _section_header(modulus, count, slot_len, token, side=SIDE_BOB):
    return _HEADER.pack(_MAGIC[side], FILE_VERSION, modulus.q, count, slot_len, token)


def inventory_token(bob_inventories):
    """16-byte digest of Bob's halves; identifies one offline run's output."""
    h = hashlib.sha256()
    for inv in bob_inventories:
        h.update(_section_header(inv.modulus, len(inv), inv.slot_len, bytes(TOKEN_LEN)))
        h.update(_bob_payload(inv))
    return h.digest()[:TOKEN_LEN]


def save_inventories(path, inventories, side, token):
    """Write one or more sections (bin batches, then stash batches) to a file."""
    if side not in (SIDE_ALICE, SIDE_BOB):
        raise ValueError(f"side must be alice or bob, got {side}")
    with open(path, "wb") as f:
        for inv in inventories:
            f.write(_section_header(inv.modulus, len(inv), inv.slot_len, token, side))
            if side == SIDE_ALICE:
                f.write(_alice_payload(inv))
            else:
                f.write(_bob_payload(inv))


def load_inventories(path, side):
    """Read all sections; returns (inventories, token)."""
    if side not in (SIDE_ALICE, SIDE_BOB):
        raise ValueError(f"side must be alice or bob, got {side}")
    out = []
    token = None
    with open(path, "rb") as f:
        while True:
            header = f.read(_HEADER.size)
            if not header:
                break
            if len(header) < _HEADER.size:
                raise TupleFileError("truncated section header")
            magic, version, q, count, slot_len, tok = _HEADER.unpack(header)
            if magic != _MAGIC[side]:
                if magic in _MAGIC.values():
                    other = SIDE_BOB if side == SIDE_ALICE else SIDE_ALICE
                    raise TupleFileError(
                        f"file holds {other}-side sections, wanted {side}"
                    )
                raise TupleFileError(f"bad magic {magic!r}")
            if version != FILE_VERSION:
                raise TupleFileError(f"unsupported version {version}")
            modulus = PrimeModulus(q)
            if token is None:
                token = tok
            elif token != tok:
                raise TupleFileError("sections carry different inventory tokens")
            width = modulus.byte_len
            kind = dtype_for(q)
            if side == SIDE_ALICE:
                need = count * (1 + slot_len) * width
                data = f.read(need)
                if len(data) < need:
                    raise TupleFileError("truncated alice section payload")
                block = _unpack_array(data, width, count * (1 + slot_len), kind)
                block = block.reshape(count, 1 + slot_len)
                out.append(AliceInventory(modulus, block[:, 0], block[:, 1:]))
            else:
                need = count * slot_len * 3 * width
                data = f.read(need)
                if len(data) < need:
                    raise TupleFileError("truncated bob section payload")
                block = _unpack_array(data, width, count * slot_len * 3, kind)
                block = block.reshape(count, slot_len, 3)
                out.append(
                    BobInventory(
                        modulus, block[:, :, 0], block[:, :, 1], block[:, :, 2]
                    )
                )
    if token is None:
        raise TupleFileError("empty tuple file")
    return out, token
