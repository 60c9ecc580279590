"""Inequality tests built from bitwise OT plus one degenerate set comparison.

mismatch_plain decides x != y for ell-bit inputs. Alice pads each bit
position with an additive share r_i; the i-th OT delivers c_i = r_i +
(x_i xor y_i), so Bob's sum d exceeds Alice's e = sum(r_i) by exactly the
Hamming distance. Bob's candidate set {d - 1, ..., d - ell} therefore
contains e exactly when the strings differ. The membership test is the
comparison protocol in its degenerate shape: one c-value against ell
d-values, which needs q > ell so the offsets stay distinct mod q.

mismatch_keyed binds the test to a shared key: Alice's shares sum to
r_A - H(k_A) instead of a free value, and Bob folds H(k_B) back in while
evaluating his half of the tuple relation, so the answer is true only when
the keys agree and the strings differ (or an ell/q hash coincidence hits).
"""

import secrets
from dataclasses import dataclass

from .hashing import keyed_hash
from .online import compare_alice_c, compare_alice_check, compare_bob_d


def _random_shares(total, ell, modulus, prg):
    """ell field values summing to total mod q; all but one uniform."""
    q = modulus.q
    if prg is None:
        shares = [secrets.randbelow(q) for _ in range(ell - 1)]
    else:
        shares = [prg.element(modulus) for _ in range(ell - 1)]
    shares.append((total - sum(shares)) % q)
    return shares


def _check_input(value, ell, who):
    if not 0 <= value < (1 << ell):
        raise ValueError(f"{who} input must be an {ell}-bit value")


def _ot_masked_sum(x, y, ell, shares, ot, modulus):
    """Per-bit transfer of r_i + (x_i xor y_i); returns Bob's masked sum d."""
    q = modulus.q
    d = 0
    for i in range(ell):
        xi = (x >> i) & 1
        m0 = modulus.element((shares[i] + xi) % q)
        m1 = modulus.element((shares[i] + (xi ^ 1)) % q)
        ot.ot_send(m0, m1)
        d = (d + ot.ot_receive((y >> i) & 1).value) % q
    return d


def set_compare_single(e, candidates, alice_batch, bob_batch):
    """Degenerate set comparison: is Alice's e among Bob's candidates?

    One shared-s_A batch backs the whole test: a single c-value out, one
    d-value back per candidate, checked against the batch's r_A values.
    """
    if len(alice_batch.r_A) < len(candidates) or len(bob_batch.slots) < len(candidates):
        raise ValueError("batch too short for the candidate set")
    c = compare_alice_c(e, alice_batch.s_A)
    hit = False
    for j, cand in enumerate(candidates):
        r_B, r_B_inv, s_B = bob_batch.slots[j]
        d = compare_bob_d(c, cand, s_B, r_B_inv)
        if compare_alice_check(d, alice_batch.r_A[j]):
            hit = True
    return hit


def mismatch_plain(x, y, ell, ot, batch, *, prg=None, shares=None):
    """True exactly when x != y, for ell-bit x (Alice) and y (Bob).

    batch is an (OleBatchAlice, OleBatchBob) pair with at least ell slots;
    one call consumes it. shares overrides Alice's random pad values, which
    pins the whole transcript for tests.
    """
    alice_batch, bob_batch = batch
    modulus = alice_batch.s_A.modulus
    q = modulus.q
    if q <= ell:
        raise ValueError(f"need q > ell, got q={q}, ell={ell}")
    _check_input(x, ell, "alice")
    _check_input(y, ell, "bob")
    if shares is None:
        shares = _random_shares(secrets.randbelow(q), ell, modulus, prg)
    elif len(shares) != ell:
        raise ValueError("need exactly ell shares")
    e = sum(shares) % q

    d = _ot_masked_sum(x, y, ell, shares, ot, modulus)
    candidates = [modulus.element((d - j) % q) for j in range(1, ell + 1)]
    return set_compare_single(modulus.element(e), candidates, alice_batch, bob_batch)


@dataclass(frozen=True)
class MismatchTriples:
    """ell correlated slots sharing one r_A: r_A * r_B_i = s_A_i + s_B_i."""

    r_A: object
    slots: tuple  # (s_A_i, r_B_i, r_B_inv_i, s_B_i) per slot

    def __len__(self):
        return len(self.slots)

    def validate(self):
        for s_A, r_B, r_B_inv, s_B in self.slots:
            if r_B.value == 0:
                return False
            if (r_B * r_B_inv).value != 1:
                return False
            if self.r_A * r_B != s_A + s_B:
                return False
        return True

    @classmethod
    def generate(cls, modulus, ell, prg):
        r_A = modulus.element(prg.element(modulus))
        slots = []
        for _ in range(ell):
            r_B = modulus.element(prg.nonzero_element(modulus))
            s_B = modulus.element(prg.element(modulus))
            s_A = r_A * r_B - s_B
            slots.append((s_A, r_B, r_B.inv(), s_B))
        return cls(r_A=r_A, slots=tuple(slots))


def mismatch_keyed(key_a, x, key_b, y, triples, ot, *, h=None, h_seed=None,
                   prg=None, shares=None):
    """True exactly when the keys agree and x != y (up to an ell/q coincidence).

    ell is the slot count of the triples. h maps a key to a field value and
    must be common to both parties; by default it is the seeded keyed hash
    under h_seed. Alice's shares sum to r_A - h(key_a); Bob evaluates
    f_i = (d_i + h(key_b)) * r_B_i - s_B_i over his candidate offsets, and
    Alice reports whether any f_i equals her s_A_i. A key disagreement
    shifts every candidate away from r_A, leaving only hash coincidences.
    """
    modulus = triples.r_A.modulus
    q = modulus.q
    ell = len(triples)
    if q <= ell:
        raise ValueError(f"need q > ell, got q={q}, ell={ell}")
    _check_input(x, ell, "alice")
    _check_input(y, ell, "bob")
    if h is None:
        if h_seed is None:
            raise ValueError("mismatch_keyed needs h or h_seed")
        h = lambda key: keyed_hash(h_seed, key, q)

    total = (triples.r_A.value - h(key_a)) % q
    if shares is None:
        shares = _random_shares(total, ell, modulus, prg)
    else:
        if len(shares) != ell:
            raise ValueError("need exactly ell shares")
        if sum(shares) % q != total:
            raise ValueError("shares must sum to r_A - h(key_a)")

    d = _ot_masked_sum(x, y, ell, shares, ot, modulus)

    h_b = h(key_b)
    f = []
    for j in range(1, ell + 1):
        _, r_B, _, s_B = triples.slots[j - 1]
        d_j = (d - j) % q
        f.append(((d_j + h_b) * r_B.value - s_B.value) % q)

    return any(f[i] == triples.slots[i][0].value for i in range(ell))
