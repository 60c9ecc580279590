"""Prime-field arithmetic over small runtime-chosen moduli.

Everything the protocol computes lives in F_q for a prime q chosen from the
hashing parameters. Moduli stay below 2^62 so plain Python integers (and
int64 numpy lanes elsewhere) never overflow.
"""

MAX_MODULUS = 1 << 62

# Deterministic Miller-Rabin witness set, valid for all n < 3.3 * 10^24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class FieldError(Exception):
    pass


class ModulusMismatch(FieldError):
    pass


class InversionOfZero(FieldError):
    pass


class OutOfRange(FieldError):
    pass


class BadLength(FieldError):
    pass


def is_prime(n):
    """Deterministic Miller-Rabin for n < 2^64."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeModulus:
    """A verified prime q with its bit width, shared by all elements mod q."""

    __slots__ = ("q", "bit_len", "byte_len")

    def __init__(self, q):
        if not 5 <= q <= MAX_MODULUS:
            raise FieldError(f"modulus {q} outside supported range [5, 2^62]")
        if not is_prime(q):
            raise FieldError(f"modulus {q} is not prime")
        self.q = q
        # q is never a power of two, so bit_length() equals ceil(log2 q).
        self.bit_len = q.bit_length()
        self.byte_len = (self.bit_len + 7) // 8

    def element(self, value):
        return FieldElement(value % self.q, self)

    def __eq__(self, other):
        return isinstance(other, PrimeModulus) and self.q == other.q

    def __hash__(self):
        return hash(self.q)

    def __repr__(self):
        return f"PrimeModulus({self.q})"


class FieldElement:
    """An element of F_q. Immutable; mixing moduli is rejected."""

    __slots__ = ("value", "modulus")

    def __init__(self, value, modulus):
        if not 0 <= value < modulus.q:
            raise OutOfRange(f"value {value} not in [0, {modulus.q})")
        self.value = value
        self.modulus = modulus

    def _check(self, other):
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if self.modulus != other.modulus:
            raise ModulusMismatch(
                f"mixed moduli {self.modulus.q} and {other.modulus.q}"
            )

    def __add__(self, other):
        self._check(other)
        return FieldElement((self.value + other.value) % self.modulus.q, self.modulus)

    def __sub__(self, other):
        self._check(other)
        return FieldElement((self.value - other.value) % self.modulus.q, self.modulus)

    def __mul__(self, other):
        self._check(other)
        return FieldElement((self.value * other.value) % self.modulus.q, self.modulus)

    def __neg__(self):
        return FieldElement(-self.value % self.modulus.q, self.modulus)

    def inv(self):
        if self.value == 0:
            raise InversionOfZero("0 has no multiplicative inverse")
        return FieldElement(pow(self.value, -1, self.modulus.q), self.modulus)

    def __eq__(self, other):
        return (
            isinstance(other, FieldElement)
            and self.value == other.value
            and self.modulus == other.modulus
        )

    def __hash__(self):
        return hash((self.value, self.modulus.q))

    def __repr__(self):
        return f"FieldElement({self.value} mod {self.modulus.q})"


def fe_add(a, b):
    return a + b


def fe_sub(a, b):
    return a - b


def fe_mul(a, b):
    return a * b


def fe_inv(a):
    return a.inv()


def smallest_prime_at_least(lower):
    """The smallest prime >= lower, as a PrimeModulus."""
    if lower < 5:
        raise FieldError("lower bound must be at least 5")
    n = lower
    while True:
        if n > MAX_MODULUS:
            raise FieldError(f"no supported prime at or above {lower}")
        if is_prime(n):
            return PrimeModulus(n)
        n += 1


def fe_to_bytes(a):
    """Fixed-width little-endian wire encoding, ceil(bit_len/8) bytes."""
    return a.value.to_bytes(a.modulus.byte_len, "little")


def fe_from_bytes(data, modulus):
    if len(data) != modulus.byte_len:
        raise BadLength(f"expected {modulus.byte_len} bytes, got {len(data)}")
    value = int.from_bytes(data, "little")
    if value >= modulus.q:
        raise OutOfRange(f"decoded value {value} >= modulus {modulus.q}")
    return FieldElement(value, modulus)
