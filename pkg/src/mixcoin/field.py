"""Share-field arithmetic: GF(2^w) and small prime fields.

Elements are carried around as plain ints (the canonical representative)
by the hot paths in :mod:`mixcoin.sss`; :class:`FieldElement` wraps an int
together with its field for the public, operator-friendly API.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

# Pinned reduction polynomials, bit i = coefficient of X^i.
IRREDUCIBLE = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0x11B,
    12: 0x1053,
    16: 0x1100B,  # X^16 + X^12 + X^3 + X + 1
}


class FieldMismatch(ValueError):
    pass


def _clmul_mod(a: int, b: int, w: int, poly: int) -> int:
    r = 0
    top = 1 << w
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return r


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def _binary_tables(w: int, poly: int) -> tuple[list[int], list[int]]:
    order = (1 << w) - 1
    factors = _prime_factors(order)

    def power(g: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = _clmul_mod(r, g, w, poly)
            g = _clmul_mod(g, g, w, poly)
            e >>= 1
        return r

    for g in range(2, 1 << w):
        if all(power(g, order // q) != 1 for q in factors):
            break
    else:  # pragma: no cover - only for reducible moduli
        raise ValueError(f"modulus {poly:#x} is not irreducible over GF(2)")
    exp = [0] * (2 * order)
    log = [0] * (1 << w)
    x = 1
    for i in range(order):
        exp[i] = x
        log[x] = i
        x = _clmul_mod(x, g, w, poly)
    if x != 1 or len(set(exp[:order])) != order:  # pragma: no cover
        raise ValueError(f"modulus {poly:#x} is not irreducible over GF(2)")
    exp[order:] = exp[:order]
    return exp, log


@dataclass(frozen=True)
class FieldSpec:
    """Either GF(2^w) (``kind='binary'``) or GF(p) (``kind='prime'``)."""

    kind: str
    w: int = 0
    p: int = 0
    modulus: int = 0
    _exp: list = dc_field(default=None, compare=False, repr=False, hash=False)
    _log: list = dc_field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.kind == "binary":
            if self.w < 1 or self.w > 64:
                raise ValueError("binary field width must be in 1..64")
            mod = self.modulus or IRREDUCIBLE.get(self.w)
            if mod is None:
                raise ValueError(f"no pinned irreducible polynomial for w={self.w}")
            object.__setattr__(self, "modulus", mod)
            if self.w <= 20:
                exp, log = _binary_tables(self.w, mod)
                object.__setattr__(self, "_exp", exp)
                object.__setattr__(self, "_log", log)
        elif self.kind == "prime":
            if self.p < 2 or any(self.p % d == 0 for d in range(2, int(self.p**0.5) + 1)):
                raise ValueError(f"{self.p} is not prime")
        else:
            raise ValueError(f"unknown field kind {self.kind!r}")

    @classmethod
    def binary(cls, w: int, modulus: int = 0) -> "FieldSpec":
        return cls("binary", w=w, modulus=modulus)

    @classmethod
    def prime(cls, p: int) -> "FieldSpec":
        return cls("prime", p=p)

    def __str__(self):
        return f"GF(2^{self.w})" if self.kind == "binary" else f"GF({self.p})"

    @property
    def order(self) -> int:
        return 1 << self.w if self.kind == "binary" else self.p

    @property
    def element_bits(self) -> int:
        return self.w if self.kind == "binary" else (self.p - 1).bit_length()

    @property
    def element_bytes(self) -> int:
        return (self.element_bits + 7) // 8

    # -- int-level arithmetic -------------------------------------------
    def add(self, a: int, b: int) -> int:
        return a ^ b if self.kind == "binary" else (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return a ^ b if self.kind == "binary" else (a - b) % self.p

    def neg(self, a: int) -> int:
        return a if self.kind == "binary" else (-a) % self.p

    def mul(self, a: int, b: int) -> int:
        if self.kind == "prime":
            return a * b % self.p
        if not a or not b:
            return 0
        if self._exp is not None:
            return self._exp[self._log[a] + self._log[b]]
        return _clmul_mod(a, b, self.w, self.modulus)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        if self.kind == "prime":
            return pow(a, -1, self.p)
        if self._exp is not None:
            return self._exp[(self.order - 1 - self._log[a]) % (self.order - 1)]
        r, e, g = 1, self.order - 2, a
        while e:
            if e & 1:
                r = _clmul_mod(r, g, self.w, self.modulus)
            g = _clmul_mod(g, g, self.w, self.modulus)
            e >>= 1
        return r

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def reduce(self, v: int) -> int:
        if self.kind == "prime":
            return v % self.p
        if not 0 <= v < self.order:
            raise ValueError(f"{v} is not an element of {self}")
        return v

    def random(self, rng) -> int:
        return rng.getrandbits(self.w) if self.kind == "binary" else rng.randrange(self.p)

    def enc(self, index: int, sigma: int) -> int:
        """Evaluation point for a signed share index (-sigma+1 .. Sigma)."""
        v = index + sigma
        if v <= 0 or v >= self.order:
            raise ValueError(f"index {index} has no evaluation point in {self} at sigma={sigma}")
        return v

    # -- serialization --------------------------------------------------
    def to_bytes(self, a: int) -> bytes:
        return a.to_bytes(self.element_bytes, "little")

    def from_bytes(self, data: bytes) -> int:
        if len(data) != self.element_bytes:
            raise ValueError("wrong element width")
        v = int.from_bytes(data, "little")
        if v >= self.order:
            raise ValueError(f"{v} is not an element of {self}")
        return v

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(self, self.reduce(value))


GF2_16 = FieldSpec.binary(16)
GF2_8 = FieldSpec.binary(8)


@dataclass(frozen=True)
class FieldElement:
    field: FieldSpec
    value: int

    def _check(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement) or other.field != self.field:
            raise FieldMismatch(f"cannot combine elements of {self.field} and {getattr(other, 'field', other)}")

    def __add__(self, other):
        self._check(other)
        return FieldElement(self.field, self.field.add(self.value, other.value))

    def __sub__(self, other):
        self._check(other)
        return FieldElement(self.field, self.field.sub(self.value, other.value))

    def __mul__(self, other):
        self._check(other)
        return FieldElement(self.field, self.field.mul(self.value, other.value))

    def __truediv__(self, other):
        self._check(other)
        return FieldElement(self.field, self.field.div(self.value, other.value))

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.value))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.value))

    def __bytes__(self):
        return self.field.to_bytes(self.value)

    def __repr__(self):
        return f"{self.field}({self.value})"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def invert(a: FieldElement) -> FieldElement:
    return a.inverse()


# -- polynomials over int representatives --------------------------------

def poly_eval(F: FieldSpec, coeffs, x: int) -> int:
    """Horner evaluation; ``coeffs`` are low degree first."""
    acc = 0
    for c in reversed(coeffs):
        acc = F.add(F.mul(acc, x), c)
    return acc


def poly_trim(coeffs) -> list[int]:
    out = list(coeffs)
    while out and out[-1] == 0:
        out.pop()
    return out


def poly_mul(F: FieldSpec, a, b) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = F.add(out[i + j], F.mul(x, y))
    return out


def poly_divmod(F: FieldSpec, num, den) -> tuple[list[int], list[int]]:
    num, den = poly_trim(num), poly_trim(den)
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    if len(num) < len(den):
        return [], num
    rem = list(num)
    q = [0] * (len(num) - len(den) + 1)
    lead_inv = F.inv(den[-1])
    for k in range(len(q) - 1, -1, -1):
        c = F.mul(rem[k + len(den) - 1], lead_inv)
        q[k] = c
        if c:
            for j, d in enumerate(den):
                rem[k + j] = F.sub(rem[k + j], F.mul(c, d))
    return poly_trim(q), poly_trim(rem[: len(den) - 1])


def lagrange_coefficients(F: FieldSpec, xs, x: int) -> list[int]:
    """Weights w_k with p(x) = sum_k w_k * p(xs[k]) for deg p < len(xs)."""
    out = []
    for k, xk in enumerate(xs):
        num, den = 1, 1
        for l, xl in enumerate(xs):
            if l != k:
                num = F.mul(num, F.sub(x, xl))
                den = F.mul(den, F.sub(xk, xl))
        out.append(F.div(num, den))
    return out


def interpolate_ints(F: FieldSpec, xs, ys) -> list[int]:
    if len(set(xs)) != len(xs):
        raise ValueError("interpolation points must have distinct x-coordinates")
    coeffs = [0] * len(xs)
    for k, (xk, yk) in enumerate(zip(xs, ys)):
        if not yk:
            continue
        basis, den = [1], 1
        for l, xl in enumerate(xs):
            if l != k:
                basis = poly_mul(F, basis, [F.neg(xl), 1])
                den = F.mul(den, F.sub(xk, xl))
        scale = F.div(yk, den)
        for i, b in enumerate(basis):
            coeffs[i] = F.add(coeffs[i], F.mul(scale, b))
    return poly_trim(coeffs)


@dataclass(frozen=True)
class SharePolynomial:
    field: FieldSpec
    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(poly_trim(self.coefficients)))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        xv = x.value if isinstance(x, FieldElement) else x
        return FieldElement(self.field, poly_eval(self.field, self.coefficients, xv))


def evaluate(f: SharePolynomial, x: FieldElement) -> FieldElement:
    if x.field != f.field:
        raise FieldMismatch("point and polynomial live in different fields")
    return f(x)


def interpolate(points) -> SharePolynomial:
    """Unique polynomial of degree < len(points) through ``(x, y)`` element pairs."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    F = points[0][0].field
    for x, y in points:
        if x.field != F or y.field != F:
            raise FieldMismatch("points from different fields")
    return SharePolynomial(F, tuple(interpolate_ints(F, [x.value for x, _ in points], [y.value for _, y in points])))
