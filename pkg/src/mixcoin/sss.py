"""Reed-Solomon style sharing of m in F^sigma into Sigma = 4*sigma shares.

Share vectors are tuples of field ints; position ``i`` (1-based) holds the
value of the sharing polynomial at ``enc(i)``, and message coordinate
``m_i`` sits at ``enc(-i+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

from .field import GF2_16, FieldSpec, lagrange_coefficients, poly_divmod, poly_eval, interpolate_ints


class DecodeFailure(ValueError):
    """No consistent sharing lies within distance sigma of the input."""


@dataclass(frozen=True)
class SssParams:
    sigma: int
    field: FieldSpec = GF2_16

    def __post_init__(self):
        if self.sigma < 1:
            raise ValueError("sigma must be positive")
        if self.field.order < self.Sigma + self.sigma + 1:
            raise ValueError(
                f"{self.field} too small for sigma={self.sigma}: need order >= {self.Sigma + self.sigma + 1}"
            )

    @property
    def Sigma(self) -> int:
        return 4 * self.sigma

    @property
    def message_points(self) -> list[int]:
        return [self.field.enc(-i + 1, self.sigma) for i in range(1, self.sigma + 1)]

    @property
    def share_points(self) -> list[int]:
        return [self.field.enc(i, self.sigma) for i in range(1, self.Sigma + 1)]

    @property
    def subset_count(self) -> int:
        return comb(self.Sigma, self.sigma)

    # Linear maps depend only on (field, sigma) and are cached across instances.
    @property
    def _share_map(self) -> list[list[int]]:
        return _linear_map(self.field, self.sigma, "share")

    @property
    def _check_map(self) -> list[list[int]]:
        return _linear_map(self.field, self.sigma, "check")

    @property
    def _recon_map(self) -> list[list[int]]:
        return _linear_map(self.field, self.sigma, "recon")


@lru_cache(maxsize=64)
def _linear_map(F: FieldSpec, sigma: int, which: str) -> list[list[int]]:
    msg = [F.enc(-i + 1, sigma) for i in range(1, sigma + 1)]
    pts = [F.enc(i, sigma) for i in range(1, 4 * sigma + 1)]
    if which == "share":
        base, targets = msg + pts[:sigma], pts
    elif which == "check":
        base, targets = pts[: 2 * sigma], pts[2 * sigma:]
    else:
        base, targets = pts[: 2 * sigma], msg
    return [lagrange_coefficients(F, base, x) for x in targets]


def _apply(F: FieldSpec, rows, vec) -> list[int]:
    out = []
    for row in rows:
        acc = 0
        for c, v in zip(row, vec):
            if c and v:
                acc = F.add(acc, F.mul(c, v))
        out.append(acc)
    return out


def share(m, s, params: SssParams) -> tuple:
    if len(m) != params.sigma or len(s) != params.sigma:
        raise ValueError(f"message and randomizer must both have length sigma={params.sigma}")
    vec = list(m) + list(s)
    return tuple(_apply(params.field, params._share_map, vec))


def random_sharing(m, params: SssParams, rng) -> tuple:
    s = [params.field.random(rng) for _ in range(params.sigma)]
    return share(m, s, params)


def is_consistent(v, params: SssParams) -> bool:
    if len(v) != params.Sigma:
        return False
    F = params.field
    if any(not 0 <= x < F.order for x in v):
        return False
    head = v[: 2 * params.sigma]
    return _apply(F, params._check_map, head) == list(v[2 * params.sigma:])


def reconstruct(v, params: SssParams) -> tuple:
    if not is_consistent(v, params):
        raise ValueError("share vector is not consistent with a degree-(2*sigma-1) polynomial")
    return tuple(_apply(params.field, params._recon_map, v[: 2 * params.sigma]))


def hamming(u, v) -> int:
    return sum(1 for a, b in zip(u, v) if a != b)


def restrict(v, S) -> tuple:
    """Coordinates of ``v`` at the 1-based positions in ``S``."""
    S = tuple(S)
    if list(S) != sorted(set(S)):
        raise ValueError("subset positions must be strictly increasing")
    if S and (S[0] < 1 or S[-1] > len(v)):
        raise ValueError("subset position out of range")
    return tuple(v[i - 1] for i in S)


def interpolate_through(params: SssParams, message, fixed: dict) -> list[int]:
    """Coefficients of the degree <= 2*sigma-1 polynomial hitting ``message``
    at the message points and ``fixed[i]`` at share position ``i``."""
    if len(fixed) != params.sigma:
        raise ValueError("need exactly sigma fixed share positions")
    xs = params.message_points + [params.field.enc(i, params.sigma) for i in sorted(fixed)]
    ys = list(message) + [fixed[i] for i in sorted(fixed)]
    return interpolate_ints(params.field, xs, ys)


def sharing_from_poly(params: SssParams, coeffs) -> tuple:
    return tuple(poly_eval(params.field, coeffs, x) for x in params.share_points)


def _solve(F: FieldSpec, rows, rhs):
    """Any solution of rows * x = rhs, or None when inconsistent."""
    n = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(aug)) if aug[i][c]), None)
        if p is None:
            continue
        aug[r], aug[p] = aug[p], aug[r]
        inv = F.inv(aug[r][c])
        aug[r] = [F.mul(inv, x) for x in aug[r]]
        for i in range(len(aug)):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == len(aug):
            break
    if any(row[-1] and not any(row[:-1]) for row in aug):
        return None
    x = [0] * n
    for i, c in enumerate(pivots):
        x[c] = aug[i][-1]
    return x


def berlekamp_welch(noisy, params: SssParams, errors: int | None = None) -> list[int]:
    """Message polynomial (coefficients) within ``errors`` (default sigma) of ``noisy``."""
    F = params.field
    e = params.sigma if errors is None else errors
    k = 2 * params.sigma
    xs = params.share_points
    rows, rhs = [], []
    for x, y in zip(xs, noisy):
        powers = [1]
        for _ in range(e + k):
            powers.append(F.mul(powers[-1], x))
        # unknowns: E_0..E_{e-1} (E monic of degree e), Q_0..Q_{e+k-1}
        row = [F.neg(F.mul(y, powers[j])) for j in range(e)] + powers[: e + k]
        rows.append(row)
        rhs.append(F.mul(y, powers[e]))
    sol = _solve(F, rows, rhs)
    if sol is None:
        raise DecodeFailure("Berlekamp-Welch system has no solution")
    E = sol[:e] + [1]
    Q = sol[e:]
    f, rem = poly_divmod(F, Q, E)
    if rem or len(f) > k:
        raise DecodeFailure("error locator does not divide the numerator")
    return f


def nearest_codeword(noisy, params: SssParams) -> tuple[tuple, tuple]:
    """Closest consistent sharing (within distance sigma) and its message."""
    noisy = tuple(noisy)
    if len(noisy) != params.Sigma:
        raise DecodeFailure(f"expected {params.Sigma} shares, got {len(noisy)}")
    F = params.field
    if any(not 0 <= x < F.order for x in noisy):
        raise DecodeFailure("share outside the field")
    if is_consistent(noisy, params):
        return noisy, reconstruct(noisy, params)
    f = berlekamp_welch(noisy, params)
    cw = sharing_from_poly(params, f)
    if hamming(cw, noisy) > params.sigma:
        raise DecodeFailure("nearest codeword is farther than sigma")
    return cw, tuple(poly_eval(F, f, x) for x in params.message_points)


def serialize_vector(v, field: FieldSpec) -> bytes:
    return b"".join(field.to_bytes(x) for x in v)


def deserialize_vector(data: bytes, field: FieldSpec, length: int) -> tuple:
    w = field.element_bytes
    if len(data) != w * length:
        raise ValueError("wrong share-vector length")
    return tuple(field.from_bytes(data[i * w:(i + 1) * w]) for i in range(length))


def vector_to_bits(v, field: FieldSpec) -> int:
    """Pack a vector of GF(2^w) elements into one integer, first element most significant."""
    if field.kind != "binary":
        raise ValueError("bit-string packing needs a binary field")
    out = 0
    for x in v:
        out = (out << field.w) | x
    return out


def bits_to_vector(bits: int, field: FieldSpec, length: int) -> tuple:
    if field.kind != "binary":
        raise ValueError("bit-string packing needs a binary field")
    mask = (1 << field.w) - 1
    return tuple((bits >> (field.w * (length - 1 - i))) & mask for i in range(length))
