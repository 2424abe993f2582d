"""Mixed commitment schemes: hiding/binding key generators, commit, verify, extract.

Two backends share one duck-typed surface:

``IdealBackend``
    Keys are uniform kappa-bit strings. Binding keys are remembered in a
    session-local registry together with their extraction key, and every
    commitment is recorded in a session-local ledger, which is what makes
    openings binding. The commitment string itself is
    ``(m xor pad) || H(pk || nonce)`` with ``r = pad || nonce``, so for every
    key its distribution over uniform ``r`` is exactly uniform, whatever m is.

``LweBackend``
    Multi-bit Regev encryption. A binding key is a real key pair, a hiding
    key is a uniformly random string of the same length. Toy parameters,
    not meant to be secure.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from math import log2

import numpy as np


@dataclass(frozen=True)
class MixedKey:
    backend: str
    data: bytes

    @property
    def bits(self) -> int:
        return 8 * len(self.data)

    def to_bytes(self) -> bytes:
        tag = self.backend.encode()
        return bytes([len(tag)]) + tag + len(self.data).to_bytes(4, "big") + self.data

    @classmethod
    def from_bytes(cls, blob: bytes) -> "MixedKey":
        t = blob[0]
        tag = blob[1:1 + t].decode()
        n = int.from_bytes(blob[1 + t:5 + t], "big")
        data = blob[5 + t:5 + t + n]
        if len(data) != n or 5 + t + n != len(blob):
            raise ValueError("malformed key encoding")
        return cls(tag, data)

    def __repr__(self):
        return f"MixedKey({self.backend}, {self.data[:8].hex()}..., {self.bits} bits)"


@dataclass(frozen=True)
class ExtractionKey:
    pk: MixedKey
    secret: bytes

    def __repr__(self):
        return f"ExtractionKey(for {self.pk!r})"


@dataclass(frozen=True)
class Opening:
    message: bytes
    randomizer: bytes


class IdealBackend:
    name = "ideal"
    hiding_distance = 0.0
    NONCE = 16

    def __init__(self, kappa: int = 128):
        if kappa % 8 or kappa < 64:
            raise ValueError("kappa must be a multiple of 8 and at least 64")
        self.kappa = kappa
        self._registry: dict[bytes, bytes] = {}
        self._ledger: dict[tuple[bytes, bytes], tuple[bytes, bytes]] = {}

    @property
    def ledger_key(self) -> MixedKey:
        """Unregistered fixed key used for plain ledger commitments."""
        return MixedKey(self.name, bytes(self.kappa // 8))

    def key_from_bits(self, value: int) -> MixedKey:
        return MixedKey(self.name, value.to_bytes(self.kappa // 8, "big"))

    def gen_hiding(self, rng) -> MixedKey:
        return self.key_from_bits(rng.getrandbits(self.kappa))

    def gen_binding(self, rng) -> tuple[MixedKey, ExtractionKey]:
        while True:
            pk = self.gen_hiding(rng)
            if pk.data.strip(b"\0"):
                break
        secret = rng.getrandbits(128).to_bytes(16, "big")
        self._registry[pk.data] = secret
        return pk, ExtractionKey(pk, secret)

    def is_binding(self, pk: MixedKey) -> bool:
        return pk.data in self._registry

    @property
    def registry_size(self) -> int:
        return len(self._registry)

    def randomizer_len(self, msg_len: int) -> int:
        return msg_len + self.NONCE

    def _check_key(self, pk: MixedKey) -> None:
        if pk.backend != self.name or len(pk.data) != self.kappa // 8:
            raise ValueError("key does not belong to this backend")

    def _handle(self, pk: MixedKey, m: bytes, r: bytes) -> bytes:
        pad, nonce = r[: len(m)], r[len(m):]
        body = bytes(a ^ b for a, b in zip(m, pad))
        return body + hashlib.blake2b(pk.data + nonce, digest_size=16).digest()

    def commit(self, pk: MixedKey, m: bytes, r: bytes) -> bytes:
        self._check_key(pk)
        m, r = bytes(m), bytes(r)
        if len(r) != self.randomizer_len(len(m)):
            raise ValueError(f"randomizer must be {self.randomizer_len(len(m))} bytes")
        C = self._handle(pk, m, r)
        self._ledger.setdefault((pk.data, C), (m, r))
        return C

    def verify_open(self, pk: MixedKey, C: bytes, m: bytes, r: bytes) -> bool:
        try:
            self._check_key(pk)
        except ValueError:
            return False
        if not isinstance(C, bytes) or not isinstance(m, bytes) or not isinstance(r, bytes):
            return False
        if len(r) != self.randomizer_len(len(m)) or len(C) != len(m) + 16:
            return False
        return self._handle(pk, m, r) == C and self._ledger.get((pk.data, C)) == (m, r)

    def xtr(self, C: bytes, sk: ExtractionKey) -> bytes:
        entry = None
        if self._registry.get(sk.pk.data) == sk.secret:
            entry = self._ledger.get((sk.pk.data, C))
        if entry is None:
            return bytes(max(len(C) - 16, 0))
        return entry[0]

    def state(self):
        return dict(self._registry), dict(self._ledger)

    def restore(self, state) -> None:
        self._registry, self._ledger = dict(state[0]), dict(state[1])


@dataclass(frozen=True)
class LweParams:
    n: int = 64
    q: int = 7681
    m: int = 1024
    block: int = 8
    eta: int = 1

    def __post_init__(self):
        if self.block != 8:
            raise ValueError("only byte-sized plaintext blocks are supported")
        if self.m % 8:
            raise ValueError("sample count must be a multiple of 8")
        # worst-case noise sum must stay below q/4 so decryption never fails
        if self.m * self.eta >= self.q / 4:
            raise ValueError("noise bound m*eta must be below q/4")
        if self.q >= 1 << 16:
            raise ValueError("q must fit in 16 bits")

    @property
    def key_elements(self) -> int:
        return self.m * (self.n + self.block)

    @property
    def key_bits(self) -> int:
        return 64 * self.key_elements

    @property
    def hiding_distance_log2(self) -> float:
        # leftover hash estimate plus the mod-q reduction of 64-bit words
        lhl = ((self.n + self.block) * log2(self.q) - self.m) / 2 - 1
        lift = log2(self.key_elements * self.q) - 64
        return max(lhl, lift) + 1


@lru_cache(maxsize=64)
def _parse_lwe_key(data: bytes, q: int, m: int, n: int, block: int):
    words = np.frombuffer(data, dtype=">u8")
    vals = (words % np.uint64(q)).astype(np.int64).reshape(m, n + block)
    return vals[:, :n].copy(), vals[:, n:].copy()


class LweBackend:
    name = "lwe"

    def __init__(self, params: LweParams | None = None):
        self.params = params or LweParams()
        self.kappa = self.params.key_bits

    @property
    def hiding_distance(self) -> float:
        return 2.0 ** self.params.hiding_distance_log2

    def key_from_bits(self, value: int) -> MixedKey:
        return MixedKey(self.name, value.to_bytes(self.kappa // 8, "big"))

    def _np(self, rng) -> np.random.Generator:
        return np.random.default_rng(rng.getrandbits(64))

    def gen_hiding(self, rng) -> MixedKey:
        return MixedKey(self.name, rng.getrandbits(self.kappa).to_bytes(self.kappa // 8, "big"))

    def gen_binding(self, rng) -> tuple[MixedKey, ExtractionKey]:
        P, g = self.params, self._np(rng)
        A = g.integers(0, P.q, size=(P.m, P.n), dtype=np.int64)
        S = g.integers(0, P.q, size=(P.n, P.block), dtype=np.int64)
        E = g.binomial(2 * P.eta, 0.5, size=(P.m, P.block)).astype(np.int64) - P.eta
        B = (A @ S + E) % P.q
        vals = np.concatenate([A, B], axis=1).astype(np.uint64)
        # lift every residue to a near-uniform 64-bit word
        top = (np.uint64(2**64 - 1) - vals) // np.uint64(P.q)
        lift = (g.random(vals.shape) * (top.astype(np.float64) + 1)).astype(np.uint64)
        lift = np.minimum(lift, top)
        words = vals + lift * np.uint64(P.q)
        pk = MixedKey(self.name, words.astype(">u8").tobytes())
        return pk, ExtractionKey(pk, S.astype(">u2").tobytes())

    def randomizer_len(self, msg_len: int) -> int:
        return msg_len * self.params.m // 8

    def _key(self, pk: MixedKey):
        P = self.params
        if pk.backend != self.name or len(pk.data) != self.kappa // 8:
            raise ValueError("key does not belong to this backend")
        return _parse_lwe_key(pk.data, P.q, P.m, P.n, P.block)

    def commit(self, pk: MixedKey, m: bytes, r: bytes) -> bytes:
        P = self.params
        A, B = self._key(pk)
        m, r = bytes(m), bytes(r)
        if len(r) != self.randomizer_len(len(m)):
            raise ValueError(f"randomizer must be {self.randomizer_len(len(m))} bytes")
        if not m:
            return b""
        X = np.unpackbits(np.frombuffer(r, dtype=np.uint8)).reshape(len(m), P.m).astype(np.int64)
        bits = np.unpackbits(np.frombuffer(m, dtype=np.uint8)).reshape(len(m), P.block).astype(np.int64)
        U = (X @ A) % P.q
        V = (X @ B + bits * (P.q // 2)) % P.q
        return np.concatenate([U, V], axis=1).astype(">u2").tobytes()

    def verify_open(self, pk: MixedKey, C: bytes, m: bytes, r: bytes) -> bool:
        try:
            return self.commit(pk, m, r) == C
        except (ValueError, TypeError):
            return False

    def xtr(self, C: bytes, sk: ExtractionKey) -> bytes:
        P = self.params
        width = 2 * (P.n + P.block)
        if not C or len(C) % width:
            return b""
        try:
            S = np.frombuffer(sk.secret, dtype=">u2").astype(np.int64).reshape(P.n, P.block)
        except ValueError:
            return bytes(len(C) // width)
        ct = np.frombuffer(C, dtype=">u2").astype(np.int64).reshape(-1, P.n + P.block)
        U, V = ct[:, : P.n], ct[:, P.n:]
        D = (V - U @ S) % P.q
        bits = ((D > P.q // 4) & (D < 3 * P.q // 4 + 1)).astype(np.uint8)
        return np.packbits(bits, axis=1).tobytes()

    def state(self):
        return None

    def restore(self, state) -> None:
        pass


def make_backend(name: str, kappa: int = 128, lwe: LweParams | None = None):
    if name == "ideal":
        return IdealBackend(kappa)
    if name == "lwe":
        return LweBackend(lwe)
    raise ValueError(f"unknown backend {name!r}")
