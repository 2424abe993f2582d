"""Coin-flip protocols and their enforcement simulators.

Every protocol is a *handle* with four generator methods, all returning the
coin as an int (most significant bit first) or raising ProtocolAbort:

``first(ctx, nbits, label)``
    the party the protocol is enforceable against (Alice in the figures);
``second(ctx, nbits, label)``
    the other party;
``force_first(ctx, nbits, label, target)``
    a simulator in the second seat steering the outcome to ``target``;
``force_second(ctx, nbits, label, target)``
    a simulator in the first seat doing the same against the second party.

``flavor`` names the guarantee for (first, second): ``uncont`` < ``random``
< ``force``. Handles without a force flavor for a seat raise
:class:`FlavorMismatch` from the matching ``force_*`` method.

Stack: ``BlumCoin`` (sequential commit-then-reveal bits, enforced by
rewinding) -> ``RandomCoin`` (key flip, commit a, receive b, open) ->
``ForceCoin`` (key flip, cut-and-choose commitment of a in F^sigma, receive
b, announce shares, flip a subset with the roles swapped, open it).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

from .commit_protocol import (
    EquivocationTrapdoor,
    commit_phase,
    committer_open,
    equivocal_commit,
    equivocal_open,
    extract_commit,
    parse_cells,
    random_subset,
    receiver_open,
    send_cells,
)
from .harness import Call, FlavorMismatch, Force, ProtocolAbort, Recv, Restore, Send, Snap
from .sss import SssParams, bits_to_vector, vector_to_bits
from .wire import bits_to_bytes

REWIND_CAP = 128


@dataclass(frozen=True)
class CoinOutcome:
    value: int | None
    nbits: int

    @property
    def aborted(self) -> bool:
        return self.value is None

    def bits(self) -> str:
        return "⊥" if self.value is None else format(self.value, f"0{self.nbits}b")


@dataclass(frozen=True)
class FlavorPair:
    alice: str
    bob: str

    def __iter__(self):
        return iter((self.alice, self.bob))


def _key_bits(ctx) -> int:
    return ctx.backend.kappa


def _check_bits(value, nbits: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0 or value >> nbits:
        raise ProtocolAbort(f"expected a {nbits}-bit value")
    return value


class IdealCoin:
    """Calls into the ideal coin functionality; usable in every seat."""

    flavor = FlavorPair("force", "force")
    ideal = True

    def _flip(self, ctx, nbits, label):
        lab = f"coin:{label}"
        h = yield Call(lab, ("flip", nbits))
        if ctx.corrupt:
            ok = ctx.decide(lab, h)
            yield Call(lab, ("decide", ok))
        if h is None:
            raise ProtocolAbort("the coin functionality delivered abort")
        return h

    def first(self, ctx, nbits, label):
        return (yield from self._flip(ctx, nbits, label))

    def second(self, ctx, nbits, label):
        return (yield from self._flip(ctx, nbits, label))

    def force_first(self, ctx, nbits, label, target):
        yield Force(f"coin:{label}", target)
        return (yield from self._flip(ctx, nbits, label))

    force_second = force_first


class BlumCoin:
    """nbits sequential rounds of: commit a bit, receive a bit, open."""

    flavor = FlavorPair("force", "random")
    ideal = False

    def __init__(self, strategy: str = "guess", cap: int = REWIND_CAP):
        if strategy not in ("guess", "informed"):
            raise ValueError(f"unknown rewinding strategy {strategy!r}")
        self.strategy = strategy
        self.cap = cap

    def first(self, ctx, nbits, label):
        out = 0
        key = ctx.ledger.ledger_key
        for i in range(nbits):
            a = ctx.rng.getrandbits(1)
            r = ctx.rng.randbytes(ctx.ledger.randomizer_len(1))
            C = ctx.ledger.commit(key, bytes([a]), r)
            yield Send(f"{label}.b{i}.COMMIT", C)
            b = _check_bits((yield Recv(f"{label}.b{i}.BIT")), 1)
            yield Send(f"{label}.b{i}.OPEN", (bytes([a]), r))
            out = (out << 1) | (a ^ b)
        return out

    def _receive_open(self, ctx, label, i, C) -> int:
        op = yield Recv(f"{label}.b{i}.OPEN")
        if not isinstance(op, tuple) or len(op) != 2:
            raise ProtocolAbort("malformed opening")
        m, r = op
        if m not in (b"\x00", b"\x01") or not ctx.ledger.verify_open(ctx.ledger.ledger_key, C, m, r):
            raise ProtocolAbort("opening does not match the commitment")
        return m[0]

    def second(self, ctx, nbits, label):
        out = 0
        for i in range(nbits):
            C = yield Recv(f"{label}.b{i}.COMMIT")
            b = ctx.rng.getrandbits(1)
            yield Send(f"{label}.b{i}.BIT", b)
            a = yield from self._receive_open(ctx, label, i, C)
            out = (out << 1) | (a ^ b)
        return out

    def force_first(self, ctx, nbits, label, target):
        """Rewind the committer until every bit lands on ``target``."""
        out = 0
        for i in range(nbits):
            t = (target >> (nbits - 1 - i)) & 1
            C = yield Recv(f"{label}.b{i}.COMMIT")
            snap = yield Snap()
            attempts, a_seen = 0, None
            while True:
                attempts += 1
                if self.strategy == "informed" and a_seen is not None:
                    b = a_seen ^ t
                elif self.strategy == "informed":
                    b = 0
                else:
                    b = ctx.rng.getrandbits(1)
                yield Send(f"{label}.b{i}.BIT", b)
                a = yield from self._receive_open(ctx, label, i, C)
                if a ^ b == t:
                    break
                if attempts >= self.cap:
                    raise ProtocolAbort("rewinding budget exhausted")
                a_seen = a
                yield Restore(snap)
            ctx.count("rewind_attempts", attempts)
            ctx.count("rewound_bits")
            out = (out << 1) | t
        return out

    def force_second(self, ctx, nbits, label, target):
        raise FlavorMismatch("the Blum coin is only random, not enforceable, for the second party")


class RandomCoin:
    """Amplifies an uncontrollable-for-the-second-party base into a random one."""

    ideal = False

    def __init__(self, base, broken: bool = False):
        self.base = base
        self.broken = broken  # negative control: a is sent in the clear
        self.flavor = FlavorPair("force", "random")

    def _key(self, ctx, bits):
        return ctx.backend.key_from_bits(bits)

    def first(self, ctx, nbits, label):
        pk = self._key(ctx, (yield from self.base.first(ctx, _key_bits(ctx), f"{label}.pk")))
        a = ctx.rng.getrandbits(nbits)
        ab = bits_to_bytes(a, nbits)
        r = ctx.rng.randbytes(ctx.backend.randomizer_len(len(ab)))
        A = ab if self.broken else ctx.backend.commit(pk, ab, r)
        yield Send(f"{label}.COMMIT", A)
        b = _check_bits((yield Recv(f"{label}.BIT")), nbits)
        yield Send(f"{label}.OPEN", (ab, r))
        return a ^ b

    def _receive_open(self, ctx, nbits, label, pk, A) -> int:
        op = yield Recv(f"{label}.OPEN")
        if not isinstance(op, tuple) or len(op) != 2 or not isinstance(op[0], bytes):
            raise ProtocolAbort("malformed opening")
        ab, r = op
        if len(ab) != (nbits + 7) // 8 or int.from_bytes(ab, "big") >> nbits:
            raise ProtocolAbort("opened value has the wrong length")
        ok = (ab == A) if self.broken else ctx.backend.verify_open(pk, A, ab, r)
        if not ok:
            raise ProtocolAbort("opening does not match the commitment")
        return int.from_bytes(ab, "big")

    def second(self, ctx, nbits, label):
        pk = self._key(ctx, (yield from self.base.second(ctx, _key_bits(ctx), f"{label}.pk")))
        A = yield Recv(f"{label}.COMMIT")
        b = ctx.rng.getrandbits(nbits)
        yield Send(f"{label}.BIT", b)
        a = yield from self._receive_open(ctx, nbits, label, pk, A)
        return a ^ b

    def force_first(self, ctx, nbits, label, target):
        """Force a binding key, decrypt the commitment, answer with b = target xor a."""
        pk, sk = ctx.backend.gen_binding(ctx.rng)
        bits = int.from_bytes(pk.data, "big")
        got = yield from self.base.force_first(ctx, _key_bits(ctx), f"{label}.pk", bits)
        if got != bits:
            raise ProtocolAbort("key flip was not enforced")
        A = yield Recv(f"{label}.COMMIT")
        if not isinstance(A, bytes):
            raise ProtocolAbort("malformed commitment")
        raw = ctx.backend.xtr(A, sk)
        a_ext = int.from_bytes(raw, "big") & ((1 << nbits) - 1) if raw else 0
        b = target ^ a_ext
        yield Send(f"{label}.BIT", b)
        a = yield from self._receive_open(ctx, nbits, label, pk, A)
        if a != a_ext:
            ctx.count("extraction_mismatch")
        return a ^ b

    def force_second(self, ctx, nbits, label, target):
        raise FlavorMismatch("this protocol is only random, not enforceable, for the second party")


class ForceCoin:
    """Enforceable for both parties; built from two random-for-one-side flips."""

    flavor = FlavorPair("force", "force")
    ideal = False

    def __init__(self, key_coin, subset_coin):
        self.key_coin = key_coin  # first party enforceable, random for the second
        self.subset_coin = subset_coin  # played with the roles swapped

    def sss_params(self, ctx, nbits: int) -> SssParams:
        F = ctx.params.field
        return SssParams(max(ctx.params.sigma, ceil(nbits / F.element_bits)), F)

    @staticmethod
    def _width(p: SssParams) -> int:
        return p.sigma * p.field.element_bits

    def _out(self, p, nbits, a, b) -> int:
        full = vector_to_bits(a, p.field) ^ b
        return full >> (self._width(p) - nbits)

    def first(self, ctx, nbits, label):
        p = self.sss_params(ctx, nbits)
        pk = ctx.backend.key_from_bits((yield from self.key_coin.first(ctx, _key_bits(ctx), f"{label}.pk")))
        a = tuple(p.field.random(ctx.rng) for _ in range(p.sigma))
        state, M = commit_phase(a, pk, p, ctx.rng, ctx.backend)
        yield from send_cells(M, label)
        b = _check_bits((yield Recv(f"{label}.BIT")), self._width(p))
        yield from committer_open(ctx, state, self.subset_coin, label)
        return self._out(p, nbits, a, b)

    def second(self, ctx, nbits, label):
        p = self.sss_params(ctx, nbits)
        pk = ctx.backend.key_from_bits((yield from self.key_coin.second(ctx, _key_bits(ctx), f"{label}.pk")))
        M = parse_cells((yield Recv(f"{label}.CELLS")), p)
        b = ctx.rng.getrandbits(self._width(p))
        yield Send(f"{label}.BIT", b)
        a = yield from receiver_open(ctx, p, pk, M, self.subset_coin, label)
        return self._out(p, nbits, a, b)

    def _pad(self, ctx, p, nbits, target) -> int:
        extra = self._width(p) - nbits
        return (target << extra) | ctx.rng.getrandbits(extra) if extra else target

    def force_first(self, ctx, nbits, label, target):
        """Simulator in the receiver seat: binding key, extract a', send b = h xor a'."""
        p = self.sss_params(ctx, nbits)
        pk, sk = ctx.backend.gen_binding(ctx.rng)
        bits = int.from_bytes(pk.data, "big")
        got = yield from self.key_coin.force_first(ctx, _key_bits(ctx), f"{label}.pk", bits)
        if got != bits:
            raise ProtocolAbort("key flip was not enforced")
        M = parse_cells((yield Recv(f"{label}.CELLS")), p)
        a_ext = extract_commit(M, sk, p, ctx.backend)
        b = self._pad(ctx, p, nbits, target) ^ vector_to_bits(a_ext, p.field)
        yield Send(f"{label}.BIT", b)
        a = yield from receiver_open(ctx, p, pk, M, self.subset_coin, label)
        if tuple(a) != tuple(a_ext):
            ctx.count("extraction_mismatch")
        return self._out(p, nbits, a, b)

    def force_second(self, ctx, nbits, label, target):
        """Simulator in the committer seat: commit to zero, then equivocate onto h xor b."""
        p = self.sss_params(ctx, nbits)
        pk = ctx.backend.key_from_bits((yield from self.key_coin.first(ctx, _key_bits(ctx), f"{label}.pk")))
        trapdoor = EquivocationTrapdoor(random_subset(p, ctx.rng))
        state, M = equivocal_commit(trapdoor, (0,) * p.sigma, pk, p, ctx.rng, ctx.backend)
        yield from send_cells(M, label)
        b = _check_bits((yield Recv(f"{label}.BIT")), self._width(p))
        a = bits_to_vector(self._pad(ctx, p, nbits, target) ^ b, p.field, p.sigma)
        yield from equivocal_open(ctx, state, a, self.subset_coin, label)
        return self._out(p, nbits, a, b)


# -- stacks and plain session programs --------------------------------------

def coin_stack(params, strategy: str = "guess") -> dict:
    """Handles for one parameter set: ``base`` (key flips of the amplifiers),
    ``random`` (the random-for-Bob flip), ``force`` (fully enforceable)."""
    if not params.composed:
        ideal = IdealCoin()
        return {"base": ideal, "random": RandomCoin(ideal), "force": ForceCoin(ideal, ideal), "ideal": ideal}
    blum = BlumCoin(strategy)
    rnd = RandomCoin(blum)
    return {"base": blum, "random": rnd, "force": ForceCoin(rnd, rnd), "ideal": ForceCoin(rnd, rnd)}


def blum_bit(strategy: str = "guess"):
    return coin_programs(BlumCoin(strategy), 1)


def blum_string(kappa: int, strategy: str = "guess"):
    return coin_programs(BlumCoin(strategy), kappa)


def amplify_to_random(base, broken: bool = False) -> RandomCoin:
    return RandomCoin(base, broken)


def amplify_to_force(base, subset_coin=None) -> ForceCoin:
    return ForceCoin(base, subset_coin if subset_coin is not None else base)


def coin_programs(handle, nbits: int, label: str = "coin"):
    """Honest (Alice, Bob) programs for one flip, Alice in the first seat."""

    def alice(ctx):
        return (yield from handle.first(ctx, nbits, label))

    def bob(ctx):
        return (yield from handle.second(ctx, nbits, label))

    return alice, bob


def enforce_against_alice(handle, nbits: int, target: int, label: str = "coin"):
    """Simulator program for Bob's seat that steers the flip to ``target``."""

    def sim(ctx):
        return (yield from handle.force_first(ctx, nbits, label, target))

    return sim


def enforce_against_bob(handle, nbits: int, target: int, label: str = "coin"):
    """Simulator program for Alice's seat that steers the flip to ``target``."""
    if handle.flavor.bob != "force":
        raise FlavorMismatch(f"{type(handle).__name__} is not enforceable against the second party")

    def sim(ctx):
        return (yield from handle.force_second(ctx, nbits, label, target))

    return sim


def rewind_enforce_blum(target: int, nbits: int = 1, strategy: str = "guess", label: str = "coin"):
    return enforce_against_alice(BlumCoin(strategy), nbits, target, label)


def flavor_test_uncont(outcomes, Q) -> float:
    """Fraction of non-abort outcomes inside the set Q."""
    Q = set(Q)
    done = [c for c in outcomes if c is not None]
    if not done:
        return 0.0
    return sum(1 for c in done if c in Q) / len(done)
