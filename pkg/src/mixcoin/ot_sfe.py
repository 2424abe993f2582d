"""Oblivious transfer from mixed commitments and an actively secure SFE compiler.

OT: the receiver sends a binding key in slot c and a hiding key in slot 1-c;
the sender commits m0, m1 under them; the receiver extracts slot c.

SFE: both parties commit to their input and to a random share s_i of the
randomness their passive protocol needs, prove knowledge of the openings,
flip s_i' jointly and run the passive protocol with r_i = s_i xor s_i'. Every
inner message comes with a proof that it is the next message the committed
input and randomness dictate. Proofs go through the ideal ZKPK functionality.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import wire
from .harness import Call, Force, PeerAborted, ProtocolAbort, Recv, Send, run_session
from .mixed_commit import MixedKey


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


# -- oblivious transfer ------------------------------------------------------

@dataclass(frozen=True)
class OtInputs:
    m0: bytes
    m1: bytes
    c: int

    def __post_init__(self):
        if len(self.m0) != len(self.m1):
            raise ValueError("both sender messages must have the same length")
        if self.c not in (0, 1):
            raise ValueError("choice bit must be 0 or 1")


def ot_keys(backend, c: int, rng):
    """Key pair for slot c, plain hiding key for the other slot."""
    pk_c, sk_c = backend.gen_binding(rng)
    pk_o = backend.gen_hiding(rng)
    keys = (pk_c, pk_o) if c == 0 else (pk_o, pk_c)
    return keys, sk_c


def ot_commit(backend, keys, m0: bytes, m1: bytes, rng):
    out = []
    for pk, m in zip(keys, (m0, m1)):
        r = rng.randbytes(backend.randomizer_len(len(m)))
        out.append(backend.commit(pk, m, r))
    return tuple(out)


def _parse_keys(backend, payload):
    if not isinstance(payload, tuple) or len(payload) != 2 or not all(isinstance(k, bytes) for k in payload):
        raise ProtocolAbort("expected two keys")
    keys = tuple(MixedKey(backend.name, k) for k in payload)
    for k in keys:
        if k.bits != backend.kappa:
            raise ProtocolAbort("key has the wrong length")
    return keys


def ot_sender(ctx, m0: bytes, m1: bytes, label: str = "ot"):
    keys = _parse_keys(ctx.backend, (yield Recv(f"{label}.KEYS")))
    yield Send(f"{label}.COMMITS", ot_commit(ctx.backend, keys, m0, m1, ctx.rng))
    return True


def ot_receiver(ctx, c: int, label: str = "ot"):
    keys, sk = ot_keys(ctx.backend, c, ctx.rng)
    yield Send(f"{label}.KEYS", tuple(k.data for k in keys))
    C = yield Recv(f"{label}.COMMITS")
    if not isinstance(C, tuple) or len(C) != 2 or not isinstance(C[c], bytes):
        raise ProtocolAbort("expected two commitments")
    return ctx.backend.xtr(C[c], sk)


def ot_programs(inputs: OtInputs, label: str = "ot"):
    def alice(ctx):
        return (yield from ot_sender(ctx, inputs.m0, inputs.m1, label))

    def bob(ctx):
        return (yield from ot_receiver(ctx, inputs.c, label))

    return alice, bob


def ot_run(inputs: OtInputs, params=None, seed=0):
    """Receiver's output m_c."""
    a, b = ot_programs(inputs)
    return run_session(a, b, params, seed).output("B")


# -- passive protocols -----------------------------------------------------

class PassiveProtocol:
    """Deterministic next-message description of a passively secure protocol.

    ``rounds`` lists the speaker of each message. ``message`` and ``output``
    see the full message list so far. ``simulate_alice(x1, y, rng)`` returns
    Alice's randomness and Bob's messages for a run consistent with y.
    """

    name = "passive"
    rounds: tuple = ()

    def r_len(self, role: str) -> int:
        return 0

    def f(self, x1, x2):
        raise NotImplementedError

    def message(self, role: str, x, r: bytes, msgs: tuple):
        raise NotImplementedError

    def output(self, role: str, x, r: bytes, msgs: tuple):
        raise NotImplementedError

    def simulate_alice(self, x1, y, rng):
        raise NotImplementedError

    def perturb(self, m):
        raise NotImplementedError

    def other_input(self, x):
        raise NotImplementedError

    def check_input(self, role: str, x) -> None:
        pass

    def bind(self, backend) -> "PassiveProtocol":
        """Copy that uses the given session backend."""
        return self


class PassiveXor(PassiveProtocol):
    """Exchange inputs, output their XOR."""

    name = "xor"
    rounds = ("A", "B")

    def __init__(self, nbits: int = 1):
        if nbits < 1:
            raise ValueError("input length must be positive")
        self.nbits = nbits

    def check_input(self, role, x):
        if not isinstance(x, int) or x < 0 or x >> self.nbits:
            raise ValueError(f"input must be a {self.nbits}-bit integer")

    def f(self, x1, x2):
        return x1 ^ x2

    def message(self, role, x, r, msgs):
        return x

    def output(self, role, x, r, msgs):
        return msgs[0] ^ msgs[1]

    def simulate_alice(self, x1, y, rng):
        return b"", {1: y ^ x1}

    def perturb(self, m):
        return m ^ 1

    def other_input(self, x):
        return x ^ 1


class PassiveAndViaOt(PassiveProtocol):
    """a AND b: Bob selects with b from Alice's OT pair (0, a), then announces the bit."""

    name = "and"
    rounds = ("B", "A", "B")
    KEY_SEED = 16

    def __init__(self, backend=None):
        self.backend = backend

    def bind(self, backend):
        return PassiveAndViaOt(backend)

    def check_input(self, role, x):
        if x not in (0, 1):
            raise ValueError("input must be a single bit")

    def r_len(self, role):
        return self.KEY_SEED if role == "B" else 2 * self.backend.randomizer_len(1)

    def f(self, x1, x2):
        return x1 & x2

    def _keys(self, b: int, r: bytes):
        return ot_keys(self.backend, b, random.Random(r))

    def message(self, role, x, r, msgs):
        be = self.backend
        k = len(msgs)
        if role == "B" and k == 0:
            keys, _ = self._keys(x, r)
            return tuple(key.data for key in keys)
        if role == "A" and k == 1:
            keys = _parse_keys(be, msgs[0])
            half = be.randomizer_len(1)
            return tuple(be.commit(pk, bytes([v]), r[j * half:(j + 1) * half])
                         for j, (pk, v) in enumerate(zip(keys, (0, x))))
        if role == "B" and k == 2:
            _, sk = self._keys(x, r)
            C = msgs[1]
            if not isinstance(C, tuple) or len(C) != 2:
                raise ProtocolAbort("expected two commitments")
            raw = be.xtr(C[x], sk)
            return raw[0] & 1 if raw else 0
        raise ProtocolAbort(f"{role} does not speak at message {k}")

    def output(self, role, x, r, msgs):
        return msgs[2]

    def simulate_alice(self, x1, y, rng):
        r1 = rng.randbytes(self.r_len("A"))
        keys, _ = self._keys(y, rng.randbytes(self.KEY_SEED))
        return r1, {0: tuple(k.data for k in keys), 2: y}

    def perturb(self, m):
        C0, C1 = m
        return (bytes([C0[0] ^ 1]) + C0[1:], C1)

    def other_input(self, x):
        return x ^ 1


def passive_xor(nbits: int = 1) -> PassiveXor:
    return PassiveXor(nbits)


def passive_and_via_ot(backend=None) -> PassiveAndViaOt:
    return PassiveAndViaOt(backend)


def run_passive(proto: PassiveProtocol, x1, x2, r1=None, r2=None, rng=None):
    """Execute a passive protocol locally; returns (messages, output)."""
    rng = rng or random.Random(0)
    r = {"A": r1 if r1 is not None else rng.randbytes(proto.r_len("A")),
         "B": r2 if r2 is not None else rng.randbytes(proto.r_len("B"))}
    x = {"A": x1, "B": x2}
    msgs = []
    for who in proto.rounds:
        msgs.append(wire.unpack(wire.pack(proto.message(who, x[who], r[who], tuple(msgs)))))
    return tuple(msgs), proto.output("A", x1, r["A"], tuple(msgs))


# -- relations for the proofs ----------------------------------------------

def opening_relation(backend):
    """Statement ("open", pk, C); witness (message, randomizer)."""

    def rel(stmt, wit) -> bool:
        kind, pkd, C = stmt
        msg, r = wit
        return kind == "open" and backend.verify_open(MixedKey(backend.name, pkd), C, msg, r)

    return rel


def sfe_consistency_relation(proto: PassiveProtocol, backend):
    """Statement (role, k, pk, X, S, s', earlier messages, m);
    witness (encoded input, its randomizer, s, its randomizer).

    Holds iff the witness opens X and S and the committed input with
    randomness s xor s' makes ``role`` send m as message k."""

    def rel(stmt, wit) -> bool:
        role, k, pkd, X, S, s_prime, before, m = stmt
        x_msg, rx, s, rs = wit
        pk = MixedKey(backend.name, pkd)
        if len(before) != k or k >= len(proto.rounds) or proto.rounds[k] != role:
            return False
        if not (backend.verify_open(pk, X, x_msg, rx) and backend.verify_open(pk, S, s, rs)):
            return False
        x = wire.unpack(x_msg)
        expect = proto.message(role, x, _xor(s, s_prime), tuple(before))
        return wire.pack(expect) == wire.pack(m)

    return rel


def consistency_statement(role, k, pk: MixedKey, X, S, s_prime, before, m) -> tuple:
    return (role, k, pk.data, X, S, s_prime, tuple(before), m)


# -- the compiler ------------------------------------------------------------

DEVIATIONS = ("flip-message", "wrong-randomness", "substitute-input")


@dataclass
class SfeSession:
    pk: MixedKey = None
    X: dict = field(default_factory=dict)
    S: dict = field(default_factory=dict)
    s_prime: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)


def _prove(label, stmt, wit):
    yield Call(label, ("prove", stmt, wit))


def _verify(label, expected, relation):
    reply = yield Call(label, ("verify", relation))
    stmt, j = reply[0], reply[1]
    if j != "success" or wire.pack(stmt) != wire.pack(expected):
        raise ProtocolAbort(f"proof {label} rejected")
    return reply


def _flip(ctx, coin, nbits, label, role):
    if role == "A":
        return (yield from coin.first(ctx, nbits, label))
    return (yield from coin.second(ctx, nbits, label))


def _commit(ctx, pk, msg: bytes):
    r = ctx.rng.randbytes(ctx.backend.randomizer_len(len(msg)))
    return ctx.backend.commit(pk, msg, r), r


def sfe_party(ctx, proto: PassiveProtocol, x, coin, label: str = "sfe", deviation: str | None = None):
    role, peer, be = ctx.role, ctx.peer, ctx.backend
    proto = proto.bind(be)
    proto.check_input(role, x)
    st = SfeSession()
    ctx.aux["session"] = st
    st.pk = pk = be.key_from_bits((yield from _flip(ctx, coin, be.kappa, f"{label}.pk", role)))
    open_rel = opening_relation(be)

    x_msg = wire.pack(x)
    X, rx = _commit(ctx, pk, x_msg)
    yield Send(f"{label}.X{role}", X)
    yield from _prove(f"zkpk:{label}.X{role}", ("open", pk.data, X), (x_msg, rx))
    Xp = yield Recv(f"{label}.X{peer}")
    yield from _verify(f"zkpk:{label}.X{peer}", ("open", pk.data, Xp), open_rel)
    st.X = {role: X, peer: Xp}

    s = ctx.rng.randbytes(proto.r_len(role))
    S, rs = _commit(ctx, pk, s)
    yield Send(f"{label}.S{role}", S)
    yield from _prove(f"zkpk:{label}.S{role}", ("open", pk.data, S), (s, rs))
    Sp = yield Recv(f"{label}.S{peer}")
    yield from _verify(f"zkpk:{label}.S{peer}", ("open", pk.data, Sp), open_rel)
    st.S = {role: S, peer: Sp}

    for who in ("A", "B"):
        n = proto.r_len(who)
        v = yield from _flip(ctx, coin, 8 * n, f"{label}.s{who}", role)
        st.s_prime[who] = v.to_bytes(n, "big")
    r = _xor(s, st.s_prime[role])

    x_used = x
    if deviation == "wrong-randomness":
        r = s
    elif deviation == "substitute-input":
        x_used = proto.other_input(x)
    rel = sfe_consistency_relation(proto, be)
    msgs = st.messages
    for k, who in enumerate(proto.rounds):
        if who == role:
            m = proto.message(role, x_used, r, tuple(msgs))
            if deviation == "flip-message" and all(w != role for w in proto.rounds[:k]):
                m = proto.perturb(m)
            yield Send(f"{label}.m{k}", m)
            stmt = consistency_statement(role, k, pk, X, S, st.s_prime[role], msgs, m)
            yield from _prove(f"zkpk:{label}.m{k}", stmt, (x_msg, rx, s, rs))
            msgs.append(wire.unpack(wire.pack(m)))
        else:
            m = yield Recv(f"{label}.m{k}")
            stmt = consistency_statement(peer, k, pk, Xp, Sp, st.s_prime[peer], msgs, m)
            yield from _verify(f"zkpk:{label}.m{k}", stmt, rel)
            msgs.append(m)
    return proto.output(role, x_used, r, tuple(msgs))


def sfe_programs(proto: PassiveProtocol, x1, x2, coin, label: str = "sfe", deviation: str | None = None):
    def alice(ctx):
        return (yield from sfe_party(ctx, proto, x1, coin, label, deviation))

    def bob(ctx):
        return (yield from sfe_party(ctx, proto, x2, coin, label))

    return alice, bob


def sfe_run(proto: PassiveProtocol, x1, x2, coin, params=None, seed=0, deviation=None):
    a, b = sfe_programs(proto, x1, x2, coin, deviation=deviation)
    corrupt = {"A"} if deviation else set()
    return run_session(a, b, params, seed, corrupt=corrupt)


def sfe_simulate_alice(proto: PassiveProtocol, coin, label: str = "sfe", fname: str = "sfe:ideal"):
    """Bob-seat simulator against a corrupt Alice, talking to the ideal SFE.

    The ideal Bob's input lives in the SFE functionality. Returns the output
    the functionality hands to the ideal Bob: y or None.
    """

    def sim(ctx):
        nonlocal proto
        be = ctx.backend
        proto = proto.bind(be)
        st = SfeSession()
        decided = False
        x1 = None

        def give_up():
            nonlocal decided
            if not decided:
                decided = True
                if x1 is None:
                    return None
                yield Call(fname, ("input", x1, proto.f))
                return (yield Call(fname, ("decide", False)))
            return None

        try:
            st.pk = pk = be.key_from_bits((yield from coin.second(ctx, be.kappa, f"{label}.pk")))
            open_rel = opening_relation(be)
            # dummy input commitment; the real input stays with the ideal Bob
            dummy = wire.pack(0)
            X2, rx2 = _commit(ctx, pk, dummy)
            yield Send(f"{label}.XB", X2)
            yield from _prove(f"zkpk:{label}.XB", ("open", pk.data, X2), (dummy, rx2))
            X1 = yield Recv(f"{label}.XA")
            reply = yield from _verify(f"zkpk:{label}.XA", ("open", pk.data, X1), open_rel)
            x1 = wire.unpack(reply[2][0])

            s2 = ctx.rng.randbytes(proto.r_len("B"))
            S2, rs2 = _commit(ctx, pk, s2)
            yield Send(f"{label}.SB", S2)
            yield from _prove(f"zkpk:{label}.SB", ("open", pk.data, S2), (s2, rs2))
            S1 = yield Recv(f"{label}.SA")
            reply = yield from _verify(f"zkpk:{label}.SA", ("open", pk.data, S1), open_rel)
            s1 = reply[2][0]

            y = yield Call(fname, ("input", x1, proto.f))
            r1, bob_msgs = proto.simulate_alice(x1, y, ctx.rng)
            # steer Alice's coin share so that her randomness becomes r1
            target = int.from_bytes(_xor(s1, r1), "big")
            nA = proto.r_len("A")
            vA = yield from coin.force_first(ctx, 8 * nA, f"{label}.sA", target)
            nB = proto.r_len("B")
            vB = yield from coin.second(ctx, 8 * nB, f"{label}.sB")
            st.s_prime = {"A": vA.to_bytes(nA, "big"), "B": vB.to_bytes(nB, "big")}

            rel = sfe_consistency_relation(proto, be)
            msgs = st.messages
            for k, who in enumerate(proto.rounds):
                if who == "B":
                    m = bob_msgs[k]
                    yield Send(f"{label}.m{k}", m)
                    stmt = consistency_statement("B", k, pk, X2, S2, st.s_prime["B"], msgs, m)
                    yield Force(f"zkpk:{label}.m{k}", "success")
                    yield from _prove(f"zkpk:{label}.m{k}", stmt, None)
                    msgs.append(wire.unpack(wire.pack(m)))
                else:
                    m = yield Recv(f"{label}.m{k}")
                    stmt = consistency_statement("A", k, pk, X1, S1, st.s_prime["A"], msgs, m)
                    yield from _verify(f"zkpk:{label}.m{k}", stmt, rel)
                    expect = proto.message("A", x1, r1, tuple(msgs))
                    if wire.pack(expect) != wire.pack(m):
                        raise ProtocolAbort("Alice deviated from the simulated run")
                    msgs.append(m)
        except (PeerAborted, ProtocolAbort):
            return (yield from give_up())
        decided = True
        return (yield Call(fname, ("decide", True)))

    return sim


def sfe_ideal_vs_real(proto: PassiveProtocol, x1, x2, coin, params, seed, deviation=None):
    """Paired runs with the same adversary seed: (ideal Bob output, real Bob output)."""
    adv, honest_bob = sfe_programs(proto, x1, x2, coin, deviation=deviation)
    real = run_session(adv, honest_bob, params, seed, corrupt={"A"})
    ideal = run_session(adv, sfe_simulate_alice(proto, coin), params, seed, corrupt={"A"}, privileged="B",
                        fconfig={"sfe:ideal": {"bob_input": x2, "f": proto.f}})
    return ideal.output("B"), real.output("B")
