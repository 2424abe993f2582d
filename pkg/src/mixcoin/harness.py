"""Two-party session engine.

A party program is a generator function ``program(ctx)``. It talks to the
engine by yielding instructions and receives results through ``send``:

    yield Send(tag, payload)        -> None
    payload = yield Recv(tag)       -> the peer's next frame, decoded
    out = yield Call(label, data)   -> reply of an ideal functionality

Simulator programs (``privileged=True``) may additionally yield
``Force(label, target)``, ``Snap()`` and ``Restore(snapshot)``. Honest
programs cannot: the engine raises :class:`CapabilityError` into them.

Sub-protocols are ordinary generator functions composed with ``yield from``;
their frame tags carry the caller's label as a namespace.

Rewinding is replay-based. A snapshot remembers how many results had been fed
into the peer's generator; restoring rebuilds the peer from its seed and
replays that prefix, which reproduces its state exactly.
"""
from __future__ import annotations

import copy
import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Callable

from . import wire
from .mixed_commit import IdealBackend, LweParams, make_backend
from .field import GF2_16, FieldSpec

TRANSCRIPT_VERSION = 1
MAX_FRAME = 1 << 24
ROLES = ("A", "B")


class ProtocolAbort(Exception):
    """A party decided to stop; its output becomes the abort symbol."""


class PeerAborted(ProtocolAbort):
    """Raised into a party that waits on a counterparty who can never answer."""


class ProtocolViolation(ProtocolAbort):
    """The counterparty sent something the protocol does not allow."""


class CapabilityError(ProtocolAbort):
    """A non-simulator program asked for a simulator-only capability."""


class RewindingForbidden(RuntimeError):
    """Snapshots are disabled in quantum-realistic mode.

    An adversary's internal state cannot be copied for later reuse when it
    may be quantum, so any strategy that depends on rewinding fails here.
    """


class FlavorMismatch(ValueError):
    """A coin-flip handle cannot provide the requested enforcement."""


# -- instructions ---------------------------------------------------------

@dataclass(frozen=True)
class Send:
    tag: str
    payload: object = None
    raw: bytes | None = None  # adversaries may push arbitrary bytes


@dataclass(frozen=True)
class Recv:
    tag: str | None = None


@dataclass(frozen=True)
class Call:
    label: str
    payload: object = None


@dataclass(frozen=True)
class Force:
    label: str
    target: object


@dataclass(frozen=True)
class Snap:
    pass


@dataclass(frozen=True)
class Restore:
    snapshot: "Snapshot"


PENDING = object()


# -- parameters and contexts ----------------------------------------------

@dataclass(frozen=True)
class SessionParams:
    sigma: int = 8
    field: FieldSpec = GF2_16
    kappa: int = 128
    backend: str = "ideal"
    mode: str = "hybrid"
    lwe: LweParams | None = None

    def __post_init__(self):
        if self.mode not in ("hybrid", "composed", "quantum-realistic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.backend not in ("ideal", "lwe"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "lwe" and self.mode != "hybrid":
            raise ValueError("the lwe backend needs hybrid mode: its keys are too long to flip bit by bit")
        if self.field.order < 5 * self.sigma + 1:
            raise ValueError(f"{self.field} is too small for sigma={self.sigma}")

    @property
    def Sigma(self) -> int:
        return 4 * self.sigma

    @property
    def rewinding(self) -> bool:
        return self.mode != "quantum-realistic"

    @property
    def composed(self) -> bool:
        return self.mode in ("composed", "quantum-realistic")

    def describe(self) -> dict:
        return {
            "sigma": self.sigma,
            "Sigma": self.Sigma,
            "field": str(self.field),
            "kappa": self.kappa,
            "backend": self.backend,
            "mode": self.mode,
        }


def derive_seed(seed, *labels) -> int:
    text = "/".join([str(seed), *map(str, labels)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


@dataclass
class PartyContext:
    role: str
    rng: random.Random
    params: SessionParams
    backend: object
    ledger: IdealBackend
    corrupt: bool = False
    privileged: bool = False
    aux: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def peer(self) -> str:
        return "B" if self.role == "A" else "A"

    def count(self, key: str, by: int = 1) -> None:
        self.stats[key] = self.stats.get(key, 0) + by

    def decide(self, label: str, value) -> bool:
        """Second input of a corrupt party to an ideal functionality."""
        hook = self.aux.get("decide")
        return True if hook is None else bool(hook(label, value))


# -- ideal functionalities -------------------------------------------------

class IdealCoinFlip:
    """Uniform coin to both parties; a corrupt party sees it first and may veto."""

    def __init__(self, label: str, rng: random.Random, corrupt=frozenset()):
        self.label = label
        self.rng = rng
        self.corrupt = frozenset(corrupt) if len(corrupt) == 1 else frozenset()
        self.nbits = None
        self.h = None
        self.forced = None
        self.started: set = set()
        self.decision = None

    def force(self, target) -> None:
        if self.h is not None:
            raise ValueError("coin already flipped")
        self.forced = int(target)

    def call(self, role: str, payload):
        kind = payload[0]
        if kind == "flip":
            if self.nbits is None:
                self.nbits = int(payload[1])
            elif self.nbits != int(payload[1]):
                raise ProtocolViolation("parties disagree on the coin length")
            self.started.add(role)
            if len(self.started) < 2:
                return PENDING
            if self.h is None:
                mask = (1 << self.nbits) - 1
                self.h = (self.forced & mask) if self.forced is not None else self.rng.getrandbits(self.nbits)
            if not self.corrupt or role in self.corrupt:
                return self.h
            if self.decision is None:
                return PENDING
            return self.h if self.decision else None
        if kind == "decide":
            if role not in self.corrupt:
                raise ProtocolViolation("only a corrupt party has a second input")
            if self.h is None:
                raise ProtocolViolation("decision before the coin was delivered")
            self.decision = bool(payload[1])
            return True
        raise ProtocolViolation(f"unknown coin request {kind!r}")


class IdealZkpk:
    """Prover submits (x, w); verifier learns x and whether (x, w) is in the relation."""

    def __init__(self, label: str, rng: random.Random, corrupt=frozenset(), privileged=None):
        self.label = label
        self.corrupt = frozenset(corrupt)
        self.privileged = privileged
        self.claim = None
        self.prover = None
        self.forced = None

    def force(self, target) -> None:
        self.forced = target

    def call(self, role: str, payload):
        kind = payload[0]
        if kind == "prove":
            self.prover = role
            self.claim = (payload[1], payload[2])
            return True
        if kind == "verify":
            relation = payload[1]
            if self.claim is None:
                return PENDING
            x, w = self.claim
            try:
                ok = bool(relation(x, w))
            except Exception:
                ok = False
            j = "success" if ok else "abort"
            if self.forced is not None:
                j = self.forced
            if role == self.privileged and self.prover in self.corrupt:
                return (x, j, w)  # the simulator stands in for the functionality
            return (x, j)
        raise ProtocolViolation(f"unknown zkpk request {kind!r}")


class IdealSfe:
    """Common-output evaluation of f; a dishonest Alice gets y first and may veto."""

    def __init__(self, label: str, rng: random.Random, corrupt=frozenset(), bob_input=None, f=None,
                 privileged=None):
        self.label = label
        self.corrupt_alice = "A" in corrupt and "B" not in corrupt
        # a simulator in Bob's seat speaks for the corrupt Alice
        self.proxy = privileged if self.corrupt_alice and privileged == "B" else None
        self.inputs: dict = {}
        if bob_input is not None:
            self.inputs["B"] = bob_input
        self.f = f
        self.y = None
        self.decision = None

    def bob_output(self):
        if self.y is None:
            return None
        if not self.corrupt_alice:
            return self.y
        return self.y if self.decision else None

    def call(self, role: str, payload):
        kind = payload[0]
        if role == self.proxy:
            role = "A"
        if kind == "input":
            self.inputs[role] = payload[1]
            if len(payload) > 2 and payload[2] is not None:
                self.f = payload[2]
            if len(self.inputs) < 2:
                return PENDING
            if self.y is None:
                self.y = self.f(self.inputs["A"], self.inputs["B"])
            if role == "B" and self.corrupt_alice:
                return PENDING if self.decision is None else self.bob_output()
            return self.y
        if kind == "decide":
            if not self.corrupt_alice or role != "A":
                raise ProtocolViolation("only a dishonest Alice has a second input")
            self.decision = bool(payload[1])
            return self.bob_output()
        raise ProtocolViolation(f"unknown sfe request {kind!r}")


def ideal_coin(nbits: int, corrupt=(), seed=0) -> IdealCoinFlip:
    f = IdealCoinFlip(f"coin:{nbits}", random.Random(seed), frozenset(corrupt))
    f.nbits = nbits
    return f


def ideal_zkpk(corrupt=(), privileged=None) -> IdealZkpk:
    return IdealZkpk("zkpk:standalone", random.Random(0), frozenset(corrupt), privileged)


def ideal_sfe(f: Callable, corrupt=(), bob_input=None) -> IdealSfe:
    return IdealSfe("sfe:standalone", random.Random(0), frozenset(corrupt), bob_input, f)


def _default_factory(label: str, rng, session: "Session"):
    kind = label.split(":", 1)[0]
    extra = session.fconfig.get(label, {})
    if kind == "coin":
        return IdealCoinFlip(label, rng, session.corrupt)
    if kind == "zkpk":
        return IdealZkpk(label, rng, session.corrupt, session.privileged)
    if kind == "sfe":
        return IdealSfe(label, rng, session.corrupt, privileged=session.privileged, **extra)
    raise ProtocolViolation(f"no ideal functionality registered for {label!r}")


# -- transcripts -----------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    seq: int
    sender: str
    receiver: str
    tag: str
    payload: bytes


def _encode_value(v):
    try:
        return {"hex": wire.pack(v).hex()}
    except TypeError:
        return {"repr": repr(v)}


def _decode_value(d):
    if d is None:
        return None
    if "hex" in d:
        return wire.unpack(bytes.fromhex(d["hex"]))
    return d["repr"]


@dataclass
class Transcript:
    header: dict
    frames: list = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)
    reasons: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def output(self, role: str):
        return self.outcomes.get(role)

    @property
    def aborted(self) -> bool:
        return any(v is None for v in self.outcomes.values())

    def tags(self) -> list[str]:
        return [f.tag for f in self.frames]

    def to_records(self) -> list[dict]:
        recs = [{"type": "header", **self.header}]
        for f in self.frames:
            recs.append({"type": "frame", "seq": f.seq, "sender": f.sender, "receiver": f.receiver,
                         "tag": f.tag, "payload": f.payload.hex()})
        for e in self.events:
            recs.append({"type": "event", **e})
        for role in ROLES:
            if role in self.outcomes:
                recs.append({"type": "outcome", "role": role,
                             "value": None if self.outcomes[role] is None else _encode_value(self.outcomes[role]),
                             "reason": self.reasons.get(role)})
        return recs

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.to_records())

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not lines or lines[0].get("type") != "header":
            raise ValueError("transcript does not start with a header record")
        header = {k: v for k, v in lines[0].items() if k != "type"}
        if header.get("version") != TRANSCRIPT_VERSION:
            raise ValueError(f"unsupported transcript version {header.get('version')!r}, expected {TRANSCRIPT_VERSION}")
        t = cls(header)
        for rec in lines[1:]:
            kind = rec.get("type")
            if kind == "frame":
                t.frames.append(Frame(rec["seq"], rec["sender"], rec["receiver"], rec["tag"], bytes.fromhex(rec["payload"])))
            elif kind == "event":
                t.events.append({k: v for k, v in rec.items() if k != "type"})
            elif kind == "outcome":
                t.outcomes[rec["role"]] = _decode_value(rec["value"])
                t.reasons[rec["role"]] = rec.get("reason")
            else:
                raise ValueError(f"unknown record type {kind!r}")
        return t


def first_difference(a: Transcript, b: Transcript):
    """None when the two transcripts are byte-identical, else a short description."""
    ra, rb = a.to_records(), b.to_records()
    for i, (x, y) in enumerate(zip(ra, rb)):
        if x != y:
            where = f"frame {x['seq']}" if x.get("type") == "frame" else f"record {i} ({x.get('type')})"
            return where
    if len(ra) != len(rb):
        return f"record count {len(ra)} vs {len(rb)}"
    return None


# -- engine ----------------------------------------------------------------

@dataclass
class _Party:
    role: str
    program: Callable
    ctx: PartyContext
    gen: object = None
    instr: object = None
    log: list = field(default_factory=list)
    done: bool = False
    output: object = None
    reason: str | None = None


@dataclass(frozen=True)
class Snapshot:
    owner: str
    peer_log: int
    peer_done: bool
    queues: dict
    frames: int
    events: int
    seq: int
    funcs: dict
    backend_state: object
    ledger_state: object


ABORT_ERRORS = (ProtocolAbort, ValueError, TypeError, IndexError, KeyError, ZeroDivisionError)


class Session:
    def __init__(self, programs: dict, params: SessionParams, seed, *, corrupt=(), privileged=None,
                 aux=None, fconfig=None, factory=None, header=None, max_frame=MAX_FRAME):
        self.params = params
        self.seed = seed
        self.corrupt = frozenset(corrupt)
        self.privileged = privileged
        self.fconfig = fconfig or {}
        self.factory = factory or _default_factory
        self.max_frame = max_frame
        self.backend = make_backend(params.backend, params.kappa, params.lwe)
        self.ledger = self.backend if isinstance(self.backend, IdealBackend) else IdealBackend(128)
        self.funcs: dict = {}
        self.queues = {r: [] for r in ROLES}
        self.seq = 0
        hdr = {"version": TRANSCRIPT_VERSION, "seed": seed, "params": params.describe()}
        hdr.update(header or {})
        self.transcript = Transcript(hdr)
        aux = aux or {}
        self.parties = {}
        for role in ROLES:
            self.parties[role] = _Party(role, programs[role], None)
            self.parties[role].ctx = self._context(role, aux.get(role, {}))

    def _context(self, role, aux) -> PartyContext:
        return PartyContext(
            role=role,
            rng=random.Random(derive_seed(self.seed, "party", role)),
            params=self.params,
            backend=self.backend,
            ledger=self.ledger,
            corrupt=role in self.corrupt,
            privileged=role == self.privileged,
            aux=dict(aux),
        )

    # generator plumbing
    def _advance(self, p: _Party, value=None, exc=None, record=True) -> None:
        try:
            if p.gen is None:
                p.gen = p.program(p.ctx)
                p.instr = next(p.gen)
                return
            if record:
                p.log.append((exc is not None, exc if exc is not None else value))
            p.instr = p.gen.throw(exc) if exc is not None else p.gen.send(value)
        except StopIteration as stop:
            p.done, p.output, p.instr = True, stop.value, None
        except (RewindingForbidden, FlavorMismatch):
            raise
        except ABORT_ERRORS as err:
            p.done, p.output, p.instr = True, None, None
            p.reason = f"{type(err).__name__}: {err}"

    def _kill(self, p: _Party, reason: str) -> None:
        if p.gen is not None:
            p.gen.close()
        p.done, p.output, p.instr, p.reason = True, None, None, reason

    def _func(self, label: str):
        if label not in self.funcs:
            rng = random.Random(derive_seed(self.seed, "func", label))
            self.funcs[label] = self.factory(label, rng, self)
        return self.funcs[label]

    # one instruction; returns (ready, value, exc)
    def _execute(self, p: _Party):
        ins = p.instr
        if isinstance(ins, Send):
            if ins.raw is not None:
                data = bytes(ins.raw)
            else:
                try:
                    data = wire.pack(ins.payload)
                except TypeError as err:
                    return True, None, ProtocolViolation(f"unencodable payload: {err}")
            if len(data) > self.max_frame:
                self.transcript.events.append({"seq": self.seq, "what": "ENGINE ABORT", "role": p.role,
                                               "detail": f"frame of {len(data)} bytes exceeds {self.max_frame}"})
                self._kill(p, "oversized frame")
                return False, None, None
            peer = p.ctx.peer
            frame = Frame(self.seq, p.role, peer, ins.tag, data)
            self.seq += 1
            self.transcript.frames.append(frame)
            self.queues[peer].append(frame)
            return True, None, None
        if isinstance(ins, Recv):
            q = self.queues[p.role]
            if not q:
                return False, None, None
            frame = q.pop(0)
            if ins.tag is not None and frame.tag != ins.tag:
                return True, None, ProtocolViolation(f"expected {ins.tag}, got {frame.tag}")
            try:
                obj = wire.unpack(frame.payload)
            except wire.MalformedPayload as err:
                return True, None, ProtocolViolation(f"malformed {frame.tag}: {err}")
            return True, (obj if ins.tag is not None else (frame.tag, obj)), None
        if isinstance(ins, Call):
            try:
                out = self._func(ins.label).call(p.role, ins.payload)
            except ProtocolAbort as err:
                return True, None, err
            if out is PENDING:
                return False, None, None
            return True, out, None
        if not p.ctx.privileged:
            return True, None, CapabilityError(f"{type(ins).__name__} is reserved for simulators")
        if isinstance(ins, Force):
            self._func(ins.label).force(ins.target)
            return True, None, None
        if isinstance(ins, Snap):
            if not self.params.rewinding:
                raise RewindingForbidden(
                    "quantum-realistic mode: the adversary's state cannot be snapshotted for rewinding")
            return True, self._snapshot(p), None
        if isinstance(ins, Restore):
            self._restore(p, ins.snapshot)
            return True, None, None
        return True, None, ProtocolViolation(f"unknown instruction {ins!r}")

    def _snapshot(self, owner: _Party) -> Snapshot:
        peer = self.parties[owner.ctx.peer]
        return Snapshot(
            owner=owner.role,
            peer_log=len(peer.log),
            peer_done=peer.done,
            queues={r: list(q) for r, q in self.queues.items()},
            frames=len(self.transcript.frames),
            events=len(self.transcript.events),
            seq=self.seq,
            funcs=copy.deepcopy(self.funcs),
            backend_state=self.backend.state(),
            ledger_state=self.ledger.state(),
        )

    def _restore(self, owner: _Party, snap: Snapshot) -> None:
        if snap.owner != owner.role:
            raise CapabilityError("snapshot belongs to another party")
        if snap.peer_done:
            raise ProtocolAbort("cannot rewind a party that had already finished")
        self.queues = {r: list(q) for r, q in snap.queues.items()}
        del self.transcript.frames[snap.frames:]
        del self.transcript.events[snap.events:]
        self.seq = snap.seq
        self.funcs = copy.deepcopy(snap.funcs)
        self.backend.restore(snap.backend_state)
        if self.ledger is not self.backend:
            self.ledger.restore(snap.ledger_state)
        old = self.parties[owner.ctx.peer]
        if old.gen is not None:
            old.gen.close()
        fresh = _Party(old.role, old.program, self._context(old.role, old.ctx.aux))
        self._advance(fresh)
        for is_exc, v in old.log[: snap.peer_log]:
            fresh.log.append((is_exc, v))
            self._advance(fresh, value=None if is_exc else v, exc=v if is_exc else None, record=False)
        self.parties[old.role] = fresh
        owner.ctx.count("restores")

    def run(self) -> Transcript:
        for role in ROLES:
            self._advance(self.parties[role])
        idle = 0
        while not all(self.parties[r].done for r in ROLES):
            progressed = False
            for role in ROLES:
                while True:
                    p = self.parties[role]
                    if p.done:
                        break
                    ready, value, exc = self._execute(p)
                    if not ready:
                        break
                    self._advance(p, value, exc)
                    progressed = True
            # a pending call may still have changed functionality state, so
            # only a second idle round counts as deadlock
            idle = 0 if progressed else idle + 1
            if idle >= 2:
                idle = 0
                for role in ROLES:
                    p = self.parties[role]
                    if not p.done:
                        self._advance(p, exc=PeerAborted("counterparty stopped responding"))
                        break
        for role in ROLES:
            p = self.parties[role]
            self.transcript.outcomes[role] = p.output
            self.transcript.reasons[role] = p.reason
            self.transcript.stats[role] = dict(p.ctx.stats)
        return self.transcript


def run_session(alice, bob, params: SessionParams | None = None, seed=0, **kw) -> Transcript:
    """Run two party programs to completion (or mutual abort) and return the transcript."""
    return Session({"A": alice, "B": bob}, params or SessionParams(), seed, **kw).run()


def compose(handles: dict, real) -> dict:
    """Replace every ideal coin-flip handle in ``handles`` by the protocol ``real``."""
    if tuple(getattr(real, "flavor", ())) != ("force", "force"):
        raise FlavorMismatch(f"only a (force,force) protocol can stand in for the ideal coin, got {getattr(real, 'flavor', None)}")
    return {k: (real if getattr(h, "ideal", False) else h) for k, h in handles.items()}
