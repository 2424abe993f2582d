"""Zero-knowledge proofs of knowledge from simulatable witness encodings.

A witness encoding is five algorithms over bit strings of fixed length n:

    E(x, w, rng) -> e           encode a witness
    D(x, e) -> w                decode (total; returns a sentinel non-witness)
    S(s) -> positions           which bits a challenge s opens (0-based)
    J(x, s, e_s) -> bool        judge the opened bits
    E_hat(x, s, rng) -> t_s     simulate the opened bits without a witness

The base instance is graph isomorphism with a one-bit challenge; copies are
combined by :func:`parallel_repeat`. The proof itself commits to e bit by bit
under a flipped mixed-commitment key, flips the challenge, and opens S(s).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import ceil, log2

from .harness import Call, PeerAborted, ProtocolAbort, Recv, Send

SUCCESS, ABORT = "success", "abort"


# -- graphs ----------------------------------------------------------------

@dataclass(frozen=True)
class GraphIsoInstance:
    v: int
    G0: tuple
    G1: tuple

    def graph(self, s: int) -> tuple:
        return self.G1 if s else self.G0


def _edges_to_matrix(v: int, edges) -> tuple:
    M = [[0] * v for _ in range(v)]
    for i, j in edges:
        M[i][j] = M[j][i] = 1
    return tuple(tuple(r) for r in M)


def apply_perm(perm, G) -> tuple:
    """Relabel vertex i as perm[i]."""
    v = len(G)
    M = [[0] * v for _ in range(v)]
    for i in range(v):
        for j in range(v):
            M[perm[i]][perm[j]] = G[i][j]
    return tuple(tuple(r) for r in M)


def compose_perm(p, q) -> tuple:
    """(p o q)[i] = p[q[i]]."""
    return tuple(p[q[i]] for i in range(len(q)))


def invert_perm(p) -> tuple:
    out = [0] * len(p)
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


def is_perm(p, v: int) -> bool:
    return len(p) == v and sorted(p) == list(range(v))


def random_perm(v: int, rng) -> tuple:
    p = list(range(v))
    rng.shuffle(p)
    return tuple(p)


def random_graph(v: int, rng, density: float = 0.5) -> tuple:
    edges = [(i, j) for i in range(v) for j in range(i + 1, v) if rng.random() < density]
    return _edges_to_matrix(v, edges)


def gi_relation(x: GraphIsoInstance, w) -> bool:
    return isinstance(w, tuple) and is_perm(w, x.v) and apply_perm(w, x.G0) == x.G1


def sample_gi_instance(v: int, rng) -> tuple[GraphIsoInstance, tuple]:
    G0 = random_graph(v, rng)
    phi = random_perm(v, rng)
    return GraphIsoInstance(v, G0, apply_perm(phi, G0)), phi


def non_isomorphic_instance(v: int) -> GraphIsoInstance:
    """Empty graph against a single edge: no witness exists."""
    if v < 2:
        raise ValueError("need at least two vertices")
    return GraphIsoInstance(v, _edges_to_matrix(v, []), _edges_to_matrix(v, [(0, 1)]))


def instance_to_text(x: GraphIsoInstance, w=None) -> str:
    lines = [f"vertices {x.v}"]
    lines += ["G0 " + "".join(map(str, row)) for row in x.G0]
    lines += ["G1 " + "".join(map(str, row)) for row in x.G1]
    if w is not None:
        lines.append("witness " + " ".join(map(str, w)))
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> tuple[GraphIsoInstance, tuple | None]:
    v, rows, w = None, {"G0": [], "G1": []}, None
    for raw in text.splitlines():
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "vertices":
            v = int(parts[1])
        elif parts[0] in rows:
            rows[parts[0]].append(tuple(int(c) for c in parts[1]))
        elif parts[0] == "witness":
            w = tuple(int(c) for c in parts[1:])
        else:
            raise ValueError(f"unrecognised line {raw!r}")
    if v is None or len(rows["G0"]) != v or len(rows["G1"]) != v:
        raise ValueError("instance needs a vertex count and two v-by-v adjacency matrices")
    return GraphIsoInstance(v, tuple(rows["G0"]), tuple(rows["G1"])), w


# -- encodings -------------------------------------------------------------

class GiEncoding:
    """One-bit-challenge encoding: e = bits(H) | bits(pi) | bits(rho).

    H = pi(G0) and rho = pi o phi^-1, so H = rho(G1) as well. Challenge 0
    opens (H, pi), challenge 1 opens (H, rho).
    """

    sigma = 1

    def __init__(self, v: int):
        if v < 2:
            raise ValueError("graph-isomorphism encoding needs v >= 2")
        self.v = v
        self.width = max(1, ceil(log2(v)))
        self.pairs = [(i, j) for i in range(v) for j in range(i + 1, v)]
        self.n_h = len(self.pairs)
        self.n = self.n_h + 2 * v * self.width
        self.sentinel = (0,) * v
        self._h = tuple(range(self.n_h))
        self._pi = tuple(range(self.n_h, self.n_h + v * self.width))
        self._rho = tuple(range(self.n_h + v * self.width, self.n))

    relation = staticmethod(gi_relation)

    def _graph_bits(self, G) -> list[int]:
        return [G[i][j] for i, j in self.pairs]

    def _perm_bits(self, p) -> list[int]:
        out = []
        for x in p:
            out += [(x >> (self.width - 1 - k)) & 1 for k in range(self.width)]
        return out

    def _parse_graph(self, bits) -> tuple:
        return _edges_to_matrix(self.v, [pr for pr, b in zip(self.pairs, bits) if b])

    def _parse_perm(self, bits) -> tuple:
        out = []
        for i in range(self.v):
            x = 0
            for b in bits[i * self.width:(i + 1) * self.width]:
                x = (x << 1) | b
            out.append(x)
        return tuple(out)

    def S(self, s: int) -> tuple:
        return self._h + (self._rho if s & 1 else self._pi)

    def E(self, x: GraphIsoInstance, w, rng) -> tuple:
        pi = random_perm(self.v, rng)
        return self.encode_with(x, w, pi)

    def encode_with(self, x: GraphIsoInstance, w, pi) -> tuple:
        rho = compose_perm(pi, invert_perm(w))
        H = apply_perm(pi, x.G0)
        return tuple(self._graph_bits(H) + self._perm_bits(pi) + self._perm_bits(rho))

    def J(self, x: GraphIsoInstance, s: int, e_s) -> bool:
        e_s = tuple(e_s)
        if len(e_s) != len(self.S(s)) or any(b not in (0, 1) for b in e_s):
            return False
        H = self._parse_graph(e_s[: self.n_h])
        p = self._parse_perm(e_s[self.n_h:])
        return is_perm(p, self.v) and apply_perm(p, x.graph(s & 1)) == H

    def D(self, x: GraphIsoInstance, e) -> tuple:
        e = tuple(e)
        pi = self._parse_perm([e[i] for i in self._pi])
        rho = self._parse_perm([e[i] for i in self._rho])
        if not (is_perm(pi, self.v) and is_perm(rho, self.v)):
            return self.sentinel
        return compose_perm(invert_perm(rho), pi)

    def E_hat(self, x: GraphIsoInstance, s: int, rng) -> tuple:
        tau = random_perm(self.v, rng)
        return self.simulate_with(x, s, tau)

    def simulate_with(self, x: GraphIsoInstance, s: int, tau) -> tuple:
        return tuple(self._graph_bits(apply_perm(tau, x.graph(s & 1))) + self._perm_bits(tau))


class ParallelEncoding:
    """sigma independent copies of a one-bit-challenge encoding."""

    def __init__(self, base, sigma: int):
        if base.sigma != 1:
            raise ValueError("parallel repetition needs a one-bit-challenge base")
        if sigma < 1:
            raise ValueError("sigma must be positive")
        self.base = base
        self.sigma = sigma
        self.n = base.n * sigma
        self.relation = base.relation
        self.sentinel = base.sentinel

    def bit(self, s: int, j: int) -> int:
        return (s >> (self.sigma - 1 - j)) & 1

    def S(self, s: int) -> tuple:
        out = []
        for j in range(self.sigma):
            out += [j * self.base.n + i for i in self.base.S(self.bit(s, j))]
        return tuple(out)

    def _split_opened(self, s: int, e_s):
        pos = 0
        for j in range(self.sigma):
            k = len(self.base.S(self.bit(s, j)))
            yield j, tuple(e_s[pos:pos + k])
            pos += k

    def E(self, x, w, rng) -> tuple:
        out = []
        for _ in range(self.sigma):
            out += self.base.E(x, w, rng)
        return tuple(out)

    def J(self, x, s: int, e_s) -> bool:
        e_s = tuple(e_s)
        if len(e_s) != len(self.S(s)):
            return False
        return all(self.base.J(x, self.bit(s, j), part) for j, part in self._split_opened(s, e_s))

    def D(self, x, e) -> tuple:
        e = tuple(e)
        for j in range(self.sigma):
            w = self.base.D(x, e[j * self.base.n:(j + 1) * self.base.n])
            if self.relation(x, w):
                return w
        return self.sentinel

    def E_hat(self, x, s: int, rng) -> tuple:
        out = []
        for j in range(self.sigma):
            out += self.base.E_hat(x, self.bit(s, j), rng)
        return tuple(out)


def gi_encoding(v: int) -> GiEncoding:
    return GiEncoding(v)


def parallel_repeat(base, sigma: int) -> ParallelEncoding:
    return ParallelEncoding(base, sigma)


def restrict_bits(e, positions) -> tuple:
    return tuple(e[i] for i in positions)


def admissible(enc, x, e) -> bool:
    """e passes the judge under at least two distinct challenges."""
    ok = [s for s in range(1 << enc.sigma) if enc.J(x, s, restrict_bits(e, enc.S(s)))]
    return len(ok) >= 2


def simulated_encoding(enc, x, s: int, rng) -> tuple:
    """Full-length string with E_hat(x, s) on S(s) and uniform bits elsewhere."""
    e = [rng.getrandbits(1) for _ in range(enc.n)]
    for i, b in zip(enc.S(s), enc.E_hat(x, s, rng)):
        e[i] = b
    return tuple(e)


# -- the proof --------------------------------------------------------------

@dataclass(frozen=True)
class ZkpkCoins:
    key: object
    challenge: object


def _commit_bits(ctx, pk, e):
    be = ctx.backend
    rl = be.randomizer_len(1)
    r = [ctx.rng.randbytes(rl) for _ in e]
    cells = tuple(be.commit(pk, b"\x01" if b else b"\x00", ri) for b, ri in zip(e, r))
    return r, cells


def _prove(ctx, enc, x, e, coins: ZkpkCoins, label: str, s_target=None):
    be = ctx.backend
    bits = yield from coins.key.first(ctx, be.kappa, f"{label}.pk")
    pk = be.key_from_bits(bits)
    r, cells = _commit_bits(ctx, pk, e)
    yield Send(f"{label}.COMMITS", cells)
    if s_target is None:
        s = yield from coins.challenge.first(ctx, enc.sigma, f"{label}.s")
    else:
        s = yield from coins.challenge.force_second(ctx, enc.sigma, f"{label}.s", s_target)
    yield Send(f"{label}.OPENINGS", tuple((b"\x01" if e[i] else b"\x00", r[i]) for i in enc.S(s)))
    return s


def prover(ctx, enc, x, w, coins: ZkpkCoins, label: str = "zk"):
    """Honest prover; refuses to start without a valid witness."""
    if not enc.relation(x, w):
        raise ProtocolAbort("prover holds no witness for this instance")
    e = enc.E(x, w, ctx.rng)
    yield from _prove(ctx, enc, x, e, coins, label)
    return SUCCESS


def guessing_prover(ctx, enc, x, coins: ZkpkCoins, label: str = "zk"):
    """No witness: prepare the openings for one guessed challenge."""
    s_hat = ctx.rng.getrandbits(enc.sigma)
    e = simulated_encoding(enc, x, s_hat, ctx.rng)
    ctx.aux["guess"] = s_hat
    s = yield from _prove(ctx, enc, x, e, coins, label)
    return s == s_hat


def _check_openings(ctx, enc, pk, cells, S, openings):
    if not isinstance(openings, tuple) or len(openings) != len(S):
        return None
    out = []
    for i, op in zip(S, openings):
        if not isinstance(op, tuple) or len(op) != 2 or op[0] not in (b"\x00", b"\x01"):
            return None
        if not ctx.backend.verify_open(pk, cells[i], op[0], op[1]):
            return None
        out.append(op[0][0])
    return tuple(out)


def _receive_commits(enc, payload):
    if not isinstance(payload, tuple) or len(payload) != enc.n or not all(isinstance(c, bytes) for c in payload):
        raise ProtocolAbort("expected one commitment per encoding bit")
    return payload


def verifier(ctx, enc, x, coins: ZkpkCoins, label: str = "zk"):
    be = ctx.backend
    bits = yield from coins.key.second(ctx, be.kappa, f"{label}.pk")
    pk = be.key_from_bits(bits)
    cells = _receive_commits(enc, (yield Recv(f"{label}.COMMITS")))
    s = yield from coins.challenge.second(ctx, enc.sigma, f"{label}.s")
    S = enc.S(s)
    e_s = _check_openings(ctx, enc, pk, cells, S, (yield Recv(f"{label}.OPENINGS")))
    if e_s is None:
        return ABORT
    return SUCCESS if enc.J(x, s, e_s) else ABORT


def zkpk_programs(enc, x, w, coins: ZkpkCoins, label: str = "zk"):
    def alice(ctx):
        return (yield from prover(ctx, enc, x, w, coins, label))

    def bob(ctx):
        return (yield from verifier(ctx, enc, x, coins, label))

    return alice, bob


def zkpk_run(enc, x, w, coins: ZkpkCoins, params, seed=0, **kw):
    """Run one proof; returns the verifier's judgment (None when the prover never started)."""
    from .harness import run_session

    a, b = zkpk_programs(enc, x, w, coins)
    return run_session(a, b, params, seed, **kw).output("B")


def extract_simulator(enc, x, coins: ZkpkCoins, label: str = "zk"):
    """Verifier-seat simulator against a corrupt prover.

    Returns (transcript judgment, functionality judgment).
    """

    def sim(ctx):
        be = ctx.backend
        flabel = f"zkpk:{label}"
        try:
            pk, sk = be.gen_binding(ctx.rng)
            bits = int.from_bytes(pk.data, "big")
            got = yield from coins.key.force_first(ctx, be.kappa, f"{label}.pk", bits)
            if got != bits:
                raise ProtocolAbort("key flip was not enforced")
            cells = _receive_commits(enc, (yield Recv(f"{label}.COMMITS")))
        except (PeerAborted, ProtocolAbort):
            yield Call(flabel, ("prove", x, enc.sentinel))
            _, j = yield Call(flabel, ("verify", enc.relation))
            return (ABORT, j)
        e = []
        for C in cells:
            raw = be.xtr(C, sk)
            e.append(raw[0] & 1 if raw else 0)
        ctx.aux["extracted"] = tuple(e)
        try:
            s = yield from coins.challenge.second(ctx, enc.sigma, f"{label}.s")
            S = enc.S(s)
            e_s = _check_openings(ctx, enc, pk, cells, S, (yield Recv(f"{label}.OPENINGS")))
        except (PeerAborted, ProtocolAbort):
            e_s = None
        accepted = e_s is not None and enc.J(x, s, e_s)
        w = enc.D(x, e) if accepted else enc.sentinel
        yield Call(flabel, ("prove", x, w))
        _, j = yield Call(flabel, ("verify", enc.relation))
        return (SUCCESS if accepted else ABORT, j)

    return sim


def zk_simulator(enc, x, coins: ZkpkCoins, label: str = "zk"):
    """Prover-seat simulator knowing only x: picks s first and forces the challenge."""

    def sim(ctx):
        s = ctx.rng.getrandbits(enc.sigma)
        e = simulated_encoding(enc, x, s, ctx.rng)
        ctx.aux["simulated_challenge"] = s
        got = yield from _prove(ctx, enc, x, e, coins, label, s_target=s)
        return got == s

    return sim


# -- exhaustive checks used by tests and demos ------------------------------

def all_encodings(enc: GiEncoding, x, w):
    """Every string E can output on (x, w), keyed by the permutation pi."""
    return {pi: enc.encode_with(x, w, pi) for pi in itertools.permutations(range(enc.v))}
