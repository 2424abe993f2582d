"""Cut-and-choose string commitment built from a mixed commitment.

The committer shares m in F^sigma into Sigma = 4*sigma field elements and
commits to each share separately. To open, it announces all shares, the
receiver checks they lie on one low-degree polynomial, a random sigma-subset
S is flipped, and only the cells in S are opened. A binding key lets a
simulator extract the message; knowing S in advance lets it equivocate.

Session-level pieces (``committer_open``, ``receiver_open``, ...) are
generator functions for :mod:`mixcoin.harness`. The subset flip is an
injected coin handle in which the receiver plays the first role.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .harness import ProtocolAbort, Recv, Send
from .mixed_commit import ExtractionKey, MixedKey
from .sss import (
    DecodeFailure,
    SssParams,
    deserialize_vector,
    interpolate_through,
    is_consistent,
    nearest_codeword,
    reconstruct,
    serialize_vector,
    share,
    sharing_from_poly,
)

SLACK_BITS = 64


@dataclass(frozen=True)
class StringCommitment:
    cells: tuple

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class CommitterState:
    params: SssParams
    pk: MixedKey
    m: tuple
    s: tuple
    shares: tuple
    r: tuple


@dataclass(frozen=True)
class EquivocationTrapdoor:
    S: tuple

    def __post_init__(self):
        if list(self.S) != sorted(set(self.S)):
            raise ValueError("trapdoor subset must be strictly increasing")


@dataclass(frozen=True)
class SimState:
    committed: CommitterState
    trapdoor: EquivocationTrapdoor

    @property
    def fixed_shares(self) -> dict:
        return {i: self.committed.shares[i - 1] for i in self.trapdoor.S}


# -- subsets from coins ----------------------------------------------------

def subset_coin_bits(Sigma: int, sigma: int) -> int:
    return (comb(Sigma, sigma) - 1).bit_length() + SLACK_BITS


def _unrank(rank: int, Sigma: int, sigma: int) -> tuple:
    out, k = [], sigma
    for pos in range(1, Sigma + 1):
        if k == 0:
            break
        # subsets of the remaining positions that contain pos
        with_pos = comb(Sigma - pos, k - 1)
        if rank < with_pos:
            out.append(pos)
            k -= 1
        else:
            rank -= with_pos
    return tuple(out)


def _rank(S, Sigma: int) -> int:
    rank, k, prev = 0, len(S), 0
    for p in S:
        for skipped in range(prev + 1, p):
            rank += comb(Sigma - skipped, k - 1)
        k -= 1
        prev = p
    return rank


def subset_from_coins(coins: int, Sigma: int, sigma: int, nbits: int | None = None) -> tuple:
    need = subset_coin_bits(Sigma, sigma)
    if nbits is not None and nbits != need:
        raise ValueError(f"subset coin must have {need} bits, got {nbits}")
    if coins < 0 or coins >> need:
        raise ValueError(f"coin value does not fit in {need} bits")
    return _unrank(coins % comb(Sigma, sigma), Sigma, sigma)


def coins_for_subset(S, Sigma: int, sigma: int, rng) -> int:
    S = tuple(S)
    if len(S) != sigma or list(S) != sorted(set(S)) or S[0] < 1 or S[-1] > Sigma:
        raise ValueError("not a valid sigma-subset of 1..Sigma")
    total = comb(Sigma, sigma)
    need = subset_coin_bits(Sigma, sigma)
    # uniform over all preimages that fit in the coin length
    count = ((1 << need) - 1 - _rank(S, Sigma)) // total + 1
    return _rank(S, Sigma) + total * rng.randrange(count)


def random_subset(params: SssParams, rng) -> tuple:
    return tuple(sorted(rng.sample(range(1, params.Sigma + 1), params.sigma)))


# -- local algorithms ------------------------------------------------------

def cell_message(params: SssParams, value: int) -> bytes:
    return params.field.to_bytes(value)


def commit_shares(shares, pk: MixedKey, params: SssParams, rng, backend):
    width = params.field.element_bytes
    r = tuple(rng.randbytes(backend.randomizer_len(width)) for _ in shares)
    cells = tuple(backend.commit(pk, cell_message(params, v), ri) for v, ri in zip(shares, r))
    return r, StringCommitment(cells)


def commit_phase(m, pk: MixedKey, params: SssParams, rng, backend, s=None):
    m = tuple(m)
    if s is None:
        s = tuple(params.field.random(rng) for _ in range(params.sigma))
    shares = share(m, s, params)
    r, M = commit_shares(shares, pk, params, rng, backend)
    return CommitterState(params, pk, m, tuple(s), shares, r), M


def extract_commit(M: StringCommitment, sk: ExtractionKey, params: SssParams, backend) -> tuple:
    """Message of the consistent sharing closest to the extracted cells, all-zero if none is within sigma."""
    F = params.field
    noisy = []
    for C in M.cells:
        raw = backend.xtr(C, sk)
        try:
            noisy.append(F.from_bytes(raw))
        except ValueError:
            noisy.append(0)
    try:
        _, msg = nearest_codeword(noisy, params)
    except DecodeFailure:
        return (0,) * params.sigma
    return msg


def check_opening(params: SssParams, pk: MixedKey, M: StringCommitment, shares, S, openings, backend) -> bool:
    if not isinstance(openings, tuple) or len(openings) != len(S):
        return False
    for i, op in zip(S, openings):
        if not isinstance(op, tuple) or len(op) != 2:
            return False
        msg, r = op
        if msg != cell_message(params, shares[i - 1]):
            return False
        if not backend.verify_open(pk, M.cells[i - 1], msg, r):
            return False
    return True


def parse_cells(payload, params: SssParams) -> StringCommitment:
    if not isinstance(payload, tuple) or len(payload) != params.Sigma:
        raise ProtocolAbort(f"expected {params.Sigma} commitment cells")
    if not all(isinstance(c, bytes) for c in payload):
        raise ProtocolAbort("commitment cells must be byte strings")
    return StringCommitment(payload)


# -- session pieces --------------------------------------------------------

def send_cells(M: StringCommitment, label: str):
    yield Send(f"{label}.CELLS", M.cells)


def committer_open(ctx, state: CommitterState, coin, label: str):
    """Announce the shares, take part in the subset flip, open the chosen cells."""
    p = state.params
    yield Send(f"{label}.SHARES", serialize_vector(state.shares, p.field))
    nbits = subset_coin_bits(p.Sigma, p.sigma)
    coins = yield from coin.second(ctx, nbits, f"{label}.S")
    S = subset_from_coins(coins, p.Sigma, p.sigma)
    openings = tuple((cell_message(p, state.shares[i - 1]), state.r[i - 1]) for i in S)
    yield Send(f"{label}.OPENINGS", openings)
    return S


def receiver_open(ctx, params: SssParams, pk: MixedKey, M: StringCommitment, coin, label: str):
    """Receiver side of the opening; returns m or raises ProtocolAbort."""
    raw = yield Recv(f"{label}.SHARES")
    try:
        shares = deserialize_vector(raw, params.field, params.Sigma)
    except (ValueError, TypeError) as err:
        raise ProtocolAbort(f"bad share vector: {err}") from None
    if not is_consistent(shares, params):
        raise ProtocolAbort("announced shares are not a consistent sharing")
    nbits = subset_coin_bits(params.Sigma, params.sigma)
    coins = yield from coin.first(ctx, nbits, f"{label}.S")
    S = subset_from_coins(coins, params.Sigma, params.sigma)
    openings = yield Recv(f"{label}.OPENINGS")
    if not check_opening(params, pk, M, shares, S, openings, ctx.backend):
        raise ProtocolAbort("a checked cell does not open to its announced share")
    ctx.aux["last_subset"] = S
    return reconstruct(shares, params)


def equivocal_commit(trapdoor: EquivocationTrapdoor, m, pk: MixedKey, params: SssParams, rng, backend):
    if len(trapdoor.S) != params.sigma:
        raise ValueError("trapdoor subset must have sigma positions")
    state, M = commit_phase(m, pk, params, rng, backend)
    return SimState(state, trapdoor), M


def equivocal_shares(state: SimState, m_tilde) -> tuple:
    """Sharing of m_tilde that agrees with the committed shares on the trapdoor subset."""
    p = state.committed.params
    coeffs = interpolate_through(p, tuple(m_tilde), state.fixed_shares)
    return sharing_from_poly(p, coeffs)


def equivocal_open(ctx, state: SimState, m_tilde, coin, label: str):
    """Open toward m_tilde by forcing the subset flip onto the trapdoor."""
    c = state.committed
    p = c.params
    shares = equivocal_shares(state, m_tilde)
    yield Send(f"{label}.SHARES", serialize_vector(shares, p.field))
    nbits = subset_coin_bits(p.Sigma, p.sigma)
    target = coins_for_subset(state.trapdoor.S, p.Sigma, p.sigma, ctx.rng)
    coins = yield from coin.force_first(ctx, nbits, f"{label}.S", target)
    S = subset_from_coins(coins, p.Sigma, p.sigma)
    if S != state.trapdoor.S:
        raise ProtocolAbort("subset flip did not land on the trapdoor")
    openings = tuple((cell_message(p, c.shares[i - 1]), c.r[i - 1]) for i in S)
    yield Send(f"{label}.OPENINGS", openings)
    return tuple(m_tilde)


# -- whole commit-then-open sessions ---------------------------------------

def commit_committer(ctx, m, pk: MixedKey, params: SssParams, coin, label: str = "commit"):
    state, M = commit_phase(m, pk, params, ctx.rng, ctx.backend)
    yield from send_cells(M, label)
    yield Recv(f"{label}.READY")
    yield from committer_open(ctx, state, coin, label)
    return state.m


def commit_receiver(ctx, pk: MixedKey, params: SssParams, coin, label: str = "commit", sk=None):
    payload = yield Recv(f"{label}.CELLS")
    M = parse_cells(payload, params)
    if sk is not None:
        ctx.aux["extracted"] = extract_commit(M, sk, params, ctx.backend)
    yield Send(f"{label}.READY", True)
    m = yield from receiver_open(ctx, params, pk, M, coin, label)
    return m


def cheating_committer(ctx, m, m_prime, d: int, pk: MixedKey, params: SssParams, coin, label: str = "commit"):
    """Commits to the sharing of m_prime with d cells taken from a sharing of m,
    then announces the sharing of m_prime. The opening fails exactly when S
    hits one of the d swapped cells."""
    F = params.field
    rng = ctx.rng
    cw = share(m, tuple(F.random(rng) for _ in range(params.sigma)), params)
    cw_prime = share(m_prime, tuple(F.random(rng) for _ in range(params.sigma)), params)
    differ = [i for i in range(1, params.Sigma + 1) if cw[i - 1] != cw_prime[i - 1]]
    if len(differ) < d:
        raise ValueError("the two sharings agree on too many positions")
    swapped = set(rng.sample(differ, d))
    committed = tuple(cw[i - 1] if i in swapped else cw_prime[i - 1] for i in range(1, params.Sigma + 1))
    r, M = commit_shares(committed, pk, params, rng, ctx.backend)
    yield from send_cells(M, label)
    yield Recv(f"{label}.READY")
    yield Send(f"{label}.SHARES", serialize_vector(cw_prime, F))
    nbits = subset_coin_bits(params.Sigma, params.sigma)
    coins = yield from coin.second(ctx, nbits, f"{label}.S")
    S = subset_from_coins(coins, params.Sigma, params.sigma)
    openings = tuple((cell_message(params, committed[i - 1]), r[i - 1]) for i in S)
    yield Send(f"{label}.OPENINGS", openings)
    return tuple(m_prime)


def acceptance_probability(Sigma: int, sigma: int, d: int) -> float:
    """Chance that a uniform sigma-subset avoids all d bad cells."""
    return comb(Sigma - d, sigma) / comb(Sigma, sigma)
