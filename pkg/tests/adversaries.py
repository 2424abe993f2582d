"""Cheating parties shared by several test modules."""
from mixcoin.commit_protocol import commit_shares, send_cells, subset_coin_bits, subset_from_coins
from mixcoin.harness import Recv, Send
from mixcoin.sss import random_sharing, serialize_vector


def cheating_force_alice(handle, nbits, d, label="coin"):
    """Commits mostly to a sharing of a2 but keeps d cells of a sharing of a1; opens toward a2.

    With d <= (Sigma - 2 sigma) / 2 the committed vector still decodes to a2,
    so an extracting simulator stays consistent. Larger d pushes it past the
    unique-decoding radius.
    """

    def alice(ctx):
        p = handle.sss_params(ctx, nbits)
        pk = ctx.backend.key_from_bits((yield from handle.key_coin.first(ctx, ctx.backend.kappa, f"{label}.pk")))
        F = p.field
        a1 = tuple(F.random(ctx.rng) for _ in range(p.sigma))
        a2 = tuple((x + 1) % F.order for x in a1)
        cw1, cw2 = random_sharing(a1, p, ctx.rng), random_sharing(a2, p, ctx.rng)
        swap = set(ctx.rng.sample([i for i in range(p.Sigma) if cw1[i] != cw2[i]], d))
        committed = tuple(cw1[i] if i in swap else cw2[i] for i in range(p.Sigma))
        r, M = commit_shares(committed, pk, p, ctx.rng, ctx.backend)
        yield from send_cells(M, label)
        yield Recv(f"{label}.BIT")
        yield Send(f"{label}.SHARES", serialize_vector(cw2, F))
        bits = yield from handle.subset_coin.second(ctx, subset_coin_bits(p.Sigma, p.sigma), f"{label}.S")
        S = subset_from_coins(bits, p.Sigma, p.sigma)
        yield Send(f"{label}.OPENINGS", tuple((F.to_bytes(committed[i - 1]), r[i - 1]) for i in S))
        return None

    return alice
