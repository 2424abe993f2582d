import random
from collections import Counter

import pytest
from scipy.stats import chi2_contingency

from adversaries import cheating_force_alice
from mixcoin.coinflip import (
    BlumCoin,
    ForceCoin,
    IdealCoin,
    RandomCoin,
    amplify_to_force,
    amplify_to_random,
    blum_bit,
    blum_string,
    coin_programs,
    coin_stack,
    enforce_against_alice,
    enforce_against_bob,
    flavor_test_uncont,
    rewind_enforce_blum,
)
from mixcoin.commit_protocol import (
    acceptance_probability,
    commit_shares,
    send_cells,
)
from mixcoin.field import GF2_8
from mixcoin.harness import FlavorMismatch, ProtocolAbort, Recv, RewindingForbidden, Send, Session, SessionParams, run_session
from mixcoin.sss import random_sharing, serialize_vector
from mixcoin.stats import chi_square_uniform, within_sds

HY = SessionParams()
CO = SessionParams(mode="composed")
SMALL = SessionParams(sigma=1, field=GF2_8)


def _outputs(handle, nbits, n, params=HY, seed0=0):
    a, b = coin_programs(handle, nbits)
    out = []
    for s in range(seed0, seed0 + n):
        t = run_session(a, b, params, s)
        assert t.output("A") == t.output("B") is not None
        out.append(t.output("A"))
    return out


# -- Blum base ---------------------------------------------------------------

def test_blum_bit_fair():
    a, b = blum_bit()
    vals = [run_session(a, b, HY, s).output("B") for s in range(4000)]
    assert within_sds(vals.count(0) / len(vals), 0.5, len(vals))


def test_blum_string_uniform_and_rounds_independent():
    a, b = blum_string(8)
    vals = [run_session(a, b, HY, s).output("B") for s in range(20_000)]
    assert chi_square_uniform(vals, 256)[1] > 1e-3
    for i, j in ((0, 1), (3, 7)):
        table = [[0, 0], [0, 0]]
        for v in vals:
            table[(v >> i) & 1][(v >> j) & 1] += 1
        assert chi2_contingency(table)[1] > 1e-3


def test_blum_refusal_to_open_aborts():
    def alice(ctx):
        yield Send("coin.b0.COMMIT", b"x" * 17)
        yield Recv("coin.b0.BIT")

    _, bob = coin_programs(BlumCoin(), 3)
    t = run_session(alice, bob, HY, 0)
    assert t.output("B") is None


def test_blum_informed_rewinding_needs_at_most_two_attempts():
    for s in range(200):
        target = s % 256
        alice, _ = coin_programs(BlumCoin(), 8)
        sess = Session({"A": alice, "B": rewind_enforce_blum(target, 8, strategy="informed")}, HY, s,
                       privileged="B", corrupt={"A"})
        t = sess.run()
        assert t.output("A") == target
        assert t.stats["B"]["rewind_attempts"] <= 2 * 8


def test_blum_rewinding_forbidden_in_quantum_mode():
    alice, _ = coin_programs(BlumCoin(), 4)
    with pytest.raises(RewindingForbidden):
        run_session(alice, rewind_enforce_blum(5, 4), SessionParams(mode="quantum-realistic"), 0, privileged="B")


def test_blum_not_enforceable_against_bob():
    with pytest.raises(FlavorMismatch):
        enforce_against_bob(BlumCoin(), 4, 1)


# -- random-for-Bob amplifier ------------------------------------------------

def test_random_coin_uniform():
    vals = _outputs(amplify_to_random(IdealCoin()), 8, 20_000)
    assert chi_square_uniform(vals, 256)[1] > 1e-3


def _peeking_bob(handle, nbits):
    """Chooses b from the first nbits of the commitment string."""
    width = (nbits + 7) // 8

    def bob(ctx):
        pk = handle._key(ctx, (yield from handle.base.second(ctx, ctx.backend.kappa, "coin.pk")))
        A = yield Recv("coin.COMMIT")
        b = int.from_bytes(A[:width].ljust(width, b"\0"), "big") >> (-nbits % 8)
        yield Send("coin.BIT", b)
        a = yield from handle._receive_open(ctx, nbits, "coin", pk, A)
        return a ^ b

    return bob


def test_peeking_bob_cannot_bias_random_coin():
    handle = RandomCoin(IdealCoin())
    alice, _ = coin_programs(handle, 16)
    n = 20_000
    outs = [run_session(alice, _peeking_bob(handle, 16), HY, s, corrupt={"B"}).output("A") for s in range(n)]
    for bit in range(16):
        ones = sum((c >> bit) & 1 for c in outs)
        assert within_sds(ones / n, 0.5, n)
    in_q = flavor_test_uncont(outs, range(256))  # first 8 of 16 bits zero
    assert within_sds(in_q, 2**-8, n)


def test_broken_variant_is_controllable():
    handle = RandomCoin(IdealCoin(), broken=True)
    alice, _ = coin_programs(handle, 16)
    outs = [run_session(alice, _peeking_bob(handle, 16), HY, s, corrupt={"B"}).output("A") for s in range(500)]
    assert flavor_test_uncont(outs, range(256)) > 0.99


def test_honest_hit_rate_of_small_set():
    outs = _outputs(RandomCoin(IdealCoin()), 16, 20_000, seed0=7)
    assert within_sds(flavor_test_uncont(outs, range(256)), 2**-8, len(outs))


def test_selective_abort_only_removes_mass():
    # Alice learns c before opening and refuses whenever its top bit is 1
    handle = RandomCoin(IdealCoin())

    def alice(ctx):
        pk = ctx.backend.key_from_bits((yield from handle.base.first(ctx, ctx.backend.kappa, "coin.pk")))
        a = ctx.rng.getrandbits(4)
        ab = bytes([a])
        r = ctx.rng.randbytes(ctx.backend.randomizer_len(1))
        yield Send("coin.COMMIT", ctx.backend.commit(pk, ab, r))
        b = yield Recv("coin.BIT")
        if (a ^ b) >> 3:
            raise ProtocolAbort("refuse")
        yield Send("coin.OPEN", (ab, r))
        return a ^ b

    _, bob = coin_programs(handle, 4)
    n = 16_000
    outs = [run_session(alice, bob, HY, s, corrupt={"A"}).output("B") for s in range(n)]
    counts = Counter(outs)
    assert within_sds(counts[None] / n, 0.5, n)
    for x in range(16):
        assert counts[x] / n <= 1 / 16 + 3 * (1 / 16 * 15 / 16 / n) ** 0.5


# -- force coin --------------------------------------------------------------

def test_force_coin_uniform_sixteen_bits():
    vals = _outputs(coin_stack(SessionParams(sigma=1))["force"], 16, 20_000, SessionParams(sigma=1))
    assert chi_square_uniform([v >> 8 for v in vals], 256)[1] > 1e-3
    assert chi_square_uniform([v & 255 for v in vals], 256)[1] > 1e-3


def test_force_coin_cheating_alice_rarely_accepted():
    params = SessionParams(sigma=4)
    handle = coin_stack(params)["force"]
    _, bob = coin_programs(handle, 8)
    n = 3000
    acc = sum(run_session(cheating_force_alice(handle, 8, 4), bob, params, s, corrupt={"A"}).output("B") is not None
              for s in range(n))
    p = acceptance_probability(16, 4, 4)
    assert p <= 0.75 ** 4
    assert within_sds(acc / n, p, n)


def test_force_coin_inconsistent_shares_abort_before_subset():
    handle = coin_stack(CO)["force"]

    def alice(ctx):
        p = handle.sss_params(ctx, 8)
        pk = ctx.backend.key_from_bits((yield from handle.key_coin.first(ctx, ctx.backend.kappa, "coin.pk")))
        v = list(random_sharing((1,) * p.sigma, p, ctx.rng))
        _, M = commit_shares(v, pk, p, ctx.rng, ctx.backend)
        yield from send_cells(M, "coin")
        yield Recv("coin.BIT")
        v[0] ^= 1
        yield Send("coin.SHARES", serialize_vector(v, p.field))
        yield Recv("never")

    _, bob = coin_programs(handle, 8)
    t = run_session(alice, bob, CO, 0, corrupt={"A"})
    assert t.output("B") is None
    assert "coin.SHARES" in t.tags()
    assert not any(tag.startswith("coin.S.") or tag == "coin.OPENINGS" for tag in t.tags())


@pytest.mark.parametrize("params", [HY, CO], ids=["hybrid", "composed"])
def test_enforcement_against_honest_behaving_parties(params):
    handle = coin_stack(params)["force"]
    rng = random.Random(1)
    runs = 40 if params is HY else 6
    for s in range(runs):
        h = rng.getrandbits(12)
        alice, bob = coin_programs(handle, 12)
        t = run_session(alice, enforce_against_alice(handle, 12, h), params, s, privileged="B", corrupt={"A"})
        assert t.output("A") == h == t.output("B")
        t = run_session(enforce_against_bob(handle, 12, h), bob, params, s, privileged="A", corrupt={"B"})
        assert t.output("B") == h == t.output("A")


def test_enforcement_never_yields_wrong_value_on_abort():
    handle = coin_stack(HY)["force"]

    def quitter(ctx):
        yield from handle.key_coin.first(ctx, ctx.backend.kappa, "coin.pk")
        raise ProtocolAbort("walks away")

    t = run_session(quitter, enforce_against_alice(handle, 8, 3), HY, 0, privileged="B", corrupt={"A"})
    assert t.output("B") is None

    def bob_quitter(ctx):
        yield from handle.key_coin.second(ctx, ctx.backend.kappa, "coin.pk")
        yield Recv("coin.CELLS")
        raise ProtocolAbort("walks away")

    t = run_session(enforce_against_bob(handle, 8, 3), bob_quitter, HY, 0, privileged="A", corrupt={"B"})
    assert t.output("A") is None


def test_alice_simulator_mismatch_rate_bounded():
    # a cheater keeping sigma+1 foreign cells makes extraction disagree with the opening when accepted
    params = SessionParams(sigma=4)
    handle = coin_stack(params)["force"]
    n, wrong, mism = 3000, 0, 0
    for s in range(n):
        h = s % 256
        sess = Session({"A": cheating_force_alice(handle, 8, 5), "B": enforce_against_alice(handle, 8, h)}, params, s,
                       privileged="B", corrupt={"A"})
        t = sess.run()
        out = t.output("B")
        wrong += out is not None and out != h
        mism += t.stats["B"].get("extraction_mismatch", 0)
    p = acceptance_probability(16, 4, 5)
    assert wrong <= mism
    assert within_sds(mism / n, p, n)
    assert mism / n <= 0.75 ** 4


def test_random_coin_not_enforceable_against_bob():
    with pytest.raises(FlavorMismatch):
        enforce_against_bob(RandomCoin(IdealCoin()), 4, 1)
    with pytest.raises(FlavorMismatch):
        ForceCoin(IdealCoin(), IdealCoin()) and enforce_against_bob(RandomCoin(IdealCoin()), 4, 1)


def test_amplify_to_force_defaults_subset_coin():
    base = RandomCoin(IdealCoin())
    f = amplify_to_force(base)
    assert f.key_coin is base and f.subset_coin is base


def test_simulated_transcripts_match_real_statistics():
    # projections: flipped subset, top nibble of each opened cell value, top nibble of Bob's b
    n = 100_000
    handle = coin_stack(SMALL)["force"]
    alice, bob = coin_programs(handle, 8)
    rng = random.Random(5)

    def project(t):
        rec = {f.tag: f.payload for f in t.frames}
        from mixcoin.wire import unpack

        shares = unpack(rec["coin.SHARES"])
        openings = unpack(rec["coin.OPENINGS"])
        b = unpack(rec["coin.BIT"])
        return (shares[0] >> 4, openings[0][0][0] >> 4, b >> 4)

    def tv(xs, ys):
        cx, cy = Counter(xs), Counter(ys)
        return 0.5 * sum(abs(cx[k] - cy[k]) for k in set(cx) | set(cy)) / len(xs)

    real = [project(run_session(alice, bob, SMALL, s)) for s in range(n)]
    sim_bob = [project(run_session(enforce_against_bob(handle, 8, rng.getrandbits(8)), bob, SMALL, s,
                                   privileged="A", corrupt={"B"})) for s in range(n)]
    for k in range(3):
        assert tv([r[k] for r in real], [r[k] for r in sim_bob]) < 0.02
