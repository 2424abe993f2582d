"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines appear
even without ``-s``.
"""
import itertools
import random
import time
from collections import Counter
from math import comb

import pytest

from adversaries import cheating_force_alice
from mixcoin.coinflip import (
    BlumCoin,
    IdealCoin,
    RandomCoin,
    coin_programs,
    coin_stack,
    enforce_against_alice,
    enforce_against_bob,
)
from mixcoin.field import FieldSpec
from mixcoin.harness import RewindingForbidden, Session, SessionParams, run_session
from mixcoin.ot_sfe import DEVIATIONS, OtInputs, ot_run, passive_and_via_ot, passive_xor, sfe_ideal_vs_real, sfe_run
from mixcoin.scenarios import PROTOCOLS, RunConfig, replay, run_one, zkpk_coins, sfe_coin, rep_seed
from mixcoin.sss import DecodeFailure, SssParams, hamming, nearest_codeword, random_sharing, restrict, share
from mixcoin.stats import binomial_sd, chi_square_uniform
from mixcoin.zkpk import (
    SUCCESS,
    GiEncoding,
    GraphIsoInstance,
    admissible,
    apply_perm,
    gi_relation,
    guessing_prover,
    non_isomorphic_instance,
    parallel_repeat,
    restrict_bits,
    sample_gi_instance,
    verifier,
    zkpk_run,
)

# pinned tolerances
C1_TRIALS, C1_SIGMA, C1_BOUND, C1_SECONDS = 10_000, 8, 0.1002, 60.0
C2_SESSIONS, C2_ELL, C2_ALPHA, C2_SECONDS = 100_000, 8, 1e-3, 300.0
C3_TARGETS, C3_CHEATS = 1000, 1000
C4_PAIRS, C4_SAMPLES, C4_TV = 10_000, 100_000, 0.02
C5_TRIALS, C5_SIGMA, C5_HONEST = 100_000, 10, 1000
C7_PAIRS = 100
C8_RUNS = 100
C9_RUNS, C9_LOW, C9_HIGH = 10_000, 1.9, 2.1
C10_SESSIONS = 100
K_SD = 3


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_c01_cut_and_choose_soundness(report):
    exact = comb(4 * C1_SIGMA - C1_SIGMA, C1_SIGMA) / comb(4 * C1_SIGMA, C1_SIGMA)
    cfg = RunConfig(protocol="commit", strategy="cheat-open", sigma=C1_SIGMA)
    t0 = time.perf_counter()
    acc = sum(run_one(cfg, rep_seed(1, i)).output("B") is not None for i in range(C1_TRIALS))
    secs = time.perf_counter() - t0
    rate = acc / C1_TRIALS
    sd = binomial_sd(exact, C1_TRIALS)
    ok = abs(rate - exact) <= K_SD * sd and rate <= C1_BOUND and secs < C1_SECONDS
    report(1, ok, f"rate {rate:.4f} exact {exact:.4f} (3sd {K_SD * sd:.4f}) bound {C1_BOUND} time {secs:.1f}s")


def _coin_values(handle, params, n):
    a, b = coin_programs(handle, C2_ELL)
    out = []
    for s in range(n):
        t = run_session(a, b, params, s)
        assert t.output("A") == t.output("B") is not None
        out.append(t.output("A"))
    return out


def test_c02_coin_unbiasedness(report):
    params = SessionParams()
    t0 = time.perf_counter()
    p4 = chi_square_uniform(_coin_values(RandomCoin(IdealCoin()), params, C2_SESSIONS), 1 << C2_ELL)[1]
    p5 = chi_square_uniform(_coin_values(coin_stack(params)["force"], params, C2_SESSIONS), 1 << C2_ELL)[1]
    secs = time.perf_counter() - t0
    ok = p4 > C2_ALPHA and p5 > C2_ALPHA and secs < C2_SECONDS
    report(2, ok, f"random-coin p={p4:.4f} force-coin p={p5:.4f} alpha {C2_ALPHA} time {secs:.1f}s")


def test_c03_enforcement_exactness(report):
    params = SessionParams()
    handle = coin_stack(params)["force"]
    alice, bob = coin_programs(handle, 16)
    rng = random.Random(3)
    wrong = bottom = 0
    for s in range(C3_TARGETS):
        h = rng.getrandbits(16)
        for t, seat in ((run_session(alice, enforce_against_alice(handle, 16, h), params, s,
                                     privileged="B", corrupt={"A"}), "A"),
                        (run_session(enforce_against_bob(handle, 16, h), bob, params, s,
                                     privileged="A", corrupt={"B"}), "B")):
            out = t.output(seat)
            bottom += out is None
            wrong += out is not None and out != h
    # a cheater beyond the decoding radius against the Alice-side simulator
    bound = comb(24, 8) / comb(32, 8)
    mism = 0
    for s in range(C3_CHEATS):
        h = rng.getrandbits(16)
        t = run_session(cheating_force_alice(handle, 16, 9), enforce_against_alice(handle, 16, h), params, s,
                        privileged="B", corrupt={"A"})
        mism += t.output("B") is not None and t.output("B") != h
    mrate = mism / C3_CHEATS
    ok = wrong == 0 and mrate <= bound + K_SD * binomial_sd(bound, C3_CHEATS)
    report(3, ok, f"{2 * C3_TARGETS} enforced runs, {wrong} wrong, {bottom} aborted; "
                  f"cheater mismatch rate {mrate:.4f} vs {bound:.4f}")


def _bf_decode(noisy, book, sigma):
    best = min(book, key=lambda cm: hamming(cm[0], noisy))
    return best if hamming(best[0], noisy) <= sigma else None


def test_c04_sss_facts(report):
    rng = random.Random(4)
    p8 = SssParams(8)
    F = p8.field
    violations = 0
    for _ in range(C4_PAIRS):
        m1 = tuple(F.random(rng) for _ in range(8))
        m2 = tuple(F.random(rng) for _ in range(8))
        if m1 == m2:
            continue
        violations += hamming(random_sharing(m1, p8, rng), random_sharing(m2, p8, rng)) < p8.Sigma - 2 * p8.sigma

    gf13 = FieldSpec.prime(13)
    p2 = SssParams(2, gf13)
    m = (4, 9)
    samples = [random_sharing(m, p2, rng) for _ in range(C4_SAMPLES)]
    worst_tv = 0.0
    for S in itertools.combinations(range(1, p2.Sigma + 1), 2):
        counts = Counter(restrict(v, S) for v in samples)
        tv = 0.5 * sum(abs(counts[c] / C4_SAMPLES - 1 / 169) for c in itertools.product(range(13), repeat=2))
        worst_tv = max(worst_tv, tv)

    disagreements = tested = 0
    for sigma in (1, 2):
        p = SssParams(sigma, gf13)
        book = [(share(mm, s, p), mm) for mm in itertools.product(range(13), repeat=sigma)
                for s in itertools.product(range(13), repeat=sigma)]
        for trial in range(300):
            cw, _ = rng.choice(book)
            noisy = list(cw)
            for i in rng.sample(range(p.Sigma), trial % (p.Sigma + 1)):
                noisy[i] = (noisy[i] + 1 + rng.randrange(12)) % 13
            try:
                got = nearest_codeword(noisy, p)
            except DecodeFailure:
                got = None
            disagreements += got != _bf_decode(tuple(noisy), book, sigma)
            tested += 1
    ok = violations == 0 and worst_tv < C4_TV and disagreements == 0
    report(4, ok, f"distance violations {violations}/{C4_PAIRS}; worst restriction TV {worst_tv:.4f} "
                  f"(< {C4_TV}); decoder disagreements {disagreements}/{tested}")


def test_c05_zkpk_knowledge_error(report):
    params = SessionParams(sigma=C5_SIGMA)
    coins = zkpk_coins(params)
    x = non_isomorphic_instance(2)
    enc = parallel_repeat(GiEncoding(2), C5_SIGMA)

    def alice(ctx):
        return (yield from guessing_prover(ctx, enc, x, coins))

    def bob(ctx):
        return (yield from verifier(ctx, enc, x, coins))

    acc = sum(run_session(alice, bob, params, s, corrupt={"A"}).output("B") == SUCCESS for s in range(C5_TRIALS))
    rate = acc / C5_TRIALS
    p = 2.0 ** -C5_SIGMA
    sd = binomial_sd(p, C5_TRIALS)

    rng = random.Random(5)
    enc3 = parallel_repeat(GiEncoding(3), C5_SIGMA)
    complete = 0
    for s in range(C5_HONEST):
        xi, w = sample_gi_instance(3, rng)
        complete += zkpk_run(enc3, xi, w, coins, params, s) == SUCCESS
    ok = abs(rate - p) <= K_SD * sd and complete == C5_HONEST
    report(5, ok, f"guessing acceptance {rate:.6f} vs {p:.6f} (3sd {K_SD * sd:.6f}); "
                  f"completeness {complete}/{C5_HONEST}")


def test_c06_encoding_axioms_exhaustive(report):
    v = 3
    enc = GiEncoding(v)
    perms = list(itertools.permutations(range(v)))
    pairs = list(itertools.combinations(range(v), 2))
    strings = list(itertools.product((0, 1), repeat=enc.n))
    instances = completeness_bad = extract_bad = sim_bad = 0
    for edges in itertools.product((0, 1), repeat=len(pairs)):
        G0 = [[0] * v for _ in range(v)]
        for (i, j), e in zip(pairs, edges):
            G0[i][j] = G0[j][i] = e
        G0 = tuple(tuple(r) for r in G0)
        for phi in perms:
            x = GraphIsoInstance(v, G0, apply_perm(phi, G0))
            witnesses = [w for w in perms if gi_relation(x, w)]
            instances += 1
            for w in witnesses:
                encs = [enc.encode_with(x, w, pi) for pi in perms]
                for s in (0, 1):
                    completeness_bad += sum(not enc.J(x, s, restrict_bits(e, enc.S(s))) for e in encs)
                    real = Counter(restrict_bits(e, enc.S(s)) for e in encs)
                    sim = Counter(enc.simulate_with(x, s, tau) for tau in perms)
                    sim_bad += real != sim
            extract_bad += sum(admissible(enc, x, e) and not gi_relation(x, enc.D(x, e)) for e in strings)
    ok = completeness_bad == sim_bad == extract_bad == 0
    report(6, ok, f"{instances} instances, {len(strings)} strings each: completeness {completeness_bad}, "
                  f"extractability {extract_bad}, simulation {sim_bad} violations")


def test_c07_ot_correctness(report):
    rng = random.Random(7)
    params = SessionParams()
    wrong = 0
    for i in range(C7_PAIRS):
        m0, m1 = rng.randbytes(16), rng.randbytes(16)
        for c in (0, 1):
            wrong += ot_run(OtInputs(m0, m1, c), params, 2 * i + c) != (m0, m1)[c]
    report(7, wrong == 0, f"{2 * C7_PAIRS} transfers, {wrong} wrong")


def test_c08_sfe_compiler(report):
    hybrid, composed = SessionParams(), SessionParams(sigma=1, mode="composed")
    table_bad = 0
    for proto in (passive_xor, passive_and_via_ot):
        for params in (hybrid, composed):
            for x1, x2 in itertools.product((0, 1), repeat=2):
                t = sfe_run(proto(), x1, x2, sfe_coin(params), params, 2 * x1 + x2)
                table_bad += not (t.output("A") == t.output("B") == proto().f(x1, x2))
    missed = {}
    for dev in DEVIATIONS:
        protos = (passive_and_via_ot,) if dev == "wrong-randomness" else (passive_xor, passive_and_via_ot)
        missed[dev] = sum(sfe_run(proto(), 1, 1, sfe_coin(hybrid), hybrid, s, deviation=dev).output("B") is not None
                          for proto in protos for s in range(C8_RUNS))
    sim_bad = paired = 0
    for proto in (passive_xor, passive_and_via_ot):
        for dev in (None,) + DEVIATIONS:
            for s in range(25):
                x1, x2 = s & 1, (s >> 1) & 1
                ideal, real = sfe_ideal_vs_real(proto(), x1, x2, IdealCoin(), hybrid, s, deviation=dev)
                sim_bad += ideal != real
                paired += 1
    ok = table_bad == 0 and not any(missed.values()) and sim_bad == 0
    report(8, ok, f"truth-table errors {table_bad}; undetected deviations {missed}; "
                  f"simulator disagreements {sim_bad}/{paired}")


def test_c09_rewinding(report):
    params = SessionParams()
    handle = BlumCoin("guess")
    alice, _ = coin_programs(handle, 1)
    attempts = 0
    for s in range(C9_RUNS):
        sess = Session({"A": alice, "B": enforce_against_alice(handle, 1, s & 1)}, params, s,
                       privileged="B", corrupt={"A"})
        t = sess.run()
        assert t.output("A") == s & 1
        attempts += t.stats["B"]["rewind_attempts"]
    mean = attempts / C9_RUNS
    quantum = SessionParams(mode="quantum-realistic")
    errors = []
    for _ in range(2):
        try:
            run_session(alice, enforce_against_alice(handle, 1, 1), quantum, 0, privileged="B", corrupt={"A"})
            errors.append(None)
        except RewindingForbidden as err:
            errors.append(str(err))
    ok = C9_LOW <= mean <= C9_HIGH and errors[0] is not None and errors[0] == errors[1]
    report(9, ok, f"mean attempts {mean:.3f} in [{C9_LOW}, {C9_HIGH}]; quantum-realistic error: {errors[0]!r}")


def test_c10_determinism(report):
    mismatched = {}
    for protocol in PROTOCOLS:
        cfg = RunConfig(protocol=protocol)
        bad = 0
        for i in range(C10_SESSIONS):
            t = run_one(cfg, rep_seed(10, i))
            bad += replay(t).to_jsonl() != t.to_jsonl()
        mismatched[protocol] = bad
    ok = not any(mismatched.values())
    report(10, ok, f"{C10_SESSIONS} sessions x {len(PROTOCOLS)} protocols, mismatches {sum(mismatched.values())}")
