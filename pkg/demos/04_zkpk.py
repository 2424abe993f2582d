"""Graph-isomorphism proofs: honest, guessing, extracted and simulated.

Run: python demos/04_zkpk.py
"""
import random

from mixcoin.harness import Session, SessionParams, run_session
from mixcoin.scenarios import zkpk_coins
from mixcoin.zkpk import (
    SUCCESS,
    extract_simulator,
    gi_encoding,
    gi_relation,
    guessing_prover,
    instance_to_text,
    non_isomorphic_instance,
    parallel_repeat,
    sample_gi_instance,
    verifier,
    zk_simulator,
    zkpk_programs,
)

params = SessionParams(sigma=6)
coins = zkpk_coins(params)
x, w = sample_gi_instance(5, random.Random(11))
enc = parallel_repeat(gi_encoding(5), params.sigma)
print("instance:\n" + instance_to_text(x, w))

alice, bob = zkpk_programs(enc, x, w, coins)
print("honest proof:", run_session(alice, bob, params, 1).output("B"))

fake = non_isomorphic_instance(5)
fenc = parallel_repeat(gi_encoding(5), params.sigma)
wins = 0
for s in range(3000):
    t = run_session(lambda ctx: (yield from guessing_prover(ctx, fenc, fake, coins)),
                    lambda ctx: (yield from verifier(ctx, fenc, fake, coins)), params, s, corrupt={"A"})
    wins += t.output("B") == SUCCESS
print(f"guessing prover on a false statement: {wins}/3000 accepted (expect about {3000 * 2**-params.sigma:.0f})")

sess = Session({"A": alice, "B": extract_simulator(enc, x, coins)}, params, 2, privileged="B", corrupt={"A"})
t = sess.run()
extracted = enc.D(x, sess.parties["B"].ctx.aux["extracted"])
print("extractor judgment (transcript, ideal):", t.output("B"), " witness recovered:", gi_relation(x, extracted))

t = run_session(zk_simulator(enc, x, coins), bob, params, 3, privileged="A", corrupt={"B"})
print("simulated proof without the witness, verifier says:", t.output("B"))
