"""Three coin-flip constructions and what an adversary can do to each.

Run: python demos/01_coin_flavors.py
"""
import random

from mixcoin.coinflip import (
    BlumCoin,
    IdealCoin,
    RandomCoin,
    coin_programs,
    coin_stack,
    enforce_against_alice,
    enforce_against_bob,
)
from mixcoin.harness import FlavorMismatch, Recv, Send, SessionParams, run_session

params = SessionParams()
stack = coin_stack(params)

print("Honest runs, 12-bit coins:")
for name, handle in (("Blum", BlumCoin()), ("random", stack["random"]), ("force", stack["force"])):
    a, b = coin_programs(handle, 12)
    t = run_session(a, b, params, seed=2024)
    print(f"  {name:7s} Alice {t.output('A'):#05x}  Bob {t.output('B'):#05x}  frames {len(t.frames)}")


def peeking_bob(handle, nbits=16):
    """Picks its bit string from the first bytes of Alice's commitment."""

    def bob(ctx):
        pk = handle._key(ctx, (yield from handle.base.second(ctx, ctx.backend.kappa, "coin.pk")))
        A = yield Recv("coin.COMMIT")
        b = int.from_bytes(A[:2], "big")
        yield Send("coin.BIT", b)
        return (yield from handle._receive_open(ctx, nbits, "coin", pk, A)) ^ b

    return bob


print("\nA Bob who derives b from the commitment, aiming for a coin with a zero high byte:")
for broken in (False, True):
    handle = RandomCoin(IdealCoin(), broken=broken)
    alice, _ = coin_programs(handle, 16)
    outs = [run_session(alice, peeking_bob(handle), params, s, corrupt={"B"}).output("A") for s in range(2000)]
    rate = sum(c < 256 for c in outs) / len(outs)
    print(f"  {'plain-text commit' if broken else 'mixed commitment '}  hit rate {rate:.4f} (fair: {2**-8:.4f})")

print("\nSimulators steer the force coin to a chosen value from either seat:")
handle = stack["force"]
alice, bob = coin_programs(handle, 16)
rng = random.Random(1)
for seat in ("A", "B"):
    h = rng.getrandbits(16)
    if seat == "A":
        t = run_session(alice, enforce_against_alice(handle, 16, h), params, 7, privileged="B", corrupt={"A"})
    else:
        t = run_session(enforce_against_bob(handle, 16, h), bob, params, 7, privileged="A", corrupt={"B"})
    print(f"  against {seat}: target {h:#06x}  honest party got {t.output(seat):#06x}")

try:
    enforce_against_bob(stack["random"], 16, 0)
except FlavorMismatch as err:
    print(f"\nThe random coin refuses the same trick against Bob: {err}")
