"""Classical rewinding forces a Blum coin; the quantum-realistic mode forbids it.

Run: python demos/03_rewinding.py
"""
from mixcoin.coinflip import BlumCoin, coin_programs, coin_stack, enforce_against_alice
from mixcoin.harness import RewindingForbidden, Session, SessionParams

target, nbits = 0b1011_0110, 8
for strategy in ("guess", "informed"):
    handle = BlumCoin(strategy)
    alice, _ = coin_programs(handle, nbits)
    total = 0
    for seed in range(500):
        t = Session({"A": alice, "B": enforce_against_alice(handle, nbits, target)}, SessionParams(), seed,
                    privileged="B", corrupt={"A"}).run()
        assert t.output("A") == target
        total += t.stats["B"]["rewind_attempts"]
    print(f"{strategy:9s} strategy: {total / (500 * nbits):.3f} attempts per bit on average")

quantum = SessionParams(mode="quantum-realistic")
alice, _ = coin_programs(BlumCoin(), nbits)
try:
    Session({"A": alice, "B": enforce_against_alice(BlumCoin(), nbits, target)}, quantum, 0,
            privileged="B", corrupt={"A"}).run()
except RewindingForbidden as err:
    print(f"\nrewinding refused: {err}")

handle = coin_stack(quantum)["force"]
alice, bob = coin_programs(handle, nbits)
t = Session({"A": alice, "B": bob}, quantum, 0).run()
print(f"honest composed force-coin runs are unaffected: both parties output {t.output('A'):#04x}")

# With an ideal base coin the force coin's simulator needs no rewinding at all,
# only the binding-key trapdoor and BW extraction.
hybrid = SessionParams()
handle = coin_stack(hybrid)["force"]
alice, _ = coin_programs(handle, nbits)
sess = Session({"A": alice, "B": enforce_against_alice(handle, nbits, target)}, hybrid, 0,
               privileged="B", corrupt={"A"})
t = sess.run()
print(f"hybrid force coin lands on {t.output('A'):#04x} (target {target:#04x}) "
      f"with {t.stats['B'].get('rewind_attempts', 0)} rewinds")
