"""Oblivious transfer from key flavors, then an actively secure AND gate.

Run: python demos/05_ot_and_sfe.py
"""
from mixcoin.harness import SessionParams
from mixcoin.ot_sfe import DEVIATIONS, OtInputs, ot_run, passive_and_via_ot, sfe_run
from mixcoin.scenarios import sfe_coin

m0, m1 = b"left message....", b"right message..."
for c in (0, 1):
    print(f"OT with choice {c}: receiver gets {ot_run(OtInputs(m0, m1, c), SessionParams(), c)!r}")

for mode, params in (("hybrid", SessionParams()), ("composed", SessionParams(sigma=1, mode="composed"))):
    coin = sfe_coin(params)
    rows = [(x1, x2, sfe_run(passive_and_via_ot(), x1, x2, coin, params, 2 * x1 + x2).output("B"))
            for x1 in (0, 1) for x2 in (0, 1)]
    print(f"\nAND, {mode}: " + "  ".join(f"{a}&{b}={y}" for a, b, y in rows))

params = SessionParams()
print()
for dev in DEVIATIONS:
    t = sfe_run(passive_and_via_ot(), 1, 1, sfe_coin(params), params, 0, deviation=dev)
    print(f"Alice deviates ({dev}): Bob outputs {t.output('B')}")
