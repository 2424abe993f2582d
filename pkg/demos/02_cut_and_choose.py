"""How often a committer who equivocates on sigma cells gets away with it.

Run: python demos/02_cut_and_choose.py
"""
from math import comb

from mixcoin.scenarios import RunConfig, rep_seed, run_one

print(" sigma  Sigma  trials  accepted  exact      (3/4)^sigma")
for sigma in (1, 2, 4, 8):
    cfg = RunConfig(protocol="commit", strategy="cheat-open", sigma=sigma)
    n = 2000
    acc = sum(run_one(cfg, rep_seed(sigma, i)).output("B") is not None for i in range(n))
    exact = comb(3 * sigma, sigma) / comb(4 * sigma, sigma)
    print(f" {sigma:5d}  {4 * sigma:5d}  {n:6d}  {acc / n:8.4f}  {exact:.4f}     {0.75 ** sigma:.4f}")
