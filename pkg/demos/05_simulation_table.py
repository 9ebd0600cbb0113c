"""A reduced run of the Erdos-Renyi simulation grid.

The full grid (N=1000, 50 replicates) is ``degest reproduce --table er``;
this uses N=300 and 10 replicates so it finishes in a few seconds.
"""
from degest.cli import reproduce_table

rows = reproduce_table("er", N=300, replicates=10, seed=1)
tags = list(rows[0][2])
print("p_e   p    " + "  ".join(f"{t:>15s}" for t in tags))
for idx, meta, means in rows:
    best = min(means.values())
    cells = "  ".join(f"{v:14.2f}{'*' if v == best else ' '}" for v in means.values())
    print(f"{meta['p_e_or_s']:<5g} {meta['p']:<4g} {cells}")
