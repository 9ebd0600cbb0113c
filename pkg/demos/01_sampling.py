"""Induced subgraph sampling on a small random graph.

Keep every node with probability p, keep the edges between kept nodes,
and compare observed degrees with the true ones.
"""
import numpy as np

from degest import generate_er, induced_subgraph_sample

g = generate_er(500, 0.04, seed=1)
print(f"parent: N={g.num_nodes}, edges={g.num_edges}, mean degree={g.degrees.mean():.2f}")

s = induced_subgraph_sample(g, 0.3, seed=7)
print(f"sample: n={s.n} nodes, {s.subgraph.num_edges} edges")

# observed degrees shrink by roughly p
d_true = s.true_degrees(g)
print("first five parent ids :", s.parent_ids[:5])
print("  true degrees        :", d_true[:5])
print("  observed degrees    :", s.d_star[:5])
print(f"mean observed / mean true = {s.d_star.mean() / d_true.mean():.3f} (p = 0.3)")

# the same seed always gives the same sample
again = induced_subgraph_sample(g, 0.3, seed=7)
assert np.array_equal(again.parent_ids, s.parent_ids)
