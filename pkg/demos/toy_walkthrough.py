"""Six objects, two groups of three: what a global eps can and cannot do.

Run with ``python demos/toy_walkthrough.py``.
"""

import numpy as np

from topocluster import (
    LayoutConfig,
    SweepSpec,
    dbscan,
    fuzzy_graph,
    fuzzy_only_sweep,
    graph_to_dissimilarity,
    run_pipeline,
    toy_distance_matrix,
    toy_labels,
)

np.set_printoptions(precision=2, suppress=True)
d = toy_distance_matrix()
truth = toy_labels()
print("distances\n", d.values)

# objects 2 and 4 sit 0.75 apart, closer than 5 and 6 are to 4.
# So every eps that lets the right group form also merges both groups.
for eps in (0.74, 0.75):
    print(f"DBSCAN eps={eps}, minPts=2 ->", dbscan(d, eps, min_pts=2).assignments)

# fuzzy graphs: k counts the point itself, so k=2 keeps one neighbour each
for k in (6, 3, 2):
    g = fuzzy_graph(d, k)
    print(f"\nfuzzy graph k={k}: {g.n_edges} edges\n", g.to_dense())

# 1 - v as a dissimilarity separates the groups at k=2 for any eps < 1
dis = graph_to_dissimilarity(fuzzy_graph(d, 2))
print("\n1 - v at k=2\n", dis.values)
res = fuzzy_only_sweep(d, 2, SweepSpec(0.01, 1.5, 0.01, min_pts=2), labels=truth)
print("fuzzy-only sweep, ARI = 1 on", res.perfect_range())

# the full pipeline: lay the graph out in 2-d and sweep eps over the layout
spec = SweepSpec(0.01, 30, 0.01, min_pts=2, input_kind="embedding")
for k in (6, 3, 2):
    ranges = []
    for seed in range(5):
        r = run_pipeline(d, k, LayoutConfig(seed=seed), spec, labels=truth)
        ranges.append(r.perfect_range())
    lo = np.mean([p[0] for p in ranges])
    hi = np.mean([p[1] for p in ranges])
    print(f"layout k={k}: ARI = 1 for eps in about [{lo:.2f}, {hi:.2f}] (5 seeds)")
