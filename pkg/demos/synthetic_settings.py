"""Gaussian mixtures with unequal spreads and extra noise features.

DBSCAN on the raw points against DBSCAN on a 2-d layout of the k=5 fuzzy
graph. Prints the best ARI and how much of the eps grid is perfect.

Run with ``python demos/synthetic_settings.py [per_cluster]``.
"""

import sys

from topocluster import (
    LayoutConfig,
    SweepSpec,
    eps_sweep,
    generate_gaussian_mixture,
    run_pipeline,
    setting_spec,
)

per_cluster = int(sys.argv[1]) if len(sys.argv) > 1 else 150
raw_spec = SweepSpec(0.01, 50, 0.01, min_pts=5)
emb_spec = SweepSpec(0.01, 15, 0.05, min_pts=5, input_kind="embedding")

print(f"{'setting':8} {'raw max':>8} {'eps_opt':>8} {'layout max':>11} {'eps_opt':>8} {'ARI=1':>6}")
for name in ("U3", "E100", "E1000", "U1003"):
    ds = generate_gaussian_mixture(setting_spec(name, per_cluster, seed=0))
    raw = eps_sweep(ds, raw_spec, ds.labels)
    emb = run_pipeline(ds, 5, LayoutConfig(seed=0), emb_spec)
    frac = emb.fraction(emb.ari == 1.0)
    print(f"{name:8} {raw.max():8.3f} {raw.eps_opt():8.2f} {emb.max():11.3f} "
          f"{emb.eps_opt():8.2f} {frac:6.0%}")
