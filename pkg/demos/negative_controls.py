"""Where the layout does not help: overlapping blobs; where it cuts: bridges.

Run with ``python demos/negative_controls.py``.
"""

import numpy as np

from topocluster import LayoutConfig, SweepSpec, dbscan, generate_planar_toy, run_pipeline
from topocluster.data import BRIDGE_LABEL

spec = SweepSpec(0.01, 15, 0.05, min_pts=5, input_kind="embedding")

overlap = generate_planar_toy("overlapping", seed=0)
for k in (15, 505):
    r = run_pipeline(overlap, k, LayoutConfig(seed=0), spec)
    print(f"overlapping, k={k}: best ARI {r.max():.3f} at eps={r.eps_opt():g}")

bridged = generate_planar_toy("bridged", seed=0)
for k in (15, 505):
    r = run_pipeline(bridged, k, LayoutConfig(seed=0), spec)
    lab = dbscan(r.embedding, r.eps_opt(), 5).assignments
    on_bridge = lab[bridged.labels == BRIDGE_LABEL]
    print(f"bridged, k={k}: {lab.max() + 1} clusters at eps={r.eps_opt():g}; "
          f"bridge points go to {np.unique(on_bridge).tolist()}")
