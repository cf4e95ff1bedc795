"""Build the three-segment path in Y from a curve in H² × H².

A curve leaves the diagonal, wanders and comes back.  The construction
climbs to the curve's highest height, copies the level motion there and
comes back down; each piece is compared with its length bound.
"""

import numpy as np

from hyperrank import construct_path, horospherical_model, run_bilipschitz_experiment, segment_bounds_check
from hyperrank.bilipschitz import two_leg_curve, upper_constant
from hyperrank.spaces import DiagonalEmbedding

emb = DiagonalEmbedding([horospherical_model(2), horospherical_model(2)])
p, q = np.array([-0.5, 0.0, 0.0]), np.array([0.2, 1.5, -1.0])
waypoint = np.array([1.2, 0.5, -0.4, -0.8])
curve = two_leg_curve(emb, p, q, waypoint, nodes=257)
pd = construct_path(emb, curve)
chk = segment_bounds_check(pd)

print(f"curve in X: length {pd.source_curve_length:.6f}, top height {pd.t0:.4f} in factor {pd.factor}")
for name, length in zip(("v1", "gamma", "v2"), pd.lengths):
    print(f"  {name:6s} length {length:.6f}  bound {chk.bounds[name]:.6f}")
print(f"path / curve = {pd.ratio:.4f}, allowed {upper_constant(2):.4f}")

rep = run_bilipschitz_experiment(emb, n_pairs=200, n_curves=20, seed=7)
print(f"\n200 pairs: d_Y/d_X in [{rep.min_ratio:.6f}, {rep.max_ratio:.6f}]")
print(f"20 curves: worst path ratio {rep.max_path_ratio:.4f}; violations {len(rep.violations)}")
