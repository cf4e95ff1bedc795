"""Sweep the stretch factor on a perturbed model and watch the curvature sign.

The upper bound only turns negative at the threshold.  The sampled
curvature of this nearly hyperbolic model is negative well before that,
which shows how loose a sufficient condition can be.
"""

from hyperrank import estimate_constants, lambda_threshold, verify_stretch_pinching
from hyperrank.spaces import perturbed_model

g = perturbed_model(3, amplitude=0.1, box=[(-1, 1)] * 3)
k = estimate_constants(g, samples=200, seed=1).conservative()
lam_t = lambda_threshold(k)
print(f"threshold {lam_t:.4f} (C1={k.C1:.3f}, C2={k.C2:.3f}, delta={k.delta:.3f}, eps={k.epsilon:.3f})")
print(f"{'lambda':>8} {'K min':>12} {'K max':>12} {'lower':>12} {'upper':>12}  violations")
for f in (0.25, 0.5, 1.0, 1.05, 2.0):
    rep = verify_stretch_pinching(g, f * lam_t, k, samples=500, seed=1)
    print(f"{rep.lam:8.3f} {rep.k_min:12.4f} {rep.k_max:12.4f} {rep.lower_bound:12.4f} "
          f"{rep.upper_bound:12.4f}  {len(rep.violations)}")
