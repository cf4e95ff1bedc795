"""Walk through the geometry of the diagonal in H² × H².

Prints the pulled-back metric, its curvature in a few planes, and the
constants that decide how far the height direction must be stretched.
"""

import numpy as np

from hyperrank import estimate_constants, horospherical_model, lambda_threshold, riemann
from hyperrank.spaces import DiagonalEmbedding, pullback_diagonal
from hyperrank.tensor import second_fundamental_form

emb = DiagonalEmbedding([horospherical_model(2), horospherical_model(2)])
g = pullback_diagonal(emb)
p = np.array([0.4, -0.3, 1.1])

print("point", p, "maps to", emb.map(p))
print("metric at p:\n", g.evaluate(p))

R = riemann(g, p)
e_t = np.array([1.0, 0.0, 0.0])
for label, u, v in [
    ("height vs level", e_t, np.array([0.0, 1.0, -2.0])),
    ("level vs level", np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
    ("generic", np.array([1.0, 2.0, 0.5]), np.array([-0.3, 0.1, 1.0])),
]:
    print(f"K({label}) = {R.sectional(u, v):+.12f}")

# unit level vector along the first factor
B = np.array([0.0, np.exp(p[0]), 0.0])
print("II(B, B) =", second_fundamental_form(g, p, B, B))

k = estimate_constants(g, samples=200, seed=0)
print("\nsampled constants")
for name in ("epsilon", "epsilon_tilde", "delta", "delta_prime", "C1", "C2"):
    print(f"  {name:14s}{getattr(k, name):.12f}")
print("stretch threshold", lambda_threshold(k))
print("with the safety margin", lambda_threshold(k.conservative()))
