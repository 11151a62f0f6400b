"""A tour of the open box (0, 1)^n as a Riemannian manifold.

Run: python demos/01_box_geometry.py
"""
import numpy as np

from boxmg import manifold as mf
from boxmg import transfer as tr

np.set_printoptions(precision=4, suppress=True)

# The metric blows up near the faces, so equal Euclidean steps shrink there.
y = np.array([0.5, 0.1, 1e-4])
print("metric weights       ", mf.metric(y))

# Steepest descent uses the Riemannian gradient G(y)^-1 df.
g = np.array([1.0, 1.0, 1.0])
print("riemannian gradient  ", mf.riem_grad(y, g))

# The exponential map works in log-odds, so even a huge step stays inside.
for t in (0.1, 1.0, 10.0, 1e6):
    label = f"exp_y(-{t:g} grad)"
    print(f"{label:21s}", mf.exp_map(y, -t * mf.riem_grad(y, g)))

# exp_inv undoes exp_map.
y2 = np.array([0.9, 0.3, 0.5])
v = mf.exp_inv(y, y2)
print("round trip error     ", np.abs(mf.exp_map(y, v) - y2).max())

# The center of mass of Bernoulli parameters is a weighted mean of log-odds.
print("mean of 0.2, 0.8, 0.5 ->", mf.geometric_mean([0.2, 0.8, 0.5], [1 / 3] * 3))
print("mean of 0.9, 0.99     ->", mf.geometric_mean([0.9, 0.99], [0.5, 0.5]))

# Prolongation fills the fine grid with geometric means of coarse neighbors.
h = tr.GridHierarchy((6, 6))
x = np.linspace(0.05, 0.95, h.n_coarse)
print("coarse image\n", x.reshape(h.coarse_shape))
print("prolonged image\n", tr.prolong(h, x).reshape(h.fine_shape))

# TR is the metric adjoint of dP: <u, TR v>_x == <dP u, v>_y.
rng = np.random.default_rng(0)
yf = rng.uniform(0.05, 0.95, h.n_fine)
xc = tr.restrict(h, yf)
u, w = rng.standard_normal(h.n_coarse), rng.standard_normal(h.n_fine)
print("adjointness gap      ",
      mf.inner(xc, u, tr.restrict_tangent(h, yf, w)) - mf.inner(yf, tr.dprolong(h, xc, u), w))
