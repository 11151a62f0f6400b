"""Reconstruct a phantom from a handful of parallel-beam projections.

Compares Riemannian gradient descent on the box with projected gradient.
Run: python demos/02_reconstruction.py [phantom] [size]
"""
import sys

import numpy as np

from boxmg import SolverConfig, make_phantom, run_projected_gradient, run_single_level, synthesize

name = sys.argv[1] if len(sys.argv) > 1 else "mixed"
size = int(sys.argv[2]) if len(sys.argv) > 2 else 64

phantom = make_phantom(name, size)
pb = synthesize(phantom, undersampling=0.1)
print(f"{name} {size}x{size}: {pb.A.shape[0]} rays, {pb.geometry.num_angles} angles, "
      f"{pb.A.nnz} nonzeros")

cfg = SolverConfig(max_iter=50)
rg = run_single_level(pb, cfg)
pg = run_projected_gradient(pb, cfg)

print(f"{'iter':>5} {'RG f':>12} {'PG f':>12}")
for k in (0, 1, 2, 5, 10, 20, 30, 40, 50):
    a = rg.records[k].f if k < len(rg.records) else float("nan")
    b = pg.records[k].f if k < len(pg.records) else float("nan")
    print(f"{k:5d} {a:12.5g} {b:12.5g}")
print(f"fine evaluations: RG {rg.records[-1].fine_grad_evals}, PG {pg.records[-1].fine_grad_evals}")

err = lambda y: np.abs(y.reshape(phantom.image.shape) - phantom.image).mean()
print(f"mean abs error vs phantom: RG {err(rg.y):.4f}, PG {err(pg.y):.4f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

fig, ax = plt.subplots(1, 3, figsize=(9, 3))
for a, img, title in zip(ax, [phantom.image, rg.y.reshape(size, size), pg.y.reshape(size, size)],
                         ["phantom", "RG", "PG"]):
    a.imshow(img, cmap="gray", vmin=0, vmax=1)
    a.set_title(title)
    a.axis("off")
fig.tight_layout()
fig.savefig(f"reconstruction_{name}.png", dpi=100)
print(f"saved reconstruction_{name}.png")
