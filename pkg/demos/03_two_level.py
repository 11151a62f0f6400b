"""Search directions from the coarse grid.

Walks through one coarse correction by hand, then runs the full two-level
solvers next to single-level descent.
Run: python demos/03_two_level.py
"""
import numpy as np

from boxmg import manifold as mf
from boxmg import optimizer as opt
from boxmg import transfer as tr
from boxmg.objective import eval_at_level, objective
from boxmg.tomography import make_phantom, synthesize

pb = synthesize(make_phantom("disks", 64), undersampling=0.02)
h = tr.GridHierarchy(pb.image_shape)
pc = eval_at_level(pb, h)  # same angles traced on the 32x32 grid
print(f"fine A {pb.A.shape}, coarse A {pc.A.shape}")

# One coarse correction from the flat start.
y0 = np.full(pb.n, 0.5)
f0, g = objective(pb, y0)
rg = mf.riem_grad(y0, g)
cm = opt.geometric_model(pc, h, y0, g)

# The model is coherent: its gradient at x0 is the restricted fine gradient.
err = np.abs(opt.psi_geometric(cm, cm.x0)[1] - cm.restricted_grad).max()
print(f"coherence error {err:.1e}")

x = opt.coarse_step(cm)
d = opt.coarse_direction(cm, x)
print(f"psi: {cm.f_x0:.4g} -> {opt.psi_geometric_value(cm, x):.4g}")
print(f"certificate D~ = {opt.bregman_gap_geometric(cm, x):.4g} (>= 0 means fine descent)")
print(f"fine slope along d: {mf.inner(y0, d, rg):.4g}")

# Full runs.  Black dots in the run plots mark the iterations reported as coarse here.
cfg = opt.SolverConfig(max_iter=30)
runs = {
    "single_rg": opt.run_single_level(pb, cfg),
    "two_level_rg": opt.run_two_level_geometric(pb, h, cfg, pb_coarse=pc),
    "two_level_euclidean": opt.run_two_level_euclidean(pb, h, cfg, pb_coarse=pc),
}
f_best = min(t.values.min() for t in runs.values())
for name, t in runs.items():
    rel = (t.values - f_best) / (t.values[0] - f_best)
    levels = "".join("c" if r.level == "coarse" else "." for r in t.records[1:])
    print(f"{name:20s} f={t.values[-1]:9.4g} evals={t.records[-1].fine_grad_evals:4d} "
          f"coarse {t.coarse_accepted}/{t.coarse_attempts}  rel@10={rel[min(10, len(rel) - 1)]:.2e}")
    print(f"{'':20s} {levels}")
