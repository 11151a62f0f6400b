"""End-to-end acceptance checks, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in an
``acceptance`` section of the terminal summary.
"""
import math
import os
import time

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.special import logit

from boxmg import cli
from boxmg import manifold as mf
from boxmg import optimizer as opt
from boxmg import transfer as tr
from boxmg.linesearch import LineFunction, WolfeParams, hz_search
from boxmg.objective import Problem, eval_at_level, kl_div, objective, value
from boxmg.tomography import PHANTOMS, make_phantom, synthesize


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def test_manifold_property_suite(acceptance):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = dict(axiom=0.0, round_trip=0.0, dexp=0.0, dexp_inv=0.0, mean=0.0)
    h = 1e-6
    for _ in range(1000):
        n = 8
        y = rng.uniform(1e-6, 1 - 1e-6, n)
        y2 = rng.uniform(1e-6, 1 - 1e-6, n)
        v = rng.standard_normal(n)
        worst["axiom"] = max(worst["axiom"], np.max(np.abs(mf.exp_map(y, np.zeros(n)) - y)),
                             np.max(np.abs(mf.dexp(y, np.zeros(n), v) - v)))
        worst["round_trip"] = max(worst["round_trip"], np.max(np.abs(mf.exp_map(y, mf.exp_inv(y, y2)) - y2)))
        # differentials away from the clip boundary, where finite differences are meaningful
        ym = rng.uniform(0.02, 0.98, n)
        u = 0.5 * ym * (1 - ym) * rng.standard_normal(n)
        w = ym * (1 - ym) * v
        fd = (mf.exp_map(ym, u + h * w) - mf.exp_map(ym, u - h * w)) / (2 * h)
        worst["dexp"] = max(worst["dexp"], _rel(fd, mf.dexp(ym, u, w)))
        y2m = mf.exp_map(ym, u)
        w2 = y2m * (1 - y2m) * v
        fd = (mf.exp_inv(ym, y2m + h * w2) - mf.exp_inv(ym, y2m - h * w2)) / (2 * h)
        worst["dexp_inv"] = max(worst["dexp_inv"], _rel(fd, mf.dexp_inv(ym, y2m, w2)))
        k = rng.integers(1, 6)
        eta = rng.uniform(1e-6, 1 - 1e-6, k)
        om = rng.uniform(0.1, 1, k)
        om /= om.sum()
        m = mf.geometric_mean(eta, om)
        worst["mean"] = max(worst["mean"], abs(np.sum(om * (logit(eta) - logit(m)))))
    dt = time.perf_counter() - t0
    ok = (worst["axiom"] == 0 and worst["round_trip"] <= 1e-10 and worst["dexp"] <= 1e-6
          and worst["dexp_inv"] <= 1e-6 and worst["mean"] <= 1e-12 and dt < 5)
    acceptance(1, "manifold properties", ok,
               ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {dt:.2f}s")
    assert ok


def test_transfer_suite(acceptance):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst_adj = worst_fd = 0.0
    exact = True
    sizes = [(4, 4), (6, 6), (8, 8), (10, 10), (12, 12), (14, 14), (16, 16)]
    hs = [tr.GridHierarchy(s) for s in sizes]
    for i in range(500):
        h = hs[i % len(hs)]
        y = rng.uniform(1e-3, 1 - 1e-3, h.n_fine)
        x = tr.restrict(h, y)
        u, v = rng.standard_normal(h.n_coarse), rng.standard_normal(h.n_fine)
        lhs = mf.inner(x, u, tr.restrict_tangent(h, y, v))
        rhs = mf.inner(y, tr.dprolong(h, x, u), v)
        worst_adj = max(worst_adj, abs(lhs - rhs) / (1 + abs(rhs)))
        xc = rng.uniform(1e-6, 1 - 1e-6, h.n_coarse)
        exact &= np.array_equal(tr.restrict(h, tr.prolong(h, xc)), xc)
        xm = rng.uniform(0.05, 0.95, h.n_coarse)
        du = xm * (1 - xm) * rng.standard_normal(h.n_coarse)
        step = 1e-6
        fd = (tr.prolong(h, xm + step * du) - tr.prolong(h, xm - step * du)) / (2 * step)
        worst_fd = max(worst_fd, _rel(fd, tr.dprolong(h, xm, du)))
    dt = time.perf_counter() - t0
    ok = worst_adj <= 1e-10 and exact and worst_fd <= 1e-6 and dt < 10
    acceptance(2, "grid transfer", ok,
               f"adjointness={worst_adj:.1e}, R(P(x))==x {exact}, dP fd={worst_fd:.1e}, {dt:.2f}s")
    assert ok


def test_bregman_identities(acceptance):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    three = pullback = 0.0
    for _ in range(200):
        p, n = rng.integers(1, 21), rng.integers(1, 21)
        a, b, c = (rng.uniform(0.05, 3.0, p) for _ in range(3))
        lhs = kl_div(c, a) + kl_div(a, b) - kl_div(c, b)
        rhs = np.dot(np.log(b) - np.log(a), c - a)
        three = max(three, abs(lhs - rhs))
        A = sp.random(p, n, density=0.5, random_state=rng, format="lil")
        A[np.arange(p), rng.integers(0, n, p)] = rng.uniform(0.1, 1.0, p)
        A = A.tocsr()
        pb = Problem(A, rng.uniform(0.1, 2.0, p), lam=0.0, image_shape=(n, 1))
        y, y1 = rng.uniform(0.05, 0.95, n), rng.uniform(0.05, 0.95, n)
        dh = value(pb, y) - value(pb, y1) - np.dot(objective(pb, y1).eucl_grad, y - y1)
        pullback = max(pullback, abs(dh - kl_div(A @ y, A @ y1)))
    dt = time.perf_counter() - t0
    ok = three <= 1e-10 and pullback <= 1e-10 and dt < 2
    acceptance(3, "Bregman identities", ok, f"three-point={three:.1e}, D_h=KL(Ay,Ay')={pullback:.1e}, {dt:.2f}s")
    assert ok


def test_coherence(acceptance):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    pb = synthesize(make_phantom("mixed", 16), 0.25)
    h = tr.GridHierarchy(pb.image_shape)
    pc = eval_at_level(pb, h)
    geo = euc = 0.0
    for _ in range(50):
        y0 = rng.uniform(1e-3, 1 - 1e-3, pb.n)
        g = objective(pb, y0).eucl_grad
        cm = opt.geometric_model(pc, h, y0, g)
        target = tr.restrict_tangent(h, y0, mf.riem_grad(y0, g))
        geo = max(geo, np.max(np.abs(opt.psi_geometric(cm, cm.x0)[1] - target)))
        cm = opt.euclidean_model(pc, h, y0, g)
        euc = max(euc, np.max(np.abs(opt.psi_euclidean(cm, cm.x0)[1] - tr.interp_transpose(h, g))))
    dt = time.perf_counter() - t0
    ok = geo <= 1e-10 and euc <= 1e-10 and dt < 5
    acceptance(4, "first-order coherence", ok, f"geometric={geo:.1e}, euclidean={euc:.1e}, {dt:.2f}s")
    assert ok


def test_descent_certification(acceptance):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    problems = [synthesize(make_phantom(name, 32), frac) for name in PHANTOMS for frac in (0.1, 0.25)]
    prepared = []
    for pb in problems:
        h = tr.GridHierarchy(pb.image_shape)
        prepared.append((pb, h, eval_at_level(pb, h)))
    certified = descending = 0
    i = 0
    while certified < 500 and time.perf_counter() - t0 < 25:
        pb, h, pc = prepared[i % len(prepared)]
        i += 1
        y0 = rng.uniform(0.01, 0.99, pb.n) if i % 2 else np.full(pb.n, rng.uniform(0.2, 0.8))
        g = objective(pb, y0).eucl_grad
        rg = mf.riem_grad(y0, g)
        cm = opt.geometric_model(pc, h, y0, g)
        for iters in (1, 3, 5):
            x = opt.coarse_step(cm, opt.SolverConfig(coarse_iters=iters))
            if x is None or not opt.descent_certificate(cm, x):
                continue
            certified += 1
            descending += mf.inner(y0, opt.coarse_direction(cm, x), rg) < 0
    dt = time.perf_counter() - t0
    ok = certified >= 500 and descending == certified and dt < 30
    acceptance(5, "descent certification", ok, f"{descending}/{certified} certified candidates descend, {dt:.1f}s")
    assert ok


def _battery():
    """Twenty smooth scalar functions with phi'(0) < 0 and a minimizer on (0, inf)."""
    fs = []
    for c, s in [(1.0, 1.0), (0.3, 2.0), (0.05, 10.0), (0.1, 0.5), (3.0, 1.0), (12.0, 0.1)]:
        fs.append(("quad", c, lambda a, c=c, s=s: s * (a - c) ** 2, lambda a, c=c, s=s: 2 * s * (a - c)))
    fs += [
        ("cos", None, lambda a: math.cos(a + 0.1), lambda a: -math.sin(a + 0.1)),
        ("quartic", None, lambda a: (a - 2) ** 4, lambda a: 4 * (a - 2) ** 3),
        ("exp", None, lambda a: math.exp(a) - 3 * a, lambda a: math.exp(a) - 3),
        ("barrier", None, lambda a: -math.log(3 - a) - a if a < 3 else math.inf,
         lambda a: 1 / (3 - a) - 1 if a < 3 else math.inf),
        ("logistic", None, lambda a: math.log1p(math.exp(-4 * a)) + 0.1 * a * a,
         lambda a: -4 / (1 + math.exp(4 * a)) + 0.2 * a),
        ("cubic", None, lambda a: a ** 3 - 4 * a, lambda a: 3 * a * a - 4),
        ("steep", None, lambda a: (a - 0.01) ** 2 * 1e4, lambda a: 2e4 * (a - 0.01)),
        ("flat", None, lambda a: (a - 40.0) ** 2 * 1e-3, lambda a: 2e-3 * (a - 40.0)),
        ("sin", None, lambda a: 0.5 * a - math.sin(3 * a), lambda a: 0.5 - 3 * math.cos(3 * a)),
        ("rosen", None, lambda a: (1 - a) ** 2 + 100 * (a * a - a) ** 2,
         lambda a: -2 * (1 - a) + 200 * (a * a - a) * (2 * a - 1)),
        ("huber", None, lambda a: math.sqrt(1 + (a - 5) ** 2), lambda a: (a - 5) / math.sqrt(1 + (a - 5) ** 2)),
        ("gauss", None, lambda a: -math.exp(-(a - 1.5) ** 2), lambda a: 2 * (a - 1.5) * math.exp(-(a - 1.5) ** 2)),
        ("mixed", None, lambda a: a ** 4 - 3 * a ** 2 - a, lambda a: 4 * a ** 3 - 6 * a - 1),
        ("tilted", None, lambda a: math.cosh(a - 0.7), lambda a: math.sinh(a - 0.7)),
    ]
    return fs


def test_line_search_contract(acceptance):
    t0 = time.perf_counter()
    p = WolfeParams()
    battery = _battery()
    bad, worst_quad = [], 0.0
    for name, center, phi, dphi in battery:
        lf = LineFunction(phi, dphi)
        alpha = hz_search(lf, p)
        phi0, d0 = phi(0.0), dphi(0.0)
        eps = 1e-6 * (1 + abs(phi0))
        da = dphi(alpha)
        if not (p.sigma * d0 <= da <= (2 * p.delta - 1) * d0 and phi(alpha) <= phi0 + eps):
            bad.append(name)
        # for centers up to 1 the initial guess fails, so a secant step decides
        if center is not None and center <= 1.0:
            worst_quad = max(worst_quad, abs(alpha - center))
    dt = time.perf_counter() - t0
    ok = len(battery) == 20 and not bad and worst_quad <= 1e-12 and dt < 2
    acceptance(6, "line-search contract", ok,
               f"{len(battery) - len(bad)}/{len(battery)} satisfy the approximate Wolfe conditions, "
               f"quadratic error {worst_quad:.1e}, {dt:.2f}s")
    assert ok


BENCH_SIZE = 128
BENCH_UNDERSAMPLING = 0.02


@pytest.fixture(scope="module")
def benchmark():
    t0 = time.perf_counter()
    out = {}
    for name in PHANTOMS:
        pb = synthesize(make_phantom(name, BENCH_SIZE), BENCH_UNDERSAMPLING)
        out[name] = {mode: opt.solve(pb, opt.SolverConfig(mode=mode))
                     for mode in ("single_rg", "two_level_rg", "single_pg")}
    return out, time.perf_counter() - t0


def _evals_to(trace, f_best, f0, thr):
    for r in trace.records:
        if (r.f - f_best) / (f0 - f_best) <= thr:
            return r.fine_grad_evals
    return None


def test_two_level_beats_single_level(benchmark, acceptance):
    runs, dt = benchmark
    wins, within, cells = 0, 0, []
    for name, tr_ in runs.items():
        one, two = tr_["single_rg"], tr_["two_level_rg"]
        f_best = min(one.values.min(), two.values.min())
        f0 = one.records[0].f
        e1, e2 = _evals_to(one, f_best, f0, 0.1), _evals_to(two, f_best, f0, 0.1)
        cells.append(f"{name} {e1}/{e2}")
        if e2 is not None and e1 is not None:
            wins += e2 < e1
            within += e2 <= 1.2 * e1
    ok = wins >= 4 and within == len(runs) and dt < 600
    acceptance(7, "two-level vs single-level evaluations to relative objective 0.1", ok,
               f"fewer on {wins}/6, within 1.2x on {within}/6 (1L/2L: {', '.join(cells)}), {dt:.0f}s")
    assert ok


def test_rg_beats_projected_gradient(benchmark, acceptance):
    runs, dt = benchmark
    wins, cells = 0, []
    for name, tr_ in runs.items():
        rg, pg = tr_["single_rg"], tr_["single_pg"]
        wins += rg.values[-1] <= pg.values[-1]
        cells.append(f"{name} {rg.values[-1]:.3g}/{pg.values[-1]:.3g}")
    ok = wins >= 4 and dt < 600
    acceptance(8, "Riemannian gradient vs projected gradient after 50 iterations", ok,
               f"RG <= PG on {wins}/6 (RG/PG: {', '.join(cells)})")
    assert ok


def test_default_parameters(acceptance):
    import configparser
    cp = configparser.ConfigParser()
    cp.read_string(cli.default_config_text())
    rc = cli.parse_run_config(cp)
    s = rc.solver
    found = dict(eta=s.eta, eps=s.eps_dist, lam=rc.lam, rho=rc.rho, sigma=s.armijo_sigma,
                 beta=s.armijo_beta, max_iter=s.max_iter, y0=s.init_value, eps_clip=s.eps_clip)
    want = dict(eta=0.49, eps=1e-3, lam=0.5, rho=0.5, sigma=1e-4, beta=0.6, max_iter=50, y0=0.5, eps_clip=1e-10)
    raw = dict(cp.items("solver")) | dict(cp.items("problem"))
    text_ok = (raw["eta"], raw["eps_dist"], raw["lam"], raw["rho"], raw["armijo_sigma"], raw["armijo_beta"],
               raw["max_iter"], raw["init_value"], raw["eps_clip"]) == \
        ("0.49", "0.001", "0.5", "0.5", "0.0001", "0.6", "50", "0.5", "1e-10")
    default_obj = opt.SolverConfig()
    obj_ok = (default_obj.eta, default_obj.eps_dist, default_obj.armijo_sigma, default_obj.armijo_beta,
              default_obj.max_iter, default_obj.init_value, default_obj.eps_clip) == (0.49, 1e-3, 1e-4, 0.6, 50, 0.5, 1e-10)
    ok = found == want and text_ok and obj_ok and s.armijo_alpha0 == 1 / 0.6
    acceptance(9, "default parameters", ok, ", ".join(f"{k}={v!r}" for k, v in found.items()))
    assert ok


def test_benchmark_determinism(tmp_path, acceptance):
    t0 = time.perf_counter()
    cfg = tmp_path / "bench.ini"
    cfg.write_text(cli.default_config_text())
    for d in ("first", "second"):
        assert cli.main(["run", str(cfg), "--out", str(tmp_path / d)]) == 0
    names = sorted(n for n in os.listdir(tmp_path / "first") if n.endswith(".csv"))
    same = [n for n in names if (tmp_path / "first" / n).read_bytes() == (tmp_path / "second" / n).read_bytes()]
    ok = len(names) == 19 and len(same) == len(names)
    acceptance(10, "byte-identical traces", ok,
               f"{len(same)}/{len(names)} CSV files identical across two runs, {time.perf_counter() - t0:.1f}s")
    assert ok
