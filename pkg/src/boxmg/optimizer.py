"""Single- and two-level first-order solvers on the box.

Modes
-----
single_rg
    Riemannian gradient descent with the approximate-Wolfe line search.
two_level_rg
    Geometric two-grid scheme: at qualifying iterates a coarse model is
    decreased on the coarse grid and the prolonged tangent becomes the
    fine search direction.
two_level_euclidean
    Euclidean two-grid scheme with linear interpolation ``P`` and
    ``R = P^T``, projected gradient on the fine level.
single_pg
    Projected gradient with Armijo backtracking along the projection arc.
"""
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple
import time

import numpy as np

from . import manifold as mf
from . import transfer as tr
from .linesearch import LineFunction, LineSearchError, WolfeParams, armijo_search, hz_search
from .objective import Problem, bregman_f, eval_at_level, objective, value

MODES = ("single_rg", "two_level_rg", "two_level_euclidean", "single_pg")


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "two_level_rg"
    eta: float = 0.49
    eps_dist: float = 1e-3
    max_iter: int = 50
    coarse_iters: int = 5
    init_value: float = 0.5
    gtol: float = 1e-8
    armijo_sigma: float = 1e-4
    armijo_beta: float = 0.6
    armijo_alpha0: float = 1.0 / 0.6
    min_step: float = 1e-12
    eps_clip: float = mf.EPS_CLIP
    wolfe: WolfeParams = field(default_factory=WolfeParams)
    record_time: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if not 0.0 < self.eps_dist < 1.0:
            raise ValueError("eps_dist must lie in (0, 1)")
        if self.max_iter < 1 or self.coarse_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if not 0.0 < self.init_value < 1.0:
            raise ValueError("init_value must lie in (0, 1)")
        if not 0.0 < self.armijo_beta < 1.0 or not 0.0 < self.armijo_sigma < 1.0:
            raise ValueError("Armijo parameters must lie in (0, 1)")

    def as_dict(self):
        return asdict(self)


class IterateRecord(NamedTuple):
    iter: int
    level: str
    f: float
    gnorm: float
    fine_grad_evals: int
    seconds: float


@dataclass
class Trace:
    records: list
    y: np.ndarray
    status: str = "max_iter"
    coarse_attempts: int = 0
    coarse_accepted: int = 0

    @property
    def values(self):
        return np.array([r.f for r in self.records])


class FineOracle:
    """Counts fine-level objective evaluations, reusing recent results.

    Each distinct point costs one evaluation whether the caller asks for
    the value alone or for value and gradient.
    """

    def __init__(self, pb, keep=8):
        self.pb = pb
        self.count = 0
        self._cache = {}
        self._keep = keep

    def _lookup(self, y):
        return self._cache.get(y.tobytes())

    def _store(self, y, entry):
        if len(self._cache) >= self._keep:
            self._cache.pop(next(iter(self._cache)))
        self._cache[y.tobytes()] = entry

    def value(self, y):
        hit = self._lookup(y)
        if hit is not None:
            return hit[0]
        self.count += 1
        v = value(self.pb, y)
        self._store(y, (v, None))
        return v

    def value_and_grad(self, y):
        hit = self._lookup(y)
        if hit is not None and hit[1] is not None:
            return hit
        if hit is None:
            self.count += 1
        ev = objective(self.pb, y)
        entry = (ev.value, ev.eucl_grad)
        self._store(y, entry)
        return entry


# Coarse models ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoarseModel:
    """Frozen coarse surrogate at the restricted iterate ``x0 = R y0``.

    ``coarse_problem`` carries ``b = A x0`` so the model never depends on
    the placeholder data of the rediscretized problem.  ``restricted_grad``
    is ``TR ggrad f(y0)`` (geometric) or ``R df(y0)`` (Euclidean).
    """

    mode: str
    hierarchy: tr.GridHierarchy
    coarse_problem: Problem
    y0: np.ndarray
    x0: np.ndarray
    f_x0: float
    kappa: np.ndarray
    fine_grad_snapshot: np.ndarray
    restricted_grad: np.ndarray


def _anchored(pb_coarse, x0):
    return pb_coarse.with_data(pb_coarse.A @ x0)


def geometric_model(pb_coarse, h, y0, fine_eucl_grad):
    y0 = np.asarray(y0, dtype=float)
    x0 = tr.restrict(h, y0)
    pb_c = _anchored(pb_coarse, x0)
    ev = objective(pb_c, x0)
    rg_fine = mf.riem_grad(y0, fine_eucl_grad)
    trg = tr.restrict_tangent(h, y0, rg_fine)
    kappa = mf.riem_grad(x0, ev.eucl_grad) - trg
    return CoarseModel("geometric", h, pb_c, y0, x0, ev.value, kappa, rg_fine, trg)


def euclidean_model(pb_coarse, h, y0, fine_eucl_grad):
    y0 = np.asarray(y0, dtype=float)
    x0 = tr.restrict(h, y0)
    pb_c = _anchored(pb_coarse, x0)
    ev = objective(pb_c, x0)
    rg = tr.interp_transpose(h, fine_eucl_grad)
    kappa = ev.eucl_grad - rg
    return CoarseModel("euclidean", h, pb_c, y0, x0, ev.value,
                       kappa, np.asarray(fine_eucl_grad, dtype=float), rg)


def psi_euclidean(cm, x):
    """Value and Euclidean gradient of the Euclidean coarse model."""
    ev = objective(cm.coarse_problem, x)
    return (ev.value - float(np.dot(np.asarray(x) - cm.x0, cm.kappa)),
            ev.eucl_grad - cm.kappa)


def psi_euclidean_bregman(cm, x):
    """Same model written as ``D_f(x, x0) + <P(x - x0), df(y0)> + f(x0)``.

    Only valid for the linear interpolation pair ``P = BI``, ``R = BI^T``.
    """
    d = tr.interp_apply(cm.hierarchy, np.asarray(x) - cm.x0)
    return bregman_f(cm.coarse_problem, x, cm.x0) + float(np.dot(d, cm.fine_grad_snapshot)) + cm.f_x0


def _psi_geo_parts(cm, x):
    x = np.asarray(x, dtype=float)
    ev = objective(cm.coarse_problem, x)
    corr = mf.inner(cm.x0, mf.exp_inv(cm.x0, x), cm.kappa)
    return ev, ev.value - corr


def psi_geometric(cm, x):
    """Value and Riemannian gradient of the geometric coarse model."""
    ev, val = _psi_geo_parts(cm, x)
    return val, mf.riem_grad(x, ev.eucl_grad) - cm.kappa


def psi_geometric_value(cm, x):
    x = np.asarray(x, dtype=float)
    return value(cm.coarse_problem, x) - mf.inner(cm.x0, mf.exp_inv(cm.x0, x), cm.kappa)


def _psi_geometric_eucl(cm, x):
    ev, val = _psi_geo_parts(cm, x)
    return val, ev.eucl_grad - mf.metric(x) * cm.kappa


def coarse_condition(y0, y_c, fine_grad, restricted_grad, eta, eps_dist, x0=None):
    """Whether a coarse correction is worth trying at ``y0``.

    With ``x0`` given, norms are Riemannian (``restricted_grad`` at ``x0``,
    ``fine_grad`` at ``y0``); otherwise Euclidean.  A vanishing fine
    gradient never qualifies.
    """
    y0 = np.asarray(y0, dtype=float)
    if x0 is None:
        lhs = np.linalg.norm(restricted_grad)
        rhs = np.linalg.norm(fine_grad)
    else:
        lhs = mf.norm(x0, restricted_grad)
        rhs = mf.norm(y0, fine_grad)
    if not rhs > 0.0 or lhs < eta * rhs:
        return False
    return y_c is None or np.linalg.norm(y0 - y_c) >= eps_dist


def bregman_gap_geometric(cm, x):
    """``f(x) - f(x0) - <exp_{x0}^{-1}(x), df(x0)>`` at the coarse level."""
    x = np.asarray(x, dtype=float)
    g0 = objective(cm.coarse_problem, cm.x0).eucl_grad
    return value(cm.coarse_problem, x) - cm.f_x0 - float(np.dot(mf.exp_inv(cm.x0, x), g0))


def descent_certificate(cm, x):
    """Coarse-level test certifying that the prolonged step is a fine descent direction."""
    return bregman_gap_geometric(cm, x) >= 0.0


def coarse_direction(cm, x):
    """Fine-level search direction produced by the coarse iterate ``x``."""
    if cm.mode == "geometric":
        return tr.dprolong(cm.hierarchy, cm.x0, mf.exp_inv(cm.x0, x))
    return tr.interp_apply(cm.hierarchy, np.asarray(x) - cm.x0)


def coarse_step(cm, cfg=SolverConfig(), certify=True):
    """Decrease the coarse model from ``x0``; ``None`` means reject.

    Runs up to ``cfg.coarse_iters`` Armijo steps (Riemannian gradient for the
    geometric model, projected gradient for the Euclidean one) and returns
    the last iterate with ``psi(x) < f(x0)`` that also passes the descent
    certificate when ``certify`` is set.
    """
    x = cm.x0
    best = None
    for _ in range(cfg.coarse_iters):
        if cm.mode == "geometric":
            val, rg = psi_geometric(cm, x)
            if not np.any(rg):
                break
            lf = LineFunction.along_retraction(
                lambda z: psi_geometric_value(cm, z),
                lambda z: _psi_geometric_eucl(cm, z), x, -rg)
            alpha = armijo_search(lf, cfg.armijo_sigma, cfg.armijo_beta,
                                  cfg.armijo_alpha0, cfg.min_step)
            if alpha is None:
                break
            x = lf.point(alpha)
            val = lf.phi(alpha)
        else:
            alpha, x, val = _projected_armijo(
                lambda z: psi_euclidean(cm, z)[0], psi_euclidean(cm, x), x, cfg)
            if alpha is None:
                break
        if val < cm.f_x0 and (not certify or cm.mode != "geometric"
                              or descent_certificate(cm, x)):
            best = x
    return best


def _projected_armijo(fval, ev, y, cfg):
    """Armijo backtracking along ``alpha -> clip(y - alpha g)``.

    ``ev`` is ``(f(y), df(y))``.  Returns ``(alpha, y_new, f(y_new))`` or
    ``(None, y, f(y))`` once the trial step falls below ``cfg.min_step``.
    """
    f0, g = ev
    alpha = cfg.armijo_alpha0
    while alpha >= cfg.min_step:
        yn = mf.clip_to_box(y - alpha * g, cfg.eps_clip)
        decrease = float(np.dot(g, yn - y))
        if decrease < 0.0:
            fn = fval(yn)
            if fn <= f0 + cfg.armijo_sigma * decrease:
                return alpha, yn, fn
        alpha *= cfg.armijo_beta
    return None, y, f0


# Fine steps -------------------------------------------------------------

def fine_step(oracle, y, cfg=SolverConfig()):
    """One Riemannian steepest-descent step; ``None`` if both searches fail."""
    _, g = oracle.value_and_grad(y)
    v = -mf.riem_grad(y, g)
    lf = LineFunction.along_retraction(oracle.value, oracle.value_and_grad, y, v)
    try:
        alpha = hz_search(lf, cfg.wolfe)
    except LineSearchError:
        alpha = armijo_search(lf, cfg.armijo_sigma, cfg.armijo_beta,
                              cfg.armijo_alpha0, cfg.min_step)
        if alpha is None:
            return None
    return lf.point(alpha)


def pg_step(oracle, y, cfg=SolverConfig()):
    ev = oracle.value_and_grad(y)
    alpha, yn, _ = _projected_armijo(oracle.value, ev, y, cfg)
    return None if alpha is None else yn


def _geometric_coarse_update(oracle, h, pb_c, y, g, cfg):
    cm = geometric_model(pb_c, h, y, g)
    x = coarse_step(cm, cfg)
    if x is None:
        return None
    d = coarse_direction(cm, x)
    lf = LineFunction.along_retraction(oracle.value, oracle.value_and_grad, y, d)
    if not lf.dphi(0.0) < 0.0:
        return None
    try:
        alpha = hz_search(lf, cfg.wolfe)
    except LineSearchError:
        alpha = armijo_search(lf, cfg.armijo_sigma, cfg.armijo_beta,
                              cfg.armijo_alpha0, cfg.min_step)
        if alpha is None:
            return None
    return lf.point(alpha)


def _max_feasible_step(y, d, eps):
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(d > 0, (1.0 - eps - y) / d, np.inf)
        down = np.where(d < 0, (eps - y) / d, np.inf)
    return float(min(up.min(), down.min()))


def _euclidean_coarse_update(oracle, h, pb_c, y, g, cfg):
    cm = euclidean_model(pb_c, h, y, g)
    x = coarse_step(cm, cfg)
    if x is None:
        return None
    d = coarse_direction(cm, x)
    slope = float(np.dot(d, g))
    if not slope < 0.0:
        return None
    cap = 0.99 * _max_feasible_step(y, d, cfg.eps_clip)
    if not cap > 0.0:
        return None

    def point(alpha):
        return mf.clip_to_box(y + alpha * d, cfg.eps_clip)

    lf = LineFunction(lambda a: oracle.value(point(a)), lambda a: slope)
    alpha = armijo_search(lf, cfg.armijo_sigma, cfg.armijo_beta,
                          min(cfg.armijo_alpha0, cap), cfg.min_step)
    return None if alpha is None else point(alpha)


# Drivers ------------------------------------------------------------------

def solve(pb, cfg=SolverConfig(), h=None, pb_coarse=None, y0=None):
    """Run the solver selected by ``cfg.mode`` and return its :class:`Trace`."""
    two_level = cfg.mode in ("two_level_rg", "two_level_euclidean")
    if two_level:
        if h is None:
            h = tr.GridHierarchy(pb.image_shape)
        if pb_coarse is None:
            pb_coarse = eval_at_level(pb, h)
    riemannian = cfg.mode in ("single_rg", "two_level_rg")

    oracle = FineOracle(pb)
    y = (np.full(pb.n, cfg.init_value) if y0 is None
         else mf.clip_to_box(y0, cfg.eps_clip))
    start = time.perf_counter()

    def stamp():
        return time.perf_counter() - start if cfg.record_time else float("nan")

    f, g = oracle.value_and_grad(y)
    records = [IterateRecord(0, "init", float(f), float(mf.norm(y, mf.riem_grad(y, g))),
                             oracle.count, stamp())]
    trace = Trace(records, y)
    y_c = None
    for k in range(1, cfg.max_iter + 1):
        f, g = oracle.value_and_grad(y)
        rg = mf.riem_grad(y, g)
        if mf.norm(y, rg) <= cfg.gtol:
            trace.status = "converged"
            break
        y_new, level = None, "fine"
        if two_level:
            x0 = tr.restrict(h, y)
            if riemannian:
                qualifies = coarse_condition(y, y_c, rg, tr.restrict_tangent(h, y, rg),
                                             cfg.eta, cfg.eps_dist, x0=x0)
            else:
                qualifies = coarse_condition(y, y_c, g, tr.interp_transpose(h, g),
                                             cfg.eta, cfg.eps_dist)
            if qualifies:
                y_c = y.copy()
                trace.coarse_attempts += 1
                update = _geometric_coarse_update if riemannian else _euclidean_coarse_update
                y_new = update(oracle, h, pb_coarse, y, g, cfg)
                if y_new is not None:
                    level = "coarse"
                    trace.coarse_accepted += 1
        if y_new is None:
            y_new = fine_step(oracle, y, cfg) if riemannian else pg_step(oracle, y, cfg)
        if y_new is None:
            trace.status = "stalled"
            break
        y = y_new
        f, g = oracle.value_and_grad(y)
        records.append(IterateRecord(k, level, float(f), float(mf.norm(y, mf.riem_grad(y, g))),
                                     oracle.count, stamp()))
    trace.y = y
    return trace


def run_single_level(pb, cfg=SolverConfig(mode="single_rg"), **kw):
    return solve(pb, _with_mode(cfg, "single_rg"), **kw)


def run_projected_gradient(pb, cfg=SolverConfig(mode="single_pg"), **kw):
    return solve(pb, _with_mode(cfg, "single_pg"), **kw)


def run_two_level_geometric(pb, h=None, cfg=SolverConfig(), **kw):
    return solve(pb, _with_mode(cfg, "two_level_rg"), h=h, **kw)


def run_two_level_euclidean(pb, h=None, cfg=SolverConfig(mode="two_level_euclidean"), **kw):
    return solve(pb, _with_mode(cfg, "two_level_euclidean"), h=h, **kw)


def _with_mode(cfg, mode):
    if cfg.mode == mode:
        return cfg
    return replace(cfg, mode=mode)
