"""Riemannian geometry of the open box (0, 1)^n.

The box carries the Fisher-Rao metric of independent Bernoulli variables,
a diagonal metric with weights ``1 / (y (1 - y))``.  The exponential map of
the e-connection is a logistic shift in log-odds coordinates, which gives a
closed-form retraction, its inverse, their differentials and closed-form
weighted means.

Points and tangent vectors are plain float arrays.  Tangents carry no base
point; pairing them with the right point is the caller's job.
"""
import numpy as np
from scipy.special import expit, logit

EPS_CLIP = 1e-10


def clip_to_box(y, eps=EPS_CLIP):
    """Clip ``y`` componentwise to ``[eps, 1 - eps]`` (returns a new array)."""
    return np.clip(np.asarray(y, dtype=float), eps, 1.0 - eps)


def as_box_point(y, eps=EPS_CLIP):
    """Validate external data as a box point and clip it into the open box."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("box point must be a non-empty 1-d array")
    if not np.all(np.isfinite(y)):
        raise ValueError("box point has non-finite components")
    return clip_to_box(y, eps)


def _check_same(*arrays):
    n = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != n:
            raise ValueError(f"dimension mismatch: {n} vs {a.shape}")


def metric(y):
    """Diagonal of the metric tensor at ``y``: ``1 / (y (1 - y))``."""
    y = np.asarray(y, dtype=float)
    return 1.0 / (y * (1.0 - y))


def inner(y, v, w):
    """Riemannian inner product ``<v, w>_y``."""
    y, v, w = (np.asarray(a, dtype=float) for a in (y, v, w))
    _check_same(y, v, w)
    return float(np.sum(v * w / (y * (1.0 - y))))


def norm(y, v):
    """Riemannian norm ``||v||_y``."""
    return np.sqrt(inner(y, v, v))


def riem_grad(y, eucl_grad):
    """Riemannian gradient ``G(y)^{-1} df(y)`` from the Euclidean one."""
    y = np.asarray(y, dtype=float)
    g = np.asarray(eucl_grad, dtype=float)
    _check_same(y, g)
    return y * (1.0 - y) * g


def exp_map(y, v, eps=EPS_CLIP):
    """Exponential map of the e-connection, clipped to the box.

    Evaluated as ``expit(logit(y) + v / (y (1 - y)))`` so large tangents
    saturate instead of overflowing.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_same(y, v)
    theta = logit(y) + v / (y * (1.0 - y))
    out = clip_to_box(expit(theta), eps)
    # exp_y(0) = y must hold bit-exactly
    zero = v == 0.0
    if np.any(zero):
        out[zero] = y[zero]
    return out


def exp_inv(y, y2):
    """Inverse exponential map, the tangent at ``y`` pointing to ``y2``."""
    y = np.asarray(y, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    _check_same(y, y2)
    return y * (1.0 - y) * (logit(y2) - logit(y))


def dexp(y, u, v, eps=EPS_CLIP):
    """Differential of ``exp_y`` at ``u`` applied to ``v``."""
    y, u, v = (np.asarray(a, dtype=float) for a in (y, u, v))
    _check_same(y, u, v)
    y1 = exp_map(y, u, eps)
    return (y1 * (1.0 - y1)) / (y * (1.0 - y)) * v


def dexp_inv(y, y2, v2):
    """Differential of ``exp_y^{-1}`` at ``y2`` applied to ``v2``."""
    y, y2, v2 = (np.asarray(a, dtype=float) for a in (y, y2, v2))
    _check_same(y, y2, v2)
    return (y * (1.0 - y)) / (y2 * (1.0 - y2)) * v2


# the differentiated retraction is the vector transport
transport = dexp


def geometric_mean(points, weights):
    """Weighted geometric mean of scalars in (0, 1).

    The odds of the result are the weighted geometric mean of the odds of
    the inputs.  ``points`` may also be a 2-d array of shape (k, n), in which
    case the mean is taken componentwise over the first axis.

    Raises
    ------
    ValueError
        If ``points`` is empty or the weights are not positive or do not
        sum to one.
    """
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if pts.shape[0] == 0:
        raise ValueError("geometric mean of an empty set")
    if w.shape != (pts.shape[0],):
        raise ValueError("need one weight per point")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be positive and sum to 1")
    return expit(np.tensordot(w, logit(pts), axes=1))
