"""KL data fidelity plus smoothed total variation.

    f(y) = KL(A y, b) + lam * J(y)
    J(y) = sum_pixels sqrt(|grad y|^2 + rho^2) - rho

``grad`` uses forward differences with a zero difference across the
right/bottom border.
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class Problem:
    """Sparse nonnegative system ``A``, positive data ``b`` and TV settings.

    Construction checks ``b > 0``, ``A >= 0`` and that no row of ``A`` is
    empty, which together keep ``A y`` strictly positive for ``y > 0``.
    """

    A: sp.csr_matrix
    b: np.ndarray
    lam: float = 0.5
    rho: float = 0.5
    image_shape: tuple = None
    geometry: Optional[object] = None
    At: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.A, dtype=float)
        A.sort_indices()
        b = np.asarray(self.b, dtype=float).ravel()
        p, n = A.shape
        shape = (n, 1) if self.image_shape is None else tuple(int(s) for s in self.image_shape)
        if shape[0] * shape[1] != n:
            raise ValueError(f"image_shape {shape} does not match {n} columns")
        if b.shape != (p,):
            raise ValueError(f"b has shape {b.shape}, expected ({p},)")
        if not np.all(b > 0):
            raise ValueError("data b must be strictly positive")
        if A.nnz and A.data.min() < 0:
            raise ValueError("A must be nonnegative")
        A.eliminate_zeros()
        if np.any(np.diff(A.indptr) == 0):
            raise ValueError("A has a row without positive entries")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "image_shape", shape)
        object.__setattr__(self, "At", A.T.tocsr())

    @property
    def n(self):
        return self.A.shape[1]

    def with_data(self, b):
        """Same operator and regularization, different data vector."""
        return Problem(self.A, b, self.lam, self.rho, self.image_shape, self.geometry)


class ObjectiveEval(NamedTuple):
    value: float
    eucl_grad: np.ndarray


def kl_div(u, w):
    """KL divergence ``sum(u log(u/w) + w - u)`` of positive vectors."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape != w.shape:
        raise ValueError("kl_div: shape mismatch")
    if np.any(u <= 0) or np.any(w <= 0):
        raise ValueError("kl_div: arguments must be positive")
    return float(np.sum(u * np.log(u / w) + w - u))


def data_term(pb, y):
    return kl_div(pb.A @ y, pb.b)


def data_grad(pb, y):
    return pb.At @ np.log((pb.A @ y) / pb.b)


def _diffs(img):
    dh = np.zeros_like(img)
    dv = np.zeros_like(img)
    dh[:, :-1] = img[:, 1:] - img[:, :-1]
    dv[:-1, :] = img[1:, :] - img[:-1, :]
    return dh, dv


def smoothed_tv(pb, y):
    dh, dv = _diffs(np.reshape(y, pb.image_shape))
    sq = dh * dh + dv * dv
    # sqrt(s + rho^2) - rho without cancellation
    return float(np.sum(sq / (np.sqrt(sq + pb.rho ** 2) + pb.rho)))


def smoothed_tv_grad(pb, y):
    dh, dv = _diffs(np.reshape(y, pb.image_shape))
    mag = np.sqrt(dh * dh + dv * dv + pb.rho ** 2)
    ph, pv = dh / mag, dv / mag
    g = np.zeros_like(ph)
    g[:, :-1] -= ph[:, :-1]
    g[:, 1:] += ph[:, :-1]
    g[:-1, :] -= pv[:-1, :]
    g[1:, :] += pv[:-1, :]
    return g.ravel()


def value(pb, y):
    """Objective value only (one product with ``A``)."""
    y = np.asarray(y, dtype=float)
    v = data_term(pb, y)
    if pb.lam:
        v += pb.lam * smoothed_tv(pb, y)
    return v


def objective(pb, y):
    """Objective value and Euclidean gradient."""
    y = np.asarray(y, dtype=float)
    Ay = pb.A @ y
    val = kl_div(Ay, pb.b)
    grad = pb.At @ np.log(Ay / pb.b)
    if pb.lam:
        val += pb.lam * smoothed_tv(pb, y)
        grad = grad + pb.lam * smoothed_tv_grad(pb, y)
    return ObjectiveEval(val, grad)


def tv_bregman(pb, x, x0):
    """Bregman divergence of the smoothed TV term, from its definition."""
    return (smoothed_tv(pb, x) - smoothed_tv(pb, x0)
            - float(np.dot(smoothed_tv_grad(pb, x0), np.asarray(x) - np.asarray(x0))))


def bregman_f(pb, x, x0):
    """``D_f(x, x0) = KL(A x, A x0) + lam * D_J(x, x0)``; the data ``b`` is not used."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    d = kl_div(pb.A @ x, pb.A @ x0)
    if pb.lam:
        d += pb.lam * tv_bregman(pb, x, x0)
    return d


def eval_at_level(pb, h):
    """Rediscretize ``pb`` on the coarse grid of hierarchy ``h``.

    The coarse matrix is traced afresh on the coarse grid with the same
    projection angles.  Its data vector is a placeholder (coarse models
    never read it).
    """
    from .tomography import build_matrix

    if pb.geometry is None:
        raise ValueError("problem has no scan geometry to rediscretize")
    if tuple(pb.image_shape) != tuple(h.fine_shape):
        raise ValueError("hierarchy does not match the problem grid")
    geo = pb.geometry.coarsened(h.coarse_shape)
    A = build_matrix(geo)
    b = A @ np.full(A.shape[1], 0.5)
    return Problem(A, b, pb.lam, pb.rho, h.coarse_shape, geo)
