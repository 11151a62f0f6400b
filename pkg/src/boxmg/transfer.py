"""Grid transfer between a fine image grid and its 2x coarsening.

Coarse points sit at even (row, col) fine coordinates.  Every other fine
point gets a neighborhood of coarse points with bilinear weights, and the
prolongation assigns it the weighted geometric mean of those neighbors.  On
the last row/column of an even-sized grid only one coarse neighbor exists
along that axis, so the stencil collapses onto it (weights renormalized).

All operators are applied through the sparse bilinear interpolation matrix
``BI``; in log-odds coordinates the geometric prolongation is linear::

    P(x)       = expit(BI @ logit(x))
    dP_x u     = G(P(x))^{-1} BI (G(x) u)
    TR_y v     = BI^T (G(P(R y))^{-1} G(y) v)
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, logit

from .manifold import clip_to_box, metric


def _interp_1d(n_fine):
    """Sparse (n_fine, n_fine // 2) linear interpolation along one axis."""
    n_coarse = n_fine // 2
    rows, cols, vals = [], [], []
    for k in range(n_fine):
        if k % 2 == 0:
            rows.append(k); cols.append(k // 2); vals.append(1.0)
        elif k + 1 < n_fine:
            rows += [k, k]; cols += [(k - 1) // 2, (k + 1) // 2]; vals += [0.5, 0.5]
        else:
            rows.append(k); cols.append((k - 1) // 2); vals.append(1.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_fine, n_coarse))


@dataclass(frozen=True)
class GridHierarchy:
    """Fine/coarse index bookkeeping for one 2x coarsening of a 2-d grid."""

    fine_shape: tuple
    coarse_shape: tuple = field(init=False)
    interp: sp.csr_matrix = field(init=False, repr=False)
    interp_t: sp.csr_matrix = field(init=False, repr=False)
    coarse_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows, cols = (int(s) for s in self.fine_shape)
        if rows < 2 or cols < 2 or rows % 2 or cols % 2:
            raise ValueError(f"fine grid dimensions must be even and >= 2, got {self.fine_shape}")
        object.__setattr__(self, "fine_shape", (rows, cols))
        object.__setattr__(self, "coarse_shape", (rows // 2, cols // 2))
        bi = sp.kron(_interp_1d(rows), _interp_1d(cols), format="csr")
        bi.sort_indices()
        object.__setattr__(self, "interp", bi)
        object.__setattr__(self, "interp_t", bi.T.tocsr())
        r, c = np.meshgrid(np.arange(0, rows, 2), np.arange(0, cols, 2), indexing="ij")
        object.__setattr__(self, "coarse_index", (r * cols + c).ravel())

    @property
    def n_fine(self):
        return self.fine_shape[0] * self.fine_shape[1]

    @property
    def n_coarse(self):
        return self.coarse_shape[0] * self.coarse_shape[1]

    def fine_only_index(self):
        """Flat fine indices that are not coarse points (the complement set)."""
        mask = np.ones(self.n_fine, dtype=bool)
        mask[self.coarse_index] = False
        return np.flatnonzero(mask)

    def neighborhood(self, j):
        """Coarse neighbors and weights of fine point ``j``.

        For a coarse point this is the point itself with weight 1.
        """
        start, stop = self.interp.indptr[j], self.interp.indptr[j + 1]
        return self.interp.indices[start:stop].copy(), self.interp.data[start:stop].copy()


def _check(v, n, what):
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"{what}: expected shape ({n},), got {v.shape}")
    return v


def interp_apply(h, w):
    """Bilinear interpolation of a coarse vector onto the fine grid."""
    return h.interp @ _check(w, h.n_coarse, "interp_apply")


def interp_transpose(h, w):
    """Transpose of :func:`interp_apply`."""
    return h.interp_t @ _check(w, h.n_fine, "interp_transpose")


def prolong(h, x):
    """Geometric prolongation of a coarse box point to the fine grid."""
    x = _check(x, h.n_coarse, "prolong")
    y = clip_to_box(expit(h.interp @ logit(x)))
    # coarse points are copied, not round-tripped through logit/expit
    y[h.coarse_index] = x
    return y


def dprolong(h, x, u):
    """Differential of :func:`prolong` at ``x`` applied to the coarse tangent ``u``."""
    x = _check(x, h.n_coarse, "dprolong")
    u = _check(u, h.n_coarse, "dprolong")
    y = prolong(h, x)
    out = y * (1.0 - y) * (h.interp @ (metric(x) * u))
    out[h.coarse_index] = u
    return out


def restrict(h, y):
    """Injection of a fine vector onto the coarse points."""
    return _check(y, h.n_fine, "restrict")[h.coarse_index].copy()


def restrict_tangent(h, y, v):
    """Tangent restriction ``TR_y v``, the metric adjoint of ``dP_{R y}``.

    Satisfies ``<u, TR_y v>_{R y} == <dP_{R y} u, v>_y`` for every coarse ``u``.
    """
    y = _check(y, h.n_fine, "restrict_tangent")
    v = _check(v, h.n_fine, "restrict_tangent")
    py = prolong(h, restrict(h, y))
    return h.interp_t @ (py * (1.0 - py) * metric(y) * v)


def tangent_restrictor(h, y):
    """Return ``v -> TR_y v`` with the y-dependent scaling precomputed."""
    y = _check(y, h.n_fine, "tangent_restrictor")
    py = prolong(h, restrict(h, y))
    scale = py * (1.0 - py) * metric(y)

    def apply(v):
        return h.interp_t @ (scale * _check(v, h.n_fine, "restrict_tangent"))

    return apply
