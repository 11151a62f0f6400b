"""Parallel-beam projection matrices, synthetic phantoms and test data.

Pixels have unit side and the image is centered at the origin; pixel
(r, c) covers ``[c - cols/2, c + 1 - cols/2) x [r - rows/2, r + 1 - rows/2)``.
A ray at angle ``theta`` with detector offset ``s`` is the line
``s * (-sin, cos) + t * (cos, sin)``; detectors are spaced one pixel apart
and centered on the image.  Matrix entries are exact ray/pixel
intersection lengths.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .manifold import EPS_CLIP, clip_to_box


@dataclass(frozen=True)
class ScanGeometry:
    grid: tuple
    num_angles: int
    detector_count: int = None
    detector_spacing: float = 1.0

    def __post_init__(self):
        rows, cols = (int(s) for s in self.grid)
        if rows < 1 or cols < 1:
            raise ValueError("grid dimensions must be >= 1")
        if int(self.num_angles) < 1:
            raise ValueError("need at least one projection angle")
        object.__setattr__(self, "grid", (rows, cols))
        object.__setattr__(self, "num_angles", int(self.num_angles))
        if self.detector_count is None:
            object.__setattr__(self, "detector_count", max(rows, cols))
        if int(self.detector_count) < 1:
            raise ValueError("need at least one detector")

    @property
    def angles(self):
        """Equidistant angles in [0, pi)."""
        return np.arange(self.num_angles) * (np.pi / self.num_angles)

    @property
    def offsets(self):
        d = self.detector_count
        return (np.arange(d) - 0.5 * (d - 1)) * self.detector_spacing

    def coarsened(self, grid):
        """Same angles on another grid, detector array as wide as that grid."""
        return ScanGeometry(tuple(grid), self.num_angles, max(grid), self.detector_spacing)


def angles_for_undersampling(fraction, side):
    """Number of projection angles for an undersampling rate on a ``side`` grid."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("undersampling fraction must lie in (0, 1]")
    return max(1, int(round(fraction * side)))


def _snap(x):
    return 0.0 if abs(x) < 1e-14 else x


def _trace_angle(theta, offsets, rows, cols):
    """Intersection lengths for all rays of one angle.

    Returns (ray, pixel, length) triplets with ray indices into ``offsets``.
    """
    c, s = _snap(np.cos(theta)), _snap(np.sin(theta))
    px = -offsets * s
    py = offsets * c
    xs = np.arange(cols + 1) - 0.5 * cols
    ys = np.arange(rows + 1) - 0.5 * rows
    big = np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        if c != 0.0:
            tx = (xs[None, :] - px[:, None]) / c
            txmin, txmax = tx.min(axis=1), tx.max(axis=1)
        else:
            tx = np.full((offsets.size, 0), np.nan)
            inside = (px >= xs[0]) & (px < xs[-1])
            txmin = np.where(inside, -big, big)
            txmax = np.where(inside, big, -big)
        if s != 0.0:
            ty = (ys[None, :] - py[:, None]) / s
            tymin, tymax = ty.min(axis=1), ty.max(axis=1)
        else:
            ty = np.full((offsets.size, 0), np.nan)
            inside = (py >= ys[0]) & (py < ys[-1])
            tymin = np.where(inside, -big, big)
            tymax = np.where(inside, big, -big)
    tmin = np.maximum(txmin, tymin)
    tmax = np.minimum(txmax, tymax)
    hit = tmax > tmin
    if not np.any(hit):
        return np.empty(0, int), np.empty(0, int), np.empty(0)
    ray_ids = np.flatnonzero(hit)
    t = np.concatenate([tx[hit], ty[hit], tmin[hit, None], tmax[hit, None]], axis=1)
    lo, hi = tmin[hit, None], tmax[hit, None]
    t = np.where((t >= lo) & (t <= hi), t, np.nan)
    t.sort(axis=1)
    seg = np.diff(t, axis=1)
    mid = t[:, :-1] + 0.5 * seg
    mx = px[ray_ids, None] + mid * c
    my = py[ray_ids, None] + mid * s
    keep = np.isfinite(seg) & (seg > 1e-12)
    col = np.floor(np.where(keep, mx, 0.0) + 0.5 * cols).astype(np.int64)
    row = np.floor(np.where(keep, my, 0.0) + 0.5 * rows).astype(np.int64)
    keep &= (col >= 0) & (col < cols) & (row >= 0) & (row < rows)
    rr = np.broadcast_to(ray_ids[:, None], seg.shape)[keep]
    return rr, (row * cols + col)[keep], seg[keep]


def build_matrix(g):
    """Sparse projection matrix, rows ordered angle-major / detector-minor.

    Rays that miss the grid are dropped, so every returned row has support.
    """
    rows, cols = g.grid
    offsets = g.offsets
    data, ri, ci = [], [], []
    nrays = 0
    for theta in g.angles:
        rr, pix, length = _trace_angle(theta, offsets, rows, cols)
        ri.append(rr + nrays)
        ci.append(pix)
        data.append(length)
        nrays += offsets.size
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                      shape=(nrays, rows * cols))
    A.sum_duplicates()
    A.sort_indices()
    A.eliminate_zeros()
    nonempty = np.diff(A.indptr) > 0
    return A[nonempty]


# Phantoms ---------------------------------------------------------------

PHANTOMS = ("disks", "annulus", "bars", "checker", "blob", "mixed")


class Phantom(NamedTuple):
    name: str
    image: np.ndarray


def _coords(size):
    t = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    return np.meshgrid(t, t, indexing="ij")


def _disks(size, seed=7):
    v, u = _coords(size)
    img = np.zeros((size, size))
    disks = [(-0.35, -0.3, 0.35, 1.0), (0.4, 0.35, 0.3, 0.8), (0.35, -0.45, 0.18, 0.6),
            (-0.45, 0.45, 0.22, 1.0)]
    for cu, cv, r, val in disks:
        img[(u - cu) ** 2 + (v - cv) ** 2 < r * r] = val
    rng = np.random.default_rng(seed)
    for cu, cv in rng.uniform(-0.75, 0.75, size=(10, 2)):
        img[(u - cu) ** 2 + (v - cv) ** 2 < 0.06 ** 2] = 1.0
    return img


def _annulus(size):
    v, u = _coords(size)
    r2 = u * u + v * v
    img = np.zeros((size, size))
    img[(r2 > 0.45 ** 2) & (r2 < 0.75 ** 2)] = 1.0
    img[r2 < 0.2 ** 2] = 0.6
    return img


def _bars(size):
    v, u = _coords(size)
    img = np.zeros((size, size))
    edges = np.linspace(-0.8, 0.8, 9)
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        width = (hi - lo) * (0.25 + 0.08 * k)
        img[(u >= lo) & (u < lo + width) & (np.abs(v) < 0.7)] = 1.0
    img[(np.abs(v - 0.8) < 0.06) & (np.abs(u) < 0.8)] = 0.7
    return img


def _checker(size):
    v, u = _coords(size)
    img = (((np.floor((u + 1) * 4) + np.floor((v + 1) * 4)) % 2) == 0).astype(float)
    img[u * u + v * v > 0.85 ** 2] = 0.0
    return img


def _blob(size):
    v, u = _coords(size)
    img = np.zeros((size, size))
    for cu, cv, s, a in [(-0.3, -0.2, 0.3, 1.0), (0.35, 0.25, 0.22, 0.9), (0.1, -0.5, 0.15, 0.7)]:
        img += a * np.exp(-((u - cu) ** 2 + (v - cv) ** 2) / (2 * s * s))
    return np.clip(img, 0.0, 1.0)


def _mixed(size):
    v, u = _coords(size)
    img = np.zeros((size, size))
    img[(u / 0.8) ** 2 + (v / 0.65) ** 2 < 1.0] = 0.5
    img[((u + 0.3) / 0.25) ** 2 + ((v - 0.1) / 0.35) ** 2 < 1.0] = 1.0
    img[(np.abs(u - 0.35) < 0.15) & (np.abs(v + 0.2) < 0.2)] = 0.0
    img[(np.abs(u - 0.35) < 0.04) & (np.abs(v - 0.35) < 0.2)] = 1.0
    for k in range(5):
        img[(u - 0.1 - 0.1 * k) ** 2 + (v - 0.3) ** 2 < 0.03 ** 2] = 1.0
    return img


_GENERATORS = {"disks": _disks, "annulus": _annulus, "bars": _bars,
               "checker": _checker, "blob": _blob, "mixed": _mixed}


def make_phantom(name, size, seed=7):
    """Deterministic ``size`` x ``size`` test image with values in [0, 1].

    ``seed`` places the small inclusions of the ``disks`` phantom; the other
    generators are purely geometric.
    """
    if name not in _GENERATORS:
        raise ValueError(f"unknown phantom {name!r}; choose from {', '.join(PHANTOMS)}")
    if int(size) < 8:
        raise ValueError("phantom size must be >= 8")
    if name == "disks":
        return Phantom(name, _disks(int(size), seed))
    return Phantom(name, _GENERATORS[name](int(size)))


def synthesize(phantom, undersampling, lam=0.5, rho=0.5, geometry=None):
    """Noise-free tomography problem for a phantom.

    The angle count follows from the undersampling rate unless an explicit
    ``geometry`` is given.  Data are ``b = A y_true`` with ``y_true`` the
    phantom clipped into the open box.
    """
    from .objective import Problem

    image = phantom.image if isinstance(phantom, Phantom) else np.asarray(phantom, dtype=float)
    if geometry is None:
        side = max(image.shape)
        geometry = ScanGeometry(image.shape, angles_for_undersampling(undersampling, side))
    A = build_matrix(geometry)
    if A.shape[0] == 0:
        raise ValueError("no projection ray hits the image")
    y_true = clip_to_box(image.ravel(), EPS_CLIP)
    b = A @ y_true
    if not np.all(b > 0):
        raise ValueError("synthesized data are not strictly positive")
    return Problem(A, b, lam, rho, image.shape, geometry)
