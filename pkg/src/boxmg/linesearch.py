"""Step-size selection along retraction curves.

``hz_search`` is a bracketing / secant^2 line search that accepts a step
under the approximate Wolfe conditions::

    sigma * dphi(0) <= dphi(alpha) <= (2 delta - 1) * dphi(0)
    phi(alpha) <= phi(0) + eps

``armijo_search`` is plain backtracking with a zero-step rejection signal,
used for the coarse-level model.
"""
from dataclasses import dataclass

import numpy as np

from .manifold import exp_map


class LineSearchError(RuntimeError):
    """Evaluation budget exhausted.  ``alpha`` holds the best bracketed step."""

    def __init__(self, msg, alpha=0.0):
        super().__init__(msg)
        self.alpha = alpha


class LineFunction:
    """Scalar restriction ``phi(alpha)`` of an objective along a curve.

    Values and slopes are memoized per ``alpha`` so the search routines can
    ask for the same point repeatedly without paying for it twice.
    """

    def __init__(self, phi, dphi):
        self._phi = phi
        self._dphi = dphi
        self._vals = {}
        self._slopes = {}

    def phi(self, alpha):
        alpha = float(alpha)
        if alpha not in self._vals:
            self._vals[alpha] = float(self._phi(alpha))
        return self._vals[alpha]

    def dphi(self, alpha):
        alpha = float(alpha)
        if alpha not in self._slopes:
            self._slopes[alpha] = float(self._dphi(alpha))
        return self._slopes[alpha]

    @property
    def n_evals(self):
        return len(set(self._vals) | set(self._slopes))

    @classmethod
    def along_retraction(cls, value, value_and_grad, y, v):
        """Line ``alpha -> f(exp_y(alpha v))`` on the box.

        ``value(y)`` returns f(y); ``value_and_grad(y)`` returns
        ``(f(y), df(y))`` with the Euclidean gradient.  The slope is
        ``<df(y_a), y_a (1 - y_a) / (y (1 - y)) v>``.
        """
        y = np.asarray(y, dtype=float)
        v = np.asarray(v, dtype=float)
        scale = v / (y * (1.0 - y))
        points = {}

        def point(alpha):
            if alpha not in points:
                points[alpha] = y if alpha == 0.0 else exp_map(y, alpha * v)
            return points[alpha]

        grads = {}

        def phi(alpha):
            if alpha in grads:
                return grads[alpha][0]
            return value(point(alpha))

        def dphi(alpha):
            if alpha not in grads:
                grads[alpha] = value_and_grad(point(alpha))
            ya = point(alpha)
            return float(np.dot(grads[alpha][1], ya * (1.0 - ya) * scale))

        lf = cls(phi, dphi)
        lf.point = point
        return lf


@dataclass(frozen=True)
class WolfeParams:
    delta: float = 0.1
    sigma: float = 0.9
    eps: float = None  # None: 1e-6 * (1 + |phi(0)|)
    gamma: float = 0.66
    rho_expand: float = 5.0
    c_init: float = 1.0
    max_evals: int = 50

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if not self.delta <= self.sigma < 1.0:
            raise ValueError("sigma must lie in [delta, 1)")
        if self.eps is not None and self.eps < 0:
            raise ValueError("eps must be >= 0")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.rho_expand > 1.0:
            raise ValueError("rho_expand must be > 1")
        if not self.c_init > 0.0:
            raise ValueError("c_init must be > 0")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")

    def tolerance(self, phi0):
        return 1e-6 * (1.0 + abs(phi0)) if self.eps is None else self.eps


class _Found(Exception):
    def __init__(self, alpha):
        self.alpha = alpha


class _Search:
    """Shared state of one line search: phi(0), eps and the eval budget."""

    def __init__(self, lf, p, watch=False):
        self.lf = lf
        self.p = p
        self.phi0 = lf.phi(0.0)
        self.d0 = lf.dphi(0.0)
        if not self.d0 < 0.0:
            raise ValueError(f"not a descent direction: dphi(0) = {self.d0}")
        self.eps = p.tolerance(self.phi0)
        self.watch = watch
        self.best = 0.0

    def _budget(self):
        if self.lf.n_evals > self.p.max_evals:
            raise LineSearchError("line search budget exhausted", self.best)

    def phi(self, c):
        self._budget()
        return self.lf.phi(c)

    def dphi(self, c):
        self._budget()
        return self.lf.dphi(c)

    def low(self, c):
        """phi(c) <= phi(0) + eps"""
        ok = self.phi(c) <= self.phi0 + self.eps
        if ok and c > self.best and self.dphi(c) < 0.0:
            self.best = c
        return ok

    def wolfe(self, c):
        p = self.p
        dc = self.dphi(c)
        return (p.sigma * self.d0 <= dc <= (2.0 * p.delta - 1.0) * self.d0
                and self.phi(c) <= self.phi0 + self.eps)

    def trial(self, c):
        """Evaluate a trial point; stop the whole search if it is acceptable."""
        if self.watch and c > 0.0 and self.wolfe(c):
            raise _Found(c)

    # Algorithm pieces -------------------------------------------------

    def bisect(self, a, b):
        while True:
            d = 0.5 * (a + b)
            self.trial(d)
            if self.dphi(d) >= 0.0:
                return a, d
            if self.low(d):
                a = d
            else:
                b = d

    def update(self, a, b, c):
        if not a < c < b:
            return a, b
        self.trial(c)
        if self.dphi(c) >= 0.0:
            return a, c
        if self.low(c):
            return c, b
        return self.bisect(a, c)

    def bracket(self, c):
        probes = []
        while True:
            if self.dphi(c) >= 0.0:
                a = 0.0
                for cj in reversed(probes):
                    if self.low(cj):
                        a = cj
                        break
                return a, c
            if not self.low(c):
                return self.bisect(0.0, c)
            probes.append(c)
            c = self.p.rho_expand * c

    def secant(self, a, b):
        da, db = self.dphi(a), self.dphi(b)
        if db == da:
            return 0.5 * (a + b)
        return (a * db - b * da) / (db - da)

    def secant2(self, a, b):
        c = self.secant(a, b)
        A, B = self.update(a, b, c)
        if c == B:
            cbar = self.secant(b, B)
        elif c == A:
            cbar = self.secant(a, A)
        else:
            return A, B
        return self.update(A, B, cbar)


def bracket(lf, p=WolfeParams(), c=None):
    """Initial interval [a, b] with opposite slopes, starting from guess ``c``."""
    s = _Search(lf, p)
    return s.bracket(p.c_init if c is None else c)


def update(lf, p, a, b, c):
    """Shrink [a, b] around the trial point ``c`` keeping opposite slopes."""
    return _Search(lf, p).update(a, b, c)


def secant(lf, a, b):
    """Secant step on the slopes at ``a`` and ``b`` (midpoint if they agree)."""
    da, db = lf.dphi(a), lf.dphi(b)
    if db == da:
        return 0.5 * (a + b)
    return (a * db - b * da) / (db - da)


def secant2(lf, p, a, b):
    """One double-secant contraction of the interval [a, b]."""
    return _Search(lf, p).secant2(a, b)


def satisfies_wolfe(lf, p, alpha):
    """Direct check of the approximate Wolfe conditions at ``alpha``."""
    phi0, d0 = lf.phi(0.0), lf.dphi(0.0)
    eps = p.tolerance(phi0)
    da = lf.dphi(alpha)
    return (p.sigma * d0 <= da <= (2.0 * p.delta - 1.0) * d0
            and lf.phi(alpha) <= phi0 + eps)


def hz_search(lf, p=WolfeParams()):
    """Approximate-Wolfe line search; returns the accepted step.

    Raises
    ------
    ValueError
        If ``dphi(0) >= 0``.
    LineSearchError
        If ``p.max_evals`` evaluations do not produce an acceptable step.
        The exception's ``alpha`` is the largest step seen with
        ``phi <= phi(0) + eps`` and negative slope (0 if none).
    """
    s = _Search(lf, p, watch=False)
    c = p.c_init
    a, b = s.bracket(c)
    if s.wolfe(c):
        return c
    s.watch = True
    try:
        for pt in (b, a):
            s.trial(pt)
        while True:
            A, B = s.secant2(a, b)
            if B - A > p.gamma * (b - a):
                A, B = s.update(A, B, 0.5 * (A + B))
            if (A, B) == (a, b) and B - A <= 1e-15 * max(1.0, B):
                raise LineSearchError("interval collapsed", s.best)
            a, b = A, B
            s.trial(b)
            s.trial(a)
    except _Found as hit:
        return hit.alpha


def armijo_search(lf, sigma=1e-4, beta=0.6, alpha0=1.0 / 0.6, min_step=1e-12):
    """Backtracking with sufficient decrease; ``None`` means reject the step.

    Tries ``alpha0 * beta**k`` for k = 0, 1, ... and returns the first step
    with ``phi(alpha) <= phi(0) + sigma * alpha * dphi(0)``.  Once the trial
    step drops below ``min_step`` the search gives up and returns ``None``.
    """
    phi0 = lf.phi(0.0)
    d0 = lf.dphi(0.0)
    if not d0 < 0.0:
        raise ValueError(f"not a descent direction: dphi(0) = {d0}")
    alpha = alpha0
    while alpha >= min_step:
        if lf.phi(alpha) <= phi0 + sigma * alpha * d0:
            return alpha
        alpha *= beta
    return None
