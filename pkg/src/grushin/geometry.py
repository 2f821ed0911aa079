"""Control distance, ball volumes, quasi-metric constant and partitions of unity.

Points are arrays of shape ``(..., n1 + n2)``; the first ``n1`` coordinates
are ``x'``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .symbols import smooth_step


def _split(x, n1):
    x = np.asarray(x, dtype=float)
    return x[..., :n1], x[..., n1:]


def distance(x, y, n1=1):
    """``d(x, y) = (|x'-y'|^4 + |x''-y''|^4 / (|x''-y''|^2 + (|x'|^2+|y'|^2)^2))^(1/4)``."""
    xp, xpp = _split(x, n1)
    yp, ypp = _split(y, n1)
    a = np.sum((xp - yp) ** 2, axis=-1)
    b = np.sum((xpp - ypp) ** 2, axis=-1)
    s = np.sum(xp ** 2, axis=-1) + np.sum(yp ** 2, axis=-1)
    den = b + s * s
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(den > 0, b * b / np.where(den > 0, den, 1.0), 0.0)
    return (a * a + frac) ** 0.25


def rho1(x, y, n1=1):
    """``|x'-y'| + |x''-y''|^(1/2)``."""
    xp, xpp = _split(x, n1)
    yp, ypp = _split(y, n1)
    return np.linalg.norm(xp - yp, axis=-1) + np.linalg.norm(xpp - ypp, axis=-1) ** 0.5


def rho2(x, y, n1=1):
    """``|x'-y'| + |x''-y''| / (|x'| + |y'|)``, with ``+inf`` when ``x' = y' = 0`` and ``x'' != y''``."""
    xp, xpp = _split(x, n1)
    yp, ypp = _split(y, n1)
    num = np.linalg.norm(xpp - ypp, axis=-1)
    den = np.linalg.norm(xp, axis=-1) + np.linalg.norm(yp, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return np.linalg.norm(xp - yp, axis=-1) + frac


def homogeneous_dimension(n1, n2):
    return n1 + 2 * n2


def ball_growth(x, r, n1=1, n2=1):
    """``r^(n1+n2) max(r, |x'|)^n2``: the profile of ``|B(x, r)|``."""
    xp = np.asarray(x, dtype=float)[..., :n1]
    return r ** (n1 + n2) * np.maximum(r, np.linalg.norm(xp, axis=-1)) ** n2


@dataclass(frozen=True)
class GeometryConstants:
    """Quasi-metric constant ``C0`` and ball-growth constants ``c1 <= C1``."""

    C0: float
    c1: float
    C1: float
    n1: int = 1
    n2: int = 1

    def __post_init__(self):
        if self.C0 < 1 or self.c1 > self.C1:
            raise ValueError("need C0 >= 1 and c1 <= C1")

    @property
    def Q(self):
        return homogeneous_dimension(self.n1, self.n2)

    def overlap_bound(self, C=2.0):
        """Bound on how many ``B(x_J, C)`` contain a point."""
        return (self.C1 / self.c1) * (4 * self.C0 ** 2 * C) ** self.Q


def _x2_extent(xp_norm, r):
    """Half-width in ``x''`` of a box containing ``B(x, r)``."""
    outer = np.sqrt(xp_norm ** 2 + (xp_norm + r) ** 2)
    return np.maximum(math.sqrt(2.0) * r * r, 2 ** 0.25 * r * outer)


def ball_volume(x, r, n1=1, n2=1, mode="bounds", constants=None, samples=20000,
                rng=None, strata=4):
    """Volume of ``B(x, r)``.

    ``mode="bounds"`` returns ``(c1 g, C1 g)`` with ``g = ball_growth(x, r)``
    (constants default to 1).  ``mode="monte_carlo"`` returns
    ``(estimate, standard_error)`` from stratified sampling of a box that
    contains the ball.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    x = np.asarray(x, dtype=float)
    if mode == "bounds":
        g = ball_growth(x, r, n1, n2)
        c1, C1 = (1.0, 1.0) if constants is None else (constants.c1, constants.C1)
        return c1 * g, C1 * g
    if mode != "monte_carlo":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    ext2 = float(_x2_extent(np.linalg.norm(x[:n1]), r))
    half = np.array([r] * n1 + [ext2] * n2)
    d = n1 + n2
    cells = list(itertools.product(range(strata), repeat=d))
    per = max(1, samples // len(cells))
    box_vol = float(np.prod(2 * half))
    means, variances = [], []
    for cell in cells:
        lo = -half + 2 * half * np.array(cell) / strata
        u = rng.random((per, d))
        pts = x + lo + u * (2 * half / strata)
        hit = (distance(pts, x, n1) < r).astype(float)
        means.append(hit.mean())
        variances.append(hit.var(ddof=1) / per if per > 1 else 0.0)
    cell_vol = box_vol / len(cells)
    est = cell_vol * float(np.sum(means))
    err = cell_vol * float(np.sqrt(np.sum(variances)))
    return est, err


def fit_ball_constants(n1=1, n2=1, radii=(0.25, 0.5, 1.0, 2.0), centers=None,
                       samples=20000, seed=0):
    """Measured ``(c1, C1)``: extreme ratios of Monte-Carlo volumes to ``ball_growth``."""
    rng = np.random.default_rng(seed)
    if centers is None:
        centers = [np.concatenate([np.full(n1, a), np.zeros(n2)]) for a in (0.0, 0.5, 2.0, 4.0)]
    ratios = []
    for c in centers:
        for r in radii:
            est, _ = ball_volume(c, r, n1, n2, mode="monte_carlo", samples=samples, rng=rng)
            ratios.append(est / float(ball_growth(c, r, n1, n2)))
    return min(ratios), max(ratios)


def estimate_quasi_constant(samples, region, n1=1, seed=0, chunk=20000):
    """Largest sampled ``d(x, y) / (d(x, z) + d(z, y))``.

    ``region`` is a pair of arrays ``(lo, hi)`` bounding a box.  Half of the
    intermediate points ``z`` are drawn near the segment from ``x`` to ``y``
    (where the ratio is largest); degenerate triples ``z = x`` make the result
    at least 1.
    """
    lo, hi = (np.asarray(a, dtype=float) for a in region)
    rng = np.random.default_rng(seed)
    best = 1.0
    left = int(samples)
    while left > 0:
        n = min(chunk, left)
        left -= n
        x = lo + (hi - lo) * rng.random((n, lo.size))
        y = lo + (hi - lo) * rng.random((n, lo.size))
        z = lo + (hi - lo) * rng.random((n, lo.size))
        near = rng.random(n) < 0.5
        t = rng.random((n, 1))
        jitter = 0.05 * (hi - lo) * rng.standard_normal((n, lo.size))
        z = np.where(near[:, None], x + t * (y - x) + jitter, z)
        num = distance(x, y, n1)
        den = distance(x, z, n1) + distance(z, y, n1)
        ok = den > 0
        if ok.any():
            best = max(best, float(np.max(num[ok] / den[ok])))
    return best


# ---------------------------------------------------------------------------
# partition of unity


def chi_profile(t):
    """``chi`` with ``chi = 1`` on ``[-1, 1]`` and support in ``[-2, 2]``."""
    return smooth_step(np.abs(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class PartitionElement:
    """One element ``chi_J`` of the partition, centred at ``center``."""

    index: int
    center: np.ndarray
    partition: "Partition" = field(repr=False, compare=False)

    def __call__(self, x):
        return self.partition.chi(self.index, x)


@dataclass(frozen=True)
class Partition:
    """Partition of unity ``chi_J = chi(d(x_J, x)) / sum_J' chi(d(x_J', x))``.

    ``period`` (optional) makes ``x''`` differences use the minimal image on a
    periodic box, for use on periodic grids.
    """

    centers: np.ndarray
    n1: int
    C0: float
    period: float | None = None

    def __len__(self):
        return len(self.centers)

    @property
    def elements(self):
        return [PartitionElement(i, c, self) for i, c in enumerate(self.centers)]

    def _d(self, center, x):
        x = np.asarray(x, dtype=float)
        if self.period is not None:
            diff = x[..., self.n1:] - center[self.n1:]
            diff = diff - self.period * np.round(diff / self.period)
            x = np.concatenate([x[..., : self.n1], center[self.n1:] + diff], axis=-1)
        return distance(x, center, self.n1)

    def raw(self, x):
        """``chi(d(x_J, x))`` for all ``J``: shape ``(n_J,) + x.shape[:-1]``."""
        return np.stack([chi_profile(self._d(c, x)) for c in self.centers])

    def chi_all(self, x):
        raw = self.raw(x)
        tot = raw.sum(axis=0)
        return np.where(tot > 0, raw / np.where(tot > 0, tot, 1.0), 0.0)

    def chi(self, J, x):
        return self.chi_all(x)[J]

    def overlap_count(self, x, C=2.0):
        """Number of ``J`` with ``d(x_J, x) < C``."""
        return np.sum(np.stack([self._d(c, x) < C for c in self.centers]), axis=0)


def candidate_lattice(region, C0, n1):
    """Deterministic lattice of spacing ``1/(4 C0)``.

    In ``x''`` the spacing is ``(1/(4 C0))^2``, matching the parabolic scaling
    of ``d`` near ``x' = 0``.
    """
    lo, hi = (np.asarray(a, dtype=float) for a in region)
    s = 1.0 / (4.0 * C0)
    axes = []
    for i in range(lo.size):
        step = s if i < n1 else s * s
        n = int(math.floor((hi[i] - lo[i]) / step + 1e-9)) + 1
        axes.append(lo[i] + step * np.arange(n))
    g = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in g], axis=-1)


def build_partition(region, C0, n1=1, period=None):
    """Greedy maximal packing of ``B(x_J, 1/(2 C0))`` with centres in ``region``.

    Candidates are visited in lattice order; a candidate is accepted when its
    distance to every accepted centre is at least ``1/C0``.  The elements are
    returned sorted by centre.
    """
    lo, hi = (np.asarray(a, dtype=float) for a in region)
    if np.any(hi < lo):
        return Partition(np.zeros((0, lo.size)), n1, C0, period)
    cand = candidate_lattice(region, C0, n1)
    accepted = []
    thr = 1.0 / C0
    for p in cand:
        if not accepted or np.min(distance(np.array(accepted), p, n1)) >= thr:
            accepted.append(p)
    centers = np.array(sorted(map(tuple, accepted)), dtype=float).reshape(-1, lo.size)
    return Partition(centers, n1, C0, period)


# ---------------------------------------------------------------------------
# integrability of the ball-weighted distance decay


@dataclass
class IntegrabilityReport:
    s: float
    Q: int
    radii: list
    values: dict
    increments: dict
    sup_value: float
    passed: bool


def _gl_panels(a, b, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mids[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _box_shell_integral(f, inner, outer, dims, panels=24, order=8):
    """Integral of ``f`` over ``box(outer) \\ box(inner)``; boxes are products of
    symmetric intervals with the given half-widths."""
    total = 0.0
    pieces = []
    for i in range(dims):
        segs = [(-outer[i], -inner[i]), (-inner[i], inner[i]), (inner[i], outer[i])] if inner is not None \
            else [(-outer[i], outer[i])]
        pieces.append(segs)
    for combo in itertools.product(*(range(len(p)) for p in pieces)):
        if inner is not None and all(c == 1 for c in combo):
            continue
        nodes, weights = [], []
        for i, c in enumerate(combo):
            a, b = pieces[i][c]
            n, w = _gl_panels(a, b, panels, order)
            nodes.append(n)
            weights.append(w)
        grids = np.meshgrid(*nodes, indexing="ij")
        wts = weights[0]
        for w in weights[1:]:
            wts = np.multiply.outer(wts, w)
        pts = np.stack(grids, axis=-1)
        total += float(np.sum(wts * f(pts)))
    return total


def integrability_check(s, n1=1, n2=1, ys=None, levels=14, rtol=1e-3, panels=None, order=None):
    """Integrate ``|B(x,1)|^(-1/2) (1 + d(x, y))^(-s)`` over growing boxes.

    Boxes are ``|x'| <= R``, ``|x'' - y''| <= R^2`` with ``R = 2^k``; the
    volume uses the growth profile ``max(1, |x'|)^n2``.  The check passes
    when the last relative increment is below ``rtol`` for every ``y`` and
    the increments decay; the supremum of ``|B(y,1)|^(-1/2) I(y)`` is reported.
    The Gauss-Legendre rule defaults to 24 panels of order 8 per segment in
    two dimensions and 6 panels of order 6 above (agreeing to 1e-5 in the
    increments).
    """
    Q = homogeneous_dimension(n1, n2)
    low = n1 + n2 <= 2
    panels = (24 if low else 6) if panels is None else panels
    order = (8 if low else 6) if order is None else order
    if ys is None:
        ys = [np.zeros(n1 + n2), np.r_[np.full(n1, 2.0), np.zeros(n2)], np.r_[np.zeros(n1), np.full(n2, 5.0)],
              np.r_[np.full(n1, 1.0), np.full(n2, 3.0)]]
    values, increments = {}, {}
    radii = [2.0 ** k for k in range(levels)]
    ok = True
    sup_val = 0.0
    for y in ys:
        y = np.asarray(y, dtype=float)
        shift = np.r_[np.zeros(n1), y[n1:]]

        def f(p, y=y, shift=shift):
            x = p + shift
            vol = np.maximum(1.0, np.linalg.norm(x[..., :n1], axis=-1)) ** n2
            return vol ** -0.5 * (1.0 + distance(x, y, n1)) ** (-s)

        cum, seq, prev = 0.0, [], None
        for R in radii:
            outer = np.array([R] * n1 + [R * R] * n2)
            cum += _box_shell_integral(f, prev, outer, n1 + n2, panels, order)
            seq.append(cum)
            prev = outer
        inc = [abs(seq[i + 1] - seq[i]) / max(abs(seq[i + 1]), 1e-300) for i in range(len(seq) - 1)]
        key = tuple(float(v) for v in y)
        values[key] = seq
        increments[key] = inc
        tail = inc[-4:]
        converged = inc[-1] < rtol and all(tail[i + 1] <= tail[i] for i in range(len(tail) - 1))
        ok = ok and converged
        vol_y = float(ball_growth(y, 1.0, n1, n2))
        sup_val = max(sup_val, vol_y ** -0.5 * seq[-1])
    return IntegrabilityReport(float(s), Q, radii, values, increments, sup_val, bool(ok and s > Q))
