"""Weighted Plancherel ratios for compactly supported joint multipliers.

For a profile ``m0`` supported in ``[-1, 1]^(n1+n2)`` and a scale ``R`` the
multiplier is ``m(tau, kappa) = m0(tau / R^2, kappa / R^2)``, so that
``m(R^2 .) = m0``.  The check computes

``LHS = || |B(., 1/R)|^(1/2 - 1/p) (1 + R d(x, .))^r k(x, .) ||_p``

by grid quadrature and ``RHS = |B(x, 1/R)|^(-1/2) ||m0||_{W^r_inf}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .discretization import Discretization
from .geometry import ball_growth
from .operators import compute_kernel
from .symbols import SymbolFn, check_cancellation


DEFAULT_OFFSETS = (0.0, 0.125, 0.25, 0.5, 1.0, 2.0)


def plancherel_discretization(K=32, Lam=64, M2=256, L2=8 * np.pi):
    """Band covering ``|kappa|, |tau| <= 16`` with lattice step ``1/4``."""
    return Discretization(1, 1, K, Lam, M2, L2)


def sobolev_inf_norm(m0, r, n_grid=81):
    """``sum_{|alpha| <= r} sup |d^alpha m0|`` on a grid of ``[-1, 1]^d``.

    ``tau`` is sampled on ``(0, 1]`` since ``tau > 0`` on every mode.
    """
    d = m0.n1 + m0.n2
    tau = np.linspace(1e-3, 1.0, n_grid)
    kap = np.linspace(-1.0, 1.0, 2 * n_grid - 1)
    axes = [tau] * m0.n1 + [kap] * m0.n2
    g = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.ravel() for a in g], axis=-1)
    t, k = pts[:, : m0.n1], pts[:, m0.n1:]
    total = 0.0
    for alpha in itertools.product(range(r + 1), repeat=d):
        if sum(alpha) <= r:
            total += float(np.max(np.abs(m0.partial(alpha, None, t, k))))
    return total


def scaled(m0, R):
    """``m0(tau / R^2, kappa / R^2)``."""
    s = 1.0 / R ** 2
    return SymbolFn("tau_kappa", lambda x, tau, kappa: m0(None, np.asarray(tau) * s, np.asarray(kappa) * s),
                    m0.n1, m0.n2, m0.smoothness_order, None, None, f"{m0.name}(./{R}^2)")


def _minimal_image_points(disc, x):
    pts = disc.points().copy()
    if disc.n2:
        diff = pts[..., disc.n1:] - x[disc.n1:]
        pts[..., disc.n1:] = x[disc.n1:] + diff - disc.L2 * np.round(diff / disc.L2)
    return pts


@dataclass
class PlancherelReport:
    p: float
    r: int
    Rs: list
    xs: list
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    cancellation_order: int
    cancellation_passed: bool
    factor: float = 2.0

    @property
    def ratios(self):
        """``LHS / RHS`` of shape ``(len(Rs), len(xs))``."""
        return self.lhs / self.rhs

    @property
    def sup_ratios(self):
        """Per ``R``: the supremum of the ratio over the base points."""
        return self.ratios.max(axis=1)

    @property
    def spread(self):
        """``max_R / min_R`` of the per-``R`` supremum."""
        s = self.sup_ratios
        return float(s.max() / s.min())

    @property
    def verdict(self):
        if not self.cancellation_passed:
            return "FLAGGED"
        return "PASS" if self.spread < self.factor else "FAIL"


def weighted_plancherel_check(m0, disc, Rs=(1.0, 2.0, 4.0), r=4, p=2.0, xs=None,
                              cancellation_order=None):
    """Ratios ``LHS / RHS`` for every ``R`` in ``Rs`` and base point in ``xs``.

    ``cancellation_order`` (default ``r``) is the order of the cancellation
    condition that must hold at ``kappa = 0``; without it the verdict is
    ``FLAGGED`` rather than PASS or FAIL.
    """
    from .geometry import distance

    order = r if cancellation_order is None else cancellation_order
    canc = check_cancellation(m0, order, tau=np.full(m0.n1, 0.5 / m0.n1)).passed if order > 0 else True
    if xs is None:
        xs = [np.concatenate([[a], np.zeros(disc.n1 + disc.n2 - 1)]) for a in DEFAULT_OFFSETS]
    xs = [np.asarray(x, dtype=float) for x in xs]
    sob = sobolev_inf_norm(m0, r)
    gw = disc.grid_weights()
    lhs = np.empty((len(Rs), len(xs)))
    rhs = np.empty_like(lhs)
    for i, R in enumerate(Rs):
        m = scaled(m0, R)
        for j, x in enumerate(xs):
            k = compute_kernel(m, disc, point=x).values
            pts = _minimal_image_points(disc, x)
            w = (1 + R * distance(pts, x, disc.n1)) ** r
            vol = ball_growth(pts, 1.0 / R, disc.n1, disc.n2)
            integrand = np.abs(vol ** (0.5 - 1.0 / p) * w * k)
            if np.isinf(p):
                lhs[i, j] = float(integrand.max())
            else:
                lhs[i, j] = float(np.sum(gw * integrand ** p) ** (1.0 / p))
            rhs[i, j] = ball_growth(x, 1.0 / R, disc.n1, disc.n2) ** -0.5 * sob
    return PlancherelReport(float(p), int(r), list(map(float, Rs)), [x.tolist() for x in xs],
                            lhs, rhs, order, canc)


def product_profile(cancel_power=5, n1=1, n2=1):
    """``a(tau) b(kappa)`` supported in ``[-1, 1]^2``.

    ``a(tau) = bump(2 tau - 1)`` lives on ``(0, 1)``; ``b(kappa) =
    (2 kappa)^p bump(kappa)`` vanishes to order ``p`` at ``kappa = 0``
    (``p = 0`` gives a profile without cancellation).
    """
    import sympy as sp

    from .symbols import symbol_from_expr

    t = sp.symbols(f"t1:{n1 + 1}")
    k = sp.symbols(f"k1:{n2 + 1}")

    def sbump(s):
        return sp.Piecewise((sp.exp(1 - 1 / (1 - s ** 2)), s ** 2 < 1), (0, True))

    expr = sbump(2 * sum(t) - 1) * (2 * k[0]) ** cancel_power * sbump(k[0])
    return symbol_from_expr(expr, "tau_kappa", n1, n2, 64, f"product_profile({cancel_power})")
