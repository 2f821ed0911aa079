"""Symbols, symbol-class seminorms and Littlewood-Paley cut-offs.

A symbol is evaluated as ``m(x, eta)`` or ``m(x, tau, kappa)`` on numpy arrays.
``x`` has shape ``(..., n1 + n2)`` (first ``n1`` coordinates are ``x'``),
``eta`` has shape ``(...)``, ``tau`` has shape ``(..., n1)`` and ``kappa``
shape ``(..., n2)``.  Symbols that do not depend on ``x`` accept and ignore
``x=None``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

ARITIES = ("eta", "tau_kappa", "x_eta", "x_tau_kappa")


def _shape_of(x, spec):
    if len(spec) == 2:
        shapes = [np.shape(spec[0])[:-1], np.shape(spec[1])[:-1]]
    else:
        shapes = [np.shape(spec[0])]
    if x is not None:
        shapes.append(np.shape(x)[:-1])
    return np.broadcast_shapes(*shapes)


@dataclass(frozen=True)
class SymbolFn:
    """Black-box symbol with optional analytic derivatives.

    Parameters
    ----------
    arity : {"eta", "tau_kappa", "x_eta", "x_tau_kappa"}
    func : callable
        ``func(x, eta)`` or ``func(x, tau, kappa)``.
    n1, n2 : int
        Dimensions of ``x'`` and ``x''``.
    smoothness_order : int
        Number of derivatives the symbol is declared to have.
    derivs : callable, optional
        ``derivs(order)`` returns an evaluator of the partial derivative with
        the given orders, or ``None`` when not available.  ``order`` lists the
        orders in the ``x`` coordinates (only for x-dependent arities)
        followed by the spectral coordinates.
    terms : tuple, optional
        Separable form ``sum_r a_r(x) b_r(spec)`` as pairs ``(a_r, b_r)``;
        ``a_r`` is ``None`` for a constant spatial factor.  Operators use it
        as an exact fast path.
    """

    arity: str
    func: Callable
    n1: int = 1
    n2: int = 1
    smoothness_order: int = 8
    derivs: Optional[Callable] = None
    terms: Optional[tuple] = None
    name: str = "symbol"

    def __post_init__(self):
        if self.arity not in ARITIES:
            raise ValueError(f"unknown arity {self.arity!r}")

    @property
    def x_dependent(self):
        return self.arity.startswith("x_")

    @property
    def joint(self):
        return self.arity.endswith("tau_kappa")

    @property
    def n_spec(self):
        return self.n1 + self.n2 if self.joint else 1

    @property
    def n_x(self):
        return self.n1 + self.n2 if self.x_dependent else 0

    def __call__(self, x, *spec):
        val = self.func(x, *spec)
        return np.broadcast_to(val, _shape_of(x, spec))

    def times(self, spatial=None, spectral=None, name=None):
        """Pointwise product with a spatial and/or spectral factor.

        ``spatial(x)`` and ``spectral(*spec)`` are plain evaluators.  The
        separable representation is carried along when present.
        """
        f = self.func

        def func(x, *spec):
            val = f(x, *spec)
            if spatial is not None:
                val = val * spatial(x)
            if spectral is not None:
                val = val * spectral(*spec)
            return val

        terms = None
        if self.terms is not None:
            terms = tuple(
                (_mul_spatial(a, spatial), _mul_spectral(b, spectral)) for a, b in self.terms
            )
        arity = self.arity
        if spatial is not None and not self.x_dependent:
            arity = "x_" + arity
        return SymbolFn(
            arity, func, self.n1, self.n2, self.smoothness_order, None, terms,
            name or self.name,
        )

    def partial(self, order, x, *spec):
        """Partial derivative of the given order at the points ``(x, spec)``.

        Uses the analytic derivative when supplied, otherwise a central
        finite-difference stencil with one Richardson extrapolation.
        """
        order = tuple(int(o) for o in order)
        if len(order) != self.n_x + self.n_spec:
            raise ValueError("order has the wrong length")
        if not any(order):
            return np.asarray(self(x, *spec))
        if self.derivs is not None:
            d = self.derivs(order)
            if d is not None:
                return np.broadcast_to(d(x, *spec), _shape_of(x, spec))
        return finite_difference(self, order, x, *spec)


def _mul_spatial(a, b):
    if b is None:
        return a
    if a is None:
        return b
    return lambda x: a(x) * b(x)


def _mul_spectral(a, b):
    if b is None:
        return a
    return lambda *s: a(*s) * b(*s)


# ---------------------------------------------------------------------------
# finite differences


@lru_cache(maxsize=None)
def fd_weights(k):
    """Central stencil weights on offsets ``-p..p`` for the ``k``-th derivative.

    ``p = ceil(k / 2)`` so the stencil is second-order accurate.
    """
    p = max(1, (k + 1) // 2)
    offs = np.arange(-p, p + 1, dtype=float)
    A = np.vander(offs, increasing=True).T
    rhs = np.zeros(len(offs))
    rhs[k] = math.factorial(k)
    return offs, np.linalg.solve(A, rhs)


def fd_step(total_order):
    """Base step: 1e-4 up to second order, ``eps^(1/(k+4))`` beyond."""
    if total_order <= 2:
        return 1e-4
    return np.finfo(float).eps ** (1.0 / (total_order + 4))


def _pack(sym, x, spec):
    parts = []
    if sym.x_dependent:
        parts.append(np.asarray(x, dtype=float))
    if sym.joint:
        parts.append(np.asarray(spec[0], dtype=float))
        parts.append(np.asarray(spec[1], dtype=float))
    else:
        parts.append(np.asarray(spec[0], dtype=float)[..., None])
    shape = np.broadcast_shapes(*(p.shape[:-1] for p in parts))
    return np.concatenate([np.broadcast_to(p, shape + p.shape[-1:]) for p in parts], axis=-1)


def _unpack(sym, z):
    i = 0
    x = None
    if sym.x_dependent:
        x = z[..., : sym.n_x]
        i = sym.n_x
    if sym.joint:
        return x, (z[..., i: i + sym.n1], z[..., i + sym.n1:])
    return x, (z[..., i],)


def finite_difference(sym, order, x, *spec):
    """Tensor central difference of ``sym`` with one Richardson step."""
    z0 = _pack(sym, x, spec)
    total = sum(order)
    base = fd_step(total)
    axes = [i for i, o in enumerate(order) if o]

    def stencil(scale):
        acc = 0.0
        grids = [fd_weights(order[i]) for i in axes]
        steps = [base * scale * (1.0 + np.abs(z0[..., i])) for i in axes]
        for combo in itertools.product(*(range(len(g[0])) for g in grids)):
            z = z0.copy()
            w = 1.0
            for a, c, g, h in zip(axes, combo, grids, steps):
                z[..., a] = z0[..., a] + g[0][c] * h
                w = w * g[1][c] / h ** order[a]
            if np.all(np.asarray(w) == 0):
                continue
            xx, ss = _unpack(sym, z)
            acc = acc + w * np.asarray(sym(xx, *ss))
        return acc

    coarse = stencil(1.0)
    fine = stencil(0.5)
    return (4.0 * fine - coarse) / 3.0


# ---------------------------------------------------------------------------
# Grushin vector fields


def vector_field_count(n1, n2):
    return n1 + n1 * n2


def expand_vector_fields(gamma, n1, n2):
    """Write ``X^Gamma`` as ``sum_alpha p_alpha(x') d^alpha``.

    The fields are ordered ``X_1..X_{n1}`` (``X_j = d/dx'_j``) followed by
    ``X_{j,k} = x'_j d/dx''_k`` in row-major ``(j, k)`` order; ``X^Gamma`` is
    the ordered product.  Returns a dict ``alpha -> {power: coeff}`` where
    ``alpha`` indexes derivatives in ``(x', x'')`` and ``power`` the
    monomial in ``x'``.
    """
    seq = []
    for f, g in enumerate(gamma):
        seq.extend([f] * int(g))
    d = n1 + n2
    op = {(0,) * d: {(0,) * n1: 1.0}}
    for f in reversed(seq):
        new = {}
        for alpha, poly in op.items():
            if f < n1:
                j = f
                # derivative of the coefficient
                for pw, c in poly.items():
                    if pw[j]:
                        npw = pw[:j] + (pw[j] - 1,) + pw[j + 1:]
                        _add(new, alpha, npw, c * pw[j])
                na = alpha[:j] + (alpha[j] + 1,) + alpha[j + 1:]
                for pw, c in poly.items():
                    _add(new, na, pw, c)
            else:
                j, k = divmod(f - n1, n2)
                a = n1 + k
                na = alpha[:a] + (alpha[a] + 1,) + alpha[a + 1:]
                for pw, c in poly.items():
                    npw = pw[:j] + (pw[j] + 1,) + pw[j + 1:]
                    _add(new, na, npw, c)
        op = new
    return op


def _add(op, alpha, pw, c):
    poly = op.setdefault(alpha, {})
    poly[pw] = poly.get(pw, 0.0) + c


def _poly_eval(poly, xp):
    val = 0.0
    for pw, c in poly.items():
        term = c
        for j, p in enumerate(pw):
            if p:
                term = term * xp[..., j] ** p
        val = val + term
    return val


def apply_vector_fields(sym, gamma, spec_order, x, *spec):
    """``X^Gamma d_spec^order m`` evaluated at ``(x, spec)``."""
    op = expand_vector_fields(gamma, sym.n1, sym.n2)
    total = 0.0
    for alpha, poly in op.items():
        coef = _poly_eval(poly, np.asarray(x)[..., : sym.n1])
        if np.all(np.asarray(coef) == 0):
            continue
        total = total + coef * sym.partial(tuple(alpha) + tuple(spec_order), x, *spec)
    return total


# ---------------------------------------------------------------------------
# symbol classes and seminorms


@dataclass(frozen=True)
class SymbolClassParams:
    """Parameters ``(sigma, rho, delta, N)`` of a symbol class.

    ``scale="G"`` uses the weights of the class attached to ``G``; ``"sqrtG"``
    those of the class attached to ``sqrt(G)`` (and of the Hermite class when
    ``n2 = 0``).  Joint symbols use ``1 + |tau| + |kappa|`` in place of
    ``1 + eta`` with the ``G`` exponents.
    """

    sigma: float = 0.0
    rho: float = 1.0
    delta: float = 0.0
    N: int = 2
    scale: str = "G"

    def __post_init__(self):
        if not 0 <= self.rho <= 1 or not 0 <= self.delta <= 1:
            raise ValueError("rho and delta must lie in [0, 1]")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.scale not in ("G", "sqrtG"):
            raise ValueError("scale must be 'G' or 'sqrtG'")

    def exponent(self, l, g):
        if self.scale == "sqrtG":
            return -self.sigma + self.rho * l - self.delta * g
        return -self.sigma / 2 + (1 + self.rho) * l / 2 - self.delta * g / 2


@dataclass(frozen=True)
class Probes:
    """Cartesian probe lattice: ``x`` points times spectral points."""

    x: Optional[np.ndarray]
    spec: tuple

    def points(self, sym):
        """Broadcast the lattice into flat arrays ``(x, *spec)``."""
        ns = len(self.spec[0])
        if sym.x_dependent:
            nx = len(self.x)
            x = np.repeat(self.x, ns, axis=0)
            spec = tuple(np.tile(s, (nx,) + (1,) * (s.ndim - 1)) for s in self.spec)
            return x, spec
        x = None if self.x is None else self.x[:1].repeat(ns, axis=0)
        return x, self.spec


def make_probes(n1=1, n2=1, joint=False, x_box=(4.0, 4.0), spec_max=2.0 ** 12,
                n_x=9, n_spec=40, kappa_max=None):
    """Probe lattice: uniform in ``x`` over a box, log-spaced in ``eta``.

    ``x_box`` gives the half-widths in ``x'`` and ``x''``.  For joint symbols
    the spectral probes put ``tau`` on a log lattice along the diagonal and
    ``kappa`` on a log lattice in the first coordinate, both signs.
    """
    axes = [np.linspace(-x_box[0], x_box[0], n_x)] * n1 + [np.linspace(-x_box[1], x_box[1], n_x)] * n2
    x = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    eta = np.concatenate([[0.0], np.geomspace(1e-3, spec_max, n_spec - 1)])
    if not joint:
        return Probes(x, (eta,))
    kmax = spec_max if kappa_max is None else kappa_max
    tau1 = np.geomspace(1e-2, spec_max, n_spec)
    kap1 = np.geomspace(1e-3, kmax, max(2, n_spec // 4))
    kap1 = np.concatenate([kap1, -kap1])
    tt, kk = np.meshgrid(tau1, kap1, indexing="ij")
    tau = np.repeat(tt.ravel()[:, None], n1, axis=1)
    kappa = np.zeros((tt.size, n2))
    kappa[:, 0] = kk.ravel()
    return Probes(x, (tau, kappa))


@dataclass
class SeminormReport:
    value: float
    argmax: dict
    n_skipped: int = 0
    warnings: list = field(default_factory=list)

    def __float__(self):
        return float(self.value)


def _spec_orders(sym, l):
    if not sym.joint:
        yield (l,)
        return
    for o in itertools.product(range(l + 1), repeat=sym.n1 + sym.n2):
        if sum(o) == l:
            yield o


def _gammas(nf, g):
    for o in itertools.product(range(g + 1), repeat=nf):
        if sum(o) == g:
            yield o


def seminorm(m, params, probes):
    """Lattice supremum of the weighted derivatives defining the class seminorm.

    Returns a :class:`SeminormReport`.  Probes at which a derivative is not
    finite are skipped and reported.
    """
    x, spec = probes.points(m)
    if m.joint:
        size = 1.0 + np.linalg.norm(spec[0], axis=-1) + np.linalg.norm(spec[1], axis=-1)
    else:
        size = 1.0 + np.abs(spec[0])
    nf = vector_field_count(m.n1, m.n2) if m.x_dependent else 0
    best, arg = -np.inf, {}
    bad = np.zeros(size.shape, dtype=bool)
    notes = []
    for total in range(m_budget(m, params.N) + 1):
        for g in range(total + 1) if nf else [0]:
            l = total - g
            for gamma in _gammas(nf, g) if nf else [()]:
                for so in _spec_orders(m, l):
                    if nf:
                        vals = apply_vector_fields(m, gamma, so, x, *spec)
                    else:
                        vals = m.partial(so, x, *spec)
                    mag = np.abs(vals) * size ** params.exponent(l, g)
                    nan = ~np.isfinite(mag)
                    if nan.any():
                        bad |= nan
                        mag = np.where(nan, -np.inf, mag)
                    i = int(np.argmax(mag))
                    if mag.flat[i] > best:
                        best = float(mag.flat[i])
                        arg = {"gamma": tuple(gamma), "spec_order": tuple(so),
                               "x": None if x is None else np.asarray(x)[i].tolist(),
                               "spec": [np.asarray(s)[i].tolist() for s in spec]}
    if bad.any():
        msg = f"{int(bad.sum())} probe(s) gave non-finite derivatives and were skipped"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return SeminormReport(best, arg, int(bad.sum()), notes)


def m_budget(m, N):
    """Derivative budget actually probed: ``min(N, smoothness_order)``."""
    return min(int(N), int(m.smoothness_order))


# ---------------------------------------------------------------------------
# Littlewood-Paley


def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(eta):
    """``C^inf`` function equal to 1 on ``(-inf, 1]`` and 0 on ``[2, inf)``."""
    eta = np.asarray(eta, dtype=float)
    a = _h(2.0 - eta)
    b = _h(eta - 1.0)
    return a / (a + b)


def bump(t):
    """Standard mollifier ``exp(-1/(1-t^2))`` on ``(-1, 1)``, zero outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class LittlewoodPaleyFamily:
    """Dyadic partition ``psi_0, psi_1, psi_l(eta) = psi_1(2^-(l-1) eta)``.

    With ``phi = smooth_step``: ``psi_0(eta) = phi(2|eta|)`` and
    ``psi_1(eta) = phi(eta) - phi(2 eta)`` for ``eta >= 0``.  The partial sums
    telescope, ``sum_{l<=L} psi_l = phi(2^-(L-1) eta)``, so the partition is
    exact rather than approximate, and ``sum_{j in Z} psi_1(2^j s) = 1`` for
    ``s > 0``.
    """

    def psi0(self, eta):
        return smooth_step(2.0 * np.abs(eta))

    def psi1(self, eta):
        eta = np.asarray(eta, dtype=float)
        val = smooth_step(eta) - smooth_step(2.0 * eta)
        return np.where(eta > 0, val, 0.0)

    def psi(self, l, eta):
        if l == 0:
            return self.psi0(eta)
        return self.psi1(np.asarray(eta, dtype=float) * 2.0 ** (1 - l))

    def partial_sum(self, L, eta):
        return sum(self.psi(l, eta) for l in range(L + 1))

    def zeta(self, kappa_abs, S, lower=None):
        """``sum_{lower <= j <= S} psi_1(2^j |kappa|)``; ``lower=None`` means ``-inf``.

        Telescoping gives ``phi(2^lower s) - phi(2^(S+1) s)`` for ``s > 0``.
        """
        s = np.abs(np.asarray(kappa_abs, dtype=float))
        top = smooth_step(2.0 ** (S + 1) * s)
        low = 1.0 if lower is None else smooth_step(2.0 ** lower * s)
        return np.where(s > 0, low - top, 0.0)


def make_littlewood_paley():
    return LittlewoodPaleyFamily()


def _spectral_size(variant, spec):
    if variant == "eta":
        return np.abs(spec[0])
    if variant == "tau_l1":
        return np.sum(np.abs(spec[0]), axis=-1)
    if variant == "tau_kappa_l1":
        return np.sum(np.abs(spec[0]), axis=-1) + np.sum(np.abs(spec[1]), axis=-1)
    raise ValueError(f"unknown variant {variant!r}")


def dyadic_piece(m, l, lp, variant="tau_l1"):
    """``m * psi_l(size)`` where size is ``eta``, ``|tau|_1`` or ``|(tau, kappa)|_1``."""
    if l < 0:
        raise ValueError("l must be non-negative")
    if (variant == "eta") == m.joint:
        raise ValueError(f"variant {variant!r} does not match arity {m.arity!r}")
    return m.times(spectral=lambda *s: lp.psi(l, _spectral_size(variant, s)),
                   name=f"{m.name}*psi_{l}")


def kappa_cutoff(m, S, lp, chi=None, lower=None):
    """``chi(x) m(x, tau, kappa) zeta^S(kappa)``.

    ``zeta^S = sum_{j <= S} psi_1(2^j |kappa|)`` (or from ``lower``); ``chi`` is
    an optional spatial cut-off such as a partition element.
    """
    if S < 0:
        raise ValueError("S must be non-negative")
    if not m.joint:
        raise ValueError("kappa_cutoff needs a (tau, kappa) symbol")
    return m.times(spatial=chi,
                   spectral=lambda tau, kappa: lp.zeta(np.linalg.norm(kappa, axis=-1), S, lower),
                   name=f"{m.name}*zeta^{S}")


@dataclass
class CancellationReport:
    order: int
    passed: bool
    records: list

    def failures(self):
        return [r for r in self.records if not r["passed"]]


def check_cancellation(m, order, eps_path=None, tau=None, x=None, tol=1e-3):
    """Check ``d_kappa^beta m -> 0`` as ``kappa -> 0`` for ``|beta| <= order``.

    Each ``beta`` is followed along every coordinate axis of ``kappa``.  A
    record passes when the magnitudes do not increase along the path (up to
    roundoff slack) and the last one is below ``tol`` times the first (or
    below ``tol`` when the first is below 1).  The log-log decay rate is
    reported.
    """
    if not m.joint:
        raise ValueError("cancellation is a condition on (tau, kappa) symbols")
    if order > m.smoothness_order:
        raise ValueError("order exceeds the declared smoothness")
    eps = np.geomspace(1e-1, 1e-8, 15) if eps_path is None else np.asarray(eps_path, float)
    tau = np.ones(m.n1) if tau is None else np.asarray(tau, float)
    records = []
    for b in range(order + 1):
        for beta in itertools.product(range(b + 1), repeat=m.n2):
            if sum(beta) != b:
                continue
            for axis in range(m.n2):
                kappa = np.zeros((len(eps), m.n2))
                kappa[:, axis] = eps
                tt = np.broadcast_to(tau, (len(eps), m.n1))
                xx = None
                if m.x_dependent:
                    xx = np.broadcast_to(np.zeros(m.n1 + m.n2) if x is None else np.asarray(x, float),
                                         (len(eps), m.n1 + m.n2))
                order_vec = (0,) * m.n_x + (0,) * m.n1 + tuple(beta)
                mags = np.abs(m.partial(order_vec, xx, tt, kappa))
                slack = 1e-9 * max(1.0, float(mags[0]))
                mono = bool(np.all(np.diff(mags) <= slack))
                small = bool(mags[-1] <= tol * max(1.0, float(mags[0])))
                pos = mags > 0
                rate = float("nan")
                if pos.sum() >= 2:
                    rate = float(np.polyfit(np.log(eps[pos]), np.log(mags[pos]), 1)[0])
                records.append({"beta": tuple(beta), "axis": axis, "magnitudes": mags.tolist(),
                                "rate": rate, "passed": mono and small})
    return CancellationReport(order, all(r["passed"] for r in records), records)


# ---------------------------------------------------------------------------
# symbols from sympy expressions and the built-in registry


def symbol_from_expr(expr, arity, n1=1, n2=1, smoothness_order=8, name="symbol",
                     spatial_expr=None):
    """Build a :class:`SymbolFn` from a sympy expression with analytic derivatives.

    Variables: ``x1..x{n1}`` for ``x'``, ``y1..y{n2}`` for ``x''``, ``eta`` or
    ``t1..t{n1}`` and ``k1..k{n2}`` for ``(tau, kappa)``.  When
    ``spatial_expr`` is given the symbol is ``spatial_expr * expr`` with
    ``expr`` free of ``x`` and the separable fast path is recorded.
    """
    import sympy as sp

    xs = sp.symbols(f"x1:{n1 + 1}") + sp.symbols(f"y1:{n2 + 1}") if n2 else sp.symbols(f"x1:{n1 + 1}")
    if arity.endswith("tau_kappa"):
        spec_syms = sp.symbols(f"t1:{n1 + 1}") + sp.symbols(f"k1:{n2 + 1}")
    else:
        spec_syms = (sp.Symbol("eta"),)
    x_dep = arity.startswith("x_")
    full = expr if spatial_expr is None else spatial_expr * expr
    variables = (tuple(xs) if x_dep else ()) + tuple(spec_syms)
    joint = arity.endswith("tau_kappa")

    def make_eval(e):
        fn = sp.lambdify(variables, e, "numpy")

        def ev(x, *spec):
            args = []
            if x_dep:
                x = np.asarray(x, dtype=float)
                args.extend(x[..., i] for i in range(len(xs)))
            if joint:
                args.extend(np.asarray(spec[0], float)[..., i] for i in range(n1))
                args.extend(np.asarray(spec[1], float)[..., i] for i in range(n2))
            else:
                args.append(np.asarray(spec[0], float))
            return fn(*args)

        return ev

    @lru_cache(maxsize=None)
    def derivs(order):
        e = full
        for v, o in zip(variables, order):
            if o:
                e = sp.diff(e, v, o)
        return make_eval(e)

    terms = None
    if spatial_expr is not None:
        terms = ((make_eval_x(spatial_expr, xs), _spectral_only(expr, spec_syms, joint, n1, n2)),)
    elif not x_dep:
        ev = make_eval(full)
        terms = ((None, lambda *s: ev(None, *s)),)
    return SymbolFn(arity, make_eval(full), n1, n2, smoothness_order, derivs, terms, name)


def make_eval_x(e, xs):
    import sympy as sp

    fn = sp.lambdify(tuple(xs), e, "numpy")

    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(fn(*(x[..., i] for i in range(len(xs)))), x.shape[:-1])

    return ev


def _spectral_only(e, spec_syms, joint, n1, n2):
    import sympy as sp

    fn = sp.lambdify(tuple(spec_syms), e, "numpy")

    def ev(*spec):
        if joint:
            args = [np.asarray(spec[0], float)[..., i] for i in range(n1)]
            args += [np.asarray(spec[1], float)[..., i] for i in range(n2)]
            shape = np.broadcast_shapes(np.shape(spec[0])[:-1], np.shape(spec[1])[:-1])
        else:
            args = [np.asarray(spec[0], float)]
            shape = np.shape(spec[0])
        return np.broadcast_to(fn(*args), shape)

    return ev


def _syms(n1, n2):
    import sympy as sp

    x = sp.symbols(f"x1:{n1 + 1}")
    y = sp.symbols(f"y1:{n2 + 1}") if n2 else ()
    return sp, x, y


def constant(value=1.0, n1=1, n2=1, joint=False):
    """``m = value``."""
    import sympy as sp

    arity = "tau_kappa" if joint else "eta"
    return symbol_from_expr(sp.Float(value), arity, n1, n2, smoothness_order=64,
                            name=f"constant({value})")


def power_decay(a=1.0, n1=1, n2=1):
    """``m(eta) = (1 + eta)^(-a)``."""
    import sympy as sp

    eta = sp.Symbol("eta")
    return symbol_from_expr((1 + eta) ** (-sp.nsimplify(a)), "eta", n1, n2, 64, f"power_decay({a})")


def sinusoidal_x(eps=0.1, freq=1.0, n1=1, n2=1):
    """``m(x, eta) = sin(freq x'_1) (1 + eta)^(-eps)``."""
    sp, x, _ = _syms(n1, n2)
    eta = sp.Symbol("eta")
    return symbol_from_expr((1 + eta) ** (-sp.nsimplify(eps)), "x_eta", n1, n2, 64,
                            f"sinusoidal_x({eps})", spatial_expr=sp.sin(sp.nsimplify(freq) * x[0]))


def sin_kappa_power(power=4, decay=0.0, n1=1, n2=1, j=0):
    """``m(tau, kappa) = sin(kappa_j)^power (1 + |tau|_1)^(-decay)``."""
    import sympy as sp

    t = sp.symbols(f"t1:{n1 + 1}")
    k = sp.symbols(f"k1:{n2 + 1}")
    expr = sp.sin(k[j]) ** int(power) * (1 + sum(t)) ** (-sp.nsimplify(decay))
    return symbol_from_expr(expr, "tau_kappa", n1, n2, 64, f"sin_kappa_power({power})")


BUILTINS = {
    "constant": constant,
    "power-decay": power_decay,
    "sinusoidal-x": sinusoidal_x,
    "sin-kappa-power": sin_kappa_power,
}


def make_symbol(name, **params):
    """Instantiate a named built-in symbol."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown built-in symbol {name!r}; known: {sorted(BUILTINS)}") from None
    return factory(**params)
