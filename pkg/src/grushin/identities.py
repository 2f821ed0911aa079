"""Kernel identities, the dilation identity and heat-semigroup checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import GridFunction
from .geometry import ball_growth, distance
from .hermite import CoeffVector, apply_ladder, eval_scaled_hermite, multi_indices
from .operators import (CompiledOperator, FourierQuadrature, apply_grushin_pseudo, apply_hermite_pseudo,
                        apply_via_fourier_inversion, fourier_inversion_constant, heat_apply, heat_kernel)
from .symbols import SymbolFn

EPS = 1e-300


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / (np.max(np.abs(a)) + EPS))


def _tau_eval(m, tau, lam_mag, order=None):
    """``m`` (or ``d_tau^order m``) at ``tau`` with ``kappa = -|lam| e_1``."""
    tau = np.atleast_2d(tau)
    kappa = np.zeros((tau.shape[0], m.n2))
    if m.n2:
        kappa[:, 0] = -lam_mag
    if order is None:
        return np.asarray(m(None, tau, kappa))
    return np.asarray(m.partial(tuple(order) + (0,) * m.n2, None, tau, kappa))


# ---------------------------------------------------------------------------
# first |lam| derivative of the scaled Hermite multiplier kernel


@dataclass
class LambdaIdentityReport:
    lhs: float
    terms: list
    residual: float
    h: float

    @property
    def rhs(self):
        return float(sum(self.terms))


def _kernel_sum(m, lam_mag, xp, yp, mus):
    tau = (2 * np.array(mus) + 1) * lam_mag
    vals = _tau_eval(m, tau, lam_mag)
    return sum(v * eval_scaled_hermite(mu, lam_mag, xp) * eval_scaled_hermite(mu, lam_mag, yp)
               for v, mu in zip(vals, mus) if v != 0)


def kernel_identity_lambda_N1(m, lam_mag=1.0, xp=(0.3,), yp=(-0.7,), h=1e-4, mu_max=60):
    """Residual of the first ``|lam|``-derivative identity ``I1 + ... + I5``.

    The left side is the central difference of
    ``sum_mu m((2 mu + 1)|lam|) Phi_mu(x') Phi_mu(y')`` in ``|lam|``; ``m`` is
    a joint symbol, evaluated with ``kappa = -|lam| e_1`` held fixed.
    """
    xp, yp = np.asarray(xp, float), np.asarray(yp, float)
    n1 = xp.size
    mus = [tuple(mu) for mu in multi_indices(n1, mu_max)]
    # m depends on |lam| only through tau in this identity
    lhs = (_kernel_sum(m, lam_mag + h, xp, yp, mus) - _kernel_sum(m, lam_mag - h, xp, yp, mus)) / (2 * h)
    tau = (2 * np.array(mus) + 1) * lam_mag
    mv = _tau_eval(m, tau, lam_mag)
    phi = lambda mu, z: eval_scaled_hermite(mu, lam_mag, z)
    I = [0.0] * 5
    for k, mu in enumerate(mus):
        for j in range(n1):
            e = np.zeros(n1, dtype=int)
            e[j] = 1
            dm = _tau_eval(m, tau[k:k + 1], lam_mag, order=tuple(e))[0]
            I[0] += (2 * mu[j] + 1) * dm * phi(mu, xp) * phi(mu, yp)
            if mv[k] == 0:
                continue
            up = tuple(np.array(mu) + 2 * e)
            down = tuple(np.array(mu) - 2 * e)
            cu = math.sqrt((mu[j] + 1) * (mu[j] + 2)) * mv[k] / (4 * lam_mag)
            cd = math.sqrt(mu[j] * (mu[j] - 1)) * mv[k] / (4 * lam_mag)
            I[1] -= cu * phi(up, xp) * phi(mu, yp)
            I[2] += cd * phi(down, xp) * phi(mu, yp) if mu[j] >= 2 else 0.0
            I[3] -= cu * phi(mu, xp) * phi(up, yp)
            I[4] += cd * phi(mu, xp) * phi(down, yp) if mu[j] >= 2 else 0.0
    I = [float(np.real(t)) for t in I]
    lhs = float(np.real(lhs))
    return LambdaIdentityReport(lhs, I, abs(lhs - sum(I)) / (abs(lhs) + 1e-15), h)


def gaussian_tau_bump(center=5.0, width=1.0, n1=1, n2=1):
    """``exp(-(|tau|_1 - center)^2 / width^2)`` as a joint symbol."""
    import sympy as sp

    from .symbols import symbol_from_expr

    t = sp.symbols(f"t1:{n1 + 1}")
    expr = sp.exp(-((sum(t) - center) / width) ** 2)
    return symbol_from_expr(expr, "tau_kappa", n1, n2, 64, f"gaussian_tau({center})")


# ---------------------------------------------------------------------------
# (x' - y') and non-commutative derivatives


def ladder_matrices(n1, K, lam_mag):
    """Matrices of ``A_j`` and ``A_j^*`` on the span of ``|mu| <= K`` (creation truncated)."""
    n = len(multi_indices(n1, K))
    eye = CoeffVector(n1, K, np.eye(n))
    A, Ad = [], []
    for j in range(n1):
        A.append(apply_ladder("annihilate", j, lam_mag, eye).values.T)
        Ad.append(apply_ladder("create", j, lam_mag, eye).truncate(K).values.T)
    return A, Ad


def noncommutative_difference(M, A, Ad, lam_mag):
    """``(delta_bar - delta) M / (2 |lam|^(1/2))`` with
    ``delta M = |lam|^(-1/2) [M, A]`` and ``delta_bar M = |lam|^(-1/2) [A*, M]``."""
    s = math.sqrt(lam_mag)
    delta = (M @ A - A @ M) / s
    delta_bar = (Ad @ M - M @ Ad) / s
    return (delta_bar - delta) / (2 * s)


def _basis_values(n1, K, lam_mag, pts):
    return np.stack([eval_scaled_hermite(mu, lam_mag, pts) for mu in multi_indices(n1, K)], axis=-1)


@dataclass
class CommutatorReport:
    order: int
    residual: float
    margin: int
    lhs_max: float


def kernel_identity_xy(m, j=0, lam_mag=1.0, K=32, order=1, n1=1, points=None, margin=None):
    """``(x'_j - y'_j)^order k(x', y')`` against the iterated commutator kernel.

    ``k`` is the kernel of ``m(H(lam))`` with ``H(lam)`` truncated at ``|mu| <= K``.
    The commutators are assembled on the span of ``|mu| <= K + margin``
    (``margin = 2 order`` by default) so that no ladder step leaves it.
    """
    margin = 2 * order if margin is None else margin
    Kb = K + margin
    mus = np.array(multi_indices(n1, Kb))
    tau = (2 * mus + 1) * lam_mag
    mv = _tau_eval(m, tau, lam_mag)
    mv = np.where(mus.sum(axis=1) <= K, mv, 0.0)
    M = np.diag(mv.astype(complex))
    A, Ad = ladder_matrices(n1, Kb, lam_mag)
    C = M
    for _ in range(order):
        C = noncommutative_difference(C, A[j], Ad[j], lam_mag)
    if points is None:
        g = np.linspace(-3.0, 3.0, 41)
        grids = np.meshgrid(*([g] * n1), indexing="ij")
        points = np.stack([a.ravel() for a in grids], axis=-1)
    B = _basis_values(n1, Kb, lam_mag, points)
    kern = B @ M @ B.T
    lhs = (points[:, None, j] - points[None, :, j]) ** order * kern
    rhs = B @ C @ B.T
    return CommutatorReport(order, _rel(lhs, rhs), margin, float(np.max(np.abs(lhs))))


# ---------------------------------------------------------------------------
# dilation


def _power_of_two(t2):
    k = round(math.log2(t2))
    return abs(t2 - 2.0 ** k) <= 1e-12 * t2


def dilation_identity_check(m, disc, t, mode="joint", seed=0, n_probes=4, piece=None):
    """Residual of ``delta_{1/t} T delta_t = T_t`` with ``m_t = m(delta_{1/t} x, t^2 .)``.

    For ``mode="sqrtG"`` the spectral argument scales by ``t`` instead.

    ``delta_t f (x) = f(t x', t^2 x'')``.  On ``disc.dilated(t)`` the grid
    index ``(p, q)`` is the point ``delta_{1/t}`` of index ``(p, q)`` of
    ``disc``, so both dilations are index identities and the left side is the
    operator with symbol ``m`` applied on the dilated discretization.
    ``piece`` optionally multiplies ``m`` by a spectral cut-off first.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not _power_of_two(t * t):
        raise ValueError("t^2 must be a power of two so the lattices match")
    if piece is not None:
        m = piece(m)
    big = disc.dilated(t)
    s = t * t
    # sqrt(G) scales like t, G and (tau, kappa) like t^2
    spec_scale = t if mode == "sqrtG" else s

    def shrink(x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([x[..., : m.n1] / t, x[..., m.n1:] / s], axis=-1)

    def func(x, *spec):
        return m(None if x is None else shrink(x), *(np.asarray(a) * spec_scale for a in spec))

    # keep the separable form so both sides take the same code path
    terms = None
    if m.terms is not None:
        terms = tuple((None if a is None else (lambda x, a=a: a(shrink(x))),
                       lambda *spec, b=b: b(*(np.asarray(v) * spec_scale for v in spec)))
                      for a, b in m.terms)
    mt = SymbolFn(m.arity, func, m.n1, m.n2, m.smoothness_order, None, terms, f"{m.name}_t")
    rng = np.random.default_rng(seed)
    c = disc.random_coeffs(rng, size=(n_probes,))
    f = disc.backward_array(c)
    lhs = CompiledOperator(m, big, mode).apply_array(f)
    rhs = CompiledOperator(mt, disc, mode).apply_array(f)
    res = float(np.max(disc.norm(lhs - rhs) / (disc.norm(rhs) + EPS)))
    return res


# ---------------------------------------------------------------------------
# heat semigroup


def heat_semigroup_residual(disc, t1=0.5, t2=1.5, seed=0):
    rng = np.random.default_rng(seed)
    f = GridFunction(disc, disc.backward_array(disc.random_coeffs(rng)))
    a = heat_apply(t1, heat_apply(t2, f)).values
    b = heat_apply(t1 + t2, f).values
    return float(disc.norm(a - b) / (disc.norm(b) + EPS))


@dataclass
class HeatReport:
    t: float
    min_value: float
    max_value: float
    b: float
    C: float
    r2: float
    n_pairs: int

    @property
    def relative_min(self):
        return self.min_value / self.max_value


def heat_gaussian_fit(disc, t=4.0, base=None, floor=1e-8):
    """Positivity of ``p_t`` and the fitted Gaussian bound.

    Fits ``log p_t(x, y) + log |B(x, sqrt t)| ~ log C - b d(x, y)^2 / t`` by
    least squares over pairs with ``p_t > floor * max p_t``, then raises
    ``log C`` so that the bound holds at every pair.
    """
    if base is None:
        base = [(disc.Np // 2, 0), (disc.Np // 2 + disc.Np // 8, 0)]
    pts = disc.points()
    vals, xs, rows = [], [], []
    for idx in base:
        row = heat_kernel(t, disc, x_index=idx)
        vals.append(row.values.real)
        xs.append(row.x)
        rows.append(row)
    vmin = float(min(v.min() for v in vals))
    vmax = float(max(v.max() for v in vals))
    ys, zs = [], []
    for v, x in zip(vals, xs):
        diff = pts[..., disc.n1:] - x[disc.n1:]
        image = pts.copy()
        image[..., disc.n1:] = x[disc.n1:] + diff - disc.L2 * np.round(diff / disc.L2)
        keep = v > floor * vmax
        d = distance(image[keep], x, disc.n1)
        vol = ball_growth(x, math.sqrt(t), disc.n1, disc.n2)
        ys.append(np.log(v[keep]) + math.log(vol))
        zs.append(d ** 2 / t)
    y, z = np.concatenate(ys), np.concatenate(zs)
    slope, icpt = np.polyfit(z, y, 1)
    pred = slope * z + icpt
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    b = float(-slope)
    logC = float(np.max(y + b * z))
    return HeatReport(float(t), vmin, vmax, b, math.exp(logC), r2, int(y.size))


# ---------------------------------------------------------------------------
# spectral route against the Fourier-inversion route


@dataclass
class EquivalenceReport:
    symbol: str
    residuals: list
    constants: list

    @property
    def max_residual(self):
        return max(self.residuals)

    @property
    def max_constant(self):
        return max(self.constants)


def sparse_test_elements(disc, count, modes_per=6, seed=0, K=None, eta_max=None):
    """Random finite combinations of ``Phi_mu^lam(x') e^(-i lam x'')``.

    Modes are drawn from ``|mu| <= K`` and, when given, ``eta <= eta_max``.
    """
    rng = np.random.default_rng(seed)
    K = disc.K if K is None else K
    ok = np.broadcast_to(disc.degree <= K, disc.coeff_shape)
    if eta_max is not None:
        ok = ok & (disc.eta() <= eta_max)
    allowed = np.flatnonzero(ok.ravel())
    out = []
    for _ in range(count):
        c = np.zeros(disc.coeff_shape, dtype=complex).ravel()
        pick = rng.choice(allowed, size=min(modes_per, allowed.size), replace=False)
        c[pick] = rng.standard_normal(pick.size) + 1j * rng.standard_normal(pick.size)
        out.append(GridFunction(disc, disc.backward_array(c.reshape(disc.coeff_shape))))
    return out


def definition_equivalence(m, disc, R, count=20, seed=0, quad=None, mode="sqrtG"):
    """Spectral route against the Fourier-inversion route on ``count`` test elements.

    The test elements use modes whose spectral argument is at most ``1.5 R``,
    so that both the support of ``m`` and its complement are exercised.
    Residuals are ``||a - b|| / ||f||``.
    """
    quad = FourierQuadrature() if quad is None else quad
    cap = (1.5 * R) ** 2 if mode == "sqrtG" else 1.5 * R
    fs = sparse_test_elements(disc, count, seed=seed, eta_max=cap)
    f = GridFunction(disc, np.stack([g.values for g in fs]))
    a = apply_grushin_pseudo(m, f, mode) if disc.n2 else apply_hermite_pseudo(m, f)
    b = apply_via_fourier_inversion(m, f, R, quad, mode)
    res = disc.norm(a.values - b.values) / (disc.norm(f.values) + EPS)
    consts = fourier_inversion_constant(m, f, b, R)
    return EquivalenceReport(m.name, [float(r) for r in res], [float(c) for c in np.atleast_1d(consts)])


def compact_symbols(R=4.0, n1=1, n2=1):
    """Three symbols supported in ``|eta| <= R``: C^2, C^infinity and x-dependent."""
    import sympy as sp

    from .symbols import symbol_from_expr

    eta = sp.Symbol("eta")
    x1 = sp.Symbol("x1")
    u = eta / R
    c2 = sp.Piecewise(((1 - u ** 2) ** 3, u ** 2 < 1), (0, True))
    smooth = sp.Piecewise((sp.exp(1 - 1 / (1 - u ** 2)), u ** 2 < 1), (0, True))
    return [
        symbol_from_expr(c2, "eta", n1, n2, 2, "c2_cubic"),
        symbol_from_expr(smooth * sp.cos(3 * u), "eta", n1, n2, 64, "smooth_bump"),
        symbol_from_expr(c2 * (1 + u), "x_eta", n1, n2, 2, "x_cubic", spatial_expr=sp.cos(x1) + 2),
    ]
