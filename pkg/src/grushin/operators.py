"""Pseudo-multipliers, the Fourier-inversion route, kernels and the heat semigroup.

Every operator acts on the band of a :class:`~grushin.discretization.Discretization`:
the input is expanded in the orthonormal modes ``(lam, mu)`` and the symbol
is evaluated at the spectral parameters of each mode,

* ``mode="sqrtG"``: ``m(x, sqrt((2|mu|+n1)|lam|))``
* ``mode="G"``: ``m(x, (2|mu|+n1)|lam|)``
* ``mode="joint"``: ``m(x, (2 mu + 1)|lam|, -lam)``.

For symbols depending on ``x`` the product with ``m`` is taken after each
spectral shell has been reconstructed on the grid.  Separable symbols
``sum_r a_r(x) b_r(spec)`` use the exact identity
``T f = sum_r a_r backward(b_r forward(f))`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import GridFunction, forward
from .geometry import ball_growth
from .hermite import eval_scaled_hermite

MODES = ("sqrtG", "G", "joint")


def _check_mode(sym, mode):
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if (mode == "joint") != sym.joint:
        raise ValueError(f"symbol arity {sym.arity!r} does not match mode {mode!r}")


class CompiledOperator:
    """A pseudo-multiplier bound to a discretization.

    Parameters
    ----------
    sym : SymbolFn
    disc : Discretization
    mode : {"sqrtG", "G", "joint"}
    degree_cutoff : int, optional
        Drop modes with ``|mu|`` above this value.
    force_shells : bool
        Ignore the separable representation and use the shell-by-shell path.
    """

    def __init__(self, sym, disc, mode="sqrtG", degree_cutoff=None, force_shells=False):
        _check_mode(sym, mode)
        self.sym, self.disc, self.mode = sym, disc, mode
        self.args = disc.mode_arguments(mode)
        self.mask = np.ones(disc.coeff_shape, dtype=bool)
        if degree_cutoff is not None:
            self.mask &= (disc.degree <= degree_cutoff)[None, :]
        self._points = None
        self.separable = sym.terms is not None and not force_shells
        if self.separable:
            self.factors = []
            for a, b in sym.terms:
                spec = np.asarray(b(*self.args), dtype=complex) * self.mask
                spatial = None if a is None else np.asarray(a(self.points), dtype=complex)
                self.factors.append((spatial, spec))
        else:
            self._build_shells()

    @property
    def points(self):
        if self._points is None:
            self._points = self.disc.points()
        return self._points

    @property
    def x_dependent(self):
        return self.sym.x_dependent

    def _build_shells(self):
        disc = self.disc
        li, mj = np.nonzero(self.mask)
        if self.mode == "joint":
            keys = [(i, j) for i, j in zip(li, mj)]
            groups = {k: [k] for k in keys}
            values = {k: (self.args[0][k], self.args[1][k]) for k in keys}
        else:
            eta = self.args[0]
            groups, values = {}, {}
            for i, j in zip(li, mj):
                key = round(float(eta[i, j]), 12)
                groups.setdefault(key, []).append((i, j))
                values[key] = (eta[i, j],)
        self.shell_keys = sorted(groups)
        self.shell_modes = [np.array(groups[k]) for k in self.shell_keys]
        self.shell_args = [values[k] for k in self.shell_keys]
        xpp = disc.xpp_points()
        self.plane = np.exp(-1j * disc.lattice @ xpp.T) if disc.n2 else np.ones((1, 1))

    def _shell_symbol(self, start, stop):
        """Symbol values on the grid for shells ``start:stop``: shape ``(Np, Npp, n)``."""
        args = self.shell_args[start:stop]
        x = self.points[:, :, None, :]
        if self.mode == "joint":
            tau = np.array([a[0] for a in args])[None, None]
            kappa = np.array([a[1] for a in args])[None, None]
            return np.asarray(self.sym(x, tau, kappa))
        eta = np.array([a[0] for a in args])[None, None]
        return np.asarray(self.sym(x, eta))

    def _shell_parts(self, modes):
        disc = self.disc
        V = np.stack([disc.basis(i)[:, j] for i, j in modes], axis=1)
        E = self.plane[modes[:, 0]]
        return V, E

    def apply_array(self, values):
        disc = self.disc
        coeffs = disc.forward_array(values)
        return self.apply_coeffs(coeffs)

    def apply_coeffs(self, coeffs):
        disc = self.disc
        if self.separable:
            out = 0.0
            for spatial, spec in self.factors:
                g = disc.backward_array(coeffs * spec)
                out = out + (g if spatial is None else g * spatial)
            return np.broadcast_to(out, coeffs.shape[:-2] + disc.grid_shape).astype(complex)
        out = np.zeros(coeffs.shape[:-2] + disc.grid_shape, dtype=complex)
        chunk = 32
        for start in range(0, len(self.shell_modes), chunk):
            stop = min(start + chunk, len(self.shell_modes))
            mvals = self._shell_symbol(start, stop)
            for u in range(start, stop):
                modes = self.shell_modes[u]
                V, E = self._shell_parts(modes)
                c = coeffs[..., modes[:, 0], modes[:, 1]]
                shell = np.einsum("...e,pe,eq->...pq", c, V, E)
                out += mvals[:, :, u - start] * shell
        return out

    def adjoint_array(self, values):
        disc = self.disc
        values = disc.check_grid(values)
        if self.separable:
            out = 0.0
            for spatial, spec in self.factors:
                g = values if spatial is None else values * np.conj(spatial)
                out = out + disc.backward_array(disc.forward_array(g) * np.conj(spec))
            return out
        coeffs = np.zeros(values.shape[:-2] + disc.coeff_shape, dtype=complex)
        wg = values * disc.grid_weights()
        chunk = 32
        for start in range(0, len(self.shell_modes), chunk):
            stop = min(start + chunk, len(self.shell_modes))
            mvals = self._shell_symbol(start, stop)
            for u in range(start, stop):
                modes = self.shell_modes[u]
                V, E = self._shell_parts(modes)
                h = wg * np.conj(mvals[:, :, u - start])
                coeffs[..., modes[:, 0], modes[:, 1]] = np.einsum("...pq,pe,eq->...e", h, V, np.conj(E))
        return disc.backward_array(coeffs / disc.volume_x2)

    def multiplier(self):
        """Coefficient-space multiplier of an x-independent symbol."""
        if self.x_dependent:
            raise ValueError("symbol depends on x")
        if self.separable:
            return sum(spec for _, spec in self.factors)
        vals = np.zeros(self.disc.coeff_shape, dtype=complex)
        for modes, args in zip(self.shell_modes, self.shell_args):
            vals[modes[:, 0], modes[:, 1]] = np.asarray(self.sym(None, *args))
        return vals

    def __call__(self, f):
        out = GridFunction(self.disc, self.apply_array(f.values))
        out.meta["input_out_of_band_fraction"] = forward(f).meta["out_of_band_fraction"]
        return out


def apply_pseudo(m, f, mode="sqrtG", degree_cutoff=None, force_shells=False):
    """Apply ``m`` to the grid function ``f`` in the given functional calculus."""
    return CompiledOperator(m, f.disc, mode, degree_cutoff, force_shells)(f)


def apply_hermite_pseudo(m, f, K=None, force_shells=False):
    """``sum_{k <= K} m(x, sqrt(2k + n)) P_k f`` (needs an ``n2 = 0`` discretization)."""
    if f.disc.n2:
        raise ValueError("the Hermite calculus needs a discretization with n2 = 0")
    if K is not None and K > f.disc.K:
        raise ValueError("K exceeds the discretization cutoff")
    return apply_pseudo(m, f, "sqrtG", K, force_shells)


def apply_grushin_pseudo(m, f, mode="sqrtG", force_shells=False):
    """``m(x, sqrt(G)) f`` (``mode="sqrtG"``) or ``m(x, G) f`` (``mode="G"``)."""
    if mode not in ("sqrtG", "G"):
        raise ValueError("mode must be 'sqrtG' or 'G'")
    return apply_pseudo(m, f, mode, force_shells=force_shells)


def apply_joint_pseudo(m, f, force_shells=False):
    """``m(x, L, U) f`` with ``(tau, kappa) = ((2 mu + 1)|lam|, -lam)``."""
    return apply_pseudo(m, f, "joint", force_shells=force_shells)


def apply_multiplier(values, f):
    """Multiply the coefficients of ``f`` by ``values`` (shape ``(n_lam, n_mu)``)."""
    disc = f.disc
    return GridFunction(disc, disc.backward_array(disc.forward_array(f.values) * values))


# ---------------------------------------------------------------------------
# Fourier-inversion route


@dataclass(frozen=True)
class FourierQuadrature:
    """Trapezoid rules for ``m_hat(x, xi) = (2 pi)^(-1/2) int m(x, eta) e^(-i eta xi) d eta``
    on ``[-R, R]`` and for the ``xi`` integral on ``[-omega, omega]``.

    ``n_eta=None`` picks the ``eta`` step so that the computed ``m_hat`` (periodic
    in ``xi`` with period ``2 pi / step``) is not aliased on ``[-omega, omega]``.
    """

    n_eta: int | None = None
    omega: float = 100.0
    n_xi: int = 801
    chunk: int = 64

    def eta_rule(self, R):
        n = self.n_eta
        if n is None:
            n = max(257, int(math.ceil(8 * R * self.omega / (2 * math.pi))) + 1)
            n += 1 - n % 2
        eta = np.linspace(-R, R, n)
        w = np.full(n, eta[1] - eta[0])
        w[0] = w[-1] = w[0] / 2
        return eta, w

    def xi_rule(self):
        xi = np.linspace(-self.omega, self.omega, self.n_xi)
        w = np.full(self.n_xi, xi[1] - xi[0])
        w[0] = w[-1] = w[0] / 2
        return xi, w


def _check_support(m, R, points):
    probe = np.concatenate([np.linspace(-4 * R, -R, 64), np.linspace(R, 4 * R, 64)])
    x = None if not m.x_dependent else points.reshape(-1, points.shape[-1])[:: max(1, points.size // 4096)]
    if x is None:
        vals = np.asarray(m(None, probe))
    else:
        vals = np.asarray(m(x[:, None, :], probe[None, :]))
    if np.any(vals != 0):
        raise ValueError(f"symbol is not supported in [-{R}, {R}]")


def fourier_transform_symbol(m, x, R, quad):
    """``m_hat(x, xi)`` on the ``xi`` nodes of ``quad``: shape ``x.shape[:-1] + (n_xi,)``."""
    eta, w = quad.eta_rule(R)
    xi, _ = quad.xi_rule()
    if x is None:
        vals = np.asarray(m(None, eta), dtype=complex)
    else:
        vals = np.asarray(m(x[..., None, :], eta), dtype=complex)
    kern = (w[:, None] * np.exp(-1j * eta[:, None] * xi[None, :])) / math.sqrt(2 * math.pi)
    return vals @ kern


def apply_via_fourier_inversion(m, f, R, quad=None, mode="sqrtG"):
    """``(2 pi)^(-1/2) int m_hat(x, xi) exp(i xi sqrt(L)) f d xi``.

    ``L`` is ``G`` (Grushin backend) or the Hermite operator when the
    discretization has ``n2 = 0``.  ``exp(i xi sqrt(L))`` acts on each mode by
    the phase ``exp(i xi s)`` with ``s`` the square root of its eigenvalue
    (``mode="sqrtG"``) or the eigenvalue itself (``mode="G"``).  ``m`` must
    vanish outside ``[-R, R]`` in ``eta``.  ``f.values`` may carry leading
    batch axes.
    """
    if m.joint:
        raise ValueError("the Fourier-inversion route takes an m(x, eta) symbol")
    if mode not in ("sqrtG", "G"):
        raise ValueError("mode must be 'sqrtG' or 'G'")
    quad = FourierQuadrature() if quad is None else quad
    disc = f.disc
    points = disc.points()
    _check_support(m, R, points)
    s = disc.mode_arguments(mode)[0]
    period = 2 * math.pi * (quad.n_xi - 1) / (2 * quad.omega)
    if period <= R + float(np.max(s)):
        raise ValueError("xi step too coarse: aliased copies of m reach the spectrum; "
                         "raise n_xi or lower omega")
    coeffs = disc.forward_array(f.values)
    xi, wxi = quad.xi_rule()
    eta, weta = quad.eta_rule(R)
    if m.x_dependent:
        mvals = np.asarray(m(points[:, :, None, :], eta[None, None, :]), dtype=complex)
    else:
        mvals = np.asarray(m(None, eta), dtype=complex)
    out = np.zeros(coeffs.shape[:-2] + disc.grid_shape, dtype=complex)
    # without x-dependence the xi sum of the phases commutes with synthesis
    mult = np.zeros(disc.coeff_shape, dtype=complex)
    for start in range(0, len(xi), quad.chunk):
        sl = slice(start, start + quad.chunk)
        kern = (weta[:, None] * np.exp(-1j * eta[:, None] * xi[None, sl])) / math.sqrt(2 * math.pi)
        mhat = mvals @ kern
        phases = np.exp(1j * xi[sl, None, None] * s[None])
        if m.x_dependent:
            waves = disc.backward_array(coeffs[..., None, :, :] * phases)
            out += np.einsum("pqk,...kpq->...pq", mhat * wxi[sl], waves)
        else:
            mult += np.einsum("k,kab->ab", mhat * wxi[sl], phases)
    if not m.x_dependent:
        out = disc.backward_array(coeffs * mult)
    return GridFunction(disc, out / math.sqrt(2 * math.pi))


def sup_eta_derivatives(m, R, points=None, orders=(0, 1, 2), n_eta=513):
    """``sup |d_eta^j m|`` over ``[-R, R]`` (and the given points) for each ``j``."""
    eta = np.linspace(-R, R, n_eta)
    out = []
    for j in orders:
        if m.x_dependent:
            x = points.reshape(-1, points.shape[-1])
            vals = m.partial((0,) * m.n_x + (j,), x[:, None, :], eta[None, :])
        else:
            vals = m.partial((j,), None, eta)
        out.append(float(np.max(np.abs(vals))))
    return out


def fourier_inversion_constant(m, f, out, R):
    """Measured ``C`` in ``||T f|| <= C R sum_{j<=2} ||d^j m||_inf ||f||``."""
    sups = sup_eta_derivatives(m, R, f.disc.points() if m.x_dependent else None)
    ratio = np.asarray(out.norm()) / np.maximum(R * sum(sups) * np.asarray(f.norm()), 1e-300)
    return float(ratio) if ratio.ndim == 0 else ratio


# ---------------------------------------------------------------------------
# kernels


@dataclass
class KernelRow:
    """``k(x, y)`` for a fixed ``x`` over all grid points ``y`` (shape ``(Np, Npp)``)."""

    disc: object
    x: np.ndarray
    values: np.ndarray

    def apply(self, f):
        """``int k(x, y) f(y) dy`` by grid quadrature."""
        return np.sum(self.disc.grid_weights() * self.values * f.values, axis=(-2, -1))

    def to_csv(self, path):
        pts = self.disc.points().reshape(-1, self.disc.n1 + self.disc.n2)
        vals = self.values.ravel()
        cols = [f"y{i}" for i in range(pts.shape[1])] + ["re", "im"]
        data = np.column_stack([pts, vals.real, vals.imag])
        np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="")


def _basis_at(disc, x_index=None, point=None):
    """``Phi_mu^lam(x')`` for all modes at one ``x'``: shape ``(n_lam, n_mu)``."""
    if x_index is not None:
        p = x_index[0]
        return np.stack([disc.basis(i)[p] for i in range(disc.n_lam)])
    xp = np.asarray(point, dtype=float)[: disc.n1]
    out = np.empty(disc.coeff_shape)
    for d, mag in enumerate(disc.distinct_mags):
        row = [eval_scaled_hermite(mu, float(mag), xp) for mu in disc.mu]
        out[disc.groups[d]] = np.array(row, dtype=float)
    return out


def compute_kernel(F, disc, x_index=None, point=None, mode="joint"):
    """Row ``y -> k(x, y)`` of the kernel of the x-independent multiplier ``F``.

    ``k(x, y) = L''^(-n2) sum_{lam, mu} F(mode args) Phi_mu^lam(x') Phi_mu^lam(y')
    exp(-i lam.(x'' - y''))``, the lattice quadrature of the kernel formula.
    ``x`` is a grid index ``(p, q)`` or an arbitrary ``point``.
    """
    if F.x_dependent:
        raise ValueError("kernel rows are computed for x-independent symbols")
    mult = CompiledOperator(F, disc, mode).multiplier()
    if x_index is not None:
        x = disc.points()[x_index[0], x_index[1]]
    else:
        x = np.asarray(point, dtype=float)
    phi_x = _basis_at(disc, x_index, point)
    coeffs = mult * phi_x
    if disc.n2:
        coeffs = coeffs * np.exp(-1j * disc.lattice @ x[disc.n1:])[:, None]
    # y -> sum c Phi(y') exp(+i lam.y'') is the conjugate synthesis of conj(c)
    row = np.conj(disc.backward_array(np.conj(coeffs))) / disc.volume_x2
    return KernelRow(disc, x, row)


def heat_multiplier(disc, t):
    if not t > 0:
        raise ValueError("t must be positive")
    return np.exp(-t * disc.eta())


def heat_apply(t, f):
    """``exp(-t G) f`` via the multiplier ``exp(-t (2|mu| + n1)|lam|)``."""
    return apply_multiplier(heat_multiplier(f.disc, t), f)


def heat_symbol(t, n1=1, n2=1):
    from .symbols import SymbolFn

    if not t > 0:
        raise ValueError("t must be positive")

    def func(x, tau, kappa):
        return np.exp(-t * np.sum(tau, axis=-1))

    return SymbolFn("tau_kappa", func, n1, n2, 64, None,
                    ((None, lambda tau, kappa: np.exp(-t * np.sum(tau, axis=-1))),), f"heat({t})")


def heat_kernel(t, disc, x_index=None, point=None, zero_mode=True):
    """Row of the heat kernel ``p_t(x, .)``.

    The lattice omits ``lam = 0``.  With ``zero_mode`` the missing term of the
    lattice sum is added from its limit, the Euclidean heat kernel in ``x'``
    (``exp(-t H(lam)) -> exp(t Laplacian)`` as ``lam -> 0``).
    """
    row = compute_kernel(heat_symbol(t, disc.n1, disc.n2), disc, x_index, point)
    if zero_mode and disc.n2:
        diff = disc.xp_points() - row.x[: disc.n1]
        g = (4 * math.pi * t) ** (-disc.n1 / 2) * np.exp(-np.sum(diff ** 2, axis=-1) / (4 * t))
        row.values = row.values + g[:, None] / disc.volume_x2
    return row


# ---------------------------------------------------------------------------
# Sobolev embedding


@dataclass
class SobolevReport:
    s: float
    lhs: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / max(self.rhs, 1e-300)


def bessel_sobolev_check(s, f):
    """``|| |B(.,1)|^(1/2) f ||_inf`` against ``||(I + G)^(s/2) f||_2``.

    ``|B(x, 1)|`` uses the growth profile ``max(1, |x'|)^n2``.
    """
    disc = f.disc
    vol = ball_growth(disc.points(), 1.0, disc.n1, disc.n2)
    lhs = float(np.max(np.sqrt(vol) * np.abs(f.values)))
    c = disc.forward_array(f.values)
    rhs = float(disc.coeff_norm(c * (1 + disc.eta()) ** (s / 2)))
    return SobolevReport(float(s), lhs, rhs)


def sobolev_extremal_ratio(disc, s):
    """Supremum of the Sobolev ratio over all band-limited ``f``.

    At a point ``x`` the best constant is
    ``|B(x,1)|^(1/2) (L''^(-n2) sum |Phi_mu^lam(x')|^2 (1 + eta)^(-s))^(1/2)``.
    """
    dens = np.zeros(disc.Np)
    weight = (1 + disc.eta()) ** (-s)
    for i in range(disc.n_lam):
        dens += disc.basis(i) ** 2 @ weight[i]
    vol = ball_growth(disc.xp_points(), 1.0, disc.n1, disc.n2)
    return float(np.max(np.sqrt(vol * dens / disc.volume_x2)))
