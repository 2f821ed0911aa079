"""Grids, the lambda lattice and the fiberwise Hermite transform.

A :class:`Discretization` fixes a uniform trapezoid grid in ``x'`` on
``[-L', L']^n1``, a periodic grid in ``x''`` of period ``L''`` and the lattice
``lam = (2 pi / L'') k`` with ``0 < |k|_inf <= Lam``.  For every lattice point
it holds the scaled Hermite functions up to ``|mu| <= K`` sampled on the
``x'`` grid, orthonormalised under the quadrature.

Grid values are stored with shape ``(..., Np, Npp)`` where ``Np = M'^n1``
and ``Npp = M''^n2``; spectral coefficients have shape ``(..., n_lam, n_mu)``
and are normalised so that ``f = sum c[lam, mu] Phi_mu^lam(x') exp(-i lam.x'')``.
With ``n2 = 0`` the discretization is a pure Hermite one: a single fiber with
``|lam| = 1`` and no ``x''`` axis.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .hermite import HermiteBasis, multi_indices, uniform_grid

GRAM_TOL = 1e-8
EDGE_MARGIN = 4.0


def auto_xp_grid(K, n1, lam_min, lam_max):
    """Half-width and point count of an ``x'`` grid hosting ``|mu| <= K``.

    The box reaches ``sqrt(2K+1) + 4`` in the unscaled variable at the
    smallest ``|lam|`` (every ``Phi_k`` with ``k <= K`` is below 1e-12 there)
    and the spacing resolves the same band at the largest ``|lam|``.
    """
    edge = math.sqrt(2 * K + 1) + EDGE_MARGIN
    half_width = edge / math.sqrt(lam_min)
    h = math.pi / (edge * math.sqrt(lam_max))
    return half_width, int(math.ceil(2 * half_width / h)) + 1


@dataclass(eq=False)
class Discretization:
    """Discretization of ``R^(n1+n2)`` for the fiberwise spectral calculus.

    Parameters
    ----------
    n1, n2 : int
        Dimensions of ``x'`` and ``x''`` (``n2 = 0`` gives the pure Hermite setting).
    K : int
        Hermite cutoff on ``|mu|``.
    Lam : int
        Lattice half-width in units of ``2 pi / L''``.
    M2 : int
        Points per ``x''`` dimension.
    L2 : float
        Period of the ``x''`` box.
    L1, M1 : float, int, optional
        Half-width and points per dimension of the ``x'`` box; chosen by
        :func:`auto_xp_grid` when omitted.
    """

    n1: int = 1
    n2: int = 1
    K: int = 32
    Lam: int = 16
    M2: int = 64
    L2: float = 8 * math.pi
    L1: float | None = None
    M1: int | None = None
    gram_tol: float = GRAM_TOL
    _bases: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 0 or self.K < 0:
            raise ValueError("need n1 >= 1, n2 >= 0, K >= 0")
        if self.n2:
            if not 1 <= self.Lam < self.M2 / 2:
                raise ValueError("lattice half-width must satisfy 1 <= Lam < M2/2")
            step = 2 * math.pi / self.L2
            ks = [k for k in itertools.product(range(-self.Lam, self.Lam + 1), repeat=self.n2) if any(k)]
            self.lattice_k = np.array(ks, dtype=int)
            self.lattice = step * self.lattice_k
        else:
            self.lattice_k = np.zeros((1, 0), dtype=int)
            self.lattice = np.zeros((1, 0))
        mags = np.linalg.norm(self.lattice, axis=1) if self.n2 else np.ones(1)
        self.distinct_mags, self.mag_index = np.unique(np.round(mags, 12), return_inverse=True)
        self.lam_mag = self.distinct_mags[self.mag_index]
        if self.L1 is None or self.M1 is None:
            L1, M1 = auto_xp_grid(self.K, self.n1, self.distinct_mags[0], self.distinct_mags[-1])
            self.L1 = L1 if self.L1 is None else self.L1
            self.M1 = M1 if self.M1 is None else self.M1
        self.xp_nodes, self.xp_weights = uniform_grid(self.L1, self.M1)
        self.mu = multi_indices(self.n1, self.K)
        self.mu_array = np.array(self.mu, dtype=int).reshape(len(self.mu), self.n1)
        self.degree = self.mu_array.sum(axis=1)
        if self.n2:
            self.xpp_nodes = -self.L2 / 2 + self.L2 / self.M2 * np.arange(self.M2)
            self.h2 = self.L2 / self.M2
        else:
            self.xpp_nodes = np.zeros(1)
            self.h2 = 1.0
        self.gram_errors = {}
        for d, mag in enumerate(self.distinct_mags):
            basis = HermiteBasis(self.n1, self.K, float(mag), self.xp_nodes, self.xp_weights)
            err = basis.gram_error()
            self.gram_errors[float(mag)] = err
            if err > self.gram_tol:
                raise ValueError(
                    f"Gram error {err:.2e} at |lam|={mag:.4g} exceeds {self.gram_tol:g}; "
                    "enlarge or refine the x' grid"
                )
            self._bases[d] = _orthonormalise(basis)
        self.groups = [np.nonzero(self.mag_index == d)[0] for d in range(len(self.distinct_mags))]
        phase0 = self.lattice @ np.full(self.n2, self.xpp_nodes[0]) if self.n2 else np.zeros(1)
        self._phase0 = np.exp(1j * phase0)
        self._kflat = np.ravel_multi_index(tuple((self.lattice_k % self.M2).T), (self.M2,) * self.n2) \
            if self.n2 else np.zeros(1, dtype=int)

    # -- sizes and coordinates ---------------------------------------------
    @property
    def Np(self):
        return self.M1 ** self.n1

    @property
    def Npp(self):
        return self.M2 ** self.n2 if self.n2 else 1

    @property
    def grid_shape(self):
        return (self.Np, self.Npp)

    @property
    def n_lam(self):
        return len(self.lattice)

    @property
    def n_mu(self):
        return len(self.mu)

    @property
    def coeff_shape(self):
        return (self.n_lam, self.n_mu)

    @property
    def lam_step(self):
        return 2 * math.pi / self.L2 if self.n2 else 1.0

    @property
    def volume_x2(self):
        """``L''^n2``: the x'' box volume (1 when ``n2 = 0``)."""
        return self.L2 ** self.n2 if self.n2 else 1.0

    @property
    def Q(self):
        return self.n1 + 2 * self.n2

    def basis(self, lam_i):
        """Orthonormalised basis values ``(Np, n_mu)`` of the fiber ``lam_i``."""
        return self._bases[self.mag_index[lam_i]]

    def xp_points(self):
        g = np.meshgrid(*([self.xp_nodes] * self.n1), indexing="ij")
        return np.stack([a.ravel() for a in g], axis=-1)

    def xpp_points(self):
        if not self.n2:
            return np.zeros((1, 0))
        g = np.meshgrid(*([self.xpp_nodes] * self.n2), indexing="ij")
        return np.stack([a.ravel() for a in g], axis=-1)

    def points(self):
        """All grid points, shape ``(Np, Npp, n1 + n2)``."""
        xp = self.xp_points()
        xpp = self.xpp_points()
        a = np.broadcast_to(xp[:, None, :], (self.Np, self.Npp, self.n1))
        b = np.broadcast_to(xpp[None, :, :], (self.Np, self.Npp, self.n2))
        return np.concatenate([a, b], axis=-1)

    def weights(self):
        w = self.xp_weights
        for _ in range(self.n1 - 1):
            w = np.multiply.outer(w, self.xp_weights).ravel()
        return w

    def grid_weights(self):
        """Quadrature weights of shape ``(Np, Npp)``."""
        return np.repeat(self.weights()[:, None] * self.h2 ** self.n2, self.Npp, axis=1)

    # -- spectral parameters -------------------------------------------------
    def eta(self):
        """``(2|mu| + n1)|lam|`` per mode, shape ``(n_lam, n_mu)``."""
        return (2 * self.degree + self.n1)[None, :] * self.lam_mag[:, None]

    def tau(self):
        """``(2 mu + 1)|lam|`` per mode, shape ``(n_lam, n_mu, n1)``."""
        return (2 * self.mu_array + 1)[None, :, :] * self.lam_mag[:, None, None]

    def kappa(self):
        """``-lam`` per mode, shape ``(n_lam, n_mu, n2)``."""
        return np.broadcast_to(-self.lattice[:, None, :], (self.n_lam, self.n_mu, self.n2))

    def mode_arguments(self, mode):
        """Spectral arguments of every mode for ``mode`` in {sqrtG, G, joint}."""
        if mode == "G":
            return (self.eta(),)
        if mode == "sqrtG":
            return (np.sqrt(self.eta()),)
        if mode == "joint":
            return (self.tau(), self.kappa())
        raise ValueError(f"unknown mode {mode!r}")

    # -- transforms ------------------------------------------------------------
    def check_grid(self, values):
        values = np.asarray(values)
        if values.shape[-2:] != self.grid_shape:
            raise ValueError(f"grid values must end in shape {self.grid_shape}, got {values.shape}")
        return values

    def check_coeffs(self, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.shape[-2:] != self.coeff_shape:
            raise ValueError(f"coefficients must end in shape {self.coeff_shape}, got {coeffs.shape}")
        return coeffs

    def fibers(self, values):
        """``f^lam(x')`` for every frequency ``k`` of the x'' grid, shape ``(..., Np, Npp)``."""
        values = self.check_grid(values)
        if not self.n2:
            return values.astype(complex)
        lead = values.shape[:-1]
        cube = values.reshape(lead + (self.M2,) * self.n2)
        axes = tuple(range(-self.n2, 0))
        spec = np.fft.ifftn(cube, axes=axes) * (self.M2 * self.h2) ** self.n2
        return spec.reshape(lead + (self.Npp,))

    def forward_array(self, values):
        fl = self.fibers(values)[..., self._kflat] * self._phase0
        wf = fl * self.weights()[:, None]
        out = np.empty(fl.shape[:-2] + self.coeff_shape, dtype=complex)
        for d, lams in enumerate(self.groups):
            out[..., lams, :] = np.swapaxes(wf[..., lams], -1, -2) @ self._bases[d]
        return out / self.volume_x2

    def backward_array(self, coeffs):
        coeffs = self.check_coeffs(coeffs)
        lead = coeffs.shape[:-2]
        g = np.empty(lead + (self.Np, self.n_lam), dtype=complex)
        for d, lams in enumerate(self.groups):
            g[..., lams] = np.swapaxes(coeffs[..., lams, :] @ self._bases[d].T, -1, -2)
        if not self.n2:
            return g
        g = g * np.conj(self._phase0)
        full = np.zeros(lead + (self.Np, self.Npp), dtype=complex)
        full[..., self._kflat] = g
        cube = full.reshape(lead + (self.Np,) + (self.M2,) * self.n2)
        out = np.fft.fftn(cube, axes=tuple(range(-self.n2, 0)))
        return out.reshape(lead + (self.Np, self.Npp))

    def inner(self, f, g):
        """Quadrature inner product ``<f, g>`` over the last two axes."""
        return np.sum(self.grid_weights() * f * np.conj(g), axis=(-2, -1))

    def norm(self, f):
        return np.sqrt(np.real(self.inner(f, f)))

    def coeff_norm(self, c):
        return np.sqrt(self.volume_x2 * np.sum(np.abs(c) ** 2, axis=(-2, -1)))

    def random_coeffs(self, rng, K=None, size=()):
        """Random band-limited coefficients, optionally restricted to ``|mu| <= K``."""
        c = rng.standard_normal(size + self.coeff_shape) + 1j * rng.standard_normal(size + self.coeff_shape)
        if K is not None:
            c[..., self.degree > K] = 0
        return c

    def params(self):
        return {"n1": self.n1, "n2": self.n2, "K": self.K, "Lam": self.Lam, "M1": self.M1,
                "M2": self.M2, "L1": float(self.L1), "L2": float(self.L2)}

    def dilated(self, t):
        """The matched discretization on the grid ``delta_t^{-1}`` of this one.

        Nodes in ``x'`` are divided by ``t`` and the ``x''`` period by ``t^2``,
        so index ``(p, q)`` of the new grid is the point ``delta_{1/t}`` of
        index ``(p, q)`` here.
        """
        return Discretization(self.n1, self.n2, self.K, self.Lam, self.M2, self.L2 / t ** 2,
                              self.L1 / t, self.M1, self.gram_tol)


def _orthonormalise(basis):
    """Symmetric (Loewdin) orthonormalisation of the sampled basis.

    The sampled functions are orthonormal to the Gram tolerance; this removes
    the residual so that transforms are exact orthogonal projections.
    """
    V = basis.values
    g = basis.gram()
    evals, evecs = np.linalg.eigh(g)
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T
    out = V @ inv_sqrt
    out.setflags(write=False)
    return out


@dataclass
class GridFunction:
    """Samples of a function on the grid of ``disc`` (shape ``(..., Np, Npp)``)."""

    disc: Discretization
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = self.disc.check_grid(np.asarray(self.values, dtype=complex))

    def norm(self):
        return self.disc.norm(self.values)


@dataclass
class SpectralField:
    """Coefficients indexed by ``(lam, mu)`` (shape ``(..., n_lam, n_mu)``)."""

    disc: Discretization
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = self.disc.check_coeffs(np.asarray(self.coeffs, dtype=complex))

    def norm(self):
        return self.disc.coeff_norm(self.coeffs)


def forward(f):
    """Fiber Fourier transform in ``x''`` followed by the per-fiber Hermite transform.

    The result's ``meta`` records the fraction of ``|f|^2`` carried by the
    dropped ``lam = 0`` fiber and the total out-of-band fraction.
    """
    disc = f.disc
    coeffs = disc.forward_array(f.values)
    total = disc.norm(f.values) ** 2
    kept = disc.coeff_norm(coeffs) ** 2
    meta = {"out_of_band_fraction": _fraction(total - kept, total)}
    if disc.n2:
        zero = disc.fibers(f.values)[..., 0]
        zmass = np.sum(disc.weights() * np.abs(zero) ** 2, axis=-1) / disc.volume_x2
        meta["lambda0_fraction"] = _fraction(zmass, total)
    return SpectralField(disc, coeffs, meta)


def backward(F):
    return GridFunction(F.disc, F.disc.backward_array(F.coeffs))


def _fraction(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.maximum(a, 0.0) / np.maximum(b, 1e-300)
    return float(out) if out.ndim == 0 else out.tolist()


def band_projection(f):
    return backward(forward(f))


# ---------------------------------------------------------------------------
# binary container

MAGIC = b"GRSHFLD1"


def save_field(path, obj):
    """Write a GridFunction or SpectralField.

    Layout: 8 byte magic ``GRSHFLD1``, little-endian uint32 header length,
    UTF-8 JSON header (kind, discretization parameters, array shape, dtype),
    then the payload as little-endian complex128 in C order.
    """
    if isinstance(obj, GridFunction):
        kind, arr = "grid", obj.values
    elif isinstance(obj, SpectralField):
        kind, arr = "spectral", obj.coeffs
    else:
        raise TypeError("expected GridFunction or SpectralField")
    header = {"kind": kind, "disc": obj.disc.params(), "shape": list(arr.shape), "dtype": "<c16"}
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())


def read_header(path):
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not a field container")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n))
        return header, fh.tell()


def load_field(path, disc=None):
    """Read a container; the discretization is rebuilt from the header unless given."""
    header, offset = read_header(path)
    if disc is None:
        disc = Discretization(**header["disc"])
    elif disc.params() != header["disc"]:
        raise ValueError("container was written for a different discretization")
    arr = np.fromfile(path, dtype="<c16", offset=offset).reshape(header["shape"])
    if header["kind"] == "grid":
        return GridFunction(disc, arr)
    return SpectralField(disc, arr)
