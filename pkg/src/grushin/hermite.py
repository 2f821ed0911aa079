"""Hermite functions, ladder operators and per-fiber Hermite transforms.

Conventions
-----------
The one dimensional Hermite functions are the L2-normalised functions

    Phi_k(t) = (2^k k! sqrt(pi))^(-1/2) H_k(t) exp(-t^2 / 2)

with positive leading coefficient.  For ``|lam| > 0`` the scaled functions are
``Phi_mu^lam(x) = |lam|^(n/4) Phi_mu(|lam|^(1/2) x)``; they are eigenfunctions
of ``-Laplacian + |lam|^2 |x|^2`` with eigenvalue ``(2|mu| + n)|lam|``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

#: largest order for which the upward recurrence was checked against a
#: high precision Rodrigues evaluation to 1e-10 relative accuracy
#: (see ``tests/test_hermite.py``).
K_MAX = 400

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


def hermite_functions(kmax, t):
    """Evaluate ``Phi_0 .. Phi_kmax`` at the points ``t``.

    Uses the three-term recurrence on the normalised functions

        Phi_{k+1} = sqrt(2/(k+1)) t Phi_k - sqrt(k/(k+1)) Phi_{k-1}

    started from the polynomial part only.  The Gaussian factor is applied at
    the end together with an accumulated log-scale, so large ``|t|`` neither
    overflows nor loses the oscillatory part; values whose Gaussian factor
    underflows come back as exactly 0.

    Returns an array of shape ``(kmax + 1,) + t.shape``.
    """
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    if kmax > K_MAX:
        raise ValueError(f"order {kmax} exceeds the supported K_MAX={K_MAX}")
    t = np.asarray(t, dtype=float)
    out = np.empty((kmax + 1,) + t.shape)
    logscale = np.zeros(t.shape)
    prev = np.zeros(t.shape)
    cur = np.full(t.shape, math.pi ** -0.25)
    out[0] = cur
    for k in range(kmax):
        nxt = math.sqrt(2.0 / (k + 1)) * t * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur = np.where(big, cur / _RESCALE, cur)
            prev = np.where(big, prev / _RESCALE, prev)
            out[: k + 1] = np.where(big, out[: k + 1] / _RESCALE, out[: k + 1])
            logscale = logscale + big * _LOG_RESCALE
        out[k + 1] = cur
    with np.errstate(under="ignore"):
        gauss = np.exp(-0.5 * t * t + logscale)
    return out * gauss


def eval_hermite_1d(k, t):
    """Normalised Hermite function ``Phi_k(t)``."""
    if k < 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    return hermite_functions(k, t)[k]


def _check_lam(lam_mag):
    if not lam_mag > 0:
        raise ValueError("lam_mag must be positive; lam = 0 is the degenerate fiber")


def eval_scaled_hermite(mu, lam_mag, xp):
    """Scaled Hermite function ``Phi_mu^lam(x')``.

    ``xp`` has shape ``(..., n1)`` with ``n1 = len(mu)``.  A multi-index with a
    negative entry denotes the zero function.
    """
    _check_lam(lam_mag)
    mu = tuple(int(m) for m in mu)
    xp = np.asarray(xp, dtype=float)
    if xp.ndim == 0 or xp.shape[-1] != len(mu):
        xp = xp.reshape(xp.shape + (1,)) if len(mu) == 1 else xp
    if xp.shape[-1] != len(mu):
        raise ValueError("last axis of x' must have length len(mu)")
    if min(mu) < 0:
        return np.zeros(xp.shape[:-1])
    s = math.sqrt(lam_mag)
    val = np.full(xp.shape[:-1], lam_mag ** (len(mu) / 4.0))
    for j, mj in enumerate(mu):
        val = val * eval_hermite_1d(mj, s * xp[..., j])
    return val


def multi_indices(n1, K):
    """All multi-indices of length ``n1`` with ``|mu| <= K``.

    Ordered by total degree, then reverse-lexicographically, so the first
    ``len(multi_indices(n1, k))`` entries are the indices up to degree ``k``.
    """
    out = []
    for deg in range(K + 1):
        for mu in itertools.product(range(deg + 1), repeat=n1):
            if sum(mu) == deg:
                out.append(mu)
    out.sort(key=lambda m: (sum(m), tuple(-v for v in m)))
    return out


def uniform_grid(half_width, points):
    """Uniform nodes on ``[-L, L]`` with trapezoid weights.

    The end weights are halved; for functions that have decayed at the box
    edge this is the spectrally accurate trapezoid rule.
    """
    nodes = np.linspace(-half_width, half_width, points)
    h = nodes[1] - nodes[0]
    weights = np.full(points, h)
    weights[0] = weights[-1] = h / 2
    return nodes, weights


@dataclass(frozen=True)
class CoeffVector:
    """Coefficients indexed by the multi-indices with ``|mu| <= K``."""

    n1: int
    K: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape[-1] != len(_index_table(self.n1, self.K)[0]):
            raise ValueError("values length does not match (n1, K)")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, n1, K):
        return cls(n1, K, np.zeros(len(_index_table(n1, K)[0]), dtype=complex))

    @classmethod
    def unit(cls, n1, K, mu):
        c = np.zeros(len(_index_table(n1, K)[0]), dtype=complex)
        c[_index_table(n1, K)[1][tuple(mu)]] = 1.0
        return cls(n1, K, c)

    @property
    def indices(self):
        return _index_table(self.n1, self.K)[0]

    def __getitem__(self, mu):
        pos = _index_table(self.n1, self.K)[1].get(tuple(mu))
        return 0.0 if pos is None else self.values[..., pos]

    def truncate(self, K):
        """Restrict (or zero-pad) to cutoff ``K``."""
        out = CoeffVector.zeros(self.n1, K)
        vals = np.zeros(self.values.shape[:-1] + out.values.shape, dtype=complex)
        n = min(vals.shape[-1], self.values.shape[-1])
        vals[..., :n] = self.values[..., :n]
        return CoeffVector(self.n1, K, vals)

    def norm(self):
        return float(np.linalg.norm(self.values))


_TABLES: dict = {}


def _index_table(n1, K):
    key = (n1, K)
    if key not in _TABLES:
        idx = multi_indices(n1, K)
        _TABLES[key] = (idx, {mu: i for i, mu in enumerate(idx)})
    return _TABLES[key]


def apply_ladder(kind, j, lam_mag, c):
    """Apply ``A_j(lam)`` ("annihilate") or ``A_j(lam)^*`` ("create").

    ``A_j Phi_mu = sqrt(2 mu_j |lam|) Phi_{mu - e_j}`` and
    ``A_j^* Phi_mu = sqrt((2 mu_j + 2)|lam|) Phi_{mu + e_j}``.
    Annihilation keeps the cutoff ``K``; creation returns cutoff ``K + 1``
    and the caller truncates explicitly.
    """
    _check_lam(lam_mag)
    idx, _ = _index_table(c.n1, c.K)
    if kind == "annihilate":
        out = CoeffVector.zeros(c.n1, c.K)
        _, pos = _index_table(c.n1, c.K)
        vals = np.zeros(c.values.shape, dtype=complex)
        for i, mu in enumerate(idx):
            if mu[j] == 0:
                continue
            nu = mu[:j] + (mu[j] - 1,) + mu[j + 1:]
            vals[..., pos[nu]] += math.sqrt(2 * mu[j] * lam_mag) * c.values[..., i]
        return CoeffVector(out.n1, out.K, vals)
    if kind == "create":
        _, pos = _index_table(c.n1, c.K + 1)
        vals = np.zeros(c.values.shape[:-1] + (len(pos),), dtype=complex)
        for i, mu in enumerate(idx):
            nu = mu[:j] + (mu[j] + 1,) + mu[j + 1:]
            vals[..., pos[nu]] += math.sqrt((2 * mu[j] + 2) * lam_mag) * c.values[..., i]
        return CoeffVector(c.n1, c.K + 1, vals)
    raise ValueError(f"unknown ladder kind {kind!r}")


def hermite_energy(c, lam_mag):
    """Quadratic form ``<H(lam) f, f>`` assembled from ladder operators.

    Uses ``H(lam) = (1/2) sum_j (A_j^* A_j + A_j A_j^*)`` so that
    ``<H f, f> = (1/2) sum_j (|A_j f|^2 + |A_j^* f|^2)``.
    """
    total = 0.0
    for j in range(c.n1):
        a = apply_ladder("annihilate", j, lam_mag, c)
        b = apply_ladder("create", j, lam_mag, c)
        total += 0.5 * (np.sum(np.abs(a.values) ** 2) + np.sum(np.abs(b.values) ** 2))
    return float(total)


@dataclass(frozen=True)
class HermiteBasis:
    """Scaled Hermite functions sampled on a tensor trapezoid grid.

    Parameters
    ----------
    n1 : int
        Dimension of the ``x'`` variable.
    K : int
        Cutoff on ``|mu|``.
    lam_mag : float
        Scaling ``|lam| > 0``.
    nodes, weights : ndarray
        One dimensional quadrature rule; the ``n1`` dimensional rule is the
        tensor product.
    """

    n1: int
    K: int
    lam_mag: float
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_lam(self.lam_mag)
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        table = hermite_functions(self.K, math.sqrt(self.lam_mag) * nodes)
        table *= self.lam_mag ** 0.25
        idx = self.indices
        if self.n1 == 1:
            vals = table[[mu[0] for mu in idx]].T
        else:
            cols = []
            for mu in idx:
                col = table[mu[0]]
                for mj in mu[1:]:
                    col = np.multiply.outer(col, table[mj])
                cols.append(col.ravel())
            vals = np.stack(cols, axis=1)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def indices(self):
        return _index_table(self.n1, self.K)[0]

    @property
    def point_weights(self):
        w = self.weights
        for _ in range(self.n1 - 1):
            w = np.multiply.outer(w, self.weights).ravel()
        return w

    def gram(self):
        w = self.point_weights
        return self.values.T @ (w[:, None] * self.values)

    def gram_error(self):
        g = self.gram()
        return float(np.max(np.abs(g - np.eye(g.shape[0]))))


def _check_slice(f_slice, basis):
    f = np.asarray(f_slice)
    npts = basis.values.shape[0]
    if f.shape[-1] != npts:
        if f.shape[-basis.n1:] == (len(basis.nodes),) * basis.n1:
            return f.reshape(f.shape[: f.ndim - basis.n1] + (npts,))
        raise ValueError(f"grid has {npts} points, got trailing shape {f.shape}")
    return f


def hermite_transform(f_slice, basis):
    """Coefficients ``c_mu = <f, Phi_mu^lam>`` under the basis quadrature."""
    f = _check_slice(f_slice, basis)
    c = (f * basis.point_weights) @ basis.values
    return CoeffVector(basis.n1, basis.K, c)


def inverse_hermite_transform(c, basis):
    """Grid samples of ``sum_mu c_mu Phi_mu^lam`` (flattened over x')."""
    if c.n1 != basis.n1 or c.K != basis.K:
        raise ValueError("coefficient vector and basis disagree on (n1, K)")
    return c.values @ basis.values.T


def lambda_derivative_rhs(mu, lam_mag, xp):
    """Right-hand side of the ``|lam|``-derivative identity for ``Phi_mu^lam``.

    ``(1/(4|lam|)) sum_j [ -sqrt((mu_j+1)(mu_j+2)) Phi_{mu+2e_j}
    + sqrt(mu_j(mu_j-1)) Phi_{mu-2e_j} ]``
    """
    _check_lam(lam_mag)
    mu = tuple(int(m) for m in mu)
    total = 0.0
    for j, mj in enumerate(mu):
        up = mu[:j] + (mj + 2,) + mu[j + 1:]
        down = mu[:j] + (mj - 2,) + mu[j + 1:]
        total = total - math.sqrt((mj + 1) * (mj + 2)) * eval_scaled_hermite(up, lam_mag, xp)
        if mj >= 2:
            total = total + math.sqrt(mj * (mj - 1)) * eval_scaled_hermite(down, lam_mag, xp)
    return total / (4.0 * lam_mag)


def lambda_derivative_fd(mu, lam_mag, xp, h=1e-4):
    """Central difference ``(Phi^{lam+h} - Phi^{lam-h}) / 2h`` in ``|lam|``."""
    return (eval_scaled_hermite(mu, lam_mag + h, xp) - eval_scaled_hermite(mu, lam_mag - h, xp)) / (2 * h)
