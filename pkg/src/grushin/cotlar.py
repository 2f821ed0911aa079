"""Localised dyadic pieces and their almost-orthogonality matrices.

A piece is the joint pseudo-multiplier with symbol
``chi_J(x) m(x, tau, kappa) zeta^S(kappa) psi_l(|tau|_1)``.  On the band it
is the dense matrix ``A[x, e] = sigma(x, e) u_e(x) sqrt(w_x)`` from orthonormal
mode coordinates to weighted grid values, restricted to the rows where
``chi_J`` is non-zero and the modes where the spectral cut is non-zero.
Products of pieces only see common rows (``T*_a T_b``) or common modes
(``T_a T*_b``), so entries with disjoint supports are exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import build_partition, estimate_quasi_constant
from .norms import OpHandle, operator_norm
from .operators import CompiledOperator
from .parallel import pmap
from .symbols import apply_vector_fields, dyadic_piece, kappa_cutoff, vector_field_count


@dataclass(frozen=True, order=True)
class PieceIndex:
    J: int
    l: int
    S: int

    def __post_init__(self):
        if self.J < 0 or self.l < 0 or self.S < 0:
            raise ValueError("piece indices must be non-negative")


@dataclass
class Piece:
    index: PieceIndex
    symbol: object
    rows: np.ndarray
    modes: np.ndarray
    matrix: np.ndarray = field(repr=False)
    disc: object = field(repr=False)

    def handle(self):
        return OpHandle.from_operator(CompiledOperator(self.symbol, self.disc, "joint"),
                                      label=f"T[J={self.index.J},l={self.index.l}]")


def mode_functions(disc, rows, modes):
    """``u_e(x) sqrt(w_x)`` for flat grid ``rows`` and flat ``modes``."""
    p, q = np.divmod(rows, disc.Npp)
    li, mj = np.divmod(modes, disc.n_mu)
    out = np.empty((rows.size, modes.size), dtype=complex)
    xpp = disc.xpp_points()[q]
    w = np.sqrt(disc.grid_weights().ravel()[rows])
    for i in np.unique(li):
        cols = np.nonzero(li == i)[0]
        vals = disc.basis(i)[np.ix_(p, mj[cols])]
        phase = np.exp(-1j * (xpp @ disc.lattice[i]))
        out[:, cols] = vals * (phase * w)[:, None]
    return out / math.sqrt(disc.volume_x2)


def piece_matrix(sym, disc, rows, modes):
    li, mj = np.divmod(modes, disc.n_mu)
    tau, kappa = disc.tau()[li, mj], disc.kappa()[li, mj]
    x = disc.points().reshape(-1, disc.n1 + disc.n2)[rows]
    vals = np.asarray(sym(x[:, None, :], tau[None], kappa[None]), dtype=complex)
    return vals * mode_functions(disc, rows, modes)


def build_pieces(m, disc, partition, lp, l_range, S, lower=None, variant="tau_l1"):
    """Pieces ``T^S_{J,l}`` keyed by :class:`PieceIndex`."""
    if not m.joint:
        raise ValueError("pieces are built from a (tau, kappa) symbol")
    pts = disc.points().reshape(-1, disc.n1 + disc.n2)
    chi = partition.chi_all(pts)
    tau, kappa = disc.tau().reshape(-1, disc.n1), disc.kappa().reshape(-1, disc.n2)
    zeta = lp.zeta(np.linalg.norm(kappa, axis=-1), S, lower)
    out = {}
    for J in range(len(partition)):
        rows = np.nonzero(chi[J] > 0)[0]
        cut = kappa_cutoff(m, S, lp, chi=partition.elements[J], lower=lower)
        for l in l_range:
            sym = dyadic_piece(cut, l, lp, variant)
            size = tau.sum(axis=-1) if variant == "tau_l1" else tau.sum(axis=-1) + np.abs(kappa).sum(axis=-1)
            modes = np.nonzero((lp.psi(l, size) * zeta) != 0)[0]
            idx = PieceIndex(J, l, S)
            out[idx] = Piece(idx, sym, rows, modes, piece_matrix(sym, disc, rows, modes), disc)
    return out


def _spectral_norm(a):
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def cotlar_matrices(pieces):
    """``M1[a, b] = ||T*_a T_b||`` and ``M2[a, b] = ||T_a T*_b||`` computed exactly.

    Returns ``(keys, M1, M2)`` with rows ordered like ``keys``.
    """
    keys = sorted(pieces)
    P = [pieces[k] for k in keys]
    R = [np.linalg.qr(p.matrix, mode="r") if p.matrix.size else p.matrix for p in P]
    n = len(P)
    pairs = [(a, b) for a in range(n) for b in range(a, n)]

    def entry(ab):
        a, b = ab
        pa, pb = P[a], P[b]
        rows, ia, ib = np.intersect1d(pa.rows, pb.rows, assume_unique=True, return_indices=True)
        m1 = _spectral_norm(pa.matrix[ia].conj().T @ pb.matrix[ib]) if rows.size else 0.0
        modes, ja, jb = np.intersect1d(pa.modes, pb.modes, assume_unique=True, return_indices=True)
        m2 = _spectral_norm(R[a][:, ja] @ R[b][:, jb].conj().T) if modes.size else 0.0
        return m1, m2

    vals = pmap(entry, pairs)
    M1, M2 = np.zeros((n, n)), np.zeros((n, n))
    for (a, b), (m1, m2) in zip(pairs, vals):
        M1[a, b] = M1[b, a] = m1
        M2[a, b] = M2[b, a] = m2
    return keys, M1, M2


def sum_matrix(pieces, keys=None):
    """Dense matrix of ``sum`` of the given pieces on the union of their supports."""
    keys = sorted(pieces) if keys is None else keys
    rows = np.unique(np.concatenate([pieces[k].rows for k in keys]))
    modes = np.unique(np.concatenate([pieces[k].modes for k in keys]))
    A = np.zeros((rows.size, modes.size), dtype=complex)
    for k in keys:
        p = pieces[k]
        A[np.ix_(np.searchsorted(rows, p.rows), np.searchsorted(modes, p.modes))] += p.matrix
    return A


def power_check(pieces, pairs, seed=0, tol=1e-12):
    """``(exact, power-iteration)`` values of ``||T*_a T_b||`` and ``||T_a T*_b||``."""
    out = []
    keys, M1, M2 = cotlar_matrices({k: pieces[k] for k in {k for pair in pairs for k in pair}})
    pos = {k: i for i, k in enumerate(keys)}
    for a, b in pairs:
        ta, tb = pieces[a].handle(), pieces[b].handle()
        r1 = operator_norm(ta.adjoint().compose(tb), tol=tol, seed=seed)
        r2 = operator_norm(ta.compose(tb.adjoint()), tol=tol, seed=seed)
        out.append({"a": a, "b": b, "M1_exact": M1[pos[a], pos[b]], "M1_power": r1.estimate,
                    "M2_exact": M2[pos[a], pos[b]], "M2_power": r2.estimate})
    return out


# ---------------------------------------------------------------------------
# structure checks


def _fit(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        return float("nan"), float("nan"), float("nan")
    slope, icpt = np.polyfit(x, y, 1)
    pred = slope * x + icpt
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), r2


@dataclass
class CotlarReport:
    keys: list
    M1: np.ndarray = field(repr=False)
    M2: np.ndarray = field(repr=False)
    center_distance: np.ndarray = field(repr=False)
    C0: float
    zero_tol: float
    m2_far_max: float
    m1_far_max: float
    n_m2_far: int
    n_m1_far: int
    decay_profile: list
    decay_monotone: bool
    decay_slope: float
    decay_r2: float
    distance_exponent: float
    distance_r2: float
    total_norm: float
    cotlar_stein_bound: float
    offset_bound: float

    @property
    def vanishing_pass(self):
        return self.m2_far_max <= self.zero_tol and self.m1_far_max <= self.zero_tol

    @property
    def cotlar_stein_pass(self):
        return self.total_norm <= self.cotlar_stein_bound * (1 + 1e-12)


def analyse(pieces, partition, C0, zero_tol=1e-12, overlap=2):
    """Exact-vanishing, decay fits and the Cotlar-Stein inequality."""
    keys, M1, M2 = cotlar_matrices(pieces)
    centers = partition.centers
    Js = np.array([k.J for k in keys])
    ls = np.array([k.l for k in keys])
    dJ = np.array([[float(partition._d(centers[a], centers[b][None])[0]) for b in range(len(centers))]
                   for a in range(len(centers))])
    dist = dJ[np.ix_(Js, Js)]
    dl = np.abs(ls[:, None] - ls[None, :])
    far_l = dl > overlap
    far_d = dist > 4 * C0
    m2_far = float(M2[far_l].max()) if far_l.any() else 0.0
    m1_far = float(M1[far_d].max()) if far_d.any() else 0.0
    profile = []
    for j in range(int(dl.max()) + 1):
        sel = dl == j
        profile.append(float(M1[sel].max()))
    tail = profile[overlap + 1:]
    monotone = all(b <= a for a, b in zip(tail, tail[1:]))
    xs = [j for j in range(overlap + 1, len(profile)) if profile[j] > 0]
    slope, _, r2 = _fit(xs, [math.log2(profile[j]) for j in xs])
    near = (dl <= overlap) & (M2 > 0)
    dexp, _, dr2 = _fit(np.log1p(dist[near]), np.log(M2[near]))
    A = sum_matrix(pieces, keys)
    total = _spectral_norm(A)
    bound = max(np.sqrt(M1).sum(axis=1).max(), np.sqrt(M2).sum(axis=1).max())
    offset = sum(math.sqrt(p) for p in profile)
    return CotlarReport(keys, M1, M2, dist, C0, zero_tol, m2_far, m1_far, int(far_l.sum()),
                        int(far_d.sum()), profile, monotone, slope, r2, dexp, dr2, total,
                        float(bound), offset)


def freeze_constants(m, pieces, partition, disc, Q, n_spec=64):
    """Measured ``C_J = ||T^S_J|| / sup_{|Gamma| <= 2(1 + floor(Q/4))} sup |X^Gamma m|``.

    ``T^S_J`` is the sum of the pieces of ``J``; the supremum runs over the
    grid points in the support of ``chi_J`` and a sample of band modes.
    """
    order = 2 * (1 + Q // 4)
    nf = vector_field_count(m.n1, m.n2)
    pts = disc.points().reshape(-1, disc.n1 + disc.n2)
    out = []
    by_J = {}
    for k in pieces:
        by_J.setdefault(k.J, []).append(k)
    tau = disc.tau().reshape(-1, disc.n1)
    kappa = disc.kappa().reshape(-1, disc.n2)
    pick = np.linspace(0, tau.shape[0] - 1, min(n_spec, tau.shape[0])).astype(int)
    for J, keys in sorted(by_J.items()):
        rows = pieces[keys[0]].rows
        x = pts[rows[:: max(1, rows.size // 400)]]
        sup = 0.0
        for g in range(order + 1):
            for gamma in np.ndindex(*(g + 1,) * nf):
                if sum(gamma) != g:
                    continue
                v = apply_vector_fields(m, gamma, (0,) * (m.n1 + m.n2), x[:, None, :],
                                        tau[pick][None], kappa[pick][None])
                sup = max(sup, float(np.max(np.abs(v))))
        norm = _spectral_norm(sum_matrix(pieces, keys))
        out.append({"J": J, "norm": norm, "sup": sup, "C": norm / max(sup, 1e-300)})
    return out


def line_partition(C0, count=9, period=None, n1=1, n2=1):
    """Partition with centres along the ``x'_1`` axis, grown until it has ``count`` elements."""
    step = 1.0 / (4.0 * C0)
    lo = np.zeros(n1 + n2)
    hi = np.zeros(n1 + n2)
    for k in range(1, 64 * count):
        lo[0], hi[0] = -0.5 * k * step, 0.5 * k * step
        part = build_partition((lo, hi), C0, n1, period)
        if len(part) >= count:
            break
    if len(part) != count:
        raise RuntimeError(f"line partition has {len(part)} elements, expected {count}")
    return part


def quasi_constant(n1=1, samples=200000, seed=0):
    """Measured quasi-triangle constant of ``d`` on the unit desk box."""
    region = (np.full(n1 + 1, -4.0), np.full(n1 + 1, 4.0))
    return estimate_quasi_constant(samples, region, n1, seed)
