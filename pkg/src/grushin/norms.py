"""Operator handles, band-restricted operator norms and the Calderon-Vaillancourt sweep."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .discretization import Discretization, GridFunction
from .operators import CompiledOperator
from .symbols import seminorm

EPS = 1e-300


@dataclass
class OpHandle:
    """A linear operator on grid functions of ``disc`` together with its adjoint.

    ``apply_array`` and ``adjoint_array`` act on arrays ending in
    ``disc.grid_shape`` and accept leading batch axes.
    """

    disc: Discretization
    apply_array: callable
    adjoint_array: callable
    label: str = "T"

    def apply(self, f):
        return GridFunction(self.disc, self.apply_array(f.values))

    def adjoint_apply(self, f):
        return GridFunction(self.disc, self.adjoint_array(f.values))

    @classmethod
    def from_operator(cls, op, label=None):
        return cls(op.disc, op.apply_array, op.adjoint_array, label or op.sym.name)

    @classmethod
    def identity(cls, disc):
        proj = lambda v: disc.backward_array(disc.forward_array(v))
        return cls(disc, proj, proj, "band projection")

    @classmethod
    def rank_one(cls, disc, g, h):
        """``f -> <f, g> h``."""
        g, h = g.values, h.values

        def apply(v):
            return disc.inner(v, g)[..., None, None] * h

        def adjoint(v):
            return disc.inner(v, h)[..., None, None] * g

        return cls(disc, apply, adjoint, "rank one")

    def compose(self, other, label=None):
        """``self o other``."""
        return OpHandle(self.disc,
                        lambda v: self.apply_array(other.apply_array(v)),
                        lambda v: other.adjoint_array(self.adjoint_array(v)),
                        label or f"{self.label} o {other.label}")

    def adjoint(self):
        return OpHandle(self.disc, self.adjoint_array, self.apply_array, f"({self.label})*")

    @classmethod
    def total(cls, handles, label="sum"):
        handles = list(handles)
        disc = handles[0].disc
        return cls(disc,
                   lambda v: sum(h.apply_array(v) for h in handles),
                   lambda v: sum(h.adjoint_array(v) for h in handles), label)


@dataclass
class NormReport:
    """Estimate of ``||T||`` on the band from block power iteration on ``T* T``.

    ``estimate`` is the square root of the top Ritz value, a lower bound on the
    band-restricted norm.  ``residual`` is the relative change of that Ritz
    value over the final iteration.
    """

    estimate: float
    iterations: int
    residual: float
    seed: int
    converged: bool = True
    label: str = ""
    history: list = field(default_factory=list, repr=False)


def _band_vectors(disc, x):
    """Orthonormal coordinates ``(..., n_modes)`` to grid arrays."""
    c = x.reshape(x.shape[:-1] + disc.coeff_shape) / math.sqrt(disc.volume_x2)
    return disc.backward_array(c)


def _band_coords(disc, v):
    c = disc.forward_array(v) * math.sqrt(disc.volume_x2)
    return c.reshape(c.shape[:-2] + (-1,))


def operator_norm(T, tol=1e-10, max_iter=300, seed=0, block=8, method="power"):
    """Top singular value of ``T`` on the band.

    ``method="power"`` runs block power iteration with Rayleigh-Ritz on
    ``T* T``: ``block`` seeded random starts are iterated together so that
    clustered top singular values do not stall the estimate.
    ``method="lanczos"`` hands ``T* T`` to ARPACK with a seeded start vector,
    which converges much faster when the top of the spectrum is clustered;
    its ``residual`` is the relative eigen-residual of the Ritz pair.
    """
    if method == "lanczos":
        return _lanczos_norm(T, tol, seed)
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    disc = T.disc
    n = int(np.prod(disc.coeff_shape))
    b = min(block, n)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, b)) + 1j * rng.standard_normal((n, b))
    X, _ = np.linalg.qr(X)
    theta_old, history = None, []
    residual, it = float("inf"), 0
    for it in range(1, max_iter + 1):
        v = _band_vectors(disc, X.T)
        Y = _band_coords(disc, T.adjoint_array(T.apply_array(v))).T
        H = X.conj().T @ Y
        H = (H + H.conj().T) / 2
        theta = float(max(np.linalg.eigvalsh(H)[-1], 0.0))
        history.append(theta)
        if theta_old is not None:
            residual = abs(theta - theta_old) / max(theta, EPS)
            if residual <= tol:
                break
        if theta == 0.0:
            residual = 0.0
            break
        theta_old = theta
        X, _ = np.linalg.qr(Y)
    return NormReport(math.sqrt(theta), it, residual, seed, residual <= tol, T.label, history)


def _lanczos_norm(T, tol, seed):
    from scipy.sparse.linalg import LinearOperator, eigsh

    disc = T.disc
    n = int(np.prod(disc.coeff_shape))
    calls = [0]

    def normal(x):
        calls[0] += 1
        v = _band_vectors(disc, np.asarray(x).ravel())
        return _band_coords(disc, T.adjoint_array(T.apply_array(v)))

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if n == 1:
        theta, vec = float(normal(v0 / abs(v0[0]))[0].real), v0 / abs(v0[0])
    else:
        op = LinearOperator((n, n), matvec=normal, dtype=complex)
        w, V = eigsh(op, k=1, which="LA", v0=v0, tol=tol)
        theta, vec = float(max(w[0], 0.0)), V[:, 0]
    r = np.linalg.norm(normal(vec) - theta * vec) / max(theta, EPS)
    return NormReport(math.sqrt(theta), calls[0], float(r), seed, bool(r <= max(tol, 1e-6) ** 0.5),
                      T.label)


# ---------------------------------------------------------------------------
# Calderon-Vaillancourt sweep


def refinement_ladder(start=(4, 4), steps=3, L2=5 * math.pi, m2_factor=4, n1=1, n2=1):
    """Discretizations with ``(K, Lam)`` doubled ``steps`` times from ``start``."""
    K, Lam = start
    out = []
    for s in range(steps + 1):
        k, lam = K * 2 ** s, Lam * 2 ** s
        out.append(Discretization(n1, n2, k, lam, m2_factor * lam, L2))
    return out


@dataclass
class CVReport:
    symbol: str
    seminorm: float
    rungs: list
    changes: list
    tolerance: float
    verdict: str

    @property
    def ratios(self):
        return [r["ratio"] for r in self.rungs]


def cv_experiment(m, params, ladder, probes, mode="G", seed=0, tol=0.10, norm_tol=1e-10,
                  method="lanczos"):
    """``||T||_op / ||m||`` along a refinement ladder.

    PASS when the ratio changes by less than ``tol`` (relative) per step.
    """
    semi = float(seminorm(m, params, probes))
    rungs = []
    for disc in ladder:
        t0 = time.perf_counter()
        op = OpHandle.from_operator(CompiledOperator(m, disc, mode))
        rep = operator_norm(op, tol=norm_tol, seed=seed, method=method)
        rungs.append({"K": disc.K, "Lam": disc.Lam, "norm": rep.estimate,
                      "ratio": rep.estimate / max(semi, EPS), "iterations": rep.iterations,
                      "residual": rep.residual, "converged": rep.converged,
                      "runtime_s": time.perf_counter() - t0})
    ratios = [r["ratio"] for r in rungs]
    changes = [ratios[i + 1] / max(ratios[i], EPS) - 1 for i in range(len(ratios) - 1)]
    verdict = "PASS" if all(abs(c) < tol for c in changes) else "FAIL"
    return CVReport(m.name, semi, rungs, changes, tol, verdict)
