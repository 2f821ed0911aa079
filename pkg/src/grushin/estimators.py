"""scikit-learn style wrapper around the pseudo-multiplier layer.

Samples are grid functions flattened to rows of length ``Np * Npp``.  The
input may be complex, which ``sklearn.utils.check_array`` rejects, so
validation is done here.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .discretization import Discretization
from .operators import CompiledOperator
from .symbols import SymbolFn, make_symbol


def _as_samples(X, n_features):
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array of flattened grid functions, got shape {X.shape}")
    if not (np.issubdtype(X.dtype, np.number) or np.issubdtype(X.dtype, np.complexfloating)):
        raise ValueError("grid function samples must be numeric")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, the discretization has {n_features}")
    X = X.astype(complex)
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    return X


class PseudoMultiplier(TransformerMixin, BaseEstimator):
    """Apply ``m(x, sqrt(G))``, ``m(x, G)`` or ``m(x, L, U)`` to flattened grid functions.

    Parameters
    ----------
    symbol : str or SymbolFn
        A built-in name (``"constant"``, ``"power-decay"``, ``"sinusoidal-x"``,
        ``"sin-kappa-power"``) or a symbol object.
    symbol_params : dict, optional
        Keyword arguments for a built-in symbol.
    mode : {"sqrtG", "G", "joint"}
    n1, n2, K, Lam, M2, L2 : discretization parameters

    Attributes
    ----------
    disc_ : Discretization
    operator_ : CompiledOperator
    n_features_in_ : int
    """

    def __init__(self, symbol="constant", symbol_params=None, mode="G", n1=1, n2=1, K=16, Lam=8,
                 M2=32, L2=8 * np.pi):
        self.symbol = symbol
        self.symbol_params = symbol_params
        self.mode = mode
        self.n1 = n1
        self.n2 = n2
        self.K = K
        self.Lam = Lam
        self.M2 = M2
        self.L2 = L2

    def _symbol(self):
        if isinstance(self.symbol, SymbolFn):
            return self.symbol
        params = dict(self.symbol_params or {})
        params.setdefault("n1", self.n1)
        params.setdefault("n2", self.n2)
        if self.symbol == "constant" and self.mode == "joint":
            params.setdefault("joint", True)
        return make_symbol(self.symbol, **params)

    def fit(self, X=None, y=None):
        """Build and validate the discretization; ``X`` is only shape-checked."""
        disc = Discretization(self.n1, self.n2, self.K, self.Lam, self.M2, self.L2)
        self.disc_ = disc
        self.operator_ = CompiledOperator(self._symbol(), disc, self.mode)
        self.n_features_in_ = disc.Np * disc.Npp
        if X is not None:
            _as_samples(X, self.n_features_in_)
        return self

    def _check_fitted(self):
        if not hasattr(self, "operator_"):
            raise NotFittedError("call fit before transform")

    def transform(self, X):
        self._check_fitted()
        X = _as_samples(X, self.n_features_in_)
        vals = X.reshape((X.shape[0],) + self.disc_.grid_shape)
        return self.operator_.apply_array(vals).reshape(X.shape[0], -1)

    def adjoint_transform(self, X):
        self._check_fitted()
        X = _as_samples(X, self.n_features_in_)
        vals = X.reshape((X.shape[0],) + self.disc_.grid_shape)
        return self.operator_.adjoint_array(vals).reshape(X.shape[0], -1)

    def random_band_samples(self, n_samples, seed=0):
        """Random band-limited grid functions, flattened."""
        self._check_fitted()
        rng = np.random.default_rng(seed)
        c = self.disc_.random_coeffs(rng, size=(n_samples,))
        return self.disc_.backward_array(c).reshape(n_samples, -1)
