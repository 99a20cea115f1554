"""Regularized least squares with rank-one inverse updates."""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from ..errors import InvalidArgument

#: Updates between consistency checks of ``v_mat @ v_inv``.
CHECK_EVERY = 128
#: Largest tolerated entry of ``v_mat @ v_inv - I`` before re-inverting.
DRIFT_TOL = 1e-6


class RlsState:
    """Design statistics ``V = Lambda + sum x x^T`` and the ridge estimate.

    The inverse is carried along by Sherman-Morrison downdates; every
    ``CHECK_EVERY`` updates the product ``V V^{-1}`` is compared with the
    identity and the inverse is recomputed from scratch if it drifted.
    """

    def __init__(self, prior_diag):
        prior = np.array(prior_diag, dtype=float)
        if prior.ndim != 1 or prior.size == 0 or np.any(prior <= 0):
            raise InvalidArgument("prior must be a nonempty vector of positive entries")
        self.prior = prior
        self.dim = prior.size
        self.v_mat = np.diag(prior)
        self.v_inv = np.diag(1.0 / prior)
        self.xty = np.zeros(self.dim)
        self.alpha_hat = np.zeros(self.dim)
        self.log_det_ratio = 0.0
        self.n_updates = 0
        self.n_reinversions = 0

    @classmethod
    def from_spectrum(cls, spectrum) -> "RlsState":
        return cls(spectrum.diag)

    def update(self, x, r) -> np.ndarray:
        """Absorb observation ``(x, r)``.

        Returns ``g`` with ``V_new^{-1} = V_old^{-1} - g g^T``, which lets
        callers downdate cached quadratic forms in O(dim) per arm.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise InvalidArgument(f"feature must have length {self.dim}, got {x.shape}")
        if np.dot(x, x) > (1.0 + 1e-9) ** 2:
            raise InvalidArgument("feature vectors must have norm <= 1")
        u = self.v_inv @ x
        q = max(float(x @ u), 0.0)
        g = u / math.sqrt(1.0 + q)
        self.v_mat += np.outer(x, x)
        self.v_inv -= np.outer(g, g)
        self.xty += r * x
        self.log_det_ratio += math.log1p(q)
        self.n_updates += 1
        if self.n_updates % CHECK_EVERY == 0:
            self.check()
        self.alpha_hat = self.v_inv @ self.xty
        return g

    def width(self, x) -> float:
        """``||x||_{V^{-1}}``."""
        x = np.asarray(x, dtype=float)
        return math.sqrt(max(float(x @ self.v_inv @ x), 0.0))

    def sq_widths(self, features) -> np.ndarray:
        """Squared widths of every row of ``features``, evaluated directly."""
        return np.einsum("ij,ij->i", features @ self.v_inv, features)

    def inverse_error(self) -> float:
        return float(np.max(np.abs(self.v_mat @ self.v_inv - np.eye(self.dim))))

    def check(self) -> bool:
        """Re-invert ``V`` if the carried inverse drifted; True if it did."""
        if self.inverse_error() <= DRIFT_TOL:
            return False
        chol = scipy.linalg.cho_factor(self.v_mat)
        self.v_inv = scipy.linalg.cho_solve(chol, np.eye(self.dim))
        self.v_inv = 0.5 * (self.v_inv + self.v_inv.T)
        self.alpha_hat = self.v_inv @ self.xty
        self.n_reinversions += 1
        return True


def rls_update(state: RlsState, x, r) -> RlsState:
    state.update(x, r)
    return state


def ucb_width(state: RlsState, x) -> float:
    return state.width(x)
