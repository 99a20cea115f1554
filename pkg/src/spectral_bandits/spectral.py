"""Laplacian eigenbasis, regularized spectrum and effective dimension.

Eigenvalues are stored ascending and indexed from 0. The effective dimension
is stated with 1-based eigenvalue indices; ``effective_dimension`` maps the
d-th smallest regularized eigenvalue to ``diag[d - 1]``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArgument, NumericalError

#: Eigenvalues in ``[-ZERO_TOL, 0)`` are rounding noise and are clamped to 0.
ZERO_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenpairs of a graph Laplacian.

    ``basis[:, k]`` is the eigenvector for ``eigenvalues[k]``; the feature
    vector of node ``v`` is row ``basis[v]``. After truncation the basis keeps
    only the leading columns, so rows may have norm below one.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        for arr in (self.eigenvalues, self.basis):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        """Number of nodes (rows)."""
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        """Number of retained eigenvectors (columns)."""
        return self.basis.shape[1]

    @property
    def arm_features(self) -> np.ndarray:
        return self.basis

    def feature(self, v: int) -> np.ndarray:
        return self.basis[v]


@dataclass(frozen=True, eq=False)
class RegularizedSpectrum:
    lambda_reg: float
    diag: np.ndarray

    def __post_init__(self):
        self.diag.setflags(write=False)

    def __len__(self):
        return len(self.diag)


@dataclass(frozen=True)
class EffectiveDimension:
    d: int
    horizon: int
    threshold: float


def eigendecompose(lap, n_components=None) -> SpectralBasis:
    """Symmetric eigendecomposition with a deterministic sign convention.

    Each eigenvector is flipped so that its largest-magnitude entry is
    positive (first such entry on ties). With ``n_components`` only the
    smallest eigenpairs are computed, which is cheaper than a full solve
    followed by :func:`truncate_basis`.
    """
    lap = np.asarray(lap, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {lap.shape}")
    n = lap.shape[0]
    if n == 0:
        raise InvalidArgument("cannot decompose an empty matrix")
    subset = None
    if n_components is not None:
        if not 1 <= n_components <= n:
            raise InvalidArgument(f"n_components must lie in [1, {n}], got {n_components}")
        if n_components < n:
            subset = [0, n_components - 1]
    try:
        vals, vecs = scipy.linalg.eigh(lap, subset_by_index=subset, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if vals[0] < -ZERO_TOL:
        raise NumericalError(
            f"smallest eigenvalue {vals[0]:.3e} is negative; input is not a Laplacian"
        )
    vals = np.where(vals < 0, 0.0, vals)
    vecs = _fix_signs(vecs)
    return SpectralBasis(eigenvalues=vals, basis=np.ascontiguousarray(vecs))


def _fix_signs(vecs):
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def regularize(basis: SpectralBasis, lambda_reg: float) -> RegularizedSpectrum:
    """Shift the Laplacian spectrum by ``lambda_reg`` so it is strictly positive."""
    if not lambda_reg > 0 or not math.isfinite(lambda_reg):
        raise InvalidArgument(f"lambda_reg must be positive and finite, got {lambda_reg}")
    return RegularizedSpectrum(float(lambda_reg), basis.eigenvalues + lambda_reg)


def flat_spectrum(dim: int, lambda_reg: float) -> RegularizedSpectrum:
    """``lambda_reg * I``: the plain ridge regularizer of LinUCB."""
    if not lambda_reg > 0 or not math.isfinite(lambda_reg):
        raise InvalidArgument(f"lambda_reg must be positive and finite, got {lambda_reg}")
    return RegularizedSpectrum(float(lambda_reg), np.full(int(dim), float(lambda_reg)))


def effdim_threshold(t_horizon: int, lambda_reg: float) -> float:
    return t_horizon / math.log1p(t_horizon / lambda_reg)


def effective_dimension(spec: RegularizedSpectrum, t_horizon: int) -> EffectiveDimension:
    """Largest ``d`` with ``(d - 1) * diag[d - 1] <= T / log(1 + T / lambda)``.

    ``(d - 1) * diag[d - 1]`` is nondecreasing in ``d`` for a sorted spectrum,
    so the admissible values form a prefix and a forward scan finds the end.
    """
    if t_horizon < 1:
        raise InvalidArgument(f"horizon must be >= 1, got {t_horizon}")
    threshold = effdim_threshold(t_horizon, spec.lambda_reg)
    d = 1
    diag = spec.diag
    while d < len(diag) and d * diag[d] <= threshold:
        d += 1
    return EffectiveDimension(d=d, horizon=int(t_horizon), threshold=threshold)


def truncate_basis(basis: SpectralBasis, l_keep: int) -> SpectralBasis:
    """Keep the ``l_keep`` smoothest eigenvectors."""
    if not 1 <= l_keep <= basis.dim:
        raise InvalidArgument(f"l_keep must lie in [1, {basis.dim}], got {l_keep}")
    if l_keep == basis.dim:
        return basis
    return SpectralBasis(
        eigenvalues=basis.eigenvalues[:l_keep].copy(),
        basis=np.ascontiguousarray(basis.basis[:, :l_keep]),
    )


def lambda_norm(alpha, spec: RegularizedSpectrum) -> float:
    """``sqrt(sum_k diag[k] * alpha[k]**2)``."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != spec.diag.shape:
        raise InvalidArgument(
            f"alpha has length {alpha.size}, spectrum has length {len(spec.diag)}"
        )
    return float(math.sqrt(np.dot(spec.diag, alpha * alpha)))


# -- basis cache ------------------------------------------------------------

def save_basis(basis: SpectralBasis, path, key: str) -> None:
    """Store ``basis`` as ``.npz`` tagged with ``key`` (a graph digest)."""
    with open(path, "wb") as fh:
        np.savez(fh, key=np.array(key), eigenvalues=basis.eigenvalues, basis=basis.basis)


def load_basis(path, key: str | None = None, atol: float = 1e-8) -> SpectralBasis:
    """Load a cached basis; rejects a key mismatch or non-orthonormal columns."""
    with np.load(os.fspath(path), allow_pickle=False) as data:
        stored = str(data["key"])
        vals = np.array(data["eigenvalues"], dtype=float)
        vecs = np.array(data["basis"], dtype=float)
    if key is not None and stored != key:
        raise InvalidArgument(f"basis cache {path} was built for a different graph")
    gram = vecs.T @ vecs
    err = np.max(np.abs(gram - np.eye(vecs.shape[1]))) if vecs.size else 0.0
    if err > atol:
        raise NumericalError(f"cached basis is not orthonormal (max error {err:.2e})")
    return SpectralBasis(eigenvalues=vals, basis=np.ascontiguousarray(vecs))


def cached_eigendecompose(graph, cache_dir, n_components=None) -> SpectralBasis:
    """:func:`eigendecompose` of ``laplacian(graph)`` with an on-disk cache."""
    from .graph import laplacian

    key = graph.digest() + (f"-L{n_components}" if n_components else "")
    path = os.path.join(os.fspath(cache_dir), f"basis-{key[:24]}.npz")
    if os.path.exists(path):
        return load_basis(path, key)
    basis = eigendecompose(laplacian(graph), n_components)
    os.makedirs(cache_dir, exist_ok=True)
    save_basis(basis, path, key)
    return basis
