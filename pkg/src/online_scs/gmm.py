"""Gaussian and Gaussian-mixture signal models.

Each :class:`GaussianModel` caches its principal basis, sorted eigenvalues,
a regularized inverse covariance and the matching log-determinant, so that
decoding and model selection never refactor a covariance.

The regularization is a relative ridge ``eps = REG_RELATIVE * lambda_1``
added to every eigenvalue before inverting or taking logs.  It keeps scores
finite for nearly low-rank covariances (image-derived models) and scales
with the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NumericError, ValidationError

REG_RELATIVE = 1e-8
# used only when every eigenvalue is zero
REG_ABSOLUTE_FLOOR = 1e-8
SYMMETRY_RTOL = 1e-12
SIGN_THRESHOLD = 1e-12
ORTHO_TOL = 1e-10


def _as_matrix(a: ArrayLike, name: str) -> NDArray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def _check_symmetric(a: NDArray, name: str) -> None:
    scale = np.abs(a).max() if a.size else 0.0
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
        raise ValidationError(f"{name} is not symmetric")


def _fix_signs(basis: NDArray) -> NDArray:
    """Flip columns so the first entry above threshold is positive."""
    basis = basis.copy()
    for n in range(basis.shape[1]):
        col = basis[:, n]
        nz = np.flatnonzero(np.abs(col) > SIGN_THRESHOLD)
        if nz.size and col[nz[0]] < 0:
            basis[:, n] = -col
    return basis


def eigendecompose(covariance: ArrayLike) -> tuple[NDArray, NDArray]:
    """Eigendecomposition of a symmetric matrix, largest eigenvalue first.

    Returns ``(basis, eigenvalues)`` with ``basis`` column-orthonormal.  The
    first entry of each column whose magnitude exceeds ``1e-12`` is made
    positive, so results do not depend on the LAPACK build.

    Raises
    ------
    ValidationError
        If the input is not square, finite and symmetric.
    NumericError
        If the eigensolver does not converge.
    """
    cov = _as_matrix(covariance, "covariance")
    _check_symmetric(cov, "covariance")
    try:
        w, v = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(w, kind="stable")[::-1]
    return _fix_signs(v[:, order]), w[order]


def _regularization(eigenvalues: NDArray) -> float:
    top = float(eigenvalues[0]) if eigenvalues.size else 0.0
    return REG_RELATIVE * top if top > 0 else REG_ABSOLUTE_FLOOR


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """A Gaussian ``N(mean, covariance)`` with cached spectral data.

    Build instances with :meth:`from_covariance` or :meth:`from_eig` rather
    than the raw constructor; both fill the cached fields consistently.
    Arrays are marked read-only.
    """

    mean: NDArray
    covariance: NDArray
    basis: NDArray
    eigenvalues: NDArray
    log_det: float
    inv_covariance: NDArray

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]

    @property
    def reg_eps(self) -> float:
        return _regularization(self.eigenvalues)

    @property
    def energy(self) -> float:
        """Expected squared norm of a zero-mean draw (the trace)."""
        return float(np.sum(self.eigenvalues))

    @classmethod
    def from_eig(cls, basis: ArrayLike, eigenvalues: ArrayLike,
                 mean: ArrayLike | None = None) -> "GaussianModel":
        B = _as_matrix(basis, "basis")
        lam = np.asarray(eigenvalues, dtype=float)
        n = B.shape[0]
        if lam.shape != (n,):
            raise ValidationError(f"expected {n} eigenvalues, got shape {lam.shape}")
        if np.any(np.diff(lam) > 0):
            raise ValidationError("eigenvalues must be sorted in descending order")
        if n and lam[-1] < 0:
            raise ValidationError("eigenvalues must be non-negative")
        if np.abs(B.T @ B - np.eye(n)).max(initial=0.0) > ORTHO_TOL:
            raise ValidationError("basis columns are not orthonormal")
        mu = np.zeros(n) if mean is None else np.asarray(mean, dtype=float)
        if mu.shape != (n,):
            raise ValidationError(f"mean must have length {n}")
        cov = (B * lam) @ B.T
        cov = 0.5 * (cov + cov.T)
        eps = _regularization(lam)
        inv = (B / (lam + eps)) @ B.T
        inv = 0.5 * (inv + inv.T)
        log_det = float(np.sum(np.log(lam + eps)))
        arrays = [mu, cov, B.copy(), lam.copy(), inv]
        for a in arrays:
            a.setflags(write=False)
        return cls(arrays[0], arrays[1], arrays[2], arrays[3], log_det, arrays[4])

    @classmethod
    def from_covariance(cls, covariance: ArrayLike,
                        mean: ArrayLike | None = None) -> "GaussianModel":
        """Diagonalize ``covariance`` and cache the results.

        Eigenvalues that are negative only through round-off (above
        ``-1e-10 * lambda_1``) are clipped to zero; anything more negative is
        rejected as not positive semi-definite.
        """
        basis, lam = eigendecompose(covariance)
        if lam.size:
            tol = 1e-10 * max(abs(lam[0]), abs(lam[-1]))
            if lam[-1] < -tol:
                raise ValidationError("covariance is not positive semi-definite")
            lam = np.clip(lam, 0.0, None)
        return cls.from_eig(basis, lam, mean)


@dataclass(frozen=True, eq=False)
class Gmm:
    """An ordered collection of Gaussian models sharing one dimension.

    Stacked copies of the member covariances, inverse covariances and
    log-determinants are kept for batched decoding over all models.
    """

    models: tuple[GaussianModel, ...]

    def __init__(self, models: Sequence[GaussianModel]):
        models = tuple(models)
        if not models:
            raise ValidationError("a GMM needs at least one model")
        n = models[0].dimension
        if any(g.dimension != n for g in models):
            raise ValidationError("all models must share the same dimension")
        object.__setattr__(self, "models", models)
        stacked = {
            "covariances": np.stack([g.covariance for g in models]),
            "inv_covariances": np.stack([g.inv_covariance for g in models]),
            "log_dets": np.array([g.log_det for g in models]),
        }
        for key, arr in stacked.items():
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)

    @property
    def dimension(self) -> int:
        return self.models[0].dimension

    def __len__(self) -> int:
        return len(self.models)

    def __getitem__(self, j: int) -> GaussianModel:
        return self.models[j]

    def __iter__(self):
        return iter(self.models)


def make_power_law_gaussian(N: int, alpha: float) -> GaussianModel:
    """Zero-mean Gaussian on the canonical axes with ``lambda_m = m**-alpha``."""
    if N < 1:
        raise ValidationError("N must be at least 1")
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    lam = np.arange(1, N + 1, dtype=float) ** (-float(alpha))
    return GaussianModel.from_eig(np.eye(N), lam)


def make_flipped_gaussian(g: GaussianModel) -> GaussianModel:
    """Same eigenvalues as ``g`` but attached to its principal axes in reverse.

    The new basis is ``g.basis`` with its columns reversed, so
    ``g.basis.T @ flipped.basis`` is the anti-diagonal identity.
    """
    return GaussianModel.from_eig(g.basis[:, ::-1], g.eigenvalues, g.mean)


def sample(g: GaussianModel, rng: np.random.Generator) -> NDArray:
    """Draw one signal ``mean + B diag(sqrt(lambda)) z`` with ``z`` standard normal."""
    z = rng.standard_normal(g.dimension)
    return g.mean + g.basis @ (np.sqrt(g.eigenvalues) * z)


def log_score(g: GaussianModel, x: ArrayLike) -> float:
    """Unnormalized log density ``-(log|Sigma| + x' Sigma^-1 x) / 2``.

    Uses the regularized inverse and log-determinant.  ``x`` is taken as
    already centred; the model mean is not subtracted.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (g.dimension,):
        raise ValidationError(f"signal must have length {g.dimension}, got shape {x.shape}")
    return -0.5 * (g.log_det + float(x @ g.inv_covariance @ x))


def linear_approx_error(g: GaussianModel, M: int) -> float:
    """Tail eigenvalue sum: the least MSE reachable with ``M`` linear measurements."""
    if not 0 <= M <= g.dimension:
        raise ValidationError(f"M must lie in [0, {g.dimension}], got {M}")
    return math.fsum(g.eigenvalues[M:])
