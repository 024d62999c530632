"""MAP linear decoding, log-posterior model selection and the piecewise linear decoder.

For a zero-mean Gaussian prior with covariance ``S`` and noiseless
measurements ``y = Phi x`` the MAP estimate is::

    x_hat = S Phi' (Phi S Phi')^-1 y

The piecewise decoder evaluates this for every model of a mixture and keeps
the candidate whose model assigns it the largest log posterior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NumericError, ValidationError
from .gmm import GaussianModel, Gmm
from .sensing import MeasurementVector, SensingMatrix

# Cholesky pivots below this fraction of the largest Gram diagonal trigger the
# pseudo-inverse path, which truncates eigenvalues at the same relative level.
PIVOT_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class DecodeResult:
    """Output of :func:`piecewise_decode`.

    ``selected_index`` is zero-based.  ``per_model_reconstructions`` is a
    ``(J, N)`` array when requested, otherwise ``None``.
    """

    reconstruction: NDArray
    selected_index: int
    scores: NDArray
    per_model_reconstructions: NDArray | None = None


def _measurements(phi: SensingMatrix, y) -> NDArray:
    if isinstance(y, MeasurementVector):
        if y.matrix is not phi and y.matrix.shape != phi.shape:
            raise ValidationError("measurements were produced by a different-shaped matrix")
        v = y.values
    else:
        v = np.asarray(y, dtype=float).reshape(-1)
    if v.shape[0] != phi.rows:
        raise ValidationError(f"{v.shape[0]} measurements for a matrix with {phi.rows} rows")
    return v


def _check_decodable(phi: SensingMatrix, n: int) -> None:
    if phi.cols != n:
        raise ValidationError(f"matrix has {phi.cols} columns, model dimension is {n}")
    if phi.rows < 1:
        raise ValidationError("decoding needs at least one measurement")


def _pinv_solve(gram: NDArray, y: NDArray, model_index) -> NDArray:
    w, v = np.linalg.eigh(gram)
    top = w[-1]
    if not np.isfinite(top) or top <= 0:
        raise NumericError(f"Gram matrix of model {model_index} is singular: "
                           "measurements carry no energy under this model")
    keep = w > PIVOT_RTOL * top
    return v[:, keep] @ ((v[:, keep].T @ y) / w[keep])


def _gram_solve(gram: NDArray, y: NDArray, model_index=None) -> NDArray:
    """Return ``gram^-1 y`` (or its truncated pseudo-inverse counterpart)."""
    gram = 0.5 * (gram + gram.T)
    scale = np.max(np.diag(gram))
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        return _pinv_solve(gram, y, model_index)
    if not scale > 0 or np.min(np.diag(chol)) ** 2 < PIVOT_RTOL * scale:
        return _pinv_solve(gram, y, model_index)
    return np.linalg.solve(chol.T, np.linalg.solve(chol, y))


def map_decode(g: GaussianModel, phi: SensingMatrix, y, model_index=None) -> NDArray:
    """MAP estimate of a signal drawn from ``g`` given ``y = Phi x``.

    ``model_index`` is only used to label numeric errors.
    """
    _check_decodable(phi, g.dimension)
    v = _measurements(phi, y)
    P = phi.entries
    sp = g.covariance @ P.T
    return sp @ _gram_solve(P @ sp, v, model_index)


def _decode_all(gmm: Gmm, P: NDArray, v: NDArray) -> NDArray:
    """MAP candidates for every model, batched when all Gram matrices are well conditioned."""
    sp = gmm.covariances @ P.T                       # (J, N, M)
    gram = P @ sp                                    # (J, M, M)
    gram = 0.5 * (gram + np.swapaxes(gram, 1, 2))
    try:
        chol = np.linalg.cholesky(gram)
        piv = np.diagonal(chol, axis1=1, axis2=2).min(axis=1) ** 2
        scale = np.diagonal(gram, axis1=1, axis2=2).max(axis=1)
        ok = bool(np.all((scale > 0) & (piv >= PIVOT_RTOL * scale)))
    except np.linalg.LinAlgError:
        ok = False
    if ok:
        rhs = np.broadcast_to(v[:, None], gram.shape[:2] + (1,))
        w = np.linalg.solve(gram, rhs)               # (J, M, 1)
        return (sp @ w)[..., 0]
    return np.stack([sp[j] @ _gram_solve(gram[j], v, j) for j in range(len(gmm))])


def select_model(gmm: Gmm, candidates: ArrayLike) -> tuple[int, NDArray]:
    """Pick the model maximizing ``-(log|S_j| + x_j' S_j^-1 x_j) / 2``.

    ``candidates[j]`` is the estimate produced under model ``j``.  Ties go to
    the lowest index.  Returns the zero-based index and the score vector.
    """
    X = np.asarray(candidates, dtype=float)
    if X.shape != (len(gmm), gmm.dimension):
        raise ValidationError(
            f"expected {len(gmm)} candidates of length {gmm.dimension}, got shape {X.shape}")
    energy = np.einsum("jn,jn->j", X, (gmm.inv_covariances @ X[:, :, None])[:, :, 0])
    scores = -0.5 * (gmm.log_dets + energy)
    return int(np.argmax(scores)), scores


def piecewise_decode(gmm: Gmm, phi: SensingMatrix, y,
                     keep_candidates: bool = False) -> DecodeResult:
    """Decode under every model, select one, and return its reconstruction."""
    _check_decodable(phi, gmm.dimension)
    v = _measurements(phi, y)
    X = _decode_all(gmm, phi.entries, v)
    j, scores = select_model(gmm, X)
    return DecodeResult(
        reconstruction=X[j].copy(),
        selected_index=j,
        scores=scores,
        per_model_reconstructions=X if keep_candidates else None,
    )
