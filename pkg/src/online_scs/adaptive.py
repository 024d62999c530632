"""Online adaptive sensing for Gaussian mixtures.

A session walks through three phases:

1. ``AWAITING_RANDOM``: the caller measures the signal with
   ``session.random_matrix`` and submits the ``K`` values.
2. ``AWAITING_OPTIMAL``: the session has picked a model from the random
   measurements and exposes ``optimal_matrix``, the first ``M - K``
   principal directions of that model.  The caller measures again.
3. ``COMPLETE``: all ``M`` measurements are decoded together with the
   piecewise linear decoder.

Sessions only ever see measurement values, never the signal itself, so the
same object can drive a physical acquisition loop.  :func:`run_adaptive`
wraps the three calls for simulations.
"""

from __future__ import annotations

import enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .decoder import DecodeResult, piecewise_decode
from .errors import SessionStateError, ValidationError
from .gmm import Gmm
from .sensing import (MeasurementVector, SensingMatrix, concat, encode,
                      principal_direction_matrix, random_matrix)


class Phase(enum.Enum):
    AWAITING_RANDOM = 1
    AWAITING_OPTIMAL = 2
    COMPLETE = 3


def _values(y, expected: int, what: str) -> NDArray:
    v = y.values if isinstance(y, MeasurementVector) else np.asarray(y, dtype=float).reshape(-1)
    if v.shape[0] != expected:
        raise ValidationError(f"expected {expected} {what} measurements, got {v.shape[0]}")
    return v


class AdaptiveSession:
    """State of one adaptive acquisition of a single signal.

    Parameters
    ----------
    gmm : Gmm
        Signal model shared (read-only) across sessions.
    M : int
        Total measurement budget.
    K : int
        Number of random measurements taken before switching, ``1 <= K <= M``.
    random_matrix : SensingMatrix
        The ``K x N`` matrix used in the first phase.
    """

    def __init__(self, gmm: Gmm, M: int, K: int, random_matrix: SensingMatrix):
        N = gmm.dimension
        if not 1 <= K <= M <= N:
            raise ValidationError(f"need 1 <= K <= M <= N, got K={K}, M={M}, N={N}")
        if random_matrix.shape != (K, N):
            raise ValidationError(
                f"random matrix must be {K}x{N}, got {random_matrix.shape[0]}x{random_matrix.shape[1]}")
        self.gmm = gmm
        self.total_measurements = M
        self.random_count = K
        self.random_matrix = random_matrix
        self.phase = Phase.AWAITING_RANDOM
        self.random_values: NDArray | None = None
        self.online_index: int | None = None
        self.online_scores: NDArray | None = None
        self.optimal_matrix: SensingMatrix | None = None
        self.optimal_values: NDArray | None = None
        self.result: DecodeResult | None = None

    @property
    def optimal_count(self) -> int:
        return self.total_measurements - self.random_count

    def _require(self, phase: Phase) -> None:
        if self.phase is not phase:
            raise SessionStateError(f"session is in phase {self.phase.name}, expected {phase.name}")

    def submit_random_measurements(self, y_random) -> int:
        """Select a model online from the random measurements and plan the adaptive rows.

        Returns the zero-based online model index.
        """
        self._require(Phase.AWAITING_RANDOM)
        v = _values(y_random, self.random_count, "random")
        online = piecewise_decode(self.gmm, self.random_matrix, v)
        j = online.selected_index
        self.random_values = v
        self.online_index = j
        self.online_scores = online.scores
        self.optimal_matrix = principal_direction_matrix(
            self.gmm[j], self.optimal_count, model_index=j)
        self.phase = Phase.AWAITING_OPTIMAL
        return j

    def submit_optimal_measurements(self, y_optimal) -> DecodeResult:
        """Decode all ``M`` measurements (random rows first) and finish the session."""
        self._require(Phase.AWAITING_OPTIMAL)
        v = _values(y_optimal, self.optimal_count, "adaptive")
        self.optimal_values = v
        phi = self.full_matrix
        y = np.concatenate([self.random_values, v])
        self.result = piecewise_decode(self.gmm, phi, y)
        self.phase = Phase.COMPLETE
        return self.result

    @property
    def full_matrix(self) -> SensingMatrix:
        if self.optimal_matrix is None:
            raise SessionStateError("the adaptive rows are not known before the online selection")
        return concat(self.random_matrix, self.optimal_matrix)

    @property
    def final_index(self) -> int | None:
        return None if self.result is None else self.result.selected_index


def new_session(gmm: Gmm, M: int, K: int, rng: np.random.Generator,
                matrix_kind: str = "gaussian") -> AdaptiveSession:
    """Start a session, drawing a fresh ``K x N`` random matrix from ``rng``."""
    N = gmm.dimension
    if not 1 <= K <= M <= N:
        raise ValidationError(f"need 1 <= K <= M <= N, got K={K}, M={M}, N={N}")
    return AdaptiveSession(gmm, M, K, random_matrix(matrix_kind, K, N, rng))


def run_adaptive(gmm: Gmm, x: ArrayLike, M: int, K: int, rng: np.random.Generator,
                 matrix_kind: str = "gaussian",
                 phi_random: SensingMatrix | None = None) -> tuple[DecodeResult, int, int]:
    """Acquire and decode ``x`` adaptively.

    Returns ``(result, online_index, final_index)``.  Pass ``phi_random`` to
    reuse a fixed first-phase matrix instead of drawing one from ``rng``.
    """
    if phi_random is None:
        session = new_session(gmm, M, K, rng, matrix_kind)
    else:
        session = AdaptiveSession(gmm, M, K, phi_random)
    j_online = session.submit_random_measurements(encode(session.random_matrix, x))
    result = session.submit_optimal_measurements(encode(session.optimal_matrix, x))
    return result, j_online, result.selected_index
