"""Sensing matrices and the linear encoder ``y = Phi x``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ValidationError
from .gmm import GaussianModel

RANDOM_GAUSSIAN = "random_gaussian"
RANDOM_BERNOULLI = "random_bernoulli"
PRINCIPAL_DIRECTION = "principal_direction"
CONCATENATION = "concatenation"


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """An ``M x N`` encoder together with a record of how it was built.

    ``kind`` is one of the module-level tags.  Principal-direction matrices
    also carry the source ``model_index`` (``None`` when built from a bare
    model) and ``start_offset``; concatenations list operand kinds in
    ``parts``.
    """

    entries: NDArray
    kind: str
    model_index: int | None = None
    start_offset: int | None = None
    parts: tuple = field(default=())

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2:
            raise ValidationError(f"sensing matrix must be 2-D, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValidationError("sensing matrix has non-finite entries")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def label(self) -> str:
        if self.kind == PRINCIPAL_DIRECTION:
            return f"{self.kind}(j={self.model_index},offset={self.start_offset})"
        if self.kind == CONCATENATION:
            return f"{self.kind}({'+'.join(self.parts)})"
        return self.kind


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    values: NDArray
    matrix: SensingMatrix

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape[0] != self.matrix.rows:
            raise ValidationError(
                f"{v.shape[0]} measurements for a matrix with {self.matrix.rows} rows")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]


def _check_size(M: int, N: int) -> None:
    if N < 1:
        raise ValidationError("N must be at least 1")
    if not 0 <= M <= N:
        raise ValidationError(f"need 0 <= M <= N, got M={M}, N={N}")


def random_gaussian_matrix(M: int, N: int, rng: np.random.Generator) -> SensingMatrix:
    """I.i.d. ``N(0, 1/M)`` entries."""
    _check_size(M, N)
    if M == 0:
        return SensingMatrix(np.zeros((0, N)), RANDOM_GAUSSIAN)
    return SensingMatrix(rng.standard_normal((M, N)) / np.sqrt(M), RANDOM_GAUSSIAN)


def random_bernoulli_matrix(M: int, N: int, rng: np.random.Generator) -> SensingMatrix:
    """I.i.d. entries drawn uniformly from ``{+1/sqrt(M), -1/sqrt(M)}``."""
    _check_size(M, N)
    if M == 0:
        return SensingMatrix(np.zeros((0, N)), RANDOM_BERNOULLI)
    signs = np.where(rng.integers(0, 2, size=(M, N)) == 1, 1.0, -1.0)
    return SensingMatrix(signs / np.sqrt(M), RANDOM_BERNOULLI)


RANDOM_BUILDERS = {
    "gaussian": random_gaussian_matrix,
    "bernoulli": random_bernoulli_matrix,
}


def random_matrix(kind: str, M: int, N: int, rng: np.random.Generator) -> SensingMatrix:
    try:
        builder = RANDOM_BUILDERS[kind]
    except KeyError:
        raise ValidationError(
            f"unknown random matrix kind {kind!r}; expected one of {sorted(RANDOM_BUILDERS)}"
        ) from None
    return builder(M, N, rng)


def principal_direction_matrix(g: GaussianModel, count: int, start_offset: int = 0,
                               model_index: int | None = None) -> SensingMatrix:
    """Rows are principal directions ``start_offset .. start_offset+count-1`` of ``g``."""
    N = g.dimension
    if count < 0 or start_offset < 0 or start_offset + count > N:
        raise ValidationError(
            f"principal directions [{start_offset}, {start_offset + count}) out of range for N={N}")
    rows = g.basis[:, start_offset:start_offset + count].T
    return SensingMatrix(rows, PRINCIPAL_DIRECTION, model_index=model_index,
                         start_offset=start_offset)


def concat(top: SensingMatrix, bottom: SensingMatrix) -> SensingMatrix:
    if top.cols != bottom.cols:
        raise ValidationError(f"column mismatch: {top.cols} vs {bottom.cols}")
    parts = []
    for m in (top, bottom):
        parts.extend(m.parts if m.kind == CONCATENATION else (m.label,))
    return SensingMatrix(np.vstack([top.entries, bottom.entries]), CONCATENATION,
                         parts=tuple(parts))


def encode(phi: SensingMatrix, x: ArrayLike) -> MeasurementVector:
    x = np.asarray(x, dtype=float)
    if x.shape != (phi.cols,):
        raise ValidationError(f"signal must have length {phi.cols}, got shape {x.shape}")
    return MeasurementVector(phi.entries @ x, phi)
