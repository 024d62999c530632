"""Monte Carlo harness for the synthetic two-Gaussian study.

Every trial owns a random stream seeded from ``(master_seed, K, trial, arm)``
through :class:`numpy.random.SeedSequence`, so results are bit-reproducible
and independent of how trials are split across worker processes.

The number of worker processes defaults to the ``ONLINE_SCS_WORKERS``
environment variable (1 when unset).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .adaptive import run_adaptive
from .decoder import map_decode, piecewise_decode
from .errors import ValidationError
from .gmm import (GaussianModel, Gmm, linear_approx_error, make_flipped_gaussian,
                  make_power_law_gaussian, sample)
from .sensing import SensingMatrix, encode, principal_direction_matrix, random_matrix

ARM_ADAPTIVE = 0
ARM_STANDARD = 1
ARM_FROZEN = 2

WORKERS_ENV = "ONLINE_SCS_WORKERS"

# (online correct, final correct) for the four error cells, in report order
CELLS = ((True, True), (True, False), (False, True), (False, False))


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for one ``(seed, *key)`` tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _mean_and_stderr(values: NDArray) -> tuple[float, float]:
    n = values.shape[0]
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _rate_stderr(rate: float, n: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / n)


def make_synthetic_gmm(N: int = 64, alpha: float = 2.0) -> Gmm:
    """Power-law Gaussian plus its flip, whose axes carry the eigenvalues in reverse order."""
    g = make_power_law_gaussian(N, alpha)
    return Gmm([g, make_flipped_gaussian(g)])


def _check_indices(gmm: Gmm, true_index: int, M: int) -> None:
    if not 0 <= true_index < len(gmm):
        raise ValidationError(f"true_index {true_index} out of range for J={len(gmm)}")
    if not 1 <= M <= gmm.dimension:
        raise ValidationError(f"need 1 <= M <= N, got M={M}")


def run_standard_scs_trial(gmm: Gmm, true_index: int, M: int, rng: np.random.Generator,
                           matrix_kind: str = "gaussian",
                           phi: SensingMatrix | None = None) -> tuple[float, int]:
    """One fully random acquisition.  Returns ``(squared_error, final_index)``.

    Draw order is signal first, then matrix; :func:`run_adaptive_trial`
    follows the same order so that ``K == M`` reproduces this trial exactly.
    """
    _check_indices(gmm, true_index, M)
    x = sample(gmm[true_index], rng)
    if phi is None:
        phi = random_matrix(matrix_kind, M, gmm.dimension, rng)
    result = piecewise_decode(gmm, phi, encode(phi, x))
    return float(np.sum((x - result.reconstruction) ** 2)), result.selected_index


def run_adaptive_trial(gmm: Gmm, true_index: int, M: int, K: int, rng: np.random.Generator,
                       matrix_kind: str = "gaussian",
                       phi_random: SensingMatrix | None = None) -> tuple[float, int, int]:
    """One adaptive acquisition.  Returns ``(squared_error, online_index, final_index)``."""
    _check_indices(gmm, true_index, M)
    x = sample(gmm[true_index], rng)
    result, j_online, j_final = run_adaptive(gmm, x, M, K, rng, matrix_kind, phi_random)
    return float(np.sum((x - result.reconstruction) ** 2)), j_online, j_final


@dataclass(frozen=True)
class CellStats:
    event_count: int
    sum_squared_error: float
    contribution: float
    contribution_stderr: float


@dataclass(frozen=True)
class ErrorComponents:
    """Adaptive squared error split by correctness of the online and final selections.

    ``cells`` follows :data:`CELLS`: (both right), (online right, final
    wrong), (online wrong, final right), (both wrong).  A cell's
    ``contribution`` is its summed squared error divided by the total trial
    count and by the mean signal energy, so the four contributions add up to
    the normalized MSE.
    """

    cells: tuple[CellStats, CellStats, CellStats, CellStats]
    trials: int
    signal_energy: float

    @classmethod
    def from_trials(cls, sq_errors: NDArray, online_ok: NDArray, final_ok: NDArray,
                    signal_energy: float) -> "ErrorComponents":
        n = sq_errors.shape[0]
        cells = []
        for on, fin in CELLS:
            mask = (online_ok == on) & (final_ok == fin)
            per_trial = np.where(mask, sq_errors, 0.0) / signal_energy
            contrib, se = _mean_and_stderr(per_trial)
            cells.append(CellStats(int(mask.sum()), math.fsum(sq_errors[mask]), contrib, se))
        return cls(tuple(cells), n, signal_energy)

    @property
    def contributions(self) -> tuple[float, ...]:
        return tuple(c.contribution for c in self.cells)

    @property
    def mse(self) -> float:
        return math.fsum(c.sum_squared_error for c in self.cells) / self.trials

    def frequency(self, cell: int) -> float:
        return self.cells[cell].event_count / self.trials


@dataclass(frozen=True)
class SweepRecord:
    K: int
    mse_adaptive: float
    mse_standard: float
    stderr_adaptive: float
    stderr_standard: float
    online_error_rate: float
    final_error_rate: float
    components: ErrorComponents
    trials: int

    @property
    def online_error_stderr(self) -> float:
        return _rate_stderr(self.online_error_rate, self.trials)

    @property
    def final_error_stderr(self) -> float:
        return _rate_stderr(self.final_error_rate, self.trials)


@dataclass(frozen=True)
class SweepResult:
    records: tuple[SweepRecord, ...]
    M: int
    trials: int
    seed: int
    matrix_kind: str = "gaussian"
    freeze_matrix: bool = False
    signal_energy: float = field(default=float("nan"))

    def record(self, K: int) -> SweepRecord:
        return self.records[K - 1]

    @property
    def best(self) -> SweepRecord:
        """Record with the smallest adaptive MSE (lowest K on ties)."""
        return min(self.records, key=lambda r: (r.mse_adaptive, r.K))


def _sweep_one_k(args) -> SweepRecord:
    gmm, M, K, trials, seed, matrix_kind, freeze_matrix, true_index = args
    N = gmm.dimension
    phi_random = phi_standard = None
    if freeze_matrix:
        frozen = trial_rng(seed, K, ARM_FROZEN)
        phi_random = random_matrix(matrix_kind, K, N, frozen)
        phi_standard = random_matrix(matrix_kind, M, N, frozen)

    err_a = np.empty(trials)
    online_ok = np.empty(trials, dtype=bool)
    final_ok = np.empty(trials, dtype=bool)
    err_s = np.empty(trials)
    for t in range(trials):
        e, j_on, j_fin = run_adaptive_trial(gmm, true_index, M, K,
                                            trial_rng(seed, K, t, ARM_ADAPTIVE),
                                            matrix_kind, phi_random)
        err_a[t], online_ok[t], final_ok[t] = e, j_on == true_index, j_fin == true_index
        err_s[t], _ = run_standard_scs_trial(gmm, true_index, M,
                                             trial_rng(seed, K, t, ARM_STANDARD),
                                             matrix_kind, phi_standard)

    energy = gmm[true_index].energy
    mse_a, se_a = _mean_and_stderr(err_a)
    mse_s, se_s = _mean_and_stderr(err_s)
    return SweepRecord(
        K=K,
        mse_adaptive=mse_a,
        mse_standard=mse_s,
        stderr_adaptive=se_a,
        stderr_standard=se_s,
        online_error_rate=int(np.count_nonzero(~online_ok)) / trials,
        final_error_rate=int(np.count_nonzero(~final_ok)) / trials,
        components=ErrorComponents.from_trials(err_a, online_ok, final_ok, energy),
        trials=trials,
    )


def sweep_k(gmm: Gmm, M: int, trials: int, seed: int, matrix_kind: str = "gaussian",
            freeze_matrix: bool = False, workers: int | None = None,
            K_values=None) -> SweepResult:
    """Adaptive and fully random acquisitions for every ``K`` in ``1..M``.

    Signals are always drawn from model 0.  ``K_values`` restricts the sweep
    to a subset (used by tests); ``workers > 1`` spreads values of ``K`` over
    a process pool without changing the result.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    if not 1 <= M <= gmm.dimension:
        raise ValidationError(f"need 1 <= M <= N, got M={M}")
    ks = list(range(1, M + 1)) if K_values is None else sorted(set(K_values))
    if any(not 1 <= k <= M for k in ks):
        raise ValidationError("every K must lie in 1..M")
    jobs = [(gmm, M, k, trials, seed, matrix_kind, freeze_matrix, 0) for k in ks]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_sweep_one_k, jobs))
    else:
        records = [_sweep_one_k(job) for job in jobs]
    return SweepResult(tuple(records), M, trials, seed, matrix_kind, freeze_matrix,
                       gmm[0].energy)


def c0_samples(g: GaussianModel, matrix_kind: str, M: int, trials: int,
               seed: int) -> NDArray:
    """Per-trial squared MAP errors divided by the tail eigenvalue sum.

    ``matrix_kind`` is ``"gaussian"``, ``"bernoulli"`` or ``"principal"``;
    the last senses along the top ``M`` principal directions of ``g``.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    N = g.dimension
    if not 1 <= M < N:
        raise ValidationError(f"need 1 <= M < N, got M={M}, N={N}")
    floor = linear_approx_error(g, M)
    if not floor > 0:
        raise ValidationError(f"tail eigenvalue sum is zero at M={M}; the ratio is undefined")
    fixed = principal_direction_matrix(g, M) if matrix_kind == "principal" else None
    out = np.empty(trials)
    for t in range(trials):
        rng = trial_rng(seed, t)
        x = sample(g, rng) - g.mean
        phi = fixed if fixed is not None else random_matrix(matrix_kind, M, N, rng)
        x_hat = map_decode(g, phi, encode(phi, x))
        out[t] = np.sum((x - x_hat) ** 2) / floor
    return out


def estimate_c0(g: GaussianModel, matrix_kind: str, M: int, trials: int, seed: int) -> float:
    """Monte Carlo ratio of the MAP decoder's MSE to the best linear-approximation MSE."""
    return math.fsum(c0_samples(g, matrix_kind, M, trials, seed)) / trials
