"""Acceptance criteria for the adaptive sensing reproduction.

Each test checks one criterion at its pinned tolerance and records a
PASS/FAIL line that is printed in the pytest terminal summary.  The default
synthetic sweep (N=64, alpha=2, M=16, 10 000 trials, seed 42) is computed
once per session and shared by criteria 1 to 5.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from online_scs.decoder import map_decode
from online_scs.gmm import (GaussianModel, linear_approx_error, make_power_law_gaussian,
                            sample)
from online_scs.imaging import (GrayImage, build_directional_gmm, crop, extract_patches,
                                load_pgm, reassemble, run_image_experiment, save_pgm,
                                stripe_image)
from online_scs.sensing import (SensingMatrix, encode, principal_direction_matrix,
                                random_gaussian_matrix)
from online_scs.simulation import (c0_samples, make_synthetic_gmm, run_adaptive_trial,
                                   run_standard_scs_trial, sweep_k, trial_rng)

from conftest import ACCEPTANCE_LINES, random_orthonormal

SWEEP_TRIALS = 10_000
SWEEP_SEED = 42
SWEEP_RUNTIME_LIMIT_S = 120.0
C0_TRIALS = 20_000


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@pytest.fixture(scope="module")
def default_sweep():
    gmm = make_synthetic_gmm(64, 2.0)
    start = time.perf_counter()
    result = sweep_k(gmm, 16, SWEEP_TRIALS, SWEEP_SEED)
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def power_law():
    return make_power_law_gaussian(64, 2.0)


def test_criterion_1_u_shape_minimum(default_sweep):
    result, elapsed = default_sweep
    best = result.best.K
    mses = [r.mse_adaptive for r in result.records]
    u_shape = mses[0] > mses[best - 1] < mses[-1]
    ok = best in {8, 9, 10, 11} and u_shape and elapsed < SWEEP_RUNTIME_LIMIT_S
    assert report(1, ok, f"argmin K = {best} (want 8..11), U-shape {u_shape}, "
                         f"sweep took {elapsed:.1f}s (limit {SWEEP_RUNTIME_LIMIT_S:.0f}s)")


def test_criterion_2_mse_ratio(default_sweep):
    result, _ = default_sweep
    best = result.best
    ratio = best.mse_adaptive / best.mse_standard
    assert report(2, ratio <= 0.75, f"adaptive/standard MSE at K={best.K} is {ratio:.4f} (<= 0.75)")


def test_criterion_3_component_two_vanishes(default_sweep):
    result, _ = default_sweep
    freqs = [r.components.frequency(1) for r in result.records]
    worst = max(freqs)
    assert report(3, worst < 0.005, f"max (online right, final wrong) frequency {worst:.5f} (< 0.005)")


def test_criterion_4_component_monotonicity(default_sweep):
    result, _ = default_sweep
    bad = []
    for a, b in zip(result.records, result.records[1:]):
        c1a, c1b = a.components.cells[0], b.components.cells[0]
        slack1 = 2 * math.hypot(c1a.contribution_stderr, c1b.contribution_stderr)
        if c1b.contribution < c1a.contribution - slack1:
            bad.append(f"comp1 drops at K={b.K}")

        def wrong_online(r):
            c3, c4 = r.components.cells[2], r.components.cells[3]
            return c3.contribution + c4.contribution, math.hypot(c3.contribution_stderr,
                                                                 c4.contribution_stderr)
        wa, sa = wrong_online(a)
        wb, sb = wrong_online(b)
        if wb > wa + 2 * math.hypot(sa, sb):
            bad.append(f"comp3+4 rises at K={b.K}")
    assert report(4, not bad, "component 1 non-decreasing, 3+4 non-increasing (2 SE slack)"
                  + (f"; violations: {bad}" if bad else ""))


def test_criterion_5_selection_error_ordering(default_sweep):
    result, _ = default_sweep
    bad = []
    for r in result.records:
        se = math.hypot(r.online_error_stderr, r.final_error_stderr)
        if r.online_error_rate < r.final_error_rate - 2 * se:
            bad.append(r.K)
    last = result.records[-1]
    se_last = math.hypot(last.online_error_stderr, last.final_error_stderr)
    converge = abs(last.online_error_rate - last.final_error_rate) <= 3 * se_last
    assert report(5, not bad and converge,
                  f"online >= final - 2SE at every K (violations {bad}); at K=M "
                  f"online {last.online_error_rate:.4f} vs final {last.final_error_rate:.4f}")


def test_criterion_6_c0_within_bound(power_law):
    ratios = c0_samples(power_law, "gaussian", 16, C0_TRIALS, seed=6)
    c0 = math.fsum(ratios) / ratios.size
    assert report("6a", 1.0 <= c0 <= 6.0, f"C0 estimate {c0:.4f} lies in [1, 6]")


def test_criterion_6_c0_near_reported_value(power_law):
    ratios = c0_samples(power_law, "gaussian", 16, C0_TRIALS, seed=6)
    c0 = math.fsum(ratios) / ratios.size
    se = ratios.std(ddof=1) / math.sqrt(ratios.size)
    assert report("6b", abs(c0 - 4.5) <= 1.5,
                  f"C0 estimate {c0:.4f} +/- {se:.4f} within 1.5 of 4.5")


def test_criterion_7_oracle_floor(power_law):
    brute = float(sum(Fraction(1, m * m) for m in range(17, 65)))
    floor = linear_approx_error(power_law, 16)
    ratios = c0_samples(power_law, "principal", 16, C0_TRIALS, seed=7)
    mse = floor * math.fsum(ratios) / ratios.size
    rel = abs(mse - floor) / floor
    ok = rel <= 0.02 and floor == pytest.approx(brute, rel=1e-14)
    assert report(7, ok, f"principal-direction MSE {mse:.6f} vs floor {floor:.6f} "
                         f"(rel err {rel:.4f} <= 0.02); brute-force tail sum {brute:.7f}")


def test_criterion_8_reduction_at_full_random_budget():
    gmm = make_synthetic_gmm()
    worst = 0.0
    for t in range(2000):
        e_a, _, _ = run_adaptive_trial(gmm, 0, 16, 16, trial_rng(8, t))
        e_s, _ = run_standard_scs_trial(gmm, 0, 16, trial_rng(8, t))
        worst = max(worst, abs(e_a - e_s))
    assert report(8, worst <= 1e-12, f"max per-trial |adaptive - standard| at K=M is {worst:.2e}")


def _exactness_suite(tmp_path):
    rng = np.random.default_rng(9)
    failures = []
    for trial in range(20):
        n = 16
        g = GaussianModel.from_eig(random_orthonormal(n, rng),
                                   np.sort(rng.uniform(0.1, 5.0, n))[::-1])
        x = rng.standard_normal(n)
        for M in (1, 5, 12):
            phi = principal_direction_matrix(g, M)
            B = g.basis[:, :M]
            if np.max(np.abs(map_decode(g, phi, encode(phi, x)) - B @ (B.T @ x))) > 1e-10:
                failures.append("oracle exactness")
            P = rng.standard_normal((M, n))
            y = P @ x
            base = map_decode(g, SensingMatrix(P, "random_gaussian"), y)
            for c in (0.1, 10.0):
                scaled = map_decode(g, SensingMatrix(c * P, "random_gaussian"), c * y)
                if np.max(np.abs(scaled - base)) > 1e-10:
                    failures.append("scaling invariance")
            if np.max(np.abs(P @ base - y)) > 1e-8:
                failures.append("measurement consistency")
    for shape in ((8, 8), (27, 35), (64, 40)):
        img = GrayImage(rng.integers(0, 256, shape, dtype=np.uint8))
        if not np.array_equal(reassemble(extract_patches(img)).samples, crop(img).samples):
            failures.append("patch round trip")
        save_pgm(img, tmp_path / "rt.pgm")
        if not np.array_equal(load_pgm(tmp_path / "rt.pgm").samples, img.samples):
            failures.append("pgm round trip")
    return failures


def test_criterion_9_exactness_suite(tmp_path):
    start = time.perf_counter()
    failures = _exactness_suite(tmp_path)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 5.0
    assert report(9, ok, f"deterministic exactness checks in {elapsed:.2f}s (< 5s)"
                  + (f"; failures: {sorted(set(failures))}" if failures else ""))


@pytest.fixture(scope="module")
def directional_gmm():
    return build_directional_gmm(19, 8, np.random.default_rng(0))


def _real_image(name):
    skdata = pytest.importorskip("skimage.data")
    return GrayImage(getattr(skdata, name)())


@pytest.mark.parametrize("source", ["stripes", "camera", "coins"])
def test_criterion_10_image_experiment(source, directional_gmm, tmp_path):
    img = stripe_image(64, 64) if source == "stripes" else _real_image(source)
    path = tmp_path / f"{source}.pgm"
    save_pgm(img, path)
    report_ = run_image_experiment(load_pgm(path), directional_gmm, 16, [8, 9, 16], seed=10,
                                   image_id=source)
    std = report_.psnr_standard
    gains = {k: report_.record(k).psnr_adaptive - std for k in (8, 9, 16)}
    ok = gains[8] > 0 and gains[9] > 0 and abs(gains[16]) < 0.2
    assert report(f"10 ({source})", ok,
                  f"standard {std:.2f} dB; adaptive gain K=8 {gains[8]:+.2f}, "
                  f"K=9 {gains[9]:+.2f}, K=16 {gains[16]:+.2f} dB")
