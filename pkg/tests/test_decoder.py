import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from online_scs.decoder import map_decode, piecewise_decode, select_model
from online_scs.errors import NumericError, ValidationError
from online_scs.gmm import (GaussianModel, Gmm, make_flipped_gaussian,
                            make_power_law_gaussian, sample)
from online_scs.sensing import (SensingMatrix, encode, principal_direction_matrix,
                                random_gaussian_matrix)

from conftest import random_orthonormal


def _phi(rows):
    return SensingMatrix(np.atleast_2d(np.asarray(rows, dtype=float)), "random_gaussian")


def _random_model(n, rng, low=0.05):
    return GaussianModel.from_eig(random_orthonormal(n, rng),
                                  np.sort(rng.uniform(low, 4.0, n))[::-1])


class TestMapDecode:

    def test_orthogonal_projection(self):
        g = GaussianModel.from_eig(np.eye(3), [1.0, 1.0, 1.0])
        np.testing.assert_allclose(map_decode(g, _phi([1, 0, 0]), [2.5]), [2.5, 0, 0], atol=1e-14)

    def test_principal_projection(self):
        g = make_power_law_gaussian(4, 1.0)
        phi = principal_direction_matrix(g, 2)
        np.testing.assert_allclose(map_decode(g, phi, encode(phi, [1, 2, 3, 4])),
                                   [1, 2, 0, 0], atol=1e-14)

    def test_single_measurement_closed_form(self):
        g = GaussianModel.from_covariance(np.diag([1.0, 0.25]))
        np.testing.assert_allclose(map_decode(g, _phi([1, 1]), [2.0]), [1.6, 0.4], atol=1e-14)

    def test_rank_one_prior(self, rng):
        lam = np.zeros(6)
        lam[0] = 1.0
        g = GaussianModel.from_eig(np.eye(6), lam)
        phi = random_gaussian_matrix(4, 6, rng)
        x = np.array([1.7, 0, 0, 0, 0, 0])
        np.testing.assert_allclose(map_decode(g, phi, encode(phi, x)), x, atol=1e-10)

    def test_no_energy_is_numeric_error(self):
        lam = np.array([1.0, 0.0])
        g = GaussianModel.from_eig(np.eye(2), lam)
        with pytest.raises(NumericError, match="model 3"):
            map_decode(g, _phi([0, 1]), [0.0], model_index=3)

    def test_needs_a_measurement(self, power_law_64, rng):
        with pytest.raises(ValidationError):
            map_decode(power_law_64, random_gaussian_matrix(0, 64, rng), [])

    def test_dimension_mismatch(self, power_law_64):
        with pytest.raises(ValidationError):
            map_decode(power_law_64, _phi(np.ones(5)), [1.0])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.sampled_from([0.1, 1.0, 10.0]))
    def test_scaling_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        g = _random_model(10, rng)
        P = rng.standard_normal((4, 10))
        y = P @ sample(g, rng)
        np.testing.assert_allclose(map_decode(g, _phi(c * P), c * y),
                                   map_decode(g, _phi(P), y), atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), M=st.integers(1, 10))
    def test_oracle_exactness(self, seed, M):
        rng = np.random.default_rng(seed)
        g = _random_model(10, rng)
        x = 3 * rng.standard_normal(10)
        phi = principal_direction_matrix(g, M)
        B = g.basis[:, :M]
        np.testing.assert_allclose(map_decode(g, phi, encode(phi, x)), B @ (B.T @ x), atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), M=st.integers(1, 10))
    def test_measurement_consistency(self, seed, M):
        rng = np.random.default_rng(seed)
        g = _random_model(10, rng, low=0.2)
        phi = random_gaussian_matrix(M, 10, rng)
        y = encode(phi, rng.standard_normal(10))
        np.testing.assert_allclose(phi.entries @ map_decode(g, phi, y), y.values, atol=1e-8)


class TestSelectModel:

    def test_single_model(self, power_law_64, rng):
        j, scores = select_model(Gmm([power_law_64]), [rng.standard_normal(64)])
        assert j == 0 and scores.shape == (1,)

    def test_tie_goes_low(self):
        g = GaussianModel.from_eig(np.eye(3), [1.0, 1.0, 1.0])
        j, scores = select_model(Gmm([g, g]), [[1, 2, 3], [1, 2, 3]])
        assert j == 0 and scores[0] == scores[1]

    def test_flipped_pair(self):
        g = make_power_law_gaussian(4, 2.0)
        f = make_flipped_gaussian(g)
        x = [1.0, 0.0, 0.0, 0.0]
        j, scores = select_model(Gmm([g, f]), [x, x])
        assert g.log_det == pytest.approx(f.log_det, rel=1e-12)
        # under the flip the first axis carries 1/16, so the energy is 16 instead of 1
        assert scores[0] == pytest.approx(-0.5 * (g.log_det + 1), abs=1e-5)
        assert scores[1] == pytest.approx(-0.5 * (f.log_det + 16), abs=1e-5)
        assert j == 0

    def test_candidate_count(self, synthetic_gmm):
        with pytest.raises(ValidationError):
            select_model(synthetic_gmm, np.zeros((3, 64)))


class TestPiecewiseDecode:

    def test_single_model_matches_map(self, power_law_64, rng):
        phi = random_gaussian_matrix(8, 64, rng)
        y = encode(phi, sample(power_law_64, rng))
        res = piecewise_decode(Gmm([power_law_64]), phi, y)
        np.testing.assert_allclose(res.reconstruction, map_decode(power_law_64, phi, y), atol=1e-12)

    def test_result_invariants(self, synthetic_gmm, rng):
        phi = random_gaussian_matrix(16, 64, rng)
        y = encode(phi, sample(synthetic_gmm[1], rng))
        res = piecewise_decode(synthetic_gmm, phi, y, keep_candidates=True)
        assert res.selected_index == int(np.argmax(res.scores))
        np.testing.assert_array_equal(res.reconstruction,
                                      res.per_model_reconstructions[res.selected_index])
        for cand in res.per_model_reconstructions:
            np.testing.assert_allclose(phi.entries @ cand, y.values, atol=1e-8)

    def test_zero_measurements_pick_smallest_log_det(self, rng):
        small = GaussianModel.from_eig(np.eye(4), [1.0, 0.5, 0.1, 0.01])
        big = GaussianModel.from_eig(np.eye(4), [2.0, 1.0, 1.0, 1.0])
        phi = random_gaussian_matrix(2, 4, rng)
        res = piecewise_decode(Gmm([big, small]), phi, np.zeros(2), keep_candidates=True)
        assert not np.any(res.per_model_reconstructions)
        assert res.selected_index == 1

    def test_batched_path_matches_per_model(self, rng):
        models = [_random_model(8, rng) for _ in range(5)]
        gmm = Gmm(models)
        phi = random_gaussian_matrix(3, 8, rng)
        y = encode(phi, sample(models[2], rng))
        res = piecewise_decode(gmm, phi, y, keep_candidates=True)
        for j, g in enumerate(models):
            np.testing.assert_allclose(res.per_model_reconstructions[j], map_decode(g, phi, y),
                                       atol=1e-10)

    def test_rank_deficient_model_uses_fallback(self, rng):
        lam = np.zeros(6)
        lam[:2] = [1.0, 0.5]
        low_rank = GaussianModel.from_eig(np.eye(6), lam)
        full = make_power_law_gaussian(6, 1.0)
        phi = random_gaussian_matrix(4, 6, rng)
        x = np.array([0.3, -1.2, 0, 0, 0, 0])
        res = piecewise_decode(Gmm([full, low_rank]), phi, encode(phi, x), keep_candidates=True)
        np.testing.assert_allclose(res.per_model_reconstructions[1], x, atol=1e-9)

    def test_selection_mostly_correct_with_random_measurements(self, synthetic_gmm):
        correct = 0
        for t in range(2000):
            rng = np.random.default_rng([99, t])
            x = sample(synthetic_gmm[0], rng)
            phi = random_gaussian_matrix(16, 64, rng)
            correct += piecewise_decode(synthetic_gmm, phi, encode(phi, x)).selected_index == 0
        assert correct / 2000 > 0.98

    def test_deterministic(self, synthetic_gmm, rng):
        phi = random_gaussian_matrix(16, 64, rng)
        y = encode(phi, sample(synthetic_gmm[0], rng))
        a, b = piecewise_decode(synthetic_gmm, phi, y), piecewise_decode(synthetic_gmm, phi, y)
        assert a.selected_index == b.selected_index
        np.testing.assert_array_equal(a.reconstruction, b.reconstruction)
