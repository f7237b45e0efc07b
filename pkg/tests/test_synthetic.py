import numpy as np
import pytest

from spr.ccd import CcdConfig, objective, run_ccd
from spr.data_model import PlayerTable, RegPair, SprModel, StintSet, standardize_columns
from spr.errors import ValidationError
from spr.estimators import RatingsModel, fit_wls
from spr.evaluation import predict_margin
from spr.synthetic import (
    ORACLE_MAX_N,
    generate_season,
    grid_minimize_1d,
    quadratic_oracle,
)

from conftest import make_stint, random_box


class TestGenerateSeason:
    def test_same_seed_bit_identical(self):
        a = generate_season(p=14, d=3, n_games=9, stints_per_game=3, spike_count=2, noise_sd=0.3, seed=21)
        b = generate_season(p=14, d=3, n_games=9, stints_per_game=3, spike_count=2, noise_sd=0.3, seed=21)
        assert a[0].stints == b[0].stints
        assert np.array_equal(a[1].matrix, b[1].matrix)
        assert a[2].lines == b[2].lines
        assert np.array_equal(a[3].beta_star, b[3].beta_star)
        assert a[3].spike_support == b[3].spike_support

    def test_different_seed_differs(self):
        a = generate_season(p=14, d=3, n_games=9, stints_per_game=3, spike_count=2, noise_sd=0.3, seed=21)
        b = generate_season(p=14, d=3, n_games=9, stints_per_game=3, spike_count=2, noise_sd=0.3, seed=22)
        assert a[0].stints != b[0].stints

    def test_truth_invariant(self):
        data, box, _, truth = generate_season(
            p=18, d=4, n_games=8, stints_per_game=3, spike_count=3, noise_sd=0.2, seed=5
        )
        residual = truth.beta_star - truth.z0_star - box.matrix @ truth.z_star
        off_support = [i for i in range(18) if i not in truth.spike_support]
        assert np.abs(residual[off_support]).max() <= 1e-12
        assert all(residual[i] != 0 for i in truth.spike_support)

    def test_noiseless_margins_follow_rate_model(self):
        data, _, _, truth = generate_season(
            p=12, d=3, n_games=6, stints_per_game=4, spike_count=1, noise_sd=0.0, seed=6
        )
        for s in data.stints:
            rate = truth.alpha_star + sum(truth.beta_star[i] for i in s.home) \
                - sum(truth.beta_star[i] for i in s.away)
            assert s.margin == pytest.approx(s.weight * rate, abs=1e-12)

    def test_noiseless_wls_recovery(self):
        data, _, _, truth = generate_season(
            p=20, d=4, n_games=60, stints_per_game=5, spike_count=2, noise_sd=0.0, seed=7
        )
        model = fit_wls(data)
        assert np.abs(model.beta - truth.beta_star).max() <= 1e-6

    def test_lines_near_expected_margins(self):
        data, _, lines, truth = generate_season(
            p=14, d=3, n_games=30, stints_per_game=4, spike_count=1, noise_sd=0.0, seed=8
        )
        true_model = RatingsModel("wls", truth.alpha_star, truth.beta_star)
        gaps = np.array([
            lines.get(gid) - predict_margin(true_model, stints)
            for gid, stints in data.games()
        ])
        assert np.abs(gaps).max() <= 10.0  # Normal(0, 2) noise
        assert np.abs(gaps).mean() <= 4.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            generate_season(p=8, d=3, n_games=5, stints_per_game=3, spike_count=0, noise_sd=0.1, seed=0)
        with pytest.raises(ValidationError):
            generate_season(p=12, d=3, n_games=5, stints_per_game=3, spike_count=20, noise_sd=0.1, seed=0)
        with pytest.raises(ValidationError):
            generate_season(p=12, d=3, n_games=5, stints_per_game=3, spike_count=1, noise_sd=-1.0, seed=0)


class TestQuadraticOracle:
    def test_lambda2_zero_matches_wls(self):
        data, box, _, _ = generate_season(
            p=16, d=4, n_games=30, stints_per_game=4, spike_count=2, noise_sd=0.5, seed=9
        )
        oracle = quadratic_oracle(data, box, 0.0)
        wls = fit_wls(data)
        lam = RegPair(0.0, 0.0)
        g_o = objective(oracle, data, box, lam)
        g_w = objective(SprModel(wls.alpha_hca, wls.beta, 0.0, np.zeros(4)), data, box, lam)
        assert abs(g_o - g_w) <= 1e-8 * (1 + g_w)

    def test_mutual_bound_with_ccd(self):
        for seed in range(20):
            data, box, _, _ = generate_season(
                p=12, d=3, n_games=15, stints_per_game=3, spike_count=1,
                noise_sd=0.5, seed=40 + seed,
            )
            std = standardize_columns(box)
            lam2 = float(2.0 ** np.random.default_rng(seed).integers(-6, 3))
            lam = RegPair(0.0, lam2)
            oracle = quadratic_oracle(data, std, lam2)
            model, _ = run_ccd(data, std, lam, CcdConfig(rel_tol=1e-10))
            g_o = objective(oracle, data, std, lam)
            g_c = objective(model, data, std, lam)
            assert g_c <= g_o + 1e-6 * (1 + g_o)
            assert g_o <= g_c + 1e-6 * (1 + g_c)

    def test_symmetric_two_stint_instance_by_hand(self):
        # Lineups A and B swap home court; R is the all-ones column. Reducing to
        # (alpha, delta) with delta = sum(beta_A) - sum(beta_B) gives
        #   alpha = (y1 + y2) / 2,  delta = (y1 - y2) / (2 + lambda2 / 5),
        # with the minimum-norm representative spreading delta as +-delta/10
        # and z0 = z = 0.
        players = PlayerTable(tuple(f"P{i}" for i in range(10)))
        a_side, b_side = list(range(5)), list(range(5, 10))
        y1, y2, lam2 = 4.0, -2.0, 5.0
        data = StintSet(
            (
                make_stint(0, a_side, b_side, 1.0, y1),
                make_stint(1, b_side, a_side, 1.0, y2),
            ),
            players,
        )
        from spr.data_model import BoxScoreTable

        box = BoxScoreTable(np.ones((10, 1)), ("ones",))
        oracle = quadratic_oracle(data, box, lam2)
        delta = (y1 - y2) / (2 + lam2 / 5)
        assert oracle.alpha_hca == pytest.approx((y1 + y2) / 2, abs=1e-10)
        assert np.allclose(oracle.beta[a_side], delta / 10, atol=1e-10)
        assert np.allclose(oracle.beta[b_side], -delta / 10, atol=1e-10)
        assert abs(oracle.z0) <= 1e-10 and abs(oracle.z[0]) <= 1e-10
        g = objective(oracle, data, box, RegPair(0.0, lam2))
        g_hand = 0.5 * ((y1 - oracle.alpha_hca - delta) ** 2 + (y2 - oracle.alpha_hca + delta) ** 2) \
            + lam2 * delta ** 2 / 10
        assert g == pytest.approx(g_hand, abs=1e-12)

    def test_size_guard(self):
        data, box, _, _ = generate_season(
            p=12, d=3, n_games=ORACLE_MAX_N + 1, stints_per_game=1,
            spike_count=0, noise_sd=0.1, seed=1,
        )
        with pytest.raises(ValidationError, match="oracle"):
            quadratic_oracle(data, box, 1.0)


class TestGridMinimize:
    def test_parabola(self):
        assert grid_minimize_1d(lambda x: x * x, -1, 1, 0.5) == 0.0

    def test_absolute_shift(self):
        got = grid_minimize_1d(lambda x: abs(x - 0.3), -1, 1, 0.1)
        assert abs(got - 0.3) <= 1e-12

    def test_tie_goes_to_smallest(self):
        assert grid_minimize_1d(lambda x: 0.0, -2, 2, 1.0) == -2.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            grid_minimize_1d(lambda x: x, 1, -1, 0.1)
        with pytest.raises(ValidationError):
            grid_minimize_1d(lambda x: x, -1, 1, 0.0)
