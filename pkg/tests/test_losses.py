import numpy as np
import pytest

from conftest import random_pl_loss
from core.dist import expected_abs
from core.errors import DomainError, LossValidationError
from core.losses import (
    MEDIAN,
    PLConvexLoss,
    ScoringRule,
    eval_loss,
    loss_from_literal,
    score,
    scoring_loss,
    v_loss,
    vshape_decompose,
)

TRAPEZOID = PLConvexLoss(np.array([0.0, 0.25, 0.75, 1.0]), np.array([-1.0, 0.0, 1.0]), 0.25)
GRID = np.linspace(0.0, 1.0, 1000)


class TestEvalLoss:
    def test_v_shape_values(self):
        loss = PLConvexLoss(np.array([0.0, 0.5, 1.0]), np.array([-1.0, 1.0]), 0.5)
        assert eval_loss(loss, 0.0) == pytest.approx(0.5)
        assert eval_loss(loss, 0.5) == pytest.approx(0.0)
        assert eval_loss(loss, 1.0) == pytest.approx(0.5)

    def test_trapezoid_flat_bottom(self):
        assert eval_loss(TRAPEZOID, 0.5) == pytest.approx(0.0, abs=1e-15)
        assert TRAPEZOID(0.0) == pytest.approx(0.25)

    def test_vectorized(self):
        np.testing.assert_allclose(eval_loss(v_loss(0.3), GRID), np.abs(GRID - 0.3), atol=1e-15)

    @pytest.mark.parametrize("p", [-0.01, 1.01, np.nan])
    def test_rejects_points_outside_unit_interval(self, p):
        with pytest.raises(DomainError):
            eval_loss(TRAPEZOID, p)


class TestValidation:
    def test_non_convex(self):
        with pytest.raises(LossValidationError):
            PLConvexLoss(np.array([0.0, 0.5, 1.0]), np.array([1.0, -1.0]), 0.0)

    def test_non_lipschitz(self):
        with pytest.raises(LossValidationError):
            PLConvexLoss(np.array([0.0, 1.0]), np.array([1.5]), 0.0)

    def test_bad_endpoints(self):
        with pytest.raises(LossValidationError):
            PLConvexLoss(np.array([0.1, 1.0]), np.array([0.0]), 0.0)

    def test_slope_count(self):
        with pytest.raises(LossValidationError):
            PLConvexLoss(np.array([0.0, 0.5, 1.0]), np.array([0.0]), 0.0)

    def test_decompose_rejects_other_types(self):
        with pytest.raises(LossValidationError):
            vshape_decompose(lambda p: p)


class TestVShapeDecompose:
    def test_v_is_its_own_mixture(self):
        mixture = vshape_decompose(v_loss(0.5))
        np.testing.assert_array_equal(mixture.phi.support, [0.5])
        np.testing.assert_array_equal(mixture.phi.mass, [1.0])
        assert mixture.offset == pytest.approx(0.0)

    def test_linear_loss_is_point_mass_at_zero(self):
        mixture = vshape_decompose(PLConvexLoss(np.array([0.0, 1.0]), np.array([1.0]), 0.0))
        np.testing.assert_array_equal(mixture.phi.support, [0.0])
        assert mixture.offset == pytest.approx(0.0)
        np.testing.assert_allclose(mixture.evaluate(GRID), GRID, atol=1e-15)

    def test_trapezoid(self):
        mixture = vshape_decompose(TRAPEZOID)
        np.testing.assert_allclose(mixture.phi.support, [0.25, 0.75])
        np.testing.assert_allclose(mixture.phi.mass, [0.5, 0.5])
        assert mixture.offset == pytest.approx(-0.25)
        np.testing.assert_allclose(mixture.evaluate(GRID), eval_loss(TRAPEZOID, GRID), atol=1e-12)

    def test_reconstruction_on_random_losses(self, rng):
        worst = 0.0
        for _ in range(1000):
            loss = random_pl_loss(rng)
            mixture = vshape_decompose(loss)
            assert mixture.phi.mass.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(mixture.phi.mass >= 0.0)
            worst = max(worst, np.max(np.abs(mixture.evaluate(GRID) - eval_loss(loss, GRID))))
        assert worst <= 1e-9

    def test_slopes_recovered_from_cdf(self, rng):
        for _ in range(200):
            loss = random_pl_loss(rng)
            phi = vshape_decompose(loss).phi
            midpoints = 0.5 * (loss.breakpoints[:-1] + loss.breakpoints[1:])
            cdf_at_mid = np.array([phi.prob_at_most(m) for m in midpoints])
            np.testing.assert_allclose(2.0 * cdf_at_mid - 1.0, loss.slopes, atol=1e-12)


class TestScoringLoss:
    def test_median_is_v(self):
        loss = scoring_loss(MEDIAN, 0.3)
        np.testing.assert_allclose(eval_loss(loss, GRID), np.abs(GRID - 0.3), atol=1e-15)

    def test_quantile_pinball(self):
        rule = ScoringRule('quantile', 0.9)
        loss = scoring_loss(rule, 0.5)
        assert eval_loss(loss, 0.0) == pytest.approx(0.45)
        assert eval_loss(loss, 1.0) == pytest.approx(0.05)
        np.testing.assert_allclose(eval_loss(loss, GRID), score(rule, GRID, 0.5), atol=1e-12)

    def test_median_at_zero_decomposes_to_point_mass(self):
        phi = vshape_decompose(scoring_loss(MEDIAN, 0.0)).phi
        np.testing.assert_array_equal(phi.support, [0.0])

    def test_mean_is_half_squared_error_at_knots(self):
        loss = scoring_loss(ScoringRule('mean'), 0.3)
        knots = np.arange(65) / 64
        np.testing.assert_allclose(eval_loss(loss, knots), 0.5 * (knots - 0.3) ** 2, atol=1e-12)

    def test_quantile_at_endpoints(self):
        rule = ScoringRule('quantile', 0.25)
        np.testing.assert_allclose(eval_loss(scoring_loss(rule, 0.0), GRID), 0.75 * GRID, atol=1e-15)
        np.testing.assert_allclose(eval_loss(scoring_loss(rule, 1.0), GRID), 0.25 * (1 - GRID),
                                   atol=1e-15)


class TestScoringRule:
    def test_quantile_needs_level(self):
        with pytest.raises(DomainError):
            ScoringRule('quantile')
        with pytest.raises(DomainError):
            ScoringRule('quantile', 1.0)

    def test_median_takes_no_level(self):
        with pytest.raises(DomainError):
            ScoringRule('median', 0.5)

    def test_unknown(self):
        with pytest.raises(DomainError):
            ScoringRule('mode')

    def test_literal(self):
        assert ScoringRule.from_dict({'rule': 'quantile', 'q': 0.1}) == ScoringRule('quantile', 0.1)
        assert ScoringRule('median').to_dict() == {'rule': 'median'}


class TestScore:
    def test_median(self):
        assert score(MEDIAN, 0.2, 0.7) == pytest.approx(0.5)

    def test_mean_is_unscaled(self):
        assert score(ScoringRule('mean'), 0.2, 0.7) == pytest.approx(0.25)

    def test_quantile_sides(self):
        rule = ScoringRule('quantile', 0.9)
        assert score(rule, 0.2, 0.7) == pytest.approx(0.9 * 0.5)
        assert score(rule, 0.7, 0.2) == pytest.approx(0.1 * 0.5)


class TestLiterals:
    def test_score_literal(self):
        loss = loss_from_literal({'type': 'score', 'rule': 'quantile', 'q': 0.9, 'y': 0.5})
        assert eval_loss(loss, 0.0) == pytest.approx(0.45)

    def test_pl_literal(self):
        loss = loss_from_literal({'type': 'pl', 'breakpoints': [0, 0.25, 0.75, 1],
                                  'slopes': [-1, 0, 1], 'at_zero': 0.25})
        np.testing.assert_allclose(eval_loss(loss, GRID), eval_loss(TRAPEZOID, GRID))

    def test_unknown_literal(self):
        with pytest.raises(LossValidationError):
            loss_from_literal({'type': 'smooth'})

    def test_vmixture_matches_expected_abs(self):
        mixture = vshape_decompose(TRAPEZOID)
        assert mixture.evaluate(0.1) == pytest.approx(expected_abs(mixture.phi, 0.1) - 0.25)
