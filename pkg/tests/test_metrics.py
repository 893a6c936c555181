import numpy as np
import pytest

from conftest import random_pl_loss
from core.adversaries import Adversary, AdversarySpec
from core.errors import DomainError
from core.losses import (
    MEDIAN,
    PLConvexLoss,
    ScoringRule,
    eval_loss,
    scoring_loss,
    v_loss,
    vshape_decompose,
)
from core.metrics import (
    cal_error,
    constraint_diagnostics,
    error_split,
    mcal1,
    mcal1_median,
    swap_regret,
    theta_regret,
)
from core.predictors import EfficientPredictor, RoundRecord, TruthfulPredictor
from core.sweep_engine import play_forward

GRID = np.arange(101) / 100


def make_records(predictions, losses):
    return [RoundRecord(t=i + 1, prediction=float(p), loss=loss, mixture=vshape_decompose(loss))
            for i, (p, loss) in enumerate(zip(predictions, losses))]


def brute_force_swap_regret(records):
    total = 0.0
    for b in {rec.prediction for rec in records}:
        group = [rec for rec in records if rec.prediction == b]
        played = sum(eval_loss(rec.loss, b) for rec in group)
        best = min(sum(eval_loss(rec.loss, s) for rec in group) for s in GRID)
        total += max(0.0, played - best)
    return total


class TestSwapRegret:
    def test_matching_losses(self):
        predictions = [0.0, 0.5, 0.5, 1.0]
        report = swap_regret(make_records(predictions, [v_loss(p) for p in predictions]))
        assert report.total == pytest.approx(0.0)

    def test_single_bin(self):
        report = swap_regret(make_records([0.0, 0.0], [v_loss(1.0), v_loss(1.0)]))
        assert report.total == pytest.approx(2.0)
        assert report.bins[0].best == 1.0

    def test_two_bins(self):
        report = swap_regret(make_records([0.0, 1.0], [v_loss(1.0), v_loss(0.0)]))
        assert report.total == pytest.approx(2.0)
        assert [c.contribution for c in report.bins] == pytest.approx([1.0, 1.0])
        assert report.external == pytest.approx(1.0)

    def test_empty(self):
        assert swap_regret([]).total == 0.0

    def test_agrees_with_grid_oracle(self, rng):
        for _ in range(100):
            T = int(rng.integers(1, 30))
            predictions = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=T)
            records = make_records(predictions, [random_pl_loss(rng) for _ in range(T)])
            report = swap_regret(records)
            assert report.total == pytest.approx(brute_force_swap_regret(records), abs=1e-9)
            assert report.total >= report.external - 1e-9

    def test_offsets_do_not_matter(self):
        raised = PLConvexLoss(np.array([0.0, 0.7, 1.0]), np.array([-1.0, 1.0]), 1.0)
        plain = swap_regret(make_records([0.1, 0.1], [v_loss(0.7), v_loss(0.2)])).total
        shifted = swap_regret(make_records([0.1, 0.1], [raised, v_loss(0.2)])).total
        assert shifted == pytest.approx(plain)

    def test_to_dict(self):
        report = swap_regret(make_records([0.0], [v_loss(1.0)]))
        assert report.to_dict()['bins'][0]['count'] == 1


class TestCalibration:
    def test_balanced_outcomes(self):
        y = np.tile([0.0, 1.0], 5)
        assert cal_error(MEDIAN, np.full(10, 0.5), y) == pytest.approx(0.0)
        assert mcal1(MEDIAN, np.full(10, 0.5), y) == 0.0

    def test_exact_predictions(self, rng):
        y = rng.choice(GRID, size=20)
        assert cal_error(MEDIAN, y, y) == pytest.approx(0.0)

    def test_always_wrong(self):
        assert cal_error(MEDIAN, np.zeros(10), np.ones(10)) == pytest.approx(10.0)

    def test_constant_overshoot(self):
        assert mcal1_median(np.full(7, 0.3), np.full(7, 0.2)) == 7.0

    def test_gap_between_bins(self, rng):
        predictions = rng.choice(np.arange(11) / 10, size=50)
        outcomes = rng.uniform(0.31, 0.39, size=50)
        assert mcal1(MEDIAN, predictions, outcomes) == 50.0

    @pytest.mark.parametrize("rule", [MEDIAN, ScoringRule('quantile', 0.8),
                                      ScoringRule('quantile', 0.25)])
    def test_matches_swap_regret_of_scoring_losses(self, rng, rule):
        for _ in range(30):
            T = int(rng.integers(1, 40))
            predictions = rng.choice([0.1, 0.4, 0.6, 0.9], size=T)
            outcomes = rng.choice(GRID, size=T)
            records = make_records(predictions, [scoring_loss(rule, y) for y in outcomes])
            assert cal_error(rule, predictions, outcomes) == pytest.approx(
                swap_regret(records).total, abs=1e-9)

    def test_mean_rule_uses_group_average(self):
        # group mean 0.5; played 0.2 costs 0.09 more per round
        assert cal_error(ScoringRule('mean'), np.full(4, 0.2), [0.0, 1.0, 0.4, 0.6]) == \
            pytest.approx(4 * 0.09)

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(DomainError):
            cal_error(MEDIAN, [0.1, 0.2], [0.3])

    def test_rejects_missing_outcomes(self):
        with pytest.raises(DomainError):
            mcal1(MEDIAN, [0.1], [np.nan])


class TestTranscriptMetrics:
    def _play_efficient(self, horizon=40, seed=3):
        predictor = EfficientPredictor(horizon, seed=seed)
        for v in np.linspace(0.05, 0.95, horizon):
            predictor.predict()
            predictor.observe(v_loss(v), v)
        return predictor

    def test_theta_grouping_refines_value_grouping(self):
        transcript = self._play_efficient().transcript
        assert theta_regret(transcript).total >= swap_regret(transcript).total - 1e-9

    def test_constraint_diagnostics(self):
        predictor = self._play_efficient()
        diagnostics = constraint_diagnostics(predictor.transcript, predictor.sys, predictor.delta)
        assert diagnostics.counts.sum() == 40
        assert diagnostics.expected_counts.sum() == pytest.approx(40.0)
        assert diagnostics.sums.shape == (len(predictor.sys), 4)
        assert diagnostics.c1 >= 0.0
        assert len(diagnostics.rows()) == len(predictor.sys)
        assert np.all(diagnostics.count_deviation <= 40.0)

    def test_diagnostics_reject_bad_delta(self):
        predictor = self._play_efficient(horizon=5)
        with pytest.raises(DomainError):
            constraint_diagnostics(predictor.transcript, predictor.sys, 1.0)

    def test_error_split_with_point_announcements(self):
        predictor = TruthfulPredictor(30)
        for v in np.linspace(0.0, 1.0, 30):
            loss = v_loss(v)
            predictor.predict([(loss, 1.0)])
            predictor.observe(loss, v)
        regret = {c.b: c.contribution for c in swap_regret(predictor.transcript).bins}
        for split in error_split(predictor.transcript):
            assert split.rounding == pytest.approx(regret[split.b])
            assert split.sampling == pytest.approx(0.0, abs=1e-9)

    def test_error_split_needs_announcements(self):
        with pytest.raises(DomainError):
            error_split(self._play_efficient(horizon=5).transcript)


class TestConstraintSlack:
    @pytest.mark.parametrize("spec", [
        AdversarySpec('fixed_v', v=0.5),
        AdversarySpec('bernoulli_median', bias=0.5),
    ], ids=['fixed_v', 'bernoulli_median'])
    @pytest.mark.parametrize("seed", [0, 1])
    def test_constant_stays_small(self, spec, seed):
        predictor = EfficientPredictor(256, seed=seed)
        transcript = play_forward(predictor, Adversary(spec, 256, seed))
        diagnostics = constraint_diagnostics(transcript, predictor.sys, predictor.delta)
        assert 0.0 <= diagnostics.c1 <= 10.0
