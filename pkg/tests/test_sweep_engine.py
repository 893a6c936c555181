import csv
import json
import math
import os

import pytest

from core.adversaries import Adversary, AdversarySpec
from core.errors import DomainError
from core.predictors import EfficientPredictor
from core.sweep_engine import (
    ExperimentConfig,
    SweepEngine,
    fit_exponent,
    play_forward,
    run_cell,
)


def make_config(tmp_path, algorithm=None, adversary=None, **kwargs):
    return ExperimentConfig(
        algorithm=algorithm or {'name': 'efficient'},
        adversary=adversary or AdversarySpec('fixed_v', v=0.5),
        horizons=kwargs.pop('horizons', [16, 32]),
        seeds=kwargs.pop('seeds', [0, 1]),
        output_dir=str(tmp_path),
        **kwargs,
    )


class TestFitExponent:
    def test_square_root_growth(self):
        beta, c = fit_exponent([(100, 10.0), (400, 20.0), (1600, 40.0)])
        assert beta == pytest.approx(0.5)
        assert c == pytest.approx(1.0)

    def test_two_thirds_growth(self):
        horizons = [2 ** k for k in range(8, 15)]
        beta, _ = fit_exponent([(T, T ** (2 / 3)) for T in horizons])
        assert beta == pytest.approx(2 / 3, abs=1e-9)

    def test_log_factor_stays_below_two_thirds(self):
        horizons = [2 ** k for k in range(8, 15)]
        beta, _ = fit_exponent([(T, math.sqrt(T) * math.log(T)) for T in horizons])
        assert 0.5 < beta < 0.65

    def test_all_zero(self):
        assert fit_exponent([(100, 0.0), (200, 0.0), (400, 0.0)]) == (0.0, 0.0)

    def test_zero_values_are_skipped(self):
        beta, _ = fit_exponent([(10, 0.0), (100, 5.0), (1000, 50.0), (10000, 500.0)])
        assert beta == pytest.approx(1.0)

    @pytest.mark.parametrize("pairs", [
        [(100, 3.0), (100, 4.0)],
        [(100, 3.0), (400, 6.0)],
        [(100, 3.0), (400, 6.0), (400, 7.0)],
        [(100, 0.0), (400, 6.0), (1600, 12.0)],
    ])
    def test_needs_three_horizons(self, pairs):
        with pytest.raises(DomainError):
            fit_exponent(pairs)


class TestRunCell:
    def test_efficient_cell(self, tmp_path):
        cell = run_cell(make_config(tmp_path), 20, 0)
        assert cell['success'], cell.get('error')
        assert cell['swap_regret'] >= 0.0
        assert cell['c1'] >= 0.0
        assert os.path.exists(cell['transcript'])
        assert cell['wall_time'] >= 0.0

    def test_truthful_cell(self, tmp_path):
        config = make_config(tmp_path, algorithm={'name': 'truthful'},
                             adversary=AdversarySpec('two_point', b=0.2, epsilon=0.01))
        cell = run_cell(config, 30, 1)
        assert cell['success'], cell.get('error')
        assert 'c1' not in cell

    def test_fixed_grid_in_gap_has_full_identification_error(self, tmp_path):
        config = make_config(tmp_path, algorithm={'name': 'fixed_grid', 'm': 11},
                             adversary=AdversarySpec('uniform_gap', lo=0.3, hi=0.4))
        cell = run_cell(config, 40, 0)
        assert cell['success'], cell.get('error')
        assert cell['mcal1'] == 40.0

    def test_failure_is_reported(self, tmp_path):
        cell = run_cell(make_config(tmp_path, delta=0.5), 20, 0)
        assert not cell['success']
        assert cell['error'].startswith('DomainError')

    def test_same_seed_same_result(self, tmp_path):
        config = make_config(tmp_path)
        assert run_cell(config, 24, 3)['swap_regret'] == run_cell(config, 24, 3)['swap_regret']


class TestPlay:
    def test_forward_fills_horizon(self):
        predictor = EfficientPredictor(12, seed=1)
        transcript = play_forward(predictor, Adversary(AdversarySpec('fixed_v', v=0.3), 12, 1))
        assert len(transcript) == 12
        assert all(rec.outcome == 0.3 for rec in transcript.records)


class TestSweepEngine:
    def test_cells(self, tmp_path):
        engine = SweepEngine(make_config(tmp_path), jobs=1)
        assert engine.cells() == [(16, 0), (16, 1), (32, 0), (32, 1)]

    def test_sequential_run(self, tmp_path):
        engine = SweepEngine(make_config(tmp_path), jobs=1)
        sweep = engine.run(progress=False)
        assert not sweep.failed
        assert sorted(sweep.per_horizon) == [16, 32]
        with open(tmp_path / 'summary.csv', newline='', encoding='utf-8') as handle:
            rows = list(csv.DictReader(handle))
        assert [(row['T'], row['seed']) for row in rows] == [
            ('16', '0'), ('16', '1'), ('32', '0'), ('32', '1')]
        payload = json.loads((tmp_path / 'sweep.json').read_text())
        assert payload['config']['horizons'] == [16, 32]
        assert payload['result']['failed_cells'] == 0

    def test_parallel_matches_sequential(self, tmp_path):
        sequential = SweepEngine(make_config(tmp_path / 'one'), jobs=1).run(progress=False)
        parallel = SweepEngine(make_config(tmp_path / 'two'), jobs=2).run(progress=False)
        assert [c['swap_regret'] for c in sequential.cells] == \
            [c['swap_regret'] for c in parallel.cells]

    def test_aggregate_skips_failures(self):
        cells = [
            {'T': 10, 'seed': 0, 'success': True, 'swap_regret': 1.0, 'cal': 0.5,
             'mcal1': 2.0, 'reference': 3.0},
            {'T': 10, 'seed': 1, 'success': False, 'error': 'boom'},
        ]
        sweep = SweepEngine.aggregate(cells)
        assert sweep.per_horizon[10]['cells'] == 1
        assert len(sweep.failed) == 1
        assert sweep.beta is None

    def test_jobs_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv('SWAPBIN_JOBS', '3')
        assert SweepEngine(make_config(tmp_path)).jobs == 3
        assert SweepEngine(make_config(tmp_path), jobs=2).jobs == 2
