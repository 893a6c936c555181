import csv
import json

import pytest

from main import main


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps({
        'algorithm': {'name': 'efficient'},
        'adversary': {'kind': 'bernoulli_median', 'bias': 0.5},
        'horizons': [16, 32],
        'seeds': {'count': 2},
        'output': {'dir': str(tmp_path / 'unused')},
    }))
    return path


class TestCommands:
    def test_run_then_verify(self, tmp_path, config_path):
        out = tmp_path / 'out'
        code = main(['run', '--config', str(config_path), '--out', str(out), '--jobs', '1',
                     '--no-progress'])
        assert code == 0
        assert (out / 'summary.csv').exists()
        assert not (tmp_path / 'unused').exists()
        transcript = out / 'transcripts' / 'efficient_T16_s0.jsonl'
        assert main(['verify', '--transcript', str(transcript)]) == 0

    def test_fit(self, tmp_path):
        summary = tmp_path / 'summary.csv'
        with open(summary, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.DictWriter(handle, fieldnames=['T', 'swap_regret', 'success'])
            writer.writeheader()
            writer.writerows([
                {'T': 100, 'swap_regret': 10.0, 'success': True},
                {'T': 400, 'swap_regret': 20.0, 'success': True},
                {'T': 1600, 'swap_regret': 40.0, 'success': True},
                {'T': 6400, 'swap_regret': 0.0, 'success': False},
            ])
        assert main(['fit', '--in', str(summary)]) == 0

    def test_fit_needs_three_horizons(self, tmp_path):
        summary = tmp_path / 'summary.csv'
        summary.write_text('T,swap_regret,success\n100,3.0,True\n400,6.0,True\n')
        assert main(['fit', '--in', str(summary)]) == 2

    def test_bad_config(self, tmp_path):
        assert main(['run', '--config', str(tmp_path / 'absent.json')]) == 2

    def test_verify_unreadable_transcript(self, tmp_path):
        path = tmp_path / 'broken.jsonl'
        path.write_text('not json\n')
        assert main(['verify', '--transcript', str(path)]) == 1

    def test_requires_command(self):
        with pytest.raises(SystemExit):
            main([])
