import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .adversaries import Adversary, AdversarySpec
from .errors import DomainError, SwapBinError
from .losses import MEDIAN, ScoringRule
from .metrics import cal_error, constraint_diagnostics, mcal1, swap_regret, theta_regret
from .predictors import REVERSED, Transcript, make_predictor
from .system_monitor import SystemMonitor
from .transcript_manager import TranscriptManager

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    'algorithm', 'T', 'seed', 'success', 'swap_regret', 'external_regret', 'theta_regret',
    'cal', 'mcal1', 'gamma', 'delta', 'reference', 'c1', 'wall_time', 'rss_mb',
    'transcript', 'error',
]


@dataclass
class ExperimentConfig:
    algorithm: Dict
    adversary: AdversarySpec
    horizons: List[int]
    seeds: List[int]
    delta: Optional[float] = None
    cal_rule: ScoringRule = MEDIAN
    heavy_constant: float = 1.0
    output_dir: str = 'results'

    @property
    def algorithm_name(self) -> str:
        return self.algorithm.get('name', 'efficient')

    def delta_for(self, horizon: int) -> float:
        return 1.0 / horizon if self.delta is None else self.delta

    def to_dict(self) -> Dict:
        return {
            'algorithm': dict(self.algorithm),
            'adversary': self.adversary.to_dict(),
            'horizons': list(self.horizons),
            'seeds': list(self.seeds),
            'delta': self.delta,
            'cal_rule': self.cal_rule.to_dict(),
            'heavy_constant': self.heavy_constant,
            'output': {'dir': self.output_dir},
        }


@dataclass
class SweepResult:
    cells: List[Dict] = field(default_factory=list)
    per_horizon: Dict[int, Dict] = field(default_factory=dict)
    beta: Optional[float] = None
    c: Optional[float] = None

    @property
    def failed(self) -> List[Dict]:
        return [cell for cell in self.cells if not cell['success']]

    def to_dict(self) -> Dict:
        return {
            'per_horizon': {str(T): row for T, row in sorted(self.per_horizon.items())},
            'beta': self.beta,
            'c': self.c,
            'failed_cells': len(self.failed),
        }


def fit_exponent(pairs: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """Least squares of log SR on log T; returns (beta, c) with SR ~ c T^beta."""
    pairs = [(float(T), float(sr)) for T, sr in pairs]
    if pairs and all(sr == 0.0 for _, sr in pairs):
        return 0.0, 0.0
    kept = [(T, sr) for T, sr in pairs if sr > 0.0]
    if len({T for T, _ in kept}) < 3:
        raise DomainError("fitting an exponent needs positive values at three or more horizons")
    log_t = np.log([T for T, _ in kept])
    log_sr = np.log([sr for _, sr in kept])
    beta, log_c = np.polyfit(log_t, log_sr, 1)
    return float(beta), float(math.exp(log_c))


def play_forward(predictor, adversary: Adversary) -> Transcript:
    """Forward game: rho_t is committed before the loss is revealed."""
    for _ in range(predictor.horizon):
        predictor.predict()
        emission = adversary.emit(predictor.transcript.records, predictor.rho())
        predictor.observe(emission.loss, emission.outcome)
    return predictor.transcript


def play_reversed(predictor, adversary: Adversary) -> Transcript:
    """Order-reversed game: the adversary announces pi_t first."""
    for _ in range(predictor.horizon):
        pi = adversary.announce(predictor.transcript.records)
        predictor.predict([(emission.loss, prob) for emission, prob in pi])
        emission = adversary.realize(pi)
        predictor.observe(emission.loss, emission.outcome)
    return predictor.transcript


def run_cell(config: ExperimentConfig, horizon: int, seed: int) -> Dict:
    """Play one (T, seed) cell, score it and write its transcript."""
    monitor = SystemMonitor()
    manager = TranscriptManager(config.output_dir)
    algorithm = config.algorithm_name
    delta = config.delta_for(horizon)
    cell = {'algorithm': algorithm, 'T': horizon, 'seed': seed, 'delta': delta}
    start = monitor.start_cell()
    try:
        predictor = make_predictor(config.algorithm, horizon, config.delta, seed)
        adversary = Adversary(config.adversary, horizon, seed)
        if predictor.protocol == REVERSED:
            transcript = play_reversed(predictor, adversary)
        else:
            transcript = play_forward(predictor, adversary)

        report = swap_regret(transcript)
        cell.update({
            'swap_regret': report.total,
            'external_regret': report.external,
            'theta_regret': theta_regret(transcript).total,
            'cal': cal_error(config.cal_rule, transcript.predictions, transcript.outcomes),
            'mcal1': mcal1(config.cal_rule, transcript.predictions, transcript.outcomes),
            'gamma': getattr(predictor, 'gamma', None),
            'reference': math.sqrt(horizon * math.log(horizon) * math.log(1.0 / delta)),
        })
        if algorithm == 'efficient':
            cell['c1'] = constraint_diagnostics(transcript, predictor.sys, delta,
                                                config.heavy_constant).c1
        written = manager.write_transcript(
            transcript, TranscriptManager.cell_id(algorithm, horizon, seed))
        if not written['success']:
            raise OSError(written['error'])
        cell['transcript'] = written['path']
        cell['success'] = True
    except (SwapBinError, OSError) as e:
        logger.warning("cell T=%d seed=%d failed: %s", horizon, seed, e)
        cell.update({'success': False, 'error': f"{type(e).__name__}: {e}"})
    cell.update(monitor.finish_cell(start))
    return cell


class SweepEngine:
    def __init__(self, config: ExperimentConfig, jobs: Optional[int] = None):
        self.config = config
        self.system_monitor = SystemMonitor()
        self.transcript_manager = TranscriptManager(config.output_dir)
        self.jobs = self.system_monitor.default_jobs(jobs)

    def cells(self) -> List[Tuple[int, int]]:
        return [(T, seed) for T in self.config.horizons for seed in self.config.seeds]

    def run_cell(self, horizon: int, seed: int) -> Dict:
        return run_cell(self.config, horizon, seed)

    def run(self, progress: bool = True) -> SweepResult:
        cells = self.cells()
        logger.info("running %d cells of %s vs %s on %d worker(s)", len(cells),
                    self.config.algorithm_name, self.config.adversary.kind, self.jobs)
        results = []
        bar = tqdm(total=len(cells), desc='cells', disable=not progress)
        try:
            if self.jobs == 1:
                for T, seed in cells:
                    results.append(self.run_cell(T, seed))
                    bar.update(1)
            else:
                with ProcessPoolExecutor(max_workers=self.jobs) as executor:
                    futures = [executor.submit(run_cell, self.config, T, seed) for T, seed in cells]
                    for future in as_completed(futures):
                        results.append(future.result())
                        bar.update(1)
        finally:
            bar.close()

        results.sort(key=lambda cell: (cell['T'], cell['seed']))
        sweep = self.aggregate(results)
        self.transcript_manager.write_summary(results, SUMMARY_COLUMNS)
        self.transcript_manager.write_json(
            {'config': self.config.to_dict(), 'result': sweep.to_dict()}, 'sweep.json')
        logger.info("sweep done: %d cells, %d failed, beta=%s", len(results),
                    len(sweep.failed), 'n/a' if sweep.beta is None else f"{sweep.beta:.3f}")
        return sweep

    @staticmethod
    def aggregate(results: List[Dict]) -> SweepResult:
        by_horizon = defaultdict(list)
        for cell in results:
            if cell['success']:
                by_horizon[cell['T']].append(cell)
        per_horizon = {}
        for T, cells in sorted(by_horizon.items()):
            regrets = np.array([cell['swap_regret'] for cell in cells])
            per_horizon[T] = {
                'cells': len(cells),
                'mean_swap_regret': float(regrets.mean()),
                'median_swap_regret': float(np.median(regrets)),
                'mean_cal': float(np.mean([cell['cal'] for cell in cells])),
                'mean_mcal1': float(np.mean([cell['mcal1'] for cell in cells])),
                'reference': cells[0]['reference'],
            }
        sweep = SweepResult(cells=results, per_horizon=per_horizon)
        pairs = [(T, row['mean_swap_regret']) for T, row in per_horizon.items()]
        try:
            sweep.beta, sweep.c = fit_exponent(pairs)
        except DomainError as e:
            logger.info("no exponent fit: %s", e)
        return sweep
