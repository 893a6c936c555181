"""Swap regret, calibration error and run diagnostics over transcripts.

Rounds are grouped by exact float equality of the prediction; predictions
come from finite grids, so no merging tolerance is applied.
"""
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, NamedTuple, Sequence

import numpy as np

from .binning import BinSystem
from .constraints import XI, expected_h
from .dist import Dist01, best_response, mixture, quantile_set
from .errors import DomainError
from .losses import ScoringRule, eval_loss, score, vshape_decompose
from .predictors import RoundRecord, Transcript


class BinContribution(NamedTuple):
    b: float
    count: int
    best: float
    contribution: float


@dataclass
class RegretReport:
    total: float = 0.0
    bins: List[BinContribution] = field(default_factory=list)
    external: float = 0.0

    def to_dict(self) -> Dict:
        return {
            'total': self.total,
            'external': self.external,
            'bins': [c._asdict() for c in self.bins],
        }


def _records(transcript) -> List[RoundRecord]:
    return transcript.records if isinstance(transcript, Transcript) else list(transcript)


def _group(records: Sequence[RoundRecord], key: Callable[[RoundRecord], Hashable]):
    groups = OrderedDict()
    for rec in records:
        groups.setdefault(key(rec), []).append(rec)
    return groups


def _uniform_phi(records: Sequence[RoundRecord]) -> Dist01:
    n = len(records)
    return mixture([rec.mixture.phi for rec in records], np.full(n, 1.0 / n))


def _played_minus_best(records: Sequence[RoundRecord], b: float) -> BinContribution:
    best, _ = best_response(_uniform_phi(records))
    played_cost = sum(eval_loss(rec.loss, b) for rec in records)
    best_cost = sum(eval_loss(rec.loss, best) for rec in records)
    return BinContribution(b, len(records), best, max(0.0, played_cost - best_cost))


def swap_regret(transcript) -> RegretReport:
    records = _records(transcript)
    if not records:
        return RegretReport()
    bins = [_played_minus_best(group, b)
            for b, group in sorted(_group(records, lambda rec: rec.prediction).items())]
    # external regret is not clamped
    best, _ = best_response(_uniform_phi(records))
    external = sum(eval_loss(rec.loss, rec.prediction) - eval_loss(rec.loss, best)
                   for rec in records)
    return RegretReport(total=float(sum(c.contribution for c in bins)), bins=bins,
                        external=float(external))


def theta_regret(transcript) -> RegretReport:
    """Swap regret with rounds grouped by sampled bin pair instead of value."""
    records = [rec for rec in _records(transcript) if rec.theta is not None]
    if not records:
        return RegretReport()
    groups = _group(records, lambda rec: tuple(rec.theta))
    bins = [_played_minus_best(group, theta[1]) for theta, group in sorted(groups.items())]
    return RegretReport(total=float(sum(c.contribution for c in bins)), bins=bins)


def _check_pairs(predictions, outcomes):
    predictions = np.asarray(predictions, dtype=float)
    outcomes = np.asarray(outcomes, dtype=float)
    if predictions.shape != outcomes.shape or predictions.ndim != 1:
        raise DomainError("predictions and outcomes must be vectors of equal length")
    if np.any(~np.isfinite(outcomes)) or np.any(outcomes < 0.0) or np.any(outcomes > 1.0):
        raise DomainError("outcomes must be finite values in [0, 1]")
    if np.any(predictions < 0.0) or np.any(predictions > 1.0):
        raise DomainError("predictions must lie in [0, 1]")
    return predictions, outcomes


def _group_minimizer(rule: ScoringRule, ys: np.ndarray) -> float:
    if rule.kind == 'mean':
        return float(ys.mean())
    level = 0.5 if rule.kind == 'median' else rule.q
    return quantile_set(Dist01.empirical(ys), level)[0]


def cal_error(rule: ScoringRule, predictions, outcomes) -> float:
    predictions, outcomes = _check_pairs(predictions, outcomes)
    total = 0.0
    for p in np.unique(predictions):
        ys = outcomes[predictions == p]
        best = _group_minimizer(rule, ys)
        gap = float(np.sum(score(rule, p, ys)) - np.sum(score(rule, best, ys)))
        total += max(0.0, gap)
    return total


def _identification(rule: ScoringRule, p: float, ys: np.ndarray) -> np.ndarray:
    if rule.kind == 'median':
        return 2.0 * (ys <= p) - 1.0
    if rule.kind == 'quantile':
        return rule.q - (ys <= p)
    return 2.0 * (p - ys)


def mcal1(rule: ScoringRule, predictions, outcomes) -> float:
    """Identification calibration: sum over predicted values of |sum_t V(p, y_t)|."""
    predictions, outcomes = _check_pairs(predictions, outcomes)
    return float(sum(abs(np.sum(_identification(rule, p, outcomes[predictions == p])))
                     for p in np.unique(predictions)))


def mcal1_median(predictions, outcomes) -> float:
    return mcal1(ScoringRule('median'), predictions, outcomes)


@dataclass
class ConstraintDiagnostics:
    theta: List
    counts: np.ndarray  # |T_{r,b}|
    expected_counts: np.ndarray  # E_{r,b}
    heavy: np.ndarray
    sums: np.ndarray  # (|Theta|, 4), ordered as XI
    scale: np.ndarray
    c1: float

    @property
    def count_deviation(self) -> np.ndarray:
        return np.abs(self.counts - self.expected_counts)

    def rows(self) -> List[Dict]:
        rows = []
        for i, (r, b) in enumerate(self.theta):
            row = {'r': r, 'b': b, 'count': int(self.counts[i]),
                   'expected_count': float(self.expected_counts[i]),
                   'heavy': bool(self.heavy[i]), 'scale': float(self.scale[i])}
            row.update({f'sum_xi{xi:+d}': float(self.sums[i, k]) for k, xi in enumerate(XI)})
            rows.append(row)
        return rows


def constraint_diagnostics(transcript, sys: BinSystem, delta: float,
                           heavy_constant: float = 1.0) -> ConstraintDiagnostics:
    records = [rec for rec in _records(transcript) if rec.kappa is not None]
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    n = len(sys)
    counts = np.zeros(n)
    expected_counts = np.zeros(n)
    sums = np.zeros((n, 4))
    for rec in records:
        if len(rec.kappa) != n:
            raise DomainError("transcript kappa does not match the bin system")
        counts[rec.theta_index] += 1
        expected_counts += rec.kappa.probs
        sums[rec.theta_index] += expected_h(sys, rec.mixture.phi)[rec.theta_index]
    horizon = max(len(records), 2)
    log_inv_delta = math.log(1.0 / delta)
    heavy = expected_counts >= heavy_constant * horizon * sys.theta_r ** 2 / math.log(horizon)
    scale = log_inv_delta + np.sqrt(expected_counts * log_inv_delta)
    c1 = float(np.max(np.abs(sums) / scale[:, None])) if records else 0.0
    return ConstraintDiagnostics(theta=list(sys.theta), counts=counts,
                                 expected_counts=expected_counts, heavy=heavy,
                                 sums=sums, scale=scale, c1=c1)


class ErrorSplit(NamedTuple):
    b: float
    count: int
    rounding: float
    sampling: float


def error_split(transcript) -> List[ErrorSplit]:
    """Per-bin split of swap regret into rounding and sampling error.

    Rounding error compares b against the best fixed output under the announced
    loss distributions; the remainder is due to the realized draws.
    """
    records = _records(transcript)
    if any(rec.pi is None for rec in records):
        raise DomainError("error split needs order-reversed transcripts with announced pi")
    regret = {c.b: c for c in swap_regret(records).bins}
    splits = []
    for b, group in sorted(_group(records, lambda rec: rec.prediction).items()):
        phis, weights = [], []
        for rec in group:
            total = sum(w for _, w in rec.pi)
            for loss, w in rec.pi:
                phis.append(vshape_decompose(loss).phi)
                weights.append(w / total / len(group))
        best, _ = best_response(mixture(phis, np.asarray(weights) / np.sum(weights)))

        def expected(x):
            return sum(w / sum(v for _, v in rec.pi) * eval_loss(loss, x)
                       for rec in group for loss, w in rec.pi)

        rounding = max(0.0, expected(b) - expected(best))
        splits.append(ErrorSplit(b, len(group), rounding, regret[b].contribution - rounding))
    return splits
