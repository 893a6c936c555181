import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .dist import Dist01, expected_abs
from .errors import DomainError, LossValidationError

SLOPE_TOL = 1e-12
MEAN_GRID_STEP = 1.0 / 64
SCORING_KINDS = ('median', 'mean', 'quantile')


def _check_unit(p, name: str = 'p') -> np.ndarray:
    values = np.asarray(p, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < 0.0) or np.any(values > 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")
    return values


@dataclass(frozen=True, eq=False)
class PLConvexLoss:
    breakpoints: np.ndarray
    slopes: np.ndarray
    value_at_zero: float

    def __post_init__(self):
        breakpoints = np.asarray(self.breakpoints, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if breakpoints.ndim != 1 or breakpoints.size < 2:
            raise LossValidationError("a loss needs at least the breakpoints 0 and 1")
        if breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
            raise LossValidationError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(breakpoints) <= 0.0):
            raise LossValidationError("breakpoints must be strictly increasing")
        if slopes.shape != (breakpoints.size - 1,):
            raise LossValidationError("expected one slope per segment")
        if np.any(np.diff(slopes) < -SLOPE_TOL):
            raise LossValidationError("slopes must be non-decreasing (convexity)")
        if np.any(np.abs(slopes) > 1.0 + SLOPE_TOL):
            raise LossValidationError("slopes must lie in [-1, 1] (1-Lipschitz)")
        if not math.isfinite(self.value_at_zero):
            raise LossValidationError("value_at_zero must be finite")
        breakpoints.setflags(write=False)
        slopes = np.clip(slopes, -1.0, 1.0)
        slopes.setflags(write=False)
        object.__setattr__(self, 'breakpoints', breakpoints)
        object.__setattr__(self, 'slopes', slopes)
        object.__setattr__(self, 'value_at_zero', float(self.value_at_zero))

    @property
    def knot_values(self) -> np.ndarray:
        rises = self.slopes * np.diff(self.breakpoints)
        return self.value_at_zero + np.concatenate([[0.0], np.cumsum(rises)])

    @property
    def value_at_one(self) -> float:
        return float(self.knot_values[-1])

    def __call__(self, p):
        return eval_loss(self, p)


@dataclass(frozen=True, eq=False)
class VMixture:
    phi: Dist01
    offset: float

    def evaluate(self, p):
        values = expected_abs(self.phi, _check_unit(p)) + self.offset
        return values


@dataclass(frozen=True)
class ScoringRule:
    kind: str
    q: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SCORING_KINDS:
            raise DomainError(f"unknown scoring rule {self.kind!r}")
        if self.kind == 'quantile':
            if self.q is None or not 0.0 < self.q < 1.0:
                raise DomainError(f"quantile rule needs q in (0, 1), got {self.q!r}")
        elif self.q is not None:
            raise DomainError(f"{self.kind} rule takes no q")

    def to_dict(self) -> Dict:
        literal = {'rule': self.kind}
        if self.q is not None:
            literal['q'] = self.q
        return literal

    @classmethod
    def from_dict(cls, data: Dict) -> 'ScoringRule':
        return cls(data.get('rule', 'median'), data.get('q'))


MEDIAN = ScoringRule('median')


def eval_loss(loss: PLConvexLoss, p):
    values = _check_unit(p)
    last = loss.slopes.size - 1
    segment = np.clip(np.searchsorted(loss.breakpoints, values, side='right') - 1, 0, last)
    result = loss.knot_values[segment] + loss.slopes[segment] * (values - loss.breakpoints[segment])
    return float(result) if result.ndim == 0 else result


def vshape_decompose(loss: PLConvexLoss) -> VMixture:
    """Write loss as E_{v~phi}|p - v| + C with phi's CDF equal to (slope + 1) / 2."""
    if not isinstance(loss, PLConvexLoss):
        raise LossValidationError(f"expected a PLConvexLoss, got {type(loss).__name__}")
    slopes = loss.slopes
    masses = np.concatenate([
        [(slopes[0] + 1.0) / 2.0],
        np.diff(slopes) / 2.0,
        [(1.0 - slopes[-1]) / 2.0],
    ])
    masses = np.clip(masses, 0.0, None)
    phi = Dist01.from_atoms(loss.breakpoints, masses)
    offset = (loss.value_at_zero + loss.value_at_one - 1.0) / 2.0
    return VMixture(phi=phi, offset=offset)


def v_loss(v: float) -> PLConvexLoss:
    """|p - v|."""
    v = float(_check_unit(v, 'v'))
    if v == 0.0:
        return PLConvexLoss(np.array([0.0, 1.0]), np.array([1.0]), 0.0)
    if v == 1.0:
        return PLConvexLoss(np.array([0.0, 1.0]), np.array([-1.0]), 1.0)
    return PLConvexLoss(np.array([0.0, v, 1.0]), np.array([-1.0, 1.0]), v)


def scoring_loss(rule: ScoringRule, y: float) -> PLConvexLoss:
    y = float(_check_unit(y, 'y'))
    if rule.kind == 'median':
        return v_loss(y)
    if rule.kind == 'quantile':
        q = rule.q
        if y == 0.0:
            return PLConvexLoss(np.array([0.0, 1.0]), np.array([1.0 - q]), 0.0)
        if y == 1.0:
            return PLConvexLoss(np.array([0.0, 1.0]), np.array([-q]), q)
        return PLConvexLoss(np.array([0.0, y, 1.0]), np.array([-q, 1.0 - q]), q * y)
    # (p - y)^2 / 2, linearized through its chords
    grid = np.linspace(0.0, 1.0, int(round(1.0 / MEAN_GRID_STEP)) + 1)
    values = 0.5 * (grid - y) ** 2
    slopes = np.clip(np.diff(values) / np.diff(grid), -1.0, 1.0)
    return PLConvexLoss(grid, slopes, values[0])


def score(rule: ScoringRule, p, y):
    """S(p, y) evaluated directly; the mean rule is the unscaled squared error."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    if rule.kind == 'median':
        return np.abs(p - y)
    if rule.kind == 'mean':
        return (p - y) ** 2
    return np.where(y >= p, rule.q * (y - p), (1.0 - rule.q) * (p - y))


def loss_from_literal(literal: Dict) -> PLConvexLoss:
    kind = literal.get('type')
    if kind == 'pl':
        return PLConvexLoss(
            np.asarray(literal['breakpoints'], dtype=float),
            np.asarray(literal['slopes'], dtype=float),
            float(literal['at_zero']),
        )
    if kind == 'score':
        return scoring_loss(ScoringRule.from_dict(literal), float(literal['y']))
    raise LossValidationError(f"unknown loss literal type {kind!r}")


def loss_to_literal(loss: PLConvexLoss) -> Dict:
    return {
        'type': 'pl',
        'breakpoints': loss.breakpoints.tolist(),
        'slopes': loss.slopes.tolist(),
        'at_zero': loss.value_at_zero,
    }
