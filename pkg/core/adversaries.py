"""Loss-generating strategies for the forward and order-reversed games.

In the forward game an adversary sees the history and the committed
prediction distribution rho_t, never the current round's sampled prediction.
In the order-reversed game it announces a distribution over losses instead.
"""
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .dist import Dist01, best_response
from .errors import DomainError
from .losses import MEDIAN, PLConvexLoss, ScoringRule, scoring_loss, v_loss
from .seeding import ADVERSARY_STREAM, stream_rng

KINDS = ('fixed_v', 'two_point', 'bernoulli_median', 'uniform_gap', 'adaptive')
FORWARD = 'forward'
REVERSED = 'reversed'


class Emission(NamedTuple):
    loss: PLConvexLoss
    outcome: float


def _unit(value, name: str) -> float:
    if value is None or not 0.0 <= float(value) <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class AdversarySpec:
    kind: str
    v: Optional[float] = None
    b: Optional[float] = None
    epsilon: float = 0.0
    bias: float = 0.5
    lo: Optional[float] = None
    hi: Optional[float] = None
    grid_points: int = 101
    rule_id: Optional[str] = None
    rule: ScoringRule = field(default=MEDIAN)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown adversary kind {self.kind!r}")
        if self.kind == 'fixed_v':
            _unit(self.v, 'v')
        elif self.kind == 'two_point':
            _unit(self.b, 'b')
            if self.b > 0.5:
                raise DomainError(f"two-point adversary needs b <= 1/2, got {self.b!r}")
            if not 0.0 <= self.epsilon < 0.5:
                raise DomainError(f"epsilon must lie in [0, 1/2), got {self.epsilon!r}")
        elif self.kind == 'bernoulli_median':
            _unit(self.bias, 'bias')
        elif self.kind == 'uniform_gap':
            _unit(self.lo, 'lo')
            _unit(self.hi, 'hi')
            if not self.lo < self.hi:
                raise DomainError(f"need lo < hi, got ({self.lo}, {self.hi})")
            if self.grid_points < 1:
                raise DomainError("uniform gap needs at least one grid point")
        elif self.rule_id not in ADAPTIVE_RULES:
            raise DomainError(f"unknown adaptive rule {self.rule_id!r}")

    @property
    def gap_grid(self) -> np.ndarray:
        """Interior grid of (lo, hi); endpoints excluded."""
        k = np.arange(1, self.grid_points + 1)
        return self.lo + (self.hi - self.lo) * k / (self.grid_points + 1)

    def to_dict(self) -> Dict:
        data = {key: value for key, value in asdict(self).items()
                if value is not None and key != 'rule'}
        data['rule'] = self.rule.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'AdversarySpec':
        data = dict(data)
        rule = data.pop('rule', None)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown adversary fields: {sorted(unknown)}")
        if rule is not None:
            data['rule'] = rule if isinstance(rule, ScoringRule) else ScoringRule.from_dict(rule)
        return cls(**data)


def _v(v: float) -> Emission:
    return Emission(v_loss(v), v)


def _scored(rule: ScoringRule, y: float) -> Emission:
    return Emission(scoring_loss(rule, y), float(y))


def _anti_kappa(history, rho: Optional[Dist01], rng) -> Emission:
    """Place the V at the end of [0, 1] farther from rho's median."""
    if rho is None:
        return _v(0.5)
    median, _ = best_response(rho)
    return _v(1.0 if median < 0.5 else 0.0)


def _flip_last(history, rho, rng) -> Emission:
    if not history:
        return _v(0.5)
    return _v(1.0 - history[-1].prediction)


def _two_point_adaptive(history, rho: Optional[Dist01], rng) -> Emission:
    """Two-point draw anchored just below rho's median."""
    b = 0.25 if rho is None else min(best_response(rho)[0], 0.5)
    return _v(b if rng.random() < 0.5 else b + 0.5)


ADAPTIVE_RULES: Dict[str, Callable] = {
    'anti_kappa': _anti_kappa,
    'flip_last': _flip_last,
    'two_point_adaptive': _two_point_adaptive,
}


def next_loss(spec: AdversarySpec, history: Sequence, rho: Optional[Dist01],
              rng: np.random.Generator, protocol: str = FORWARD):
    """One forward-game Emission, or a list of (Emission, prob) when reversed."""
    if protocol not in (FORWARD, REVERSED):
        raise DomainError(f"unknown protocol {protocol!r}")
    reversed_game = protocol == REVERSED

    if spec.kind == 'fixed_v':
        emission = _v(spec.v)
        return [(emission, 1.0)] if reversed_game else emission

    if spec.kind == 'two_point':
        heavy = 0.5 + spec.epsilon
        if reversed_game:
            return [(_v(spec.b), heavy), (_v(spec.b + 0.5), 1.0 - heavy)]
        return _v(spec.b if rng.random() < heavy else spec.b + 0.5)

    if spec.kind == 'bernoulli_median':
        if reversed_game:
            pi = [(_scored(spec.rule, 1.0), spec.bias), (_scored(spec.rule, 0.0), 1.0 - spec.bias)]
            return [(e, p) for e, p in pi if p > 0.0]
        return _scored(spec.rule, 1.0 if rng.random() < spec.bias else 0.0)

    if spec.kind == 'uniform_gap':
        grid = spec.gap_grid
        if reversed_game:
            return [(_scored(spec.rule, y), 1.0 / grid.size) for y in grid]
        return _scored(spec.rule, grid[rng.integers(grid.size)])

    emission = ADAPTIVE_RULES[spec.rule_id](history, rho, rng)
    return [(emission, 1.0)] if reversed_game else emission


class Adversary:
    """An AdversarySpec bound to its own random stream."""

    def __init__(self, spec: AdversarySpec, horizon: int, seed: int):
        self.spec = spec
        self.rng = stream_rng(seed, horizon, ADVERSARY_STREAM)

    def emit(self, history: Sequence, rho: Optional[Dist01] = None) -> Emission:
        return next_loss(self.spec, history, rho, self.rng, FORWARD)

    def announce(self, history: Sequence) -> List[Tuple[Emission, float]]:
        return next_loss(self.spec, history, None, self.rng, REVERSED)

    def realize(self, pi: List[Tuple[Emission, float]]) -> Emission:
        """Draw the realized loss from an announced distribution."""
        probs = np.array([p for _, p in pi], dtype=float)
        cumulative = np.cumsum(probs / probs.sum())
        cumulative[-1] = 1.0
        return pi[int(np.searchsorted(cumulative, self.rng.random(), side='right'))][0]
