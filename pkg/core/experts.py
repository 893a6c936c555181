"""Expert algorithms over constraint ids.

MsMwC runs one sub-expert per (constraint, learning rate) pair with rates
eta_j = 2^-j / 32, a prior proportional to eta_j^2 and a per-round normalizer
lambda found by root search. Hedge is kept behind the same interface for
comparison runs.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError

BASE_RATE = 1.0 / 32
SIMPLEX_TOL = 1e-9
LAMBDA_BRACKET = (-2.0, 2.0)
LAMBDA_XTOL = 1e-14


@dataclass(frozen=True, eq=False)
class ExpertState:
    weights: np.ndarray  # (n_constraints, n_rates)
    etas: np.ndarray
    horizon: int
    t: int = 0

    @property
    def n_constraints(self) -> int:
        return self.weights.shape[0]


def rate_grid(horizon: int) -> np.ndarray:
    count = int(math.ceil(math.log2(horizon))) + 1
    return BASE_RATE * 2.0 ** -np.arange(count)


def init(n_constraints: int, horizon: int) -> ExpertState:
    if n_constraints < 1:
        raise DomainError(f"need at least one constraint, got {n_constraints!r}")
    if horizon < 2:
        raise DomainError(f"horizon must be at least 2, got {horizon!r}")
    etas = rate_grid(horizon)
    prior = etas ** 2 / np.sum(etas ** 2)
    weights = np.tile(prior / n_constraints, (n_constraints, 1))
    return ExpertState(weights=weights, etas=etas, horizon=int(horizon))


def weights(state: ExpertState) -> np.ndarray:
    marginal = state.weights.sum(axis=1)
    return marginal / marginal.sum()


def _check_rewards(state: ExpertState, rewards) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape != (state.n_constraints,):
        raise DomainError(
            f"expected {state.n_constraints} rewards, got shape {rewards.shape}")
    if np.any(~np.isfinite(rewards)) or np.any(np.abs(rewards) > 1.0 + 1e-12):
        raise DomainError("rewards must lie in [-1, 1]")
    return np.clip(rewards, -1.0, 1.0)


def update(state: ExpertState, rewards) -> ExpertState:
    rewards = _check_rewards(state, rewards)
    costs = -rewards[:, None]
    etas = state.etas[None, :]
    scaled = state.weights * np.exp(-etas * (costs + etas * costs ** 2))

    def excess(lam: float) -> float:
        return float(np.sum(scaled * np.exp(-etas * lam))) - 1.0

    lam = brentq(excess, *LAMBDA_BRACKET, xtol=LAMBDA_XTOL)
    updated = scaled * np.exp(-etas * lam)
    updated /= updated.sum()
    return ExpertState(weights=updated, etas=state.etas, horizon=state.horizon, t=state.t + 1)


class ExpertAlgorithm(ABC):
    """Simplex-valued learner fed one reward vector per round."""

    name = 'expert'

    def __init__(self, n_constraints: int, horizon: int):
        self.n_constraints = n_constraints
        self.horizon = horizon

    @abstractmethod
    def weights(self) -> np.ndarray:
        ...

    @abstractmethod
    def update(self, rewards) -> None:
        ...


class MsMwCExperts(ExpertAlgorithm):
    name = 'msmwc'

    def __init__(self, n_constraints: int, horizon: int):
        super().__init__(n_constraints, horizon)
        self.state = init(n_constraints, horizon)

    def weights(self) -> np.ndarray:
        return weights(self.state)

    def update(self, rewards) -> None:
        self.state = update(self.state, rewards)


class HedgeExperts(ExpertAlgorithm):
    """Exponential weights on cumulative reward with a fixed tuned rate."""

    name = 'hedge'

    def __init__(self, n_constraints: int, horizon: int, eta: float = None):
        if n_constraints < 1 or horizon < 2:
            raise DomainError("hedge needs n_constraints >= 1 and horizon >= 2")
        super().__init__(n_constraints, horizon)
        if eta is None:
            eta = min(1.0, math.sqrt(max(math.log(n_constraints), 1.0) / horizon))
        self.eta = eta
        self.cumulative = np.zeros(n_constraints)
        self.t = 0

    def weights(self) -> np.ndarray:
        logits = self.eta * self.cumulative
        w = np.exp(logits - logits.max())
        return w / w.sum()

    def update(self, rewards) -> None:
        rewards = np.asarray(rewards, dtype=float)
        if rewards.shape != (self.n_constraints,) or np.any(np.abs(rewards) > 1.0 + 1e-12):
            raise DomainError("rewards must be one value in [-1, 1] per constraint")
        self.cumulative += rewards
        self.t += 1


EXPERTS = {cls.name: cls for cls in (MsMwCExperts, HedgeExperts)}


def make_experts(name: str, n_constraints: int, horizon: int) -> ExpertAlgorithm:
    try:
        cls = EXPERTS[name]
    except KeyError:
        raise DomainError(f"unknown expert algorithm {name!r}") from None
    return cls(n_constraints, horizon)
