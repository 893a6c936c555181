"""Predictors for the forward game (loss revealed after the prediction
distribution is committed) and for the order-reversed game.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .binning import BinSystem, Theta, build, locate
from .constraints import breakpoints, expected_h, h_table, mix
from .dist import Dist01, gamma_width, mixture
from .errors import DomainError, ProtocolError
from .experts import make_experts
from .feasibility import KappaDist, solve_kappa
from .losses import PLConvexLoss, VMixture, eval_loss, vshape_decompose
from .seeding import PREDICTOR_STREAM, stream_rng

logger = logging.getLogger(__name__)

FORWARD = 'forward'
REVERSED = 'reversed'
STATIONARY_TOL = 1e-10
STATIONARY_MAX_ITER = 10_000


def gamma_for(horizon: int, delta: Optional[float] = None) -> float:
    if horizon < 2:
        raise DomainError(f"horizon must be at least 2, got {horizon!r}")
    if delta is None:
        delta = 1.0 / horizon
    if not 0.0 < delta <= 1.0 / horizon:
        raise DomainError(f"delta must lie in (0, 1/T], got {delta!r}")
    return min(1.0, math.sqrt(math.log(horizon) * math.log(1.0 / delta) / horizon))


class Prediction(NamedTuple):
    kappa: Optional[KappaDist]
    theta: Optional[Theta]
    theta_index: Optional[int]
    prediction: float


@dataclass(eq=False)
class RoundRecord:
    t: int
    prediction: float
    loss: PLConvexLoss
    mixture: VMixture
    outcome: Optional[float] = None
    kappa: Optional[KappaDist] = None
    theta: Optional[Theta] = None
    theta_index: Optional[int] = None
    rewards: Optional[np.ndarray] = field(default=None, repr=False)
    # the announced loss distribution, order-reversed game only
    pi: Optional[List[Tuple[PLConvexLoss, float]]] = field(default=None, repr=False)


@dataclass(eq=False)
class Transcript:
    config: Dict
    records: List[RoundRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def horizon(self) -> int:
        return int(self.config['horizon'])

    def append(self, record: RoundRecord) -> None:
        if len(self.records) >= self.horizon:
            raise ProtocolError(f"transcript already holds {self.horizon} rounds")
        self.records.append(record)

    @property
    def predictions(self) -> np.ndarray:
        return np.array([rec.prediction for rec in self.records], dtype=float)

    @property
    def losses(self) -> List[PLConvexLoss]:
        return [rec.loss for rec in self.records]

    @property
    def outcomes(self) -> np.ndarray:
        return np.array([np.nan if rec.outcome is None else rec.outcome for rec in self.records],
                        dtype=float)


def truthful_predict(sys: BinSystem, pi_t: Sequence[Tuple[VMixture, float]]) -> Theta:
    """Bin pair inside the width witness of the announced mixture; offsets are ignored."""
    components = [m.phi for m, _ in pi_t]
    weights = np.array([w for _, w in pi_t], dtype=float)
    phi_bar = mixture(components, weights / weights.sum())
    return locate(sys, gamma_width(phi_bar, sys.gamma))


class _RoundProtocol:
    """Shared predict/observe bookkeeping."""

    name = 'predictor'
    protocol = FORWARD

    def __init__(self, horizon: int, seed: int):
        if horizon < 2:
            raise DomainError(f"horizon must be at least 2, got {horizon!r}")
        self.horizon = int(horizon)
        self.seed = int(seed)
        self.rng = stream_rng(seed, horizon, PREDICTOR_STREAM)
        self._pending: Optional[Prediction] = None
        self._pending_pi = None

    @property
    def t(self) -> int:
        return len(self.transcript)

    def _open_round(self) -> None:
        if self._pending is not None:
            raise ProtocolError(f"round {self.t + 1} already has a prediction")
        if self.t >= self.horizon:
            raise ProtocolError(f"horizon {self.horizon} exhausted")

    def _close_round(self, loss: PLConvexLoss, outcome: Optional[float],
                     rewards: Optional[np.ndarray] = None) -> RoundRecord:
        pending = self._pending
        record = RoundRecord(
            t=self.t + 1,
            prediction=pending.prediction,
            loss=loss,
            mixture=vshape_decompose(loss),
            outcome=None if outcome is None else float(outcome),
            kappa=pending.kappa,
            theta=pending.theta,
            theta_index=pending.theta_index,
            rewards=rewards,
            pi=self._pending_pi,
        )
        self.transcript.append(record)
        self._pending = None
        self._pending_pi = None
        return record

    def _require_pending(self) -> Prediction:
        if self._pending is None:
            raise ProtocolError(f"round {self.t + 1} has no prediction to observe against")
        return self._pending


class EfficientPredictor(_RoundProtocol):
    """Constraint-driven randomized predictor over multi-scale bins."""

    name = 'efficient'

    def __init__(self, horizon: int, delta: Optional[float] = None, seed: int = 0,
                 expert: str = 'msmwc', lp_backend: str = 'simplex'):
        super().__init__(horizon, seed)
        self.delta = 1.0 / self.horizon if delta is None else float(delta)
        self.gamma = gamma_for(self.horizon, self.delta)
        self.sys = build(self.gamma)
        self.V = breakpoints(self.sys)
        self._table = h_table(self.sys, self.V)
        self.experts = make_experts(expert, 4 * len(self.sys), self.horizon)
        self.lp_backend = lp_backend
        self.transcript = Transcript(config={
            'algorithm': self.name, 'protocol': self.protocol, 'horizon': self.horizon,
            'delta': self.delta, 'gamma': self.gamma, 'seed': self.seed,
            'expert': expert, 'lp_backend': lp_backend,
        })
        logger.debug("efficient predictor: T=%d gamma=%.4f |Theta|=%d |V|=%d",
                     self.horizon, self.gamma, len(self.sys), self.V.size)

    def predict(self) -> Prediction:
        self._open_round()
        hbar = mix(self.sys, self.experts.weights())
        kappa = solve_kappa(hbar, self.sys, self.V, self.lp_backend, table=self._table)
        index = kappa.sample(self.rng)
        theta = self.sys.theta[index]
        self._pending = Prediction(kappa, theta, index, theta[1])
        return self._pending

    def rho(self) -> Optional[Dist01]:
        """Distribution of this round's prediction, once committed."""
        if self._pending is None:
            return None
        return Dist01.from_atoms(self.sys.theta_b, self._pending.kappa.probs)

    def observe(self, loss: PLConvexLoss, outcome: Optional[float] = None) -> RoundRecord:
        pending = self._require_pending()
        phi = vshape_decompose(loss).phi
        # h_{theta,xi} vanishes off theta, so the kappa expectation is one term
        rewards = (pending.kappa.probs[:, None] * expected_h(self.sys, phi)).ravel()
        self.experts.update(rewards)
        return self._close_round(loss, outcome, rewards)


class TruthfulPredictor(_RoundProtocol):
    """Order-reversed game: sees the loss distribution pi_t before predicting."""

    name = 'truthful'
    protocol = REVERSED

    def __init__(self, horizon: int, delta: Optional[float] = None, seed: int = 0):
        super().__init__(horizon, seed)
        self.delta = 1.0 / self.horizon if delta is None else float(delta)
        self.gamma = gamma_for(self.horizon, self.delta)
        self.sys = build(self.gamma)
        self.transcript = Transcript(config={
            'algorithm': self.name, 'protocol': self.protocol, 'horizon': self.horizon,
            'delta': self.delta, 'gamma': self.gamma, 'seed': self.seed,
        })

    def predict(self, pi: Sequence[Tuple[PLConvexLoss, float]]) -> Prediction:
        self._open_round()
        if len(pi) == 0:
            raise DomainError("the announced loss distribution is empty")
        theta = truthful_predict(self.sys, [(vshape_decompose(loss), w) for loss, w in pi])
        index = self.sys.index_of(theta)
        self._pending = Prediction(KappaDist.point(index, len(self.sys)), theta, index, theta[1])
        self._pending_pi = [(loss, float(w)) for loss, w in pi]
        return self._pending

    def rho(self) -> Optional[Dist01]:
        return None if self._pending is None else Dist01.point(self._pending.prediction)

    def observe(self, loss: PLConvexLoss, outcome: Optional[float] = None) -> RoundRecord:
        self._require_pending()
        return self._close_round(loss, outcome)


class FixedGridPredictor(_RoundProtocol):
    """Per-action multiplicative weights on the grid {0, 1/(m-1), ..., 1}.

    Row i is a Hedge instance fed the round's grid losses scaled by the
    probability of playing action i; play is the stationary distribution of
    the row matrix.
    """

    name = 'fixed_grid'

    def __init__(self, m: int, horizon: int, seed: int = 0, eta: Optional[float] = None):
        if m < 2:
            raise DomainError(f"grid needs at least 2 points, got {m!r}")
        super().__init__(horizon, seed)
        self.m = int(m)
        self.grid = np.arange(self.m) / (self.m - 1)
        self.eta = math.sqrt(8.0 * math.log(self.m) / self.horizon) if eta is None else float(eta)
        self.cumulative = np.zeros((self.m, self.m))
        self._play = np.full(self.m, 1.0 / self.m)
        self.transcript = Transcript(config={
            'algorithm': self.name, 'protocol': self.protocol, 'horizon': self.horizon,
            'seed': self.seed, 'm': self.m, 'eta': self.eta,
        })

    def row_matrix(self) -> np.ndarray:
        logits = -self.eta * self.cumulative
        rows = np.exp(logits - logits.max(axis=1, keepdims=True))
        return rows / rows.sum(axis=1, keepdims=True)

    def stationary(self) -> np.ndarray:
        rows = self.row_matrix()
        play = self._play
        for _ in range(STATIONARY_MAX_ITER):
            nxt = play @ rows
            nxt /= nxt.sum()
            if np.abs(nxt - play).sum() < STATIONARY_TOL:
                return nxt
            play = nxt
        logger.debug("power iteration stalled at t=%d; solving for the fixed point", self.t)
        system = np.vstack([rows.T - np.eye(self.m), np.ones(self.m)])
        target = np.concatenate([np.zeros(self.m), [1.0]])
        play = np.clip(np.linalg.lstsq(system, target, rcond=None)[0], 0.0, None)
        return play / play.sum()

    def predict(self) -> Prediction:
        self._open_round()
        self._play = self.stationary()
        index = int(self.rng.choice(self.m, p=self._play))
        self._pending = Prediction(None, None, None, float(self.grid[index]))
        return self._pending

    def rho(self) -> Optional[Dist01]:
        return None if self._pending is None else Dist01.from_atoms(self.grid, self._play)

    def observe(self, loss: PLConvexLoss, outcome: Optional[float] = None) -> RoundRecord:
        self._require_pending()
        grid_losses = eval_loss(loss, self.grid)
        grid_losses = grid_losses - grid_losses.min()
        self.cumulative += self._play[:, None] * grid_losses[None, :]
        return self._close_round(loss, outcome)


def make_predictor(algorithm: Dict, horizon: int, delta: Optional[float], seed: int):
    name = algorithm.get('name', 'efficient')
    if name == 'efficient':
        return EfficientPredictor(horizon, delta, seed,
                                  expert=algorithm.get('expert', 'msmwc'),
                                  lp_backend=algorithm.get('lp_backend', 'simplex'))
    if name == 'truthful':
        return TruthfulPredictor(horizon, delta, seed)
    if name == 'fixed_grid':
        return FixedGridPredictor(int(algorithm.get('m', 11)), horizon, seed)
    raise DomainError(f"unknown algorithm {name!r}")
