"""The four constraint families h_{r,b,xi} over bin pairs and their mixtures.

Constraint ids are laid out densely: id = 4 * theta_index + XI.index(xi), so a
weight vector of length 4|Theta| reshapes to (|Theta|, 4).
"""
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Union

import numpy as np

from .binning import BinSystem, Theta
from .dist import Dist01, prob_table
from .errors import DomainError

XI = (-2, -1, 1, 2)


class ConstraintId(NamedTuple):
    theta: Theta
    xi: int


def offsets(r, gamma: float):
    """(1/2 - gamma/(4r), 1/2 - gamma/(2r)) for the outer and inner families."""
    r = np.asarray(r, dtype=float)
    return 0.5 - gamma / (4.0 * r), 0.5 - gamma / (2.0 * r)


def h_eval(cid: ConstraintId, theta_prime: Theta, v: float, gamma: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"v must lie in [0, 1], got {v!r}")
    if cid.xi not in XI:
        raise DomainError(f"xi must be one of {XI}, got {cid.xi!r}")
    if tuple(theta_prime) != tuple(cid.theta):
        return 0.0
    r, b = cid.theta
    outer, inner = offsets(r, gamma)
    if cid.xi == 2:
        return float(v > b + 2 * r) - float(outer)
    if cid.xi == -2:
        return float(v < b - 2 * r) - float(outer)
    if cid.xi == 1:
        return float(inner) - float(v >= b)
    return float(inner) - float(v <= b)


def h_table(sys: BinSystem, v: np.ndarray) -> np.ndarray:
    """h_{theta,xi}(theta, v) for every pair, family and v: shape (|Theta|, 4, len(v))."""
    v = np.asarray(v, dtype=float)[None, :]
    r = sys.theta_r[:, None]
    b = sys.theta_b[:, None]
    outer, inner = offsets(r, sys.gamma)
    table = np.empty((len(sys), 4, v.shape[1]))
    table[:, 0, :] = (v < b - 2 * r) - outer
    table[:, 1, :] = inner - (v <= b)
    table[:, 2, :] = inner - (v >= b)
    table[:, 3, :] = (v > b + 2 * r) - outer
    return table


def expected_h(sys: BinSystem, phi: Dist01) -> np.ndarray:
    """E_{v~phi} h_{theta,xi}(theta, v), shape (|Theta|, 4), from exact threshold probabilities."""
    r = sys.theta_r
    b = sys.theta_b
    outer, inner = offsets(r, sys.gamma)
    below_low, _ = prob_table(phi, b - 2 * r)
    below_b, at_most_b = prob_table(phi, b)
    _, at_most_high = prob_table(phi, b + 2 * r)
    result = np.empty((len(sys), 4))
    result[:, 0] = below_low - outer
    result[:, 1] = inner - at_most_b
    result[:, 2] = inner - (1.0 - below_b)
    result[:, 3] = (1.0 - at_most_high) - outer
    return result


def breakpoints(sys: BinSystem) -> np.ndarray:
    """Finite test set V: every clamped threshold plus the midpoints between them."""
    r = sys.theta_r
    b = sys.theta_b
    thresholds = np.unique(np.clip(np.concatenate([[0.0, 1.0], b - 2 * r, b, b + 2 * r]), 0.0, 1.0))
    midpoints = 0.5 * (thresholds[:-1] + thresholds[1:])
    return np.unique(np.concatenate([thresholds, midpoints]))


@dataclass(frozen=True, eq=False)
class MixedConstraint:
    sys: BinSystem
    weights: np.ndarray  # (|Theta|, 4)

    def evaluate(self, theta_prime: Theta, v: float) -> float:
        i = self.sys.index_of(tuple(theta_prime))
        return float(self.weights[i] @ h_table(self.sys, np.array([v]))[i, :, 0])

    def matrix(self, v: np.ndarray, table: np.ndarray = None) -> np.ndarray:
        """hbar(theta, v) for every pair and v: shape (|Theta|, len(v))."""
        if table is None:
            table = h_table(self.sys, v)
        return np.einsum('tx,txv->tv', self.weights, table)


def mix(sys: BinSystem, weights: Union[Mapping[ConstraintId, float], np.ndarray]) -> MixedConstraint:
    if isinstance(weights, Mapping):
        grid = np.zeros((len(sys), 4))
        for cid, weight in weights.items():
            cid = ConstraintId(tuple(cid[0]), cid[1])
            if cid.xi not in XI:
                raise DomainError(f"xi must be one of {XI}, got {cid.xi!r}")
            grid[sys.index_of(cid.theta), XI.index(cid.xi)] += weight
    else:
        grid = np.array(weights, dtype=float).reshape(len(sys), 4)
    if np.any(grid < 0.0):
        raise DomainError("constraint weights must be nonnegative")
    total = grid.sum()
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"constraint weights sum to {total!r}, expected 1")
    grid = grid / total
    grid.setflags(write=False)
    return MixedConstraint(sys=sys, weights=grid)


def constraint_ids(sys: BinSystem):
    return [ConstraintId(theta, xi) for theta in sys.theta for xi in XI]
