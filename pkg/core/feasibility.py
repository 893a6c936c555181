"""Find kappa on the bin pairs with E_{theta~kappa} hbar(theta, v) <= 0 for all v in V.

The problem min_kappa max_v kappa^T G[:, v] is solved as a matrix game: with
M = G + 2 > 0, maximize 1^T x subject to M^T x <= 1, x >= 0. The slack basis is
feasible, so no phase one is needed, and kappa = x / sum(x) with value
1 / sum(x) - 2.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .binning import BinSystem
from .constraints import MixedConstraint
from .errors import DomainError, SolverFailure

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-7
MAX_PIVOTS = 100_000
PIVOT_TOL = 1e-12
GAME_SHIFT = 2.0
BACKENDS = ('simplex', 'highs')


@dataclass(frozen=True, eq=False)
class KappaDist:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("kappa must be a non-empty vector")
        if np.any(probs < 0.0):
            raise DomainError("kappa must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise DomainError(f"kappa sums to {probs.sum()!r}, expected 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, 'probs', probs)

    def __len__(self) -> int:
        return self.probs.size

    @classmethod
    def point(cls, index: int, size: int) -> 'KappaDist':
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    def sample(self, rng: np.random.Generator) -> int:
        """Inverse-CDF draw restricted to the support."""
        support = np.flatnonzero(self.probs > 0.0)
        cumulative = np.cumsum(self.probs[support])
        cumulative[-1] = 1.0
        return int(support[np.searchsorted(cumulative, rng.random(), side='right')])

    def worst_case(self, table: np.ndarray) -> float:
        """max over columns of E_{theta~kappa} table[theta, v]."""
        return float(np.max(self.probs @ table))


def _tableau_simplex(payoff: np.ndarray):
    """Maximize 1^T x s.t. payoff^T x <= 1, x >= 0 with Bland's rule."""
    n, m = payoff.shape
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = payoff.T
    tableau[:m, n:n + m] = np.eye(m)
    tableau[:m, -1] = 1.0
    tableau[m, :n] = -1.0
    basis = np.arange(n, n + m)

    for pivots in range(MAX_PIVOTS):
        entering = np.flatnonzero(tableau[m, :-1] < -PIVOT_TOL)
        if entering.size == 0:
            solution = np.zeros(n + m)
            solution[basis] = tableau[:m, -1]
            return solution[:n], pivots
        col = entering[0]
        column = tableau[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            raise SolverFailure("game LP is unbounded; payoff matrix must be positive")
        ratios = tableau[rows, -1] / column[rows]
        tied = rows[ratios <= ratios.min() + PIVOT_TOL]
        row = tied[np.argmin(basis[tied])]

        tableau[row] /= tableau[row, col]
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row])
        basis[row] = col

    raise SolverFailure(f"simplex exceeded {MAX_PIVOTS} pivots")


def _highs(payoff: np.ndarray) -> np.ndarray:
    from scipy.optimize import linprog

    n, m = payoff.shape
    result = linprog(-np.ones(n), A_ub=payoff.T, b_ub=np.ones(m),
                     bounds=[(0.0, None)] * n, method='highs')
    if result.status != 0:
        raise SolverFailure(f"highs failed: {result.message}")
    return np.clip(result.x, 0.0, None)


def solve_game(table: np.ndarray, backend: str = 'simplex'):
    """kappa minimizing max_v kappa^T table[:, v], and that value."""
    if backend not in BACKENDS:
        raise DomainError(f"unknown LP backend {backend!r}")
    if np.any(np.abs(table) > 1.0 + 1e-9):
        raise DomainError("payoff entries must lie in [-1, 1]")
    payoff = table + GAME_SHIFT
    if backend == 'simplex':
        x, pivots = _tableau_simplex(payoff)
        logger.debug("simplex finished after %d pivots", pivots)
    else:
        x = _highs(payoff)
    total = x.sum()
    if total <= 0.0:
        raise SolverFailure("game LP returned the zero vector")
    kappa = KappaDist(np.clip(x, 0.0, None) / total)
    return kappa, 1.0 / total - GAME_SHIFT


def solve_kappa(hbar: MixedConstraint, sys: BinSystem, V: np.ndarray,
                backend: str = 'simplex', table: np.ndarray = None) -> KappaDist:
    if hbar.sys is not sys and len(hbar.sys) != len(sys):
        raise DomainError("constraint mixture belongs to a different bin system")
    matrix = hbar.matrix(V, table)
    kappa, value = solve_game(matrix, backend)
    # solver-independent check by direct summation over V
    worst = kappa.worst_case(matrix)
    if worst > FEASIBILITY_TOL:
        logger.warning("kappa infeasible: max_v E[hbar] = %.3e (LP value %.3e, backend %s)",
                       worst, value, backend)
        raise SolverFailure(f"max_v E[hbar] = {worst:.3e} exceeds {FEASIBILITY_TOL:g}")
    return kappa
