"""Finitely supported distributions on [0, 1].

Quantile sets are read off the cumulative masses directly, so every interval
endpoint is a support point (or 0 / 1) and the width fixed point can be
bisected on an exactly monotone predicate.
"""
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DomainError, InvariantViolation

MASS_TOL = 1e-12
# Cumulative masses within this distance of a quantile level count as equal.
LEVEL_TOL = 1e-13
WIDTH_ITERATIONS = 80


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class Dist01:
    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        mass = np.asarray(self.mass, dtype=float)
        if support.ndim != 1 or support.shape != mass.shape or support.size == 0:
            raise DomainError("support and mass must be non-empty vectors of equal length")
        if np.any(support < 0.0) or np.any(support > 1.0):
            raise DomainError("support points must lie in [0, 1]")
        if np.any(np.diff(support) <= 0.0):
            raise DomainError("support must be strictly increasing")
        if np.any(mass < 0.0):
            raise DomainError("masses must be nonnegative")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise DomainError(f"masses sum to {mass.sum()!r}, expected 1")
        object.__setattr__(self, 'support', _frozen(support.copy()))
        object.__setattr__(self, 'mass', _frozen(mass.copy()))

    @classmethod
    def from_atoms(cls, points: Iterable[float], masses: Iterable[float],
                   tol: float = 1e-9) -> 'Dist01':
        """Sort, coalesce equal points, drop zero atoms and renormalize."""
        points = np.asarray(list(points), dtype=float)
        masses = np.asarray(list(masses), dtype=float)
        if points.shape != masses.shape or points.size == 0:
            raise DomainError("points and masses must be non-empty and of equal length")
        if np.any(masses < 0.0):
            raise DomainError("masses must be nonnegative")
        total = masses.sum()
        if abs(total - 1.0) > tol:
            raise DomainError(f"masses sum to {total!r}, expected 1")
        unique, inverse = np.unique(points, return_inverse=True)
        merged = np.bincount(inverse, weights=masses, minlength=unique.size)
        keep = merged > 0.0
        return cls(unique[keep], merged[keep] / merged[keep].sum())

    @classmethod
    def point(cls, v: float) -> 'Dist01':
        return cls(np.array([float(v)]), np.array([1.0]))

    @classmethod
    def empirical(cls, values: Sequence[float]) -> 'Dist01':
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise DomainError("empirical distribution needs at least one value")
        return cls.from_atoms(values, np.full(values.size, 1.0 / values.size))

    @property
    def cdf(self) -> np.ndarray:
        cumulative = np.cumsum(self.mass)
        cumulative[-1] = 1.0
        return cumulative

    def prob_less(self, q: float) -> float:
        return float(self.mass[self.support < q].sum())

    def prob_at_most(self, q: float) -> float:
        return float(self.mass[self.support <= q].sum())

    def to_dict(self) -> dict:
        return {'support': self.support.tolist(), 'mass': self.mass.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> 'Dist01':
        return cls(np.asarray(data['support'], dtype=float), np.asarray(data['mass'], dtype=float))


@dataclass(frozen=True)
class WidthResult:
    w: float
    alpha: float
    beta: float


def quantile_set(phi: Dist01, z: float) -> Tuple[float, float]:
    """Return [lo, hi], the set of q with Pr[v < q] <= z <= Pr[v <= q]."""
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"quantile level {z!r} outside [0, 1]")
    cumulative = phi.cdf
    n = cumulative.size
    # lo: first support point whose cumulative mass reaches z
    if z - LEVEL_TOL <= 0.0:
        lo = 0.0
    else:
        i = int(np.searchsorted(cumulative, z - LEVEL_TOL, side='left'))
        lo = float(phi.support[min(i, n - 1)])
    # hi: first support point whose cumulative mass exceeds z
    j = int(np.searchsorted(cumulative, z + LEVEL_TOL, side='right'))
    hi = 1.0 if j >= n else float(phi.support[j])
    return lo, hi


def _width_levels(gamma: float, w: float) -> Tuple[float, float]:
    half = gamma / (2.0 * w)
    return max(0.0, 0.5 - half), min(1.0, 0.5 + half)


def _max_gap(phi: Dist01, gamma: float, w: float) -> float:
    low_level, high_level = _width_levels(gamma, w)
    return quantile_set(phi, high_level)[1] - quantile_set(phi, low_level)[0]


def gamma_width(phi: Dist01, gamma: float) -> WidthResult:
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma {gamma!r} outside (0, 1]")

    # {w : w <= max S(w)} is an interval starting at gamma
    if 1.0 <= _max_gap(phi, gamma, 1.0):
        w = 1.0
    else:
        lo, hi = gamma, 1.0
        for _ in range(WIDTH_ITERATIONS):
            mid = 0.5 * (lo + hi)
            if mid <= _max_gap(phi, gamma, mid):
                lo = mid
            else:
                hi = mid
        w = lo

    low_level, high_level = _width_levels(gamma, w)
    a_lo, a_hi = quantile_set(phi, low_level)
    b_lo, b_hi = quantile_set(phi, high_level)
    alpha = max(min(a_hi, b_hi - w), a_lo)
    beta = alpha + w
    if beta < b_lo - 1e-9 or beta > b_hi + 1e-9:
        raise InvariantViolation(
            f"no width witness at w={w!r}: alpha in [{a_lo}, {a_hi}], beta in [{b_lo}, {b_hi}]")
    return WidthResult(w=w, alpha=alpha, beta=beta)


def mixture(dists: Sequence[Dist01], weights: Sequence[float]) -> Dist01:
    if len(dists) == 0:
        raise DomainError("mixture of an empty list")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(dists),) or np.any(weights < 0.0):
        raise DomainError("mixture weights must be nonnegative, one per distribution")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise DomainError(f"mixture weights sum to {weights.sum()!r}, expected 1")
    points = np.concatenate([d.support for d in dists])
    masses = np.concatenate([wt * d.mass for d, wt in zip(dists, weights)])
    return Dist01.from_atoms(points, masses)


def expected_abs(phi: Dist01, s) -> float:
    """E_{v~phi} |s - v|; vectorized over s."""
    s = np.asarray(s, dtype=float)
    values = np.abs(s[..., None] - phi.support) @ phi.mass
    return float(values) if values.ndim == 0 else values


def best_response(phi: Dist01) -> Tuple[float, float]:
    s, _ = quantile_set(phi, 0.5)
    return s, expected_abs(phi, s)


def prob_table(phi: Dist01, thresholds: np.ndarray) -> List[np.ndarray]:
    """Pr[v < x], Pr[v <= x] for every threshold x."""
    cumulative = np.concatenate([[0.0], phi.cdf])
    below = cumulative[np.searchsorted(phi.support, thresholds, side='left')]
    at_most = cumulative[np.searchsorted(phi.support, thresholds, side='right')]
    return [below, at_most]
