from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .dist import WidthResult
from .errors import DomainError, InvariantViolation

GRID_TOL = 1e-12

Theta = Tuple[float, float]


@dataclass(frozen=True, eq=False)
class BinSystem:
    gamma: float
    scales: Tuple[float, ...]
    bins_per_scale: Dict[float, Tuple[float, ...]]
    theta: Tuple[Theta, ...]
    index: Dict[Theta, int] = field(repr=False)
    theta_r: np.ndarray = field(repr=False)
    theta_b: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.theta)

    @property
    def bins(self) -> np.ndarray:
        """The union B of all bin grids, sorted."""
        return np.unique(self.theta_b)

    def index_of(self, theta: Theta) -> int:
        try:
            return self.index[theta]
        except KeyError:
            raise DomainError(f"{theta!r} is not a bin pair of this system") from None


def _multiples(r: float) -> Tuple[float, ...]:
    bins = []
    j = 0
    while j * r <= 1.0 + GRID_TOL:
        bins.append(min(j * r, 1.0))
        j += 1
    return tuple(bins)


def build(gamma: float) -> BinSystem:
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma {gamma!r} outside (0, 1]")
    scales = []
    k = 0
    while gamma * 2 ** k <= 1.0 + GRID_TOL:
        scales.append(gamma * 2 ** k)
        k += 1
    bins_per_scale = {r: _multiples(r) for r in scales}
    theta = tuple((r, b) for r in scales for b in bins_per_scale[r])
    return BinSystem(
        gamma=float(gamma),
        scales=tuple(scales),
        bins_per_scale=bins_per_scale,
        theta=theta,
        index={pair: i for i, pair in enumerate(theta)},
        theta_r=np.array([r for r, _ in theta]),
        theta_b=np.array([b for _, b in theta]),
    )


def locate(sys: BinSystem, wr: WidthResult) -> Theta:
    """The scale r with w in [r, 2r) and the smallest bin of B_r inside [alpha, beta]."""
    if not sys.gamma - GRID_TOL <= wr.w <= 1.0 + GRID_TOL:
        raise InvariantViolation(f"width {wr.w!r} outside [gamma, 1]")
    # a width within GRID_TOL below a scale counts as that scale
    eligible = [r for r in sys.scales if r <= wr.w + GRID_TOL]
    if not eligible:
        raise InvariantViolation(f"no scale at or below width {wr.w!r}")
    r = eligible[-1]
    if r != sys.scales[-1] and wr.w >= 2 * r + GRID_TOL:
        raise InvariantViolation(f"width {wr.w!r} not in [{r}, {2 * r})")
    bins = np.asarray(sys.bins_per_scale[r])
    # exact containment first; the tolerance only absorbs grid rounding
    inside = np.flatnonzero((bins >= wr.alpha) & (bins <= wr.beta))
    if inside.size == 0:
        inside = np.flatnonzero((bins >= wr.alpha - GRID_TOL) & (bins <= wr.beta + GRID_TOL))
    if inside.size == 0:
        raise InvariantViolation(
            f"no bin of scale {r} inside [{wr.alpha}, {wr.beta}]")
    return r, float(bins[inside[0]])
