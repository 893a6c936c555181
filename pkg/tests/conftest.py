import numpy as np
import pytest

from core.dist import Dist01
from core.losses import PLConvexLoss


def random_pl_loss(rng, max_pieces=6):
    """Convex 1-Lipschitz loss with breakpoints on a 0.01 grid."""
    pieces = int(rng.integers(1, max_pieces + 1))
    interior = np.sort(rng.choice(np.arange(1, 100), size=pieces - 1, replace=False)) / 100
    breakpoints = np.concatenate([[0.0], interior, [1.0]])
    slopes = np.sort(rng.uniform(-1.0, 1.0, size=pieces))
    return PLConvexLoss(breakpoints, slopes, float(rng.uniform(-1.0, 1.0)))


def random_dist(rng, max_atoms=8, grid=None):
    atoms = int(rng.integers(1, max_atoms + 1))
    if grid is None:
        points = rng.uniform(0.0, 1.0, size=atoms)
    else:
        points = rng.choice(grid, size=atoms)
    masses = rng.dirichlet(np.ones(atoms))
    return Dist01.from_atoms(points, masses)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
