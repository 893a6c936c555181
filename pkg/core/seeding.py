import numpy as np

PREDICTOR_STREAM = 0
ADVERSARY_STREAM = 1


def stream_rng(seed: int, horizon: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one side of one (T, seed) cell."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(horizon), int(stream)])))
