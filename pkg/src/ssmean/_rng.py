"""Deterministic substream derivation.

All randomness in the package flows through keyed substreams: the generator
for a given task depends only on the integer key tuple, never on execution
order or thread scheduling. Domain tags keep streams for unrelated tasks
(simulation draws, bootstrap resampling, fold shuffles, ...) disjoint.
"""
import numpy as np

# domain tags for substream keys
SIM_DRAW = 1
BOOT_RESAMPLE = 2
FOLD_SHUFFLE = 3
UNLABELED_SUBSAMPLE = 4
CROSSFIT_SHUFFLE = 5


def substream(*key: int) -> np.random.Generator:
    """Return a generator whose state depends only on the key tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def derive_seed(*key: int) -> int:
    """Collapse a key tuple to a single reproducible integer seed."""
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1, np.uint64)[0])


def standard_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Normal variates via inverse-CDF transform of the uniform stream.

    Deterministic given the generator state and platform-stable, unlike
    rejection samplers. The clamp guards the measure-zero event u == 0.
    """
    from scipy.special import ndtri

    u = rng.random(size)
    return ndtri(np.maximum(u, 1e-17))
