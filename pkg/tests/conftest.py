import functools

import numpy as np
import pytest

from pca_npsa import PAPER3_STEPS, PAPER9_STEPS, make_scene, sample_fringes
from pca_npsa.fringe_synth import count_distinct_mod_2pi

CANONICAL = ("tilt-8", "sphere-4", "peaks")


@functools.lru_cache(maxsize=None)
def scene(name="tilt-8", size=256):
    return make_scene(name, size)


@functools.lru_cache(maxsize=None)
def stack(name="tilt-8", steps=PAPER3_STEPS, size=256):
    return sample_fringes(scene(name, size), np.array(steps))


def random_step_sets(count=20, seed=20190401):
    """Step sets of 3..9 frames drawn on [0, 2pi) whose span exceeds pi."""
    rng = np.random.default_rng(seed)
    sets = []
    while len(sets) < count:
        n = int(rng.integers(3, 10))
        theta = rng.uniform(0, 2 * np.pi, n)
        if np.ptp(theta) > np.pi and count_distinct_mod_2pi(theta) >= 3:
            sets.append(tuple(float(t) for t in theta))
    return sets


STEP_SETS = {"paper3": PAPER3_STEPS, "paper9": PAPER9_STEPS}
STEP_SETS.update({f"rand{i:02d}": s for i, s in enumerate(random_step_sets())})


@pytest.fixture
def tilt8():
    return scene("tilt-8")


@pytest.fixture
def paper3_stack():
    return stack("tilt-8", PAPER3_STEPS)


@pytest.fixture
def paper9_stack():
    return stack("tilt-8", PAPER9_STEPS)


def circular_rms(diff):
    """RMS of a wrapped difference after removing its circular mean."""
    diff = np.asarray(diff)
    diff = diff[np.isfinite(diff)]
    d = np.angle(np.exp(1j * (diff - np.angle(np.mean(np.exp(1j * diff))))))
    return float(np.sqrt(np.mean(d**2)))
