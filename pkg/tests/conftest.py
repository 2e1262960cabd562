import numpy as np
import pytest

from spinquiver import (LocalCoordinates, ModelSpec, derive_params,
                        point_from_coordinates, random_coordinates, random_point)

# fixed generic deformation parameters per cycle length, regular by construction
Q_SETS = {
    1: [1.7 + 0.3j],
    2: [1.3 + 0.2j, 0.7 - 0.4j],
    3: [1.3 + 0.2j, 0.7 - 0.4j, 0.9 + 0.5j],
    4: [1.2 + 0.2j, 0.8 - 0.3j, 1.1 + 0.4j, 0.9 - 0.1j],
}


def make_setup(m, d, n):
    spec = ModelSpec(m=m, d=d, n=n)
    params = derive_params(Q_SETS[m], n=n)
    return spec, params


def make_point(m, d, n, seed):
    spec, params = make_setup(m, d, n)
    return random_point(spec, params, seed), spec, params


def tame_point(m, d, n, seed, c_scale=0.15, q=None):
    """Point with small spin magnitudes so flow dynamics stay bounded."""
    spec = ModelSpec(m=m, d=d, n=n)
    params = derive_params(q if q is not None else Q_SETS[m], n=n)
    coords = random_coordinates(spec, params, seed)
    coords = LocalCoordinates.make(coords.x, coords.a, c_scale * coords.c)
    return point_from_coordinates(coords, params, spec), spec, params


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240817))
