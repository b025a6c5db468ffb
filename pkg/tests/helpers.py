"""Random model instances shared by the numerical tests."""

import numpy as np

from reflines.crf import CrfModel, n_parameters
from reflines.features import FeatureSpace, FeatureVector


def random_instance(rng, order, T, n_features=3, scale=2.0):
    """A random model plus ``T`` random feature vectors and the fired names per line."""
    space = FeatureSpace([f"f{k}" for k in range(n_features)], frozen=True)
    weights = rng.uniform(-scale, scale, n_parameters(n_features, order))
    model = CrfModel(order, space, weights)
    vectors, fired = [], []
    for _ in range(T):
        mask = rng.random(n_features) < 0.5
        active = tuple(int(k) for k in np.flatnonzero(mask))
        vectors.append(FeatureVector(active))
        fired.append({space.names[k] for k in active})
    return model, vectors, fired
