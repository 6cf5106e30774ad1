"""Shared synthetic oracles for the test suite."""

import numpy as np


def planted_window_task(n_trials=200, n_dims=4, steps=30, window=(10, 13), n_classes=4,
                        amplitude=3.0, seed=0):
    """Noise features whose class signal lives in one feature and a few bins."""
    gen = np.random.default_rng(seed)
    labels = np.arange(n_trials) % n_classes
    gen.shuffle(labels)
    x = gen.standard_normal((n_trials, n_dims, steps))
    levels = np.linspace(-1.0, 1.0, n_classes)
    x[:, 0, window[0]:window[1]] += amplitude * levels[labels][:, None]
    return x, labels
