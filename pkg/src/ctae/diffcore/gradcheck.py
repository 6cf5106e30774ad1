"""Central finite-difference gradient checking."""

import numpy as np

from .tensor import backward


def grad_check(loss_builder, params, delta=1e-5, return_details=False,
               max_entries=None, seed=0):
    """Worst relative error between analytic and numeric gradients.

    ``loss_builder()`` must rebuild the scalar loss from the current values
    of ``params`` each time it is called. Entries of every parameter are
    perturbed by ``+/- delta``; the relative error of one entry is
    ``|a - n| / (|a| + |n| + 1e-12)``.

    ``max_entries`` caps the number of checked entries per parameter; a
    seeded random subset is drawn when a parameter is larger. ``None``
    checks every entry.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rng = np.random.default_rng(seed)
    params.zero_grad()
    analytic = backward(loss_builder(), params)
    worst = 0.0
    where = None
    for name, p in params.items():
        flat = p.data.reshape(-1)
        grad = analytic[name].reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        for i in indices:
            original = flat[i]
            flat[i] = original + delta
            up = float(loss_builder().data)
            flat[i] = original - delta
            down = float(loss_builder().data)
            flat[i] = original
            numeric = (up - down) / (2.0 * delta)
            err = abs(grad[i] - numeric) / (abs(grad[i]) + abs(numeric) + 1e-12)
            if err > worst:
                worst, where = err, (name, int(i), float(grad[i]), numeric)
    params.zero_grad()
    if return_details:
        return worst, where
    return worst
