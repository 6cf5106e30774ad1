"""Adam optimiser and global-norm gradient clipping."""

from dataclasses import dataclass, field

import numpy as np

from .tensor import is_checked


@dataclass
class AdamState:
    """Moment estimates for every parameter plus the step counter."""

    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(first={n: np.zeros_like(p.data) for n, p in params.items()},
                   second={n: np.zeros_like(p.data) for n, p in params.items()},
                   step=0, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params, grads, state, lr):
    """Apply one bias-corrected Adam update in place.

    Parameters
    ----------
    params : ParameterSet
    grads : dict
        Name to gradient array; names missing from ``grads`` are treated as
        zero gradients.
    state : AdamState
        Updated in place; ``state.step`` increases by exactly one.
    lr : float
        Learning rate, must be positive.
    """
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if is_checked():
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for {name!r}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != {p.shape}")
        m = state.first[name] = b1 * state.first[name] + (1.0 - b1) * g
        v = state.second[name] = b2 * state.second[name] + (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def clip_global_norm(grads, max_norm):
    """Scale ``grads`` so their joint L2 norm is at most ``max_norm``.

    Returns ``(grads, norm, clipped)``.
    """
    norm = float(np.sqrt(sum(float(np.vdot(g, g)) for g in grads.values())))
    if max_norm is None or not np.isfinite(norm) or norm <= max_norm:
        return grads, norm, False
    scale = max_norm / norm
    return {n: g * scale for n, g in grads.items()}, norm, True
