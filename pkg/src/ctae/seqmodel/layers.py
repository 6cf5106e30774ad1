"""Transformer building blocks expressed with diffcore ops."""

import numpy as np

from ..diffcore import ops

__all__ = [
    "positional_encoding",
    "causal_mask",
    "init_linear",
    "init_layer_norm",
    "linear",
    "multi_head_attention",
    "feed_forward",
]


def positional_encoding(n_steps, d_model):
    """Fixed sinusoidal table of shape ``(n_steps, d_model)``.

    Column ``2i`` holds ``sin(t / 10000**(2i/d_model))`` and column ``2i+1``
    the matching cosine, for ``t = 0 .. n_steps - 1``.
    """
    if d_model % 2:
        raise ValueError(f"d_model must be even, got {d_model}")
    t = np.arange(n_steps, dtype=np.float64)[:, None]
    two_i = np.arange(0, d_model, 2, dtype=np.float64)[None, :]
    angle = t / np.power(10000.0, two_i / d_model)
    table = np.empty((n_steps, d_model))
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle)
    return table


def causal_mask(n_query, n_key=None):
    """Additive mask: 0 where key index <= query index, -inf elsewhere."""
    n_key = n_query if n_key is None else n_key
    q = np.arange(n_query)[:, None]
    k = np.arange(n_key)[None, :]
    return np.where(k <= q, 0.0, -np.inf)


def init_linear(params, name, fan_in, fan_out, rng, bias=True):
    bound = 1.0 / np.sqrt(fan_in)
    params.add(f"{name}.W", rng.uniform(-bound, bound, size=(fan_in, fan_out)))
    if bias:
        params.add(f"{name}.b", rng.uniform(-bound, bound, size=(fan_out,)))


def init_layer_norm(params, name, width):
    params.add(f"{name}.gain", np.ones(width))
    params.add(f"{name}.bias", np.zeros(width))


def linear(x, params, name):
    out = ops.matmul(x, params[f"{name}.W"])
    bias_name = f"{name}.b"
    if bias_name in params:
        out = out + params[bias_name]
    return out


def layer_norm(x, params, name, eps=1e-5):
    return ops.layer_norm(x, params[f"{name}.gain"], params[f"{name}.bias"], eps)


def init_attention(params, name, d_model, rng):
    # Key bias is omitted: softmax is invariant to it, so it is untrainable.
    init_linear(params, f"{name}.q", d_model, d_model, rng)
    init_linear(params, f"{name}.k", d_model, d_model, rng, bias=False)
    init_linear(params, f"{name}.v", d_model, d_model, rng)
    init_linear(params, f"{name}.o", d_model, d_model, rng)


def _split_heads(x, n_heads):
    batch, steps, width = x.shape
    return x.reshape(batch, steps, n_heads, width // n_heads).transpose(0, 2, 1, 3)


def multi_head_attention(x_query, x_memory, params, name, n_heads, mask):
    """Scaled dot-product attention of ``x_query`` over ``x_memory``.

    Both inputs are ``(batch, steps, d_model)``; ``mask`` is an additive
    ``(n_query, n_key)`` array.
    """
    batch, n_query, width = x_query.shape
    head = width // n_heads
    q = _split_heads(linear(x_query, params, f"{name}.q"), n_heads)
    k = _split_heads(linear(x_memory, params, f"{name}.k"), n_heads)
    v = _split_heads(linear(x_memory, params, f"{name}.v"), n_heads)
    scores = ops.matmul(q, k.swapaxes(-1, -2)) * (1.0 / np.sqrt(head))
    weights = ops.softmax_lastdim(scores, mask)
    mixed = ops.matmul(weights, v).transpose(0, 2, 1, 3)
    return linear(mixed.reshape(batch, n_query, width), params, f"{name}.o")


def init_feed_forward(params, name, d_model, d_ff, rng):
    init_linear(params, f"{name}.in", d_model, d_ff, rng)
    init_linear(params, f"{name}.out", d_ff, d_model, rng)


def feed_forward(x, params, name):
    return linear(ops.gelu(linear(x, params, f"{name}.in")), params, f"{name}.out")
