"""Flat ``key = value`` configuration files with typed, closed schemas."""

from ..seqmodel import canonical_code_order

__all__ = ["ConfigError", "SCHEMAS", "parse_config", "read_config", "format_config"]


class ConfigError(ValueError):
    """Unknown key, malformed line or value of the wrong type."""


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _str_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _sizes(text):
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        code, _, size = item.partition(":")
        if not size:
            raise ValueError(f"expected code:size, got {item!r}")
        out[code.strip()] = int(size)
    # Canonical order so a config and its JSON echo resolve identically.
    return {code: out[code] for code in canonical_code_order(list(out))}


def _opt_int(text):
    return None if text.strip().lower() in ("none", "auto", "") else int(text)


def _opt_int_pair(text):
    if text.strip().lower() in ("none", ""):
        return None
    pair = _int_list(text)
    if len(pair) != 2:
        raise ValueError("expected start,stop")
    return pair


SYNTH = {
    "n_regions": (int, 2),
    "subset_sizes": (_sizes, {"11": 3, "10": 3, "01": 3}),
    "n_trials": (int, 200),
    "n_timesteps": (int, 30),
    "channels": (_int_list, [40, 40]),
    "smoothness": (float, 3.0),
    "mixing": (str, "tanh"),
    "noise_std": (float, 0.05),
    "n_conditions": (int, 8),
    "condition_amplitude": (float, 1.0),
    "bin_width_ms": (float, 100.0),
    "seed": (int, 0),
}

TRAIN = {
    "subset_sizes": (_sizes, {"11": 5, "10": 5, "01": 5}),
    "n_layers": (int, 1),
    "d_model": (int, 32),
    "n_heads": (int, 4),
    "d_ff": (int, 64),
    "dropout": (float, 0.0),
    "standardize": (_bool, True),
    "dtype": (str, "float64"),
    "lambda_shared": (float, 1.0),
    "lambda_align": (float, 0.5),
    "lambda_orth": (float, 0.01),
    "warmup": (int, 100),
    "lr": (float, 1e-4),
    "epochs": (int, 1000),
    "batch_size": (_opt_int, 32),
    "seed": (int, 0),
    "split_train": (float, 0.7),
    "split_val": (float, 0.15),
    "report_every": (int, 50),
    "clip_norm": (float, 5.0),
    "two_region_path": (_bool, False),
}

GRID = dict(TRAIN, **{
    "grid_n_layers": (_int_list, None),
    "grid_latent_dims": (_int_list, None),
    "grid_lambda_shared": (_float_list, None),
    "grid_lambda_align": (_float_list, None),
    "grid_lambda_orth": (_float_list, None),
    "grid_lr": (_float_list, None),
    "grid_warmup": (_int_list, None),
    "grid_epochs": (_opt_int, None),
})

EVAL = {
    "subspaces": (_str_list, None),
    "folds": (int, 5),
    "seed": (int, 0),
    "time_resolved": (_bool, False),
    "window": (int, 5),
    "time_window": (_opt_int_pair, None),
}

ABLATE = dict(TRAIN, folds=(int, 5), eval_seed=(int, 0))

SCHEMAS = {"synth": SYNTH, "train": TRAIN, "grid": GRID, "eval": EVAL,
           "ablate": ABLATE}


def parse_config(text, schema, overrides=None):
    """Parse ``text`` against ``schema``; returns every key, defaults filled.

    Lines are ``key = value``; ``#`` starts a comment. Repeated keys and
    keys missing from the schema are errors.
    """
    values = {key: default for key, (_, default) in schema.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        _assign(values, schema, key, value.strip(), f"line {lineno}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
    for key, value in (overrides or {}).items():
        _assign(values, schema, key, str(value), "override")
    return values


def _assign(values, schema, key, text, where):
    if key not in schema:
        raise ConfigError(f"{where}: unknown key {key!r}")
    parser = schema[key][0]
    try:
        values[key] = parser(text)
    except ValueError as err:
        raise ConfigError(f"{where}: bad value for {key!r}: {err}") from None


def read_config(path, schema, overrides=None):
    if path is None:
        return parse_config("", schema, overrides)
    with open(path) as fh:
        return parse_config(fh.read(), schema, overrides)


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, dict):
        return ",".join(f"{k}:{v}" for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(values):
    """Inverse of :func:`parse_config` for resolved values."""
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in sorted(values.items()))
