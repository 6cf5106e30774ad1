"""Trial containers and the on-disk dataset format."""

from dataclasses import dataclass, replace

import numpy as np

from .. import container

__all__ = [
    "RegionRecording",
    "check_recordings",
    "save_dataset",
    "load_dataset",
    "stack_labels",
]


@dataclass(eq=False)
class RegionRecording:
    """Activity of one region as ``(trials, channels, time)``.

    Parameters
    ----------
    values : ndarray of shape (n_trials, n_channels, n_timesteps)
    bin_width_ms : float
    region : str
        Region name used in reports.
    labels : ndarray of shape (n_trials,), optional
        Integer condition label per trial.
    targets : ndarray of shape (n_trials, n_dims, n_timesteps), optional
        Continuous behavioural targets aligned with the bins.
    kind : {'rates', 'counts'}
    """

    values: np.ndarray
    bin_width_ms: float = 100.0
    region: str = "region0"
    labels: np.ndarray = None
    targets: np.ndarray = None
    kind: str = "rates"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError(f"values must be (trials, channels, time), got "
                             f"shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if self.kind == "counts":
            if np.any(values < 0) or np.any(values != np.round(values)):
                raise ValueError("count recordings need non-negative integers")
        elif self.kind != "rates":
            raise ValueError(f"kind must be 'rates' or 'counts', got {self.kind!r}")
        self.values = values
        if self.labels is not None:
            self.labels = np.asarray(self.labels).astype(np.int64)
            if self.labels.shape != (values.shape[0],):
                raise ValueError("one label per trial is required")
        if self.targets is not None:
            self.targets = np.asarray(self.targets, dtype=np.float64)
            if (self.targets.ndim != 3 or self.targets.shape[0] != values.shape[0]
                    or self.targets.shape[2] != values.shape[2]):
                raise ValueError("targets must be (trials, dims, time) aligned "
                                 "with values")

    @property
    def n_trials(self):
        return self.values.shape[0]

    @property
    def n_channels(self):
        return self.values.shape[1]

    @property
    def n_timesteps(self):
        return self.values.shape[2]

    def subset(self, trials):
        trials = np.asarray(trials)
        return replace(
            self, values=self.values[trials],
            labels=None if self.labels is None else self.labels[trials],
            targets=None if self.targets is None else self.targets[trials])


def check_recordings(recordings):
    """Validate simultaneous recordings: same trial count and bin count."""
    recordings = list(recordings)
    if len(recordings) < 2:
        raise ValueError("at least two regions are required")
    out = []
    for r, rec in enumerate(recordings):
        if not isinstance(rec, RegionRecording):
            rec = RegionRecording(np.asarray(rec), region=f"region{r}")
        out.append(rec)
    n_trials = {rec.n_trials for rec in out}
    n_steps = {rec.n_timesteps for rec in out}
    if len(n_trials) != 1:
        raise ValueError(f"regions disagree on trial count: {sorted(n_trials)}")
    if len(n_steps) != 1:
        raise ValueError(f"regions disagree on time bins: {sorted(n_steps)}")
    return out


def stack_labels(recordings):
    """Condition labels shared by the recordings, or None."""
    for rec in recordings:
        if rec.labels is not None:
            return rec.labels
    return None


def save_dataset(path, recordings):
    """Write recordings to a ``dataset`` container file."""
    recordings = check_recordings(recordings)
    arrays = {}
    regions = []
    for r, rec in enumerate(recordings):
        arrays[f"region{r}.values"] = rec.values
        if rec.labels is not None:
            arrays[f"region{r}.labels"] = rec.labels.astype(np.float64)
        if rec.targets is not None:
            arrays[f"region{r}.targets"] = rec.targets
        regions.append({"name": rec.region, "channels": rec.n_channels,
                        "bin_width_ms": rec.bin_width_ms, "kind": rec.kind})
    meta = {"n_regions": len(recordings), "n_trials": recordings[0].n_trials,
            "n_timesteps": recordings[0].n_timesteps, "regions": regions}
    container.save(path, "dataset", arrays, meta)


def load_dataset(path):
    arrays, meta = container.load(path, kind="dataset")
    out = []
    for r, info in enumerate(meta["regions"]):
        labels = arrays.get(f"region{r}.labels")
        out.append(RegionRecording(
            values=arrays[f"region{r}.values"], bin_width_ms=info["bin_width_ms"],
            region=info["name"], kind=info["kind"],
            labels=None if labels is None else labels.astype(np.int64),
            targets=arrays.get(f"region{r}.targets")))
    return out
