"""Spike binning, Gaussian smoothing and event-list import."""

import numpy as np
from scipy.ndimage import correlate1d

from .recording import RegionRecording

__all__ = ["bin_spikes", "gaussian_kernel", "gaussian_smooth", "read_event_list"]


def bin_spikes(events, bin_width_ms, n_bins, region="region0"):
    """Count events per bin.

    Parameters
    ----------
    events : sequence over trials of sequences over channels of event times
        Times are in seconds from trial start.
    bin_width_ms : float
    n_bins : int
        Bin ``t`` covers ``[t * width, (t + 1) * width)``.

    Returns
    -------
    RegionRecording with ``kind='counts'``.
    """
    n_trials = len(events)
    n_channels = len(events[0]) if n_trials else 0
    counts = np.zeros((n_trials, n_channels, n_bins))
    width_s = bin_width_ms / 1000.0
    for k, trial in enumerate(events):
        if len(trial) != n_channels:
            raise ValueError(f"trial {k} has {len(trial)} channels, "
                             f"expected {n_channels}")
        for n, times in enumerate(trial):
            times = np.asarray(times, dtype=np.float64)
            if times.size == 0:
                continue
            if np.any(times < 0):
                raise ValueError(f"negative event time in trial {k}, channel {n}")
            # A tiny tolerance keeps events written at a bin edge (e.g. 0.3 s
            # with 100 ms bins) in the bin they open.
            idx = np.floor(times / width_s + 1e-9).astype(np.int64)
            if np.any(idx >= n_bins):
                raise ValueError(f"event beyond the trial window in trial {k}, "
                                 f"channel {n}")
            counts[k, n] += np.bincount(idx, minlength=n_bins)
    return RegionRecording(counts, bin_width_ms=bin_width_ms, region=region,
                           kind="counts")


def gaussian_kernel(size):
    """Normalised Gaussian taps with sigma = size/2 bins and radius ``size``."""
    if size < 1:
        raise ValueError("kernel size must be at least 1")
    sigma = size / 2.0
    offsets = np.arange(-size, size + 1, dtype=np.float64)
    taps = np.exp(-0.5 * (offsets / sigma) ** 2)
    return taps / taps.sum()


def gaussian_smooth(recording, size):
    """Smooth every channel along time; edges use half-sample reflection."""
    values = correlate1d(recording.values, gaussian_kernel(size), axis=2,
                         mode="reflect")
    return RegionRecording(values, bin_width_ms=recording.bin_width_ms,
                           region=recording.region, labels=recording.labels,
                           targets=recording.targets, kind="rates")


def read_event_list(source):
    """Parse ``trial channel time`` lines into the nested layout of :func:`bin_spikes`.

    ``source`` is a path or an iterable of lines. Blank lines and ``#``
    comments are skipped; fields may be separated by whitespace or commas.
    Trial and channel indices are zero-based; missing ones get no events.
    """
    if isinstance(source, str):
        with open(source) as fh:
            lines = fh.read().splitlines()
    else:
        lines = list(source)
    rows = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'trial channel time'")
        rows.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if not rows:
        return []
    n_trials = max(r[0] for r in rows) + 1
    n_channels = max(r[1] for r in rows) + 1
    events = [[[] for _ in range(n_channels)] for _ in range(n_trials)]
    for trial, channel, time in rows:
        events[trial][channel].append(time)
    return events
