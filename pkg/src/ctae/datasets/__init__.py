"""Recordings, preprocessing, synthetic data and trial splits."""

from .preprocess import bin_spikes, gaussian_kernel, gaussian_smooth, read_event_list
from .recording import (RegionRecording, check_recordings, load_dataset,
                        save_dataset, stack_labels)
from .split import split_trials, train_val_test
from .synthetic import (GroundTruth, SyntheticSpec, generate_synthetic, load_ground_truth,
                        lowdin_orthonormalize, save_ground_truth)

__all__ = [
    "GroundTruth",
    "RegionRecording",
    "SyntheticSpec",
    "bin_spikes",
    "check_recordings",
    "gaussian_kernel",
    "gaussian_smooth",
    "generate_synthetic",
    "load_dataset",
    "load_ground_truth",
    "lowdin_orthonormalize",
    "read_event_list",
    "save_dataset",
    "save_ground_truth",
    "split_trials",
    "stack_labels",
    "train_val_test",
]
