"""Run directories and manifests."""

import datetime
import hashlib
import json
import os

__all__ = ["MANIFEST_VERSION", "OUTPUT_ROOT_ENV", "run_directory", "write_manifest",
           "read_manifest", "values_hash"]

MANIFEST_VERSION = 1
OUTPUT_ROOT_ENV = "CTAE_OUTPUT_ROOT"


def values_hash(values):
    blob = json.dumps(values, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="microseconds")


def run_directory(command, values, out=None):
    """``out`` if given, else ``$CTAE_OUTPUT_ROOT/<command>-<UTC time>-<hash>``."""
    if out is None:
        root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
        stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        out = os.path.join(root, f"{command}-{stamp}-{values_hash(values)}")
    os.makedirs(out, exist_ok=True)
    return out


def write_manifest(run_dir, manifest):
    path = os.path.join(run_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path):
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("manifest_version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version "
                         f"{manifest.get('manifest_version')!r}")
    return manifest
