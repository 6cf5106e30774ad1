"""``ctae`` command line: synth, train, grid, eval, ablate and replay.

Exit codes: 0 success, 2 usage or config error, 3 input/output or file
format error, 4 training diverged (non-finite loss), 1 anything else.
"""

import argparse
import logging
import os
import sys

from .. import __version__
from ..container import ContainerError
from ..trainer.loop import TrainingDiverged
from . import commands
from .configfile import SCHEMAS, ConfigError, format_config, parse_config, read_config
from .manifest import (MANIFEST_VERSION, now, read_manifest, run_directory,
                       write_manifest)

__all__ = ["main", "EXIT_OK", "EXIT_FAILURE", "EXIT_USAGE", "EXIT_IO", "EXIT_DIVERGED"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DIVERGED = 4

logger = logging.getLogger("ctae")


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="ctae", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ctae {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="run directory (default: $CTAE_OUTPUT_ROOT/...)")
        if seed:
            p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("synth", help="generate a planted-latent data set")
    common(p)

    p = sub.add_parser("train", help="train one model")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs-override", type=int, dest="epochs")
    p.add_argument("--regions", type=_int_list, help="comma-separated region indices")

    p = sub.add_parser("grid", help="hyperparameter grid search")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--regions", type=_int_list)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("eval", help="decode and diagnose a trained model")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--truth", help="ground-truth file for recovery scores")
    p.add_argument("--subspace", action="append", dest="subspaces",
                   help="shared, private-<r>, code-<bits> or all; repeatable")
    p.add_argument("--time-resolved", action="store_true", default=None)

    p = sub.add_parser("ablate", help="loss ablation table")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--truth")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("replay", help="re-execute a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="run directory for the replay")
    return parser


def _options(args):
    keys = {"train": ("data", "regions", "epochs"),
            "grid": ("data", "regions", "jobs"),
            "eval": ("checkpoint", "data", "truth", "subspaces", "time_resolved"),
            "ablate": ("data", "truth", "jobs"),
            "synth": ()}[args.command]
    out = {}
    for key in keys:
        value = getattr(args, key)
        if key in ("data", "checkpoint", "truth") and value is not None:
            value = os.path.abspath(value)
        out[key] = value
    return out


def _execute(command, values, options, run_dir):
    if command == "synth":
        return commands.synth(values, run_dir)
    if command == "train":
        def progress(row):
            logger.info("epoch %d total %.6g val %.6g", row["epoch"], row["total"],
                        row["val_total"])
        return commands.train_cmd(values, run_dir, options["data"], options["regions"],
                                  options["epochs"], progress)
    if command == "grid":
        return commands.grid(values, run_dir, options["data"], options["regions"],
                             options["jobs"])
    if command == "eval":
        return commands.evaluate(values, run_dir, options["checkpoint"], options["data"],
                                 options["truth"], options["subspaces"],
                                 options["time_resolved"])
    if command == "ablate":
        return commands.ablate(values, run_dir, options["data"], options["truth"],
                               options["jobs"])
    raise ValueError(f"unknown command {command!r}")


def run(command, values, options, out=None, config_path=None, argv=None):
    """Execute ``command`` and write its manifest; returns ``(exit_code, run_dir)``."""
    run_dir = run_directory(command, values, out)
    with open(os.path.join(run_dir, "config.resolved"), "w") as fh:
        fh.write(format_config(values))
    manifest = {"manifest_version": MANIFEST_VERSION, "version": __version__,
                "command": command, "argv": argv, "config_path": config_path,
                "config": values, "seed": values.get("seed"), "options": options,
                "run_dir": os.path.abspath(run_dir), "started": now()}
    code = EXIT_OK
    try:
        manifest.update(_execute(command, values, options, run_dir))
    except TrainingDiverged as err:
        logger.error("%s", err)
        manifest["error"] = str(err)
        code = EXIT_DIVERGED
    except (ContainerError, OSError) as err:
        logger.error("%s", err)
        manifest["error"] = str(err)
        code = EXIT_IO
    except (ConfigError, ValueError, KeyError) as err:
        logger.error("%s", err)
        manifest["error"] = str(err)
        code = EXIT_USAGE
    manifest["finished"] = now()
    manifest["exit_status"] = code
    write_manifest(run_dir, manifest)
    return code, run_dir


def replay(manifest_path, out=None):
    manifest = read_manifest(manifest_path)
    command = manifest["command"]
    # Re-parse so values regain the types and ordering a config file gives.
    values = parse_config(format_config(manifest["config"]), SCHEMAS[command])
    return run(command, values, manifest["options"], out=out,
               config_path=manifest.get("config_path"),
               argv=["replay", os.path.abspath(manifest_path)])


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            code, run_dir = replay(args.manifest, args.out)
        else:
            overrides = {}
            if getattr(args, "seed", None) is not None:
                overrides["seed"] = args.seed
            values = read_config(args.config, SCHEMAS[args.command], overrides)
            code, run_dir = run(args.command, values, _options(args), out=args.out,
                                config_path=args.config, argv=argv)
    except ConfigError as err:
        print(f"ctae: config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as err:
        print(f"ctae: {err}", file=sys.stderr)
        return EXIT_IO if isinstance(err, OSError) else EXIT_USAGE
    print(run_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
