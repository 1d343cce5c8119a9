"""Command-line surface: train, eval, predict-map, gradcheck, bench, info."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

DEFAULT_CONFIG = {
    "dataset": {"scene": "", "labels": "", "manifest": ""},
    "model": {
        "patch": 7, "bands": 200, "latent": 64, "state": 16, "layers": 1,
        "classes": 16, "tau": 0.1, "use_pcs": True, "use_bss": True,
        "use_smg": True, "readout": "center", "share_route_params": False,
    },
    "train": {
        "lr0": 1e-4, "lr_gamma": 0.995, "epochs": 400, "batch": 64,
        "weight_decay": 1e-4, "seed": 0,
    },
}


def _merge(base, override, path=""):
    from .errors import ConfigError
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            _merge(base[key], value, path + key + ".")
        else:
            base[key] = value
    return base


def _coerce(text):
    for parse in (json.loads,):
        try:
            return parse(text)
        except (ValueError, TypeError):
            pass
    return text


def _apply_set(config, assignment):
    from .errors import ConfigError
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    dotted, value = assignment.split("=", 1)
    node = config
    parts = dotted.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {dotted!r}")
    node[parts[-1]] = _coerce(value)


def load_config(args):
    import copy

    config = copy.deepcopy(DEFAULT_CONFIG)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            _merge(config, json.load(fh))
    for assignment in args.set or []:
        _apply_set(config, assignment)
    if args.seed is not None:
        config["train"]["seed"] = args.seed
    if getattr(args, "no_pcs", False):
        config["model"]["use_pcs"] = False
    if getattr(args, "no_bss", False):
        config["model"]["use_bss"] = False
    if getattr(args, "no_smg", False):
        config["model"]["use_smg"] = False
    return config


def _dataset_path(value):
    path = Path(value)
    if not path.exists():
        root = os.environ.get("S2MAMBA_DATA_DIR")
        if root and (Path(root) / value).exists():
            return Path(root) / value
    return path


def _load_dataset(config):
    from .data import load_manifest, load_scene, normalize_bands

    ds = config["dataset"]
    cube = load_scene(_dataset_path(ds["scene"]),
                      _dataset_path(ds["labels"]) if ds["labels"] else None)
    manifest = load_manifest(_dataset_path(ds["manifest"])) \
        if ds["manifest"] else None
    if manifest is not None:
        cube.validate(manifest.num_classes)
    return normalize_bands(cube), manifest


def _model_config(config):
    from .model import ModelConfig

    return ModelConfig(**config["model"])


def cmd_train(args):
    from .data import SplitSpec, make_split
    from .train import TrainConfig, train

    config = load_config(args)
    cube, manifest = _load_dataset(config)
    spec = SplitSpec(train_counts=manifest.train_counts,
                     test_counts=manifest.test_counts,
                     seed=config["train"]["seed"])
    train_idx, _ = make_split(cube, spec, manifest)
    tc = TrainConfig(model=_model_config(config), **config["train"])
    out = Path(args.out or "checkpoint.s2m")
    log_path = out.with_suffix(".log")
    _, history = train(cube, train_idx, tc, checkpoint_path=out,
                       log_path=log_path)
    last = history[-1]
    print(f"trained {len(history)} epochs, final loss {last.loss:.6f}, "
          f"checkpoint {out}, log {log_path}")
    return 0


def cmd_eval(args):
    from .data import SplitSpec, make_split
    from .model import load_checkpoint
    from .train import evaluate

    config = load_config(args)
    cube, manifest = _load_dataset(config)
    mc, params = load_checkpoint(args.checkpoint)
    spec = SplitSpec(train_counts=manifest.train_counts,
                     test_counts=manifest.test_counts,
                     seed=config["train"]["seed"])
    _, test_idx = make_split(cube, spec, manifest)
    result = evaluate(cube, test_idx, params, mc)
    report = {
        "oa": result["oa"],
        "aa": result["aa"],
        "kappa": result["kappa"],
        "per_class": result["per_class"],
    }
    print(json.dumps(report, indent=2))
    return 0


def cmd_predict_map(args):
    from .model import load_checkpoint
    from .train import render_class_map

    config = load_config(args)
    cube, manifest = _load_dataset(config)
    mc, params = load_checkpoint(args.checkpoint)
    out = args.out or "class_map.png"
    render_class_map(cube, params, mc, manifest.palette, out,
                     all_pixels=args.all_pixels)
    print(f"wrote {out}")
    return 0


def cmd_gradcheck(args):
    from .gradcheck import model_gradcheck

    worst, per_group = model_gradcheck(seed=args.seed or 0)
    if args.verbose:
        for name, err in sorted(per_group.items()):
            print(f"{name}: {err:.3e}")
    verdict = "PASS" if worst < 1e-4 else "FAIL"
    print(f"max_rel_err = {worst:.3e}")
    print(f"max_rel_err < 1e-4: {verdict}")
    return 0 if verdict == "PASS" else 1


def cmd_bench(args):
    from .bench import compare_backends, run_bench

    result = run_bench(repeats=args.repeats)
    print(f"backend: {result['backend']}")
    print("P\ttokens\tseconds")
    for side, tok, sec in zip(result["sides"], result["tokens"],
                              result["seconds"]):
        print(f"{side}\t{tok}\t{sec:.6f}")
    print(f"linear fit: slope {result['slope']:.3e} s/token, "
          f"intercept {result['intercept']:.3e} s, r2 = {result['r2']:.5f}")
    if args.compare:
        times = compare_backends(repeats=args.repeats)
        for name, secs in times.items():
            joined = ", ".join(f"{s:.6f}" for s in secs)
            print(f"{name}: {joined}")
    return 0


def cmd_info(args):
    from . import kernels
    from .model import count_params, init_params

    config = load_config(args)
    mc = _model_config(config)
    params = init_params(mc, seed=config["train"]["seed"])
    print(json.dumps(config, indent=2))
    print(f"kernel backend: {kernels.BACKEND}")
    print(f"total parameters: {count_params(params)}")
    if config["dataset"]["scene"]:
        cube, manifest = _load_dataset(config)
        labeled = int((cube.labels > 0).sum())
        print(f"scene: {cube.height}x{cube.width}x{cube.bands}, "
              f"{labeled} labeled pixels")
        if manifest:
            print(f"classes: {manifest.num_classes} "
                  f"({', '.join(manifest.class_names)})")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="s2mamba",
        description="Spatial-spectral selective state space classifier")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, ablation=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dot-path config override (repeatable)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None)
        if ablation:
            p.add_argument("--no-pcs", action="store_true")
            p.add_argument("--no-bss", action="store_true")
            p.add_argument("--no-smg", action="store_true")

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict-map", help="render a classification map")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--all-pixels", action="store_true")
    p.set_defaults(func=cmd_predict_map)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    common(p, ablation=False)
    p.add_argument("--preset", default="tiny", choices=["tiny"])
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="forward-time scaling benchmark")
    common(p, ablation=False)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--compare", action="store_true",
                   help="also time every available kernel backend")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("info", help="config, parameter count, dataset stats")
    common(p)
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        os.environ["OMP_NUM_THREADS"] = str(args.threads)
        os.environ["OPENBLAS_NUM_THREADS"] = str(args.threads)
        os.environ["MKL_NUM_THREADS"] = str(args.threads)
    from .errors import S2MambaError

    try:
        return args.func(args)
    except S2MambaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
