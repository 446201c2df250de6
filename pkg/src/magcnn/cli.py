"""Command-line entry point: ``magcnn <command> [flags]``.

Exit codes: 0 success, 1 usage/configuration error, 2 data error, 3 numeric error.
Data commands read ``--data-dir``, falling back to ``$MAGCNN_DATA_DIR``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, bundled_config, load_config
from .errors import ArgumentError, ConfigurationError, DataError, NumericError, ShapeError
from .grid import assemble_grid, central_matrices
from .gradcheck import finite_difference_check
from .models import ModelConfig, build_model
from .report import dump_json
from .training import (evaluate, fold_rng, load_featurized, model_config, prepare,
                       resolve_blocks, run_cv, split_dataset, train)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DATA_COMMANDS = ("preprocess", "train", "eval", "cv", "inspect")
GRADCHECK_TOL = 1e-4
DATA_DIR_ENV = "MAGCNN_DATA_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV),
                        help=f"directory holding the TU-format files (default ${DATA_DIR_ENV})")
    common.add_argument("--dataset", default="MUTAG")
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--model", choices=("mgcnn", "magcnn"))
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--cache", help="grid cache file (read if present, else written)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="magcnn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("preprocess", parents=[common],
                   help="normalize a dataset into grids and report motif statistics")
    sub.add_parser("train", parents=[common],
                   help="train on all non-test graphs and save a checkpoint")
    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on the test split")
    p.add_argument("--checkpoint", required=True)
    sub.add_parser("cv", parents=[common], help="hold-out test split plus k-fold CV")
    sub.add_parser("gradcheck", parents=[common],
                   help="finite-difference check of both models on a tiny configuration")
    p = sub.add_parser("inspect", parents=[common],
                       help="dump one graph's central matrices and attention as JSON")
    p.add_argument("--graph-index", type=int, default=0)
    p.add_argument("--checkpoint")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = bundled_config(args.dataset)
    if args.config:
        cfg = load_config(args.config, cfg)
    cfg.dataset = args.dataset
    if args.data_dir:
        cfg.data_dir = args.data_dir
    if args.model:
        cfg.model = args.model
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg.validate()


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_preprocess(args, cfg):
    out = _out_dir(args)
    cache = args.cache or str(out / f"{cfg.dataset}.mgrd")
    Path(cache).unlink(missing_ok=True)
    prep = prepare(cfg, cache)
    stats = prep.stats.as_dict(cfg.block_percentile)
    stats["block_rows"] = list(prep.norm.block_rows)
    stats["grid_shape"] = list(prep.grids.shape[1:])
    stats["graphs"] = int(len(prep.labels))
    (out / "preprocess.json").write_text(dump_json(stats), encoding="utf-8")
    (out / "config.cfg").write_text(cfg.to_text(), encoding="utf-8")
    print(dump_json(stats), end="")
    return EXIT_OK


def cmd_train(args, cfg):
    out = _out_dir(args)
    prep = prepare(cfg, args.cache)
    model = build_model(model_config(cfg, prep))
    split = split_dataset(prep.labels, cfg.seed, cfg.folds, cfg.test_fraction)
    tr = sorted(i for f in split.folds for i in f)
    result = train(model, prep.grids[tr], prep.labels[tr], epochs=cfg.epochs,
                   batch_size=cfg.batch_size, learning_rate=cfg.learning_rate,
                   momentum=cfg.momentum, rng=fold_rng(cfg.seed, 0))
    acc, confusion = evaluate(model, result.params, prep.grids[split.test],
                              prep.labels[split.test])
    save_checkpoint(out / "model.mprm", result.params)
    (out / "config.cfg").write_text(cfg.to_text(), encoding="utf-8")
    summary = {"test_accuracy": acc, "confusion": confusion.tolist(),
               "epoch_losses": result.epoch_losses}
    (out / "train.json").write_text(dump_json(summary), encoding="utf-8")
    print(f"test accuracy {acc:.6f} on {len(split.test)} graphs")
    return EXIT_OK


def cmd_eval(args, cfg):
    prep = prepare(cfg, args.cache)
    model = build_model(model_config(cfg, prep))
    params = load_checkpoint(args.checkpoint)
    try:
        model.check_params(params)
    except ShapeError as exc:
        raise ConfigurationError(f"checkpoint does not match the configuration: {exc}") from exc
    split = split_dataset(prep.labels, cfg.seed, cfg.folds, cfg.test_fraction)
    acc, confusion = evaluate(model, params, prep.grids[split.test], prep.labels[split.test])
    print(dump_json({"test_accuracy": acc, "confusion": confusion.tolist(),
                     "test_size": len(split.test)}), end="")
    return EXIT_OK


def cmd_cv(args, cfg):
    out = _out_dir(args)
    report = run_cv(cfg, out, args.cache)
    print(f"{cfg.dataset} {cfg.model}: {report.mean:.4f} +/- {report.std:.4f} "
          f"(test {report.test_accuracy:.4f}); wrote {out / 'report.json'}")
    return EXIT_OK


def tiny_gradcheck(seed: int, h: float = 1e-5) -> dict:
    """Gradient check of both models at N=4, w=(3,3,3), d=3, K1=4, K2=3, S=2, C=2."""
    results = {}
    for kind in ("mgcnn", "magcnn"):
        cfg = ModelConfig(kind, N=4, rows=9, d=3, C=2, K1=4, K2=3, F1=8, F2=6, S=2)
        model = build_model(cfg)
        rng = np.random.default_rng(seed)
        params = model.init_params(rng)
        for name in params:
            if name.endswith("bias"):
                params[name] = rng.normal(0.0, 0.1, params[name].shape)
        grids = rng.random((6, cfg.rows, 3 * cfg.N, cfg.d))
        labels = np.arange(6) % 2
        masks = model.sample_masks(6, rng)
        report = finite_difference_check(model, params, grids, labels, h=h, masks=masks, rng=rng)
        results[kind] = report
    return results


def cmd_gradcheck(args, cfg):
    results = tiny_gradcheck(args.seed if args.seed is not None else 0)
    worst = 0.0
    for kind, report in results.items():
        for name, err in report.per_tensor.items():
            print(f"{kind:7s} {name:14s} max relative error {err:.3e}")
        worst = max(worst, report.max_error)
    print(f"max relative error {worst:.3e}")
    return EXIT_OK if worst <= GRADCHECK_TOL else EXIT_NUMERIC


def cmd_inspect(args, cfg):
    fds = load_featurized(cfg)
    norm = resolve_blocks(cfg, fds)
    if not 0 <= args.graph_index < len(fds.base):
        raise ArgumentError(f"graph index {args.graph_index} outside 0..{len(fds.base) - 1}")
    g = fds.base.graphs[args.graph_index]
    mats = central_matrices(g, norm)
    grid = assemble_grid(mats, fds.node_features[args.graph_index], norm)
    mcfg = ModelConfig(kind="magcnn", N=cfg.N, rows=norm.rows, d=fds.feature_dim,
                       C=fds.base.class_count, K1=cfg.K1, K2=cfg.K2, S=cfg.S,
                       leaky_slope=cfg.leaky_slope)
    model = build_model(mcfg)
    params = (load_checkpoint(args.checkpoint) if args.checkpoint
              else model.init_params(np.random.default_rng(cfg.seed)))
    model.check_params(params)
    alpha = model.attention(params, grid)[0]
    dump = {
        "graph_index": args.graph_index,
        "label": fds.base.labels[args.graph_index],
        "block_rows": list(norm.block_rows),
        "central_matrices": [
            {"center": m.center, "nodes": m.nodes.tolist(), "labels": m.labels.tolist(),
             "motif_counts": list(m.motif_counts)} for m in mats],
        "attention": alpha.tolist(),
    }
    text = dump_json(dump)
    if args.out:
        (_out_dir(args) / f"inspect_{args.graph_index}.json").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


COMMANDS = {
    "preprocess": cmd_preprocess, "train": cmd_train, "eval": cmd_eval, "cv": cmd_cv,
    "gradcheck": cmd_gradcheck, "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in DATA_COMMANDS and not args.data_dir:
            raise UsageError(f"{args.command} requires --data-dir or ${DATA_DIR_ENV}")
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigurationError, ArgumentError) as exc:
        parser.print_usage(sys.stderr)
        print(f"magcnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"magcnn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"magcnn: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
