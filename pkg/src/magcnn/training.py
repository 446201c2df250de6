"""Splitting, training, evaluation and the cross-validation driver."""

from __future__ import annotations

import csv
import logging
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .checkpoint import save_checkpoint
from .config import RunConfig
from .datasets import FeaturizedDataset, assign_node_features, load_tu_dataset
from .errors import ArgumentError, NumericError
from .grid import (NormalizationParams, PreprocessStats, motif_count_table, preprocess,
                   read_grid_cache, suggest_block_rows, write_grid_cache)
from .models import ModelConfig, build_model
from .optim import SGDMomentum
from .report import dump_json

log = logging.getLogger(__name__)


@dataclass
class Split:
    test: List[int]
    folds: List[List[int]]

    def train_indices(self, k: int) -> List[int]:
        return sorted(i for j, f in enumerate(self.folds) if j != k for i in f)


def split_dataset(labels: Sequence[int], seed: int, folds: int = 10,
                  test_fraction: float = 0.1) -> Split:
    """Stratified hold-out test split plus ``folds`` stratified CV folds.

    The test set takes ``floor(test_fraction * n)`` graphs, shared out over the
    classes by largest remainder with at least one per class where possible.
    The rest is dealt round-robin, class by class, into the folds, so both fold
    sizes and per-class fold counts differ by at most one.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if n < 2 * folds:
        raise ArgumentError(f"need at least {2 * folds} graphs to split, got {n}")
    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    pools = {c: list(rng.permutation(np.flatnonzero(labels == c))) for c in classes}
    eligible = [c for c in classes if len(pools[c]) >= 2]
    for c in classes:
        if len(pools[c]) < 2:
            warnings.warn(f"class {c} has {len(pools[c])} graph(s); kept out of the test set")

    n_test = int(np.floor(test_fraction * n))
    m = sum(len(pools[c]) for c in eligible)
    quota = {c: n_test * len(pools[c]) / m for c in eligible} if m else {}
    take = {c: int(np.floor(q)) for c, q in quota.items()}
    for c in sorted(eligible, key=lambda c: (-(quota[c] - take[c]), c)):
        if sum(take.values()) >= n_test:
            break
        take[c] += 1
    for c in eligible:
        if take[c] == 0 and n_test >= len(eligible):
            donor = max(eligible, key=lambda d: (take[d], -d))
            take[donor] -= 1
            take[c] = 1
    test = sorted(int(i) for c in eligible for i in pools[c][:take[c]])
    rest = [int(i) for c in classes for i in pools[c][take.get(c, 0):]]
    fold_lists: List[List[int]] = [[] for _ in range(folds)]
    for pos, i in enumerate(rest):
        fold_lists[pos % folds].append(i)
    return Split(test, [sorted(f) for f in fold_lists])


@dataclass
class TrainResult:
    params: Dict[str, np.ndarray]
    epoch_losses: List[float] = field(default_factory=list)


def train(model, grids: np.ndarray, labels: Sequence[int], *, epochs: int, batch_size: int,
          learning_rate: float, momentum: float, rng: np.random.Generator,
          params: Optional[Dict[str, np.ndarray]] = None) -> TrainResult:
    """Mini-batch momentum SGD; everything random comes from ``rng``."""
    grids = np.asarray(grids, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if params is None:
        params = model.init_params(rng)
    opt = SGDMomentum(learning_rate, momentum)
    losses = []
    n = len(labels)
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, batch_size)):
            idx = order[start:start + batch_size]
            masks = model.sample_masks(len(idx), rng)
            try:
                loss, grads = model.loss_and_grads(params, grids[idx], labels[idx], masks)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch + 1}, batch {b + 1}: {exc}") from exc
            opt.step(params, grads)
            total += loss * len(idx)
        losses.append(total / n)
        log.debug("epoch %d loss %.6f", epoch + 1, losses[-1])
    return TrainResult(params, losses)


def evaluate(model, params, grids: np.ndarray, labels: Sequence[int]) -> Tuple[float, np.ndarray]:
    """Accuracy and confusion matrix (rows = true class) with dropout off."""
    labels = np.asarray(labels, dtype=np.int64)
    C = model.config.C
    confusion = np.zeros((C, C), dtype=np.int64)
    if len(labels) == 0:
        return 0.0, confusion
    pred = model.predict(params, np.asarray(grids))
    np.add.at(confusion, (labels, pred), 1)
    return float(np.mean(pred == labels)), confusion


# -- dataset preparation -----------------------------------------------------

def load_featurized(cfg: RunConfig) -> FeaturizedDataset:
    ds = load_tu_dataset(cfg.data_dir, cfg.dataset, bond_multiplicity=cfg.bond_table(),
                         file_prefix=cfg.file_prefix or None)
    return assign_node_features(ds, cfg.features)


def resolve_blocks(cfg: RunConfig, fds: FeaturizedDataset) -> NormalizationParams:
    if cfg.auto_blocks:
        counts = motif_count_table(fds.base.graphs, cfg.N, cfg.K)
        cfg.w1, cfg.w2, cfg.w3 = suggest_block_rows(counts, cfg.block_percentile)
    return NormalizationParams(cfg.N, cfg.K, cfg.w1, cfg.w2, cfg.w3)


@dataclass
class Prepared:
    grids: np.ndarray
    labels: np.ndarray
    feature_dim: int
    class_count: int
    norm: NormalizationParams
    stats: Optional[PreprocessStats]


def prepare(cfg: RunConfig, cache: Optional[str] = None) -> Prepared:
    """Load, featurize and normalize a dataset, reusing ``cache`` if it exists."""
    fds = load_featurized(cfg)
    norm = resolve_blocks(cfg, fds)
    stats = None
    if cache and Path(cache).is_file():
        grids, labels = read_grid_cache(cache)
        grids = np.stack(grids)
        expected = (len(fds.base), norm.rows, norm.cols, fds.feature_dim)
        if grids.shape != expected:
            raise ArgumentError(f"cache {cache} holds {grids.shape}, expected {expected}")
    else:
        grid_list, stats = preprocess(fds.base.graphs, fds.node_features, norm)
        grids = np.stack(grid_list)
        labels = list(fds.base.labels)
        if cache:
            write_grid_cache(cache, grid_list, labels)
    return Prepared(grids, np.asarray(labels, dtype=np.int64), fds.feature_dim,
                    fds.base.class_count, norm, stats)


def model_config(cfg: RunConfig, prep: Prepared) -> ModelConfig:
    return ModelConfig(kind=cfg.model, N=cfg.N, rows=prep.norm.rows, d=prep.feature_dim,
                       C=prep.class_count, K1=cfg.K1, K2=cfg.K2, F1=cfg.F1, F2=cfg.F2,
                       S=cfg.S, dropout=cfg.dropout, leaky_slope=cfg.leaky_slope,
                       weight_decay=cfg.weight_decay)


def fold_rng(seed: int, fold: int) -> np.random.Generator:
    return np.random.default_rng(seed ^ fold)


def worker_count(jobs: int) -> int:
    cap = os.environ.get("MGCNN_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, min(n, jobs))


# -- cross-validation --------------------------------------------------------

@dataclass
class CvReport:
    dataset: str
    model: str
    seed: int
    fold_accuracies: List[float]
    test_accuracy: float
    best_fold: int
    config: dict
    split_sizes: dict
    final_losses: List[float]
    preprocess: Optional[dict] = None
    fold_seconds: List[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies))  # population

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": self.model,
            "seed": self.seed,
            "fold_accuracies": list(self.fold_accuracies),
            "mean_accuracy": self.mean,
            "std_accuracy": self.std,
            "test_accuracy": self.test_accuracy,
            "best_fold": self.best_fold,
            "config": self.config,
            "split_sizes": self.split_sizes,
            "final_epoch_losses": list(self.final_losses),
            "preprocess": self.preprocess,
        }


def run_cv(cfg: RunConfig, out_dir=None, cache: Optional[str] = None) -> CvReport:
    """Hold out a test split, run k-fold CV on the rest, and report both.

    The test accuracy is that of the model from the best validation fold
    (earliest fold on ties). With ``out_dir`` set, writes ``report.json``,
    ``folds.csv``, ``best.mprm`` and ``timing.json``.
    """
    cfg.validate()
    prep = prepare(cfg, cache)
    mcfg = model_config(cfg, prep)
    model = build_model(mcfg)
    split = split_dataset(prep.labels, cfg.seed, cfg.folds, cfg.test_fraction)

    def run_fold(k: int):
        start = time.perf_counter()
        tr = split.train_indices(k)
        result = train(model, prep.grids[tr], prep.labels[tr], epochs=cfg.epochs,
                       batch_size=cfg.batch_size, learning_rate=cfg.learning_rate,
                       momentum=cfg.momentum, rng=fold_rng(cfg.seed, k))
        acc, _ = evaluate(model, result.params, prep.grids[split.folds[k]],
                          prep.labels[split.folds[k]])
        log.info("fold %d: validation accuracy %.4f", k + 1, acc)
        return result, acc, time.perf_counter() - start

    with ThreadPoolExecutor(max_workers=worker_count(cfg.folds)) as pool:
        outcomes = list(pool.map(run_fold, range(cfg.folds)))

    accs = [acc for _, acc, _ in outcomes]
    best = int(np.argmax(accs))
    best_params = outcomes[best][0].params
    test_acc, _ = evaluate(model, best_params, prep.grids[split.test], prep.labels[split.test])
    report = CvReport(
        dataset=cfg.dataset, model=cfg.model, seed=cfg.seed, fold_accuracies=accs,
        test_accuracy=test_acc, best_fold=best, config=cfg.echo(),
        split_sizes={"test": len(split.test), "folds": [len(f) for f in split.folds]},
        final_losses=[r.epoch_losses[-1] if r.epoch_losses else float("nan")
                      for r, _, _ in outcomes],
        preprocess=prep.stats.as_dict(cfg.block_percentile) if prep.stats else None,
        fold_seconds=[t for _, _, t in outcomes],
    )
    if out_dir is not None:
        write_cv_outputs(report, best_params, out_dir)
    return report


def write_cv_outputs(report: CvReport, params, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dump_json(report.to_dict()), encoding="utf-8")
    with open(out / "folds.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold", "accuracy"])
        for k, acc in enumerate(report.fold_accuracies, start=1):
            writer.writerow([k, f"{acc:.6f}"])
    save_checkpoint(out / "best.mprm", params)
    (out / "timing.json").write_text(
        dump_json({"fold_seconds": report.fold_seconds,
                   "total_seconds": float(sum(report.fold_seconds))}), encoding="utf-8")
