"""Splits, full-batch training with early stopping, and repeated-run statistics."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import CapacityError, DimensionError, TrainingError
from .graph import Dataset
from .models import Model, ModelConfig
from .spectral import SampledFilter, sample_filter_response

log = logging.getLogger(__name__)

REGIMES = ("standard", "sparse", "full")


@dataclass(frozen=True, eq=False)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        parts = [np.asarray(p, dtype=np.int64) for p in (self.train, self.val, self.test)]
        for name, p in zip(("train", "val", "test"), parts):
            object.__setattr__(self, name, p)
        joined = np.concatenate(parts)
        if len(np.unique(joined)) != len(joined):
            raise ValueError("split parts overlap")

    def validate(self, n: int):
        joined = np.concatenate([self.train, self.val, self.test])
        if joined.size and (joined.min() < 0 or joined.max() >= n):
            raise ValueError(f"split indices must lie in [0, {n})")

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("train", "val", "test")}


def make_split(dataset: Dataset, regime: str, seed: int = 0, *, per_class: int = 20,
               num_val: int = 500, num_test: int = 1000) -> Split:
    """Random split.

    ``standard``: `per_class` training nodes per class, then `num_val` and
    `num_test` from the rest. ``sparse``: 2.5% / 2.5% / 95%. ``full``:
    60% / 20% / 20%.
    """
    rng = np.random.default_rng(seed)
    n, y = dataset.n, dataset.labels
    if regime == "standard":
        train = []
        for c in range(dataset.num_classes):
            members = np.flatnonzero(y == c)
            if len(members) < per_class:
                raise CapacityError(f"class {c} has {len(members)} nodes, need {per_class}")
            train.append(rng.permutation(members)[:per_class])
        train = np.sort(np.concatenate(train))
        rest = rng.permutation(np.setdiff1d(np.arange(n), train))
        if len(rest) < num_val + num_test:
            raise CapacityError(f"{len(rest)} nodes left after training, need {num_val + num_test}")
        return Split(train, np.sort(rest[:num_val]), np.sort(rest[num_val:num_val + num_test]))
    fractions = {"sparse": (0.025, 0.025), "full": (0.6, 0.2)}
    if regime not in fractions:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    f_train, f_val = fractions[regime]
    n_train, n_val = int(round(f_train * n)), int(round(f_val * n))
    if n_train < 1 or n_val < 1 or n - n_train - n_val < 1:
        raise CapacityError(f"{regime} split of {n} nodes leaves an empty part")
    perm = rng.permutation(n)
    return Split(np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
                 np.sort(perm[n_train + n_val:]))


def accuracy(logits: np.ndarray, labels: np.ndarray, idx: np.ndarray) -> float:
    """Micro-F1, which for single-label classification is plain accuracy."""
    idx = np.asarray(idx)
    if idx.size == 0:
        raise DimensionError("accuracy over an empty index set")
    return float(np.mean(np.argmax(logits[idx], axis=1) == labels[idx]))


def evaluate(dataset: Dataset, split: Split, model: Model) -> dict[str, float]:
    logits = model.forward(training=False).values
    return {part: accuracy(logits, dataset.labels, getattr(split, part))
            for part in ("train", "val", "test")}


@dataclass
class TrainReport:
    train_loss: list
    val_acc: list
    val_loss: list
    best_epoch: int
    best_val_acc: float
    test_acc: float
    epochs_run: int
    seconds: float
    filter: SampledFilter | None = None
    config: dict = field(default_factory=dict)
    state: dict = field(default_factory=dict, repr=False)

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "config": self.config,
            "best_epoch": self.best_epoch,
            "best_val_acc": self.best_val_acc,
            "test_acc": self.test_acc,
            "epochs_run": self.epochs_run,
            "train_loss": self.train_loss,
            "val_acc": self.val_acc,
            "val_loss": self.val_loss,
            "filter": None if self.filter is None else {
                "lambda": self.filter.lambdas.tolist(),
                "response": self.filter.responses.tolist(),
            },
        }
        if include_timing:
            out["seconds"] = self.seconds
        return out


def _loss(model: Model, labels, idx, training, rng):
    return ad.nll_loss(ad.log_softmax(model.forward(training, rng)), labels, idx)


def train(dataset: Dataset, split: Split, config: ModelConfig, filter_grid: int = 101) -> TrainReport:
    """Full-batch Adam training with early stopping on validation accuracy.

    An epoch improves on the best so far if its validation accuracy is
    higher, or equal with a lower validation loss. Training stops once
    `patience` consecutive epochs fail to improve; the reported test
    accuracy is that of the best epoch.
    """
    if len(split.train) == 0:
        raise TrainingError("empty training set")
    split.validate(dataset.n)
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    model = Model(config, dataset, rng)
    groups = [{"params": model.linear_params(), "lr": config.lr_linear, "weight_decay": config.wd_linear}]
    if model.prop_params():
        groups.append({"params": model.prop_params(), "lr": config.lr_prop, "weight_decay": config.wd_prop})
    opt = ad.Adam(groups)
    y = dataset.labels
    train_loss, val_acc, val_loss = [], [], []
    best = (-1.0, math.inf)
    best_epoch, best_test, best_state = -1, 0.0, model.state()
    stale = 0
    for epoch in range(config.epochs):
        opt.zero_grad()
        loss = _loss(model, y, split.train, True, rng)
        lv = float(loss.values)
        if not math.isfinite(lv):
            raise TrainingError(f"loss became non-finite at epoch {epoch}")
        ad.backward(loss)
        opt.step()
        train_loss.append(lv)

        logits = model.forward(training=False)
        vl = float(ad.nll_loss(ad.log_softmax(logits), y, split.val).values) if len(split.val) else 0.0
        va = accuracy(logits.values, y, split.val) if len(split.val) else 0.0
        val_acc.append(va)
        val_loss.append(vl)
        if va > best[0] or (va == best[0] and vl < best[1]):
            best = (va, vl)
            best_epoch = epoch
            best_test = accuracy(logits.values, y, split.test) if len(split.test) else 0.0
            best_state = model.state()
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break
    model.load_state(best_state)
    filt = model.filter()
    sampled = None if filt is None else sample_filter_response(filt, filter_grid)
    return TrainReport(
        train_loss=train_loss,
        val_acc=val_acc,
        val_loss=val_loss,
        best_epoch=best_epoch,
        best_val_acc=best[0],
        test_acc=best_test,
        epochs_run=len(train_loss),
        seconds=time.perf_counter() - start,
        filter=sampled,
        config=config.to_dict(),
        state=best_state,
    )


@dataclass
class RepeatResult:
    accuracies: list
    mean: float
    ci95: float
    reports: list

    def to_dict(self) -> dict:
        return {"mean": self.mean, "ci95": self.ci95, "accuracies": self.accuracies}


def confidence_interval(values) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width (sample std / sqrt(runs))."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(1.96 * v.std(ddof=1) / math.sqrt(v.size))


def _one_run(args):
    dataset, regime, config, seed = args
    split = make_split(dataset, regime, seed)
    return train(dataset, split, config.replace(seed=seed))


def repeat_runs(dataset: Dataset, regime: str, config: ModelConfig, runs: int = 10,
                jobs: int = 1) -> RepeatResult:
    """Train `runs` times with seeds ``config.seed + r``; fresh split and init per run.

    Results are collected in seed order regardless of `jobs`.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    tasks = [(dataset, regime, config, config.seed + r) for r in range(runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_one_run, tasks))
    else:
        reports = [_one_run(t) for t in tasks]
    accs = [r.test_acc for r in reports]
    mean, ci = confidence_interval(accs)
    for seed, r in zip(range(config.seed, config.seed + runs), reports):
        log.info("seed %d: test accuracy %.4f (best epoch %d)", seed, r.test_acc, r.best_epoch)
    return RepeatResult(accs, mean, ci, reports)
