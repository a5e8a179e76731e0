"""Benchmark harness: trains every retained model on an identical split
and reports test MAE plus relative improvement over the vanilla
transformer baseline.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .model import LinearBaseline, MlpBaseline, ModelConfig, SebTransformer
from .rng import Rng, derive_seed
from .training import (
    EpochStats,
    TrainConfig,
    TrainResult,
    evaluate_mae,
    split_orders,
    train,
)

BENCH_MODELS = ("lr", "mlp", "transformer", "seb", "seb-s3im")
_MODEL_RNG_KEYS = {"lr": 11, "mlp": 12, "transformer": 13, "seb": 14, "seb-s3im": 15}


def relative_improvement(base_mae: float, new_mae: float) -> float:
    """(base - new) / base, as a percentage."""
    return (base_mae - new_mae) / base_mae * 100.0


def build_model(kind: str, mcfg: ModelConfig, n_users: int, n_batteries: int,
                seed: int):
    if kind not in BENCH_MODELS:
        raise ConfigError(f"unknown model {kind!r}, expected one of {BENCH_MODELS}")
    rng = Rng(derive_seed(seed, _MODEL_RNG_KEYS[kind]))
    if kind == "lr":
        return LinearBaseline(mcfg)
    if kind == "mlp":
        return MlpBaseline(mcfg, rng)
    cfg = replace(mcfg, use_graph=(kind != "transformer"))
    return SebTransformer(cfg, n_users, n_batteries, rng)


def _fit_linear(model, orders, cfg: TrainConfig) -> TrainResult:
    """Closed-form fit wrapped in the TrainResult shape (one pseudo-epoch)."""
    cfg.validate()
    splits = split_orders(orders, cfg)
    train_split, val_split, _ = splits
    if not train_split or not val_split:
        raise ConfigError("split produced empty train/val sets")
    model.fit(train_split)

    def mse_mae(split):
        pred = model.predict(split)
        y = np.array([o.label for o in split])
        return float(((pred - y) ** 2).mean()), float(np.abs(pred - y).mean())

    train_mse, _ = mse_mae(train_split)
    val_mse, val_mae = mse_mae(val_split)
    return TrainResult([EpochStats(1, train_mse, val_mse, val_mae)], 1, splits)


def train_model(kind: str, model, orders, graph, cfg: TrainConfig) -> TrainResult:
    if kind == "lr":
        return _fit_linear(model, orders, cfg)
    model_cfg = replace(cfg, s3im_enabled=(kind == "seb-s3im"))
    return train(model, orders, graph, model_cfg)


@dataclass
class BenchRow:
    model: str
    mae_mean: float
    mae_std: float
    improvement_vs_transformer_pct: float = float("nan")


@dataclass
class BenchmarkResult:
    rows: list
    histories: dict
    improvement_pct: float

    def row(self, kind: str) -> BenchRow:
        for r in self.rows:
            if r.model == kind:
                return r
        raise KeyError(kind)


def run_benchmark(orders, graph, mcfg: ModelConfig, cfg: TrainConfig,
                  models=BENCH_MODELS) -> BenchmarkResult:
    """Train and evaluate every model on the same train/val/test split."""
    rows = []
    histories = {}
    for kind in models:
        model = build_model(kind, mcfg, graph.n_users, graph.n_batteries,
                            cfg.seed)
        result = train_model(kind, model, orders, graph, cfg)
        test_split = result.splits[2]
        mae = evaluate_mae(model, test_split, graph)
        rows.append(BenchRow(kind, mae.mean, mae.std))
        histories[kind] = result.history
    by_kind = {r.model: r for r in rows}
    improvement = float("nan")
    if "transformer" in by_kind:
        base = by_kind["transformer"].mae_mean
        for r in rows:
            r.improvement_vs_transformer_pct = relative_improvement(base, r.mae_mean)
        if "seb-s3im" in by_kind:
            improvement = by_kind["seb-s3im"].improvement_vs_transformer_pct
    return BenchmarkResult(rows, histories, improvement)


def metrics_csv_text(result: BenchmarkResult) -> str:
    lines = ["model,mae_mean,mae_std,improvement_vs_transformer_pct"]
    for r in result.rows:
        lines.append(
            f"{r.model},{r.mae_mean!r},{r.mae_std!r},"
            f"{r.improvement_vs_transformer_pct!r}"
        )
    return "\n".join(lines) + "\n"


def loss_csv_text(history) -> str:
    lines = ["epoch,train_loss,val_loss"]
    for h in history:
        lines.append(f"{h.epoch},{h.train_loss!r},{h.val_loss!r}")
    return "\n".join(lines) + "\n"
