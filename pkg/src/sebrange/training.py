"""Training objective, loop, data splits and MAE evaluation.

Orders are bucketed by their swap timestep; each bucket (chunked to the
batch-size cap) contributes one mean-squared-error term plus, when enabled,
one structural-similarity term to the objective. The loop runs adaptive-
moment minibatch descent over the chunks, records train/validation loss per
epoch, and returns the parameters of the best-validation-MAE epoch.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ConfigError, ShapeError
from .optim import AdamState, optimizer_step
from .rng import Rng, derive_seed
from .s3im import S3imConfig, s3im_regularizer
from .tensor import Tensor, add, as_tensor, mean, mul, sub

_SPLIT_KEY = 101
_SHUFFLE_KEY = 102


@dataclass
class Prediction:
    """Model outputs for the orders swapped at one timestep."""

    t: int
    values: object  # Tensor during training, ndarray for reporting
    order_ids: list = field(default_factory=list)


@dataclass
class LabelBatch:
    """Ground-truth ranges (km) for the orders swapped at one timestep."""

    t: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0):
            raise ConfigError("labels must be nonnegative")


@dataclass
class TrainConfig:
    epochs: int = 25
    lr: float = 3e-3
    batch_size: int = 64
    train_frac: float = 0.7
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 42
    s3im_enabled: bool = False
    s3im_weight: float = 1.0
    s3im_alpha: float = 1.0
    s3im_beta: float = 1.0
    s3im_gamma: float = 1.0
    s3im_k1: float = 0.01
    s3im_k2: float = 0.03
    s3im_L: object = "auto"
    s3im_c3: object = "auto"
    s3im_sign: str = "one_minus"
    s3im_c1_mode: str = "squared"

    def validate(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must be positive and sum to 1, got {fracs}")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ConfigError("epochs and batch size must be positive")
        if self.lr < 0:
            raise ConfigError(f"learning rate must be nonnegative, got {self.lr}")
        if self.s3im_weight < 0:
            raise ConfigError("regularizer weight must be nonnegative")

    def make_s3im(self, train_labels) -> S3imConfig:
        """Resolve the similarity config; L='auto' uses the label range."""
        if self.s3im_L == "auto":
            labels = np.asarray(train_labels, dtype=np.float64)
            dynamic_range = max(float(labels.max() - labels.min()), 1e-6)
        else:
            dynamic_range = float(self.s3im_L)
        c3 = None if self.s3im_c3 == "auto" else float(self.s3im_c3)
        return S3imConfig(
            alpha=self.s3im_alpha, beta=self.s3im_beta, gamma=self.s3im_gamma,
            k1=self.s3im_k1, k2=self.s3im_k2, dynamic_range=dynamic_range,
            c3_override=c3, sign=self.s3im_sign, c1_mode=self.s3im_c1_mode,
        )


def objective(preds, labels, cfg: TrainConfig, s3im_cfg: S3imConfig = None):
    """Sum over timesteps of mean squared error plus the weighted
    similarity regularizer (skipped for single-element batches).

    Returns a scalar Tensor; differentiable when predictions are Tensors.
    """
    pred_ts = sorted(p.t for p in preds)
    label_ts = sorted(l.t for l in labels)
    if pred_ts != label_ts:
        raise AlignmentError(
            f"prediction timesteps {pred_ts} do not match labels {label_ts}"
        )
    if cfg.s3im_enabled and s3im_cfg is None:
        all_labels = np.concatenate([l.values for l in labels])
        s3im_cfg = cfg.make_s3im(all_labels)
    by_t = {l.t: l for l in labels}
    total = None
    for p in sorted(preds, key=lambda x: x.t):
        lab = by_t[p.t]
        values = as_tensor(p.values)
        if values.size != lab.values.size:
            raise ShapeError(
                f"t={p.t}: {values.size} predictions vs {lab.values.size} labels"
            )
        diff = sub(values, lab.values)
        term = mean(mul(diff, diff))
        if cfg.s3im_enabled and lab.values.size >= 2:
            reg = s3im_regularizer(values, lab.values, s3im_cfg)
            term = add(term, mul(reg, cfg.s3im_weight))
        total = term if total is None else add(total, term)
    if total is None:
        raise ConfigError("objective needs at least one timestep batch")
    return total


def split_orders(orders, cfg: TrainConfig):
    """Deterministic train/val/test split, identical for every model."""
    rng = Rng(derive_seed(cfg.seed, _SPLIT_KEY))
    perm = rng.permutation(len(orders))
    n_train = int(round(cfg.train_frac * len(orders)))
    n_val = int(round(cfg.val_frac * len(orders)))
    train = [orders[i] for i in perm[:n_train]]
    val = [orders[i] for i in perm[n_train:n_train + n_val]]
    test = [orders[i] for i in perm[n_train + n_val:]]
    return train, val, test


def bucket_by_t(orders):
    """Orders grouped by swap timestep, buckets and members in stable order."""
    buckets = {}
    for o in sorted(orders, key=lambda o: o.order_id):
        buckets.setdefault(o.t, []).append(o)
    return [buckets[t] for t in sorted(buckets)]


def make_chunks(orders, batch_size):
    chunks = []
    for bucket in bucket_by_t(orders):
        for i in range(0, len(bucket), batch_size):
            chunks.append(bucket[i:i + batch_size])
    return chunks


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_mae: float


@dataclass
class TrainResult:
    history: list
    best_epoch: int
    splits: tuple

    @property
    def best(self) -> EpochStats:
        return self.history[self.best_epoch - 1]


@dataclass
class MaeResult:
    mean: float
    std: float
    residuals: np.ndarray


def _chunk_loss(model, chunk, graph, cfg, s3im_cfg) -> Tensor:
    preds = model.forward_batch(chunk, graph)
    y = np.array([o.label for o in chunk])
    diff = sub(preds, y)
    term = mean(mul(diff, diff))
    if cfg.s3im_enabled and len(chunk) >= 2:
        term = add(term, mul(s3im_regularizer(preds, y, s3im_cfg), cfg.s3im_weight))
    return term


def _collect_predictions(model, orders, graph):
    """Per-timestep Prediction/LabelBatch pairs plus flat arrays."""
    preds, labels = [], []
    flat_pred, flat_label = [], []
    for bucket in bucket_by_t(orders):
        values = model.predict(bucket, graph)
        preds.append(Prediction(bucket[0].t, values,
                                [o.order_id for o in bucket]))
        y = np.array([o.label for o in bucket])
        labels.append(LabelBatch(bucket[0].t, y))
        flat_pred.append(values)
        flat_label.append(y)
    return preds, labels, np.concatenate(flat_pred), np.concatenate(flat_label)


def train(model, orders, graph, cfg: TrainConfig) -> TrainResult:
    """Minibatch descent on the objective; keeps the best-validation epoch.

    With lr == 0 the loop runs without applying updates, leaving the
    weights bit-identical to initialization (optimizer smoke contract).
    """
    cfg.validate()
    if not orders:
        raise ConfigError("cannot train on an empty dataset")
    train_split, val_split, test_split = split_orders(orders, cfg)
    if not train_split or not val_split:
        raise ConfigError(
            f"split produced empty train/val sets from {len(orders)} orders"
        )
    model.prepare(train_split)
    s3im_cfg = None
    if cfg.s3im_enabled:
        s3im_cfg = cfg.make_s3im(np.array([o.label for o in train_split]))
    params = model.trainable_params()
    adam = AdamState(params)
    chunks = make_chunks(train_split, cfg.batch_size)
    shuffle = Rng(derive_seed(cfg.seed, _SHUFFLE_KEY))

    history = []
    best_epoch = 0
    best_mae = np.inf
    best_values = None
    for epoch in range(1, cfg.epochs + 1):
        epoch_loss = 0.0
        for ci in shuffle.permutation(len(chunks)):
            chunk = chunks[int(ci)]
            for p in params:
                p.zero_grad()
            loss = _chunk_loss(model, chunk, graph, cfg, s3im_cfg)
            loss.backward()
            if cfg.lr > 0:
                optimizer_step(params, adam, cfg.lr)
            epoch_loss += loss.item()
        preds, labels, flat_pred, flat_label = _collect_predictions(
            model, val_split, graph)
        val_loss = objective(preds, labels, cfg, s3im_cfg).item()
        val_mae = float(np.abs(flat_pred - flat_label).mean())
        history.append(EpochStats(epoch, epoch_loss, val_loss, val_mae))
        if val_mae < best_mae:
            best_mae = val_mae
            best_epoch = epoch
            best_values = [p.value.copy() for p in model.params()]
    for p, v in zip(model.params(), best_values):
        p.value[...] = v
    return TrainResult(history, best_epoch, (train_split, val_split, test_split))


def evaluate_mae(model, orders, graph) -> MaeResult:
    """Mean absolute error in km plus the per-sample residuals."""
    if not orders:
        raise ConfigError("cannot evaluate on an empty set")
    position = {o.order_id: i for i, o in enumerate(orders)}
    residuals = np.empty(len(orders))
    for bucket in bucket_by_t(orders):
        values = model.predict(bucket, graph)
        for o, v in zip(bucket, values):
            residuals[position[o.order_id]] = v - o.label
    absolute = np.abs(residuals)
    return MaeResult(float(absolute.mean()), float(absolute.std(ddof=0)),
                     residuals)
