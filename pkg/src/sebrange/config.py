"""Flat dotted-key run configuration: file + flag overrides, strict keys.

The config file format is one ``key=value`` per line; ``#`` starts a
comment. Command-line ``--set key=value`` overrides file values; dedicated
flags (``--seed``, ``--orders``, ...) override both. Unknown keys are
rejected. The fully resolved configuration serializes to a canonical sorted
text block that is echoed into every output directory as ``config.resolved``
and hashed into checkpoints.
"""

import hashlib
import os

from .datagen import GeneratorConfig
from .errors import ConfigError
from .model import ModelConfig
from .training import TrainConfig

DEFAULTS = {
    "seed": 42,
    "gen.orders": 2000,
    "gen.users": 1200,
    "gen.batteries": 400,
    "gen.stations": 25,
    "gen.horizon": 50,
    "gen.ride_mean": 275.0,
    "gen.ride_sd": 40.0,
    "gen.noise": 0.02,
    "train.epochs": 25,
    "train.lr": 3e-3,
    "train.batch": 64,
    "train.train_frac": 0.7,
    "train.val_frac": 0.15,
    "train.test_frac": 0.15,
    "train.s3im_weight": 1.0,
    "model.embed_dim": 16,
    "model.dqk": 16,
    "model.dv": 16,
    "model.ffn_dim": 32,
    "model.node_dim": 8,
    "model.gnn_layers": 2,
    "model.gnn_hidden": 8,
    "model.window": 0,
    "model.mlp_hidden": 32,
    "model.baseline_hidden": 64,
    "model.residual": True,
    "model.layer_norm": True,
    "s3im.alpha": 1.0,
    "s3im.beta": 1.0,
    "s3im.gamma": 1.0,
    "s3im.k1": 0.01,
    "s3im.k2": 0.03,
    "s3im.L": "auto",
    "s3im.c3": "auto",
    "s3im.sign": "one_minus",
    "s3im.c1_mode": "squared",
}

# Keys that accept either "auto" or a float.
_AUTO_FLOAT_KEYS = {"s3im.L", "s3im.c3"}
_CHOICE_KEYS = {
    "s3im.sign": ("one_minus", "literal"),
    "s3im.c1_mode": ("squared", "linear"),
}

RESOLVED_FILENAME = "config.resolved"


def _coerce(key: str, raw):
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if key in _AUTO_FLOAT_KEYS:
        if raw == "auto":
            return "auto"
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be 'auto' or a number, got {raw!r}") from None
    default = DEFAULTS[key]
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key} must be a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    if key in _CHOICE_KEYS and raw not in _CHOICE_KEYS[key]:
        raise ConfigError(
            f"{key} must be one of {_CHOICE_KEYS[key]}, got {raw!r}"
        )
    return raw


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class RunConfig:
    """Resolved configuration with canonical serialization and hashing."""

    def __init__(self, values: dict):
        self.values = dict(values)

    @classmethod
    def load(cls, path=None, overrides=()) -> "RunConfig":
        values = dict(DEFAULTS)
        if path is not None:
            values.update(cls._parse_file(path))
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override must look like key=value, got {item!r}")
            key, raw = item.split("=", 1)
            key = key.strip()
            values[key] = _coerce(key, raw)
        return cls(values)

    @staticmethod
    def _parse_file(path) -> dict:
        if not os.path.exists(path):
            raise FileNotFoundError(f"config file not found: {path}")
        out = {}
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{line_no}: expected key=value, got {line!r}"
                    )
                key, raw = line.split("=", 1)
                key = key.strip()
                out[key] = _coerce(key, raw)
        return out

    def get(self, key: str):
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        return self.values[key]

    def set(self, key: str, value):
        self.values[key] = _coerce(key, value)

    def resolved_text(self) -> str:
        lines = [f"{k}={_format_value(self.values[k])}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.resolved_text().encode()).hexdigest()

    def write_resolved(self, dirpath):
        os.makedirs(dirpath, exist_ok=True)
        with open(os.path.join(dirpath, RESOLVED_FILENAME), "w", newline="\n") as fh:
            fh.write(self.resolved_text())

    # -- dataclass factories -------------------------------------------------

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            n_orders=self.get("gen.orders"),
            n_users=self.get("gen.users"),
            n_batteries=self.get("gen.batteries"),
            n_stations=self.get("gen.stations"),
            horizon=self.get("gen.horizon"),
            ride_mean=self.get("gen.ride_mean"),
            ride_sd=self.get("gen.ride_sd"),
            noise=self.get("gen.noise"),
            seed=self.get("seed"),
        )

    def train_config(self, s3im_enabled: bool = False) -> TrainConfig:
        return TrainConfig(
            epochs=self.get("train.epochs"),
            lr=self.get("train.lr"),
            batch_size=self.get("train.batch"),
            train_frac=self.get("train.train_frac"),
            val_frac=self.get("train.val_frac"),
            test_frac=self.get("train.test_frac"),
            seed=self.get("seed"),
            s3im_enabled=s3im_enabled,
            s3im_weight=self.get("train.s3im_weight"),
            s3im_alpha=self.get("s3im.alpha"),
            s3im_beta=self.get("s3im.beta"),
            s3im_gamma=self.get("s3im.gamma"),
            s3im_k1=self.get("s3im.k1"),
            s3im_k2=self.get("s3im.k2"),
            s3im_L=self.get("s3im.L"),
            s3im_c3=self.get("s3im.c3"),
            s3im_sign=self.get("s3im.sign"),
            s3im_c1_mode=self.get("s3im.c1_mode"),
        )

    def model_config(self, use_graph: bool = True) -> ModelConfig:
        return ModelConfig(
            embed_dim=self.get("model.embed_dim"),
            dqk=self.get("model.dqk"),
            dv=self.get("model.dv"),
            ffn_dim=self.get("model.ffn_dim"),
            node_dim=self.get("model.node_dim"),
            gnn_layers=self.get("model.gnn_layers"),
            gnn_hidden=self.get("model.gnn_hidden"),
            window=self.get("model.window"),
            mlp_hidden=self.get("model.mlp_hidden"),
            baseline_hidden=self.get("model.baseline_hidden"),
            residual=self.get("model.residual"),
            layer_norm=self.get("model.layer_norm"),
            use_graph=use_graph,
        )
