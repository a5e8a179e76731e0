"""Graph-convolution encoder over swap-graph snapshots.

One layer updates each node as

    h_v' = act( mean_{u in N(v)} h_u @ W  +  h_v @ B )

where the mean over an empty neighborhood is the zero vector (the 1/degree
normalization with 0 mapped to 0). Stacking layers over a snapshot yields
the structural embedding consumed by the fused range predictor.

Node input features are learned: one shared vector per node kind plus a
per-battery bias row, so the graph branch is purely structural.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .graph import GraphSnapshot, TemporalGraph
from .optim import Param, glorot_uniform
from .tensor import Tensor, add, concat, matmul, neighbor_mean, relu

ACTIVATIONS = ("relu", "identity")


class GcnLayer:
    """Neighbor-mix weight W and self-loop weight B, same d_in x d_out shape."""

    def __init__(self, w: Param, b: Param, activation: str = "relu"):
        if w.shape != b.shape:
            raise ShapeError(f"W and B must match: {w.shape} vs {b.shape}")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        self.w = w
        self.b = b
        self.activation = activation

    @classmethod
    def init(cls, rng, d_in: int, d_out: int, activation: str = "relu",
             name: str = "gcn") -> "GcnLayer":
        return cls(
            Param(glorot_uniform(rng, d_in, d_out, (d_in, d_out)), f"{name}.w"),
            Param(glorot_uniform(rng, d_in, d_out, (d_in, d_out)), f"{name}.b"),
            activation,
        )

    def params(self):
        return [self.w, self.b]


@dataclass
class GnnConfig:
    """Layer widths d_0..d_L plus the snapshot window aggregated per step."""

    dims: list = field(default_factory=lambda: [8, 8, 8])
    window: int = 0

    @property
    def num_layers(self) -> int:
        return len(self.dims) - 1

    def validate(self):
        if len(self.dims) < 1 or any(d <= 0 for d in self.dims):
            raise ConfigError(f"invalid layer dims {self.dims}")
        if self.window < 0:
            raise ConfigError(f"window must be nonnegative, got {self.window}")


def build_layers(rng, config: GnnConfig):
    """One layer per dim pair; hidden layers relu, final layer identity."""
    config.validate()
    layers = []
    for i in range(config.num_layers):
        act = "relu" if i < config.num_layers - 1 else "identity"
        layers.append(
            GcnLayer.init(rng, config.dims[i], config.dims[i + 1], act, f"gcn{i}")
        )
    return layers


def gcn_layer_forward(layer: GcnLayer, h: Tensor, snapshot: GraphSnapshot) -> Tensor:
    """One round of message passing over a snapshot's edges."""
    n = snapshot.n_nodes
    if h.shape[0] != n:
        raise ShapeError(
            f"feature rows ({h.shape[0]}) must equal node count ({n})"
        )
    src, dst = snapshot.edge_arrays()
    m = neighbor_mean(h, src, dst, n, snapshot.inverse_degrees())
    out = add(matmul(m, layer.w.tensor()), matmul(h, layer.b.tensor()))
    if layer.activation == "relu":
        out = relu(out)
    return out


def gnn_encode(config: GnnConfig, layers, g: TemporalGraph, h0: Tensor,
               t: int) -> Tensor:
    """Stack the configured layers over the (windowed) snapshot at t.

    Zero layers return h0 unchanged. Output rows follow the graph's global
    node layout (users first, then batteries).
    """
    config.validate()
    if len(layers) != config.num_layers:
        raise ConfigError(
            f"expected {config.num_layers} layers, got {len(layers)}"
        )
    dims = [h0.shape[1]]
    for layer in layers:
        dims.append(layer.w.shape[1])
        if layer.w.shape[0] != dims[-2]:
            raise ConfigError(
                f"layer dims do not chain: {dims[-2]} -> {layer.w.shape}"
            )
    snap = g.merged_snapshot(t, config.window)
    h = h0
    for layer in layers:
        h = gcn_layer_forward(layer, h, snap)
    return h


class NodeFeatureTable:
    """Learned initial node features: per-kind vectors + per-battery bias."""

    def __init__(self, rng, n_users: int, n_batteries: int, dim: int):
        self.n_users = n_users
        self.n_batteries = n_batteries
        self.dim = dim
        self.user_vec = Param(glorot_uniform(rng, dim, dim, (dim,)), "h0.user")
        self.battery_vec = Param(glorot_uniform(rng, dim, dim, (dim,)), "h0.battery")
        self.battery_bias = Param(
            glorot_uniform(rng, dim, dim, (n_batteries, dim)), "h0.battery_bias"
        )

    def params(self):
        return [self.user_vec, self.battery_vec, self.battery_bias]

    def build(self) -> Tensor:
        """All-node feature matrix in global row order."""
        users = add(Tensor(np.zeros((self.n_users, self.dim))), self.user_vec.tensor())
        batteries = add(self.battery_bias.tensor(), self.battery_vec.tensor())
        return concat([users, batteries], axis=0)
