"""Deterministic synthetic generator for swap orders and their graph.

Each order is one ride: a user takes a battery at a station during a swap
timestep, rides for a normally distributed ride length (target mean 275 in
ride units), and the remaining-range label is what the battery's full-charge
range had left after the ride's energy draw. Telemetry is a 64-row matrix of
six channels: speed (km/h), pack voltage (V), current (A), motor temperature
(degC), payload (kg) and terrain grade (%).

The energy model is deliberately simple and fully documented by the module
constants below: per-step motor power is

    p = max(0, BASE_POWER + SPEED2_COEF * speed^2 + GRADE_LOAD_COEF * grade * payload)

motor temperature follows a first-order heating/cooling recursion driven by
p, and the per-step energy rate adds a thermal-loss term

    e = p + HEAT_LOSS_COEF * max(0, temperature - TEMP_KNEE).

Ride energy scales with ride length, and the label is

    label = clip(capacity * FULL_RANGE_KM - consumed_km + noise, 0, capacity * FULL_RANGE_KM)

where each battery carries a fixed latent capacity factor (its degradation
state). Capacity is visible only through which battery served the order,
never through telemetry; telemetry-only models therefore hit an error floor
that the graph branch can cross.

Every order draws from its own substream keyed by (seed, order id), so the
whole batch is generated vectorized yet individual orders are reproducible
in isolation. The assignment of orders to timesteps, users, batteries and
stations uses dedicated substreams of the master seed.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, ParseError, VersionError
from .graph import (
    NodeRef,
    SwapEdge,
    TemporalGraph,
    battery,
    load_graph,
    save_graph,
    user,
)
from .rng import Rng, derive_seed, derive_seeds

ORDERS_HEADER_PREFIX = "#seb-orders v1 F="
N_FEATURES = 6
SEQ_LEN = 64

# Battery model.
FULL_RANGE_KM = 60.0
CAPACITY_RANGE = (0.75, 1.0)

# Consumption model constants (energy rate per telemetry step).
BASE_POWER = 0.8
SPEED2_COEF = 0.004
GRADE_LOAD_COEF = 0.002
HEAT_LOSS_COEF = 0.05
TEMP_KNEE = 25.0
HEAT_GAIN = 0.75
COOL_RATE = 0.15
KM_PER_ENERGY = 4.0
RIDE_REF = 275.0

# Telemetry channel synthesis.
BASE_SPEED_RANGE = (12.0, 28.0)
AMBIENT_RANGE = (12.0, 28.0)
PAYLOAD_RANGE = (60.0, 100.0)
SPEED_MIN = 3.0
GRADE_LIMIT = 8.0
SPEED_WALK_SD = 1.2
SPEED_WALK_PHI = 0.85
GRADE_WALK_SD = 1.5
GRADE_WALK_PHI = 0.9
VOLTAGE_FULL = 52.0
VOLTAGE_DROP = 12.0
CURRENT_FACTOR = 3.0
VOLTAGE_NOISE_SD = 0.3
CURRENT_NOISE_SD = 0.4
TEMP_NOISE_SD = 0.5
# cfg.noise is the label-noise fraction of full range; telemetry noise and
# the walk spreads scale with cfg.noise / NOISE_REF so noise=0 flattens
# everything stochastic in the ride profile.
NOISE_REF = 0.02

# Substream keys under the master seed.
_CAPACITY_KEY = 1
_ASSIGN_KEY = 2
_ORDER_KEY_BASE = 1000

FEATURE_NAMES = ("speed", "voltage", "current", "motor_temp", "payload", "grade")


@dataclass
class Order:
    """One ride sample with its 64-step telemetry and range label."""

    order_id: int
    user: NodeRef
    battery: NodeRef
    t: int
    telemetry: np.ndarray
    ride_length: float
    label: float

    def __post_init__(self):
        self.telemetry = np.asarray(self.telemetry, dtype=np.float64)
        if self.telemetry.shape != (SEQ_LEN, N_FEATURES):
            raise ConfigError(
                f"telemetry must be {SEQ_LEN}x{N_FEATURES}, got {self.telemetry.shape}"
            )
        if self.label < 0:
            raise ConfigError(f"label must be nonnegative, got {self.label}")


@dataclass
class GeneratorConfig:
    n_orders: int = 2000
    n_users: int = 1200
    n_batteries: int = 400
    n_stations: int = 25
    horizon: int = 50
    ride_mean: float = 275.0
    ride_sd: float = 40.0
    noise: float = 0.02
    seed: int = 42

    def validate(self):
        counts = (self.n_orders, self.n_users, self.n_batteries,
                  self.n_stations, self.horizon)
        if any(c <= 0 for c in counts):
            raise ConfigError(f"generator counts must be positive, got {self}")
        if self.ride_mean <= 0 or self.ride_sd <= 0:
            raise ConfigError("ride length mean and sd must be positive")
        if self.noise < 0:
            raise ConfigError(f"noise must be nonnegative, got {self.noise}")
        cap = self.horizon * min(self.n_batteries, self.n_users)
        if self.n_orders > cap:
            raise ConfigError(
                f"{self.n_orders} orders exceed capacity {cap}: more concurrent "
                "orders than batteries/users per timestep"
            )


def battery_capacities(cfg: GeneratorConfig) -> np.ndarray:
    """Latent full-charge capacity factor per battery (degradation state)."""
    rng = Rng(derive_seed(cfg.seed, _CAPACITY_KEY))
    lo, hi = CAPACITY_RANGE
    return rng.uniform(lo, hi, size=(cfg.n_batteries,))


# Per-order uniform draw layout (column offsets into the substream matrix).
_C_RIDE = 0          # 2 cols -> 1 normal
_C_BASE_SPEED = 2
_C_AMBIENT = 3
_C_PAYLOAD = 4
_C_LABEL_NOISE = 5   # 2 cols -> 1 normal
_C_BLOCKS = 7        # five 128-col blocks -> 64 normals each
_N_DRAWS = _C_BLOCKS + 5 * 2 * SEQ_LEN


def _normals(u: np.ndarray, start: int, count: int) -> np.ndarray:
    """count normals per row from 2*count uniform columns (Box-Muller, cos)."""
    u1 = 1.0 - u[:, start:start + count]          # (0, 1] keeps the log finite
    u2 = u[:, start + count:start + 2 * count]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _ar_walk(eps: np.ndarray, phi: float, sd: float) -> np.ndarray:
    walk = np.empty_like(eps)
    acc = sd * eps[:, 0]
    walk[:, 0] = acc
    for k in range(1, eps.shape[1]):
        acc = phi * acc + sd * eps[:, k]
        walk[:, k] = acc
    return walk


def _assign_slots(cfg: GeneratorConfig):
    """Deterministic (t, user, battery, station) per order.

    Each timestep hosts at most one order per battery and per user; draws
    that land in a full timestep probe linearly to the next one.
    """
    rng = Rng(derive_seed(cfg.seed, _ASSIGN_KEY))
    per_t_cap = min(cfg.n_batteries, cfg.n_users)
    t_draws = rng.integers(cfg.horizon, size=(cfg.n_orders,))
    counts = np.zeros(cfg.horizon, dtype=np.int64)
    t_of = np.empty(cfg.n_orders, dtype=np.int64)
    ids_by_t = [[] for _ in range(cfg.horizon)]
    for i in range(cfg.n_orders):
        t = int(t_draws[i])
        while counts[t] >= per_t_cap:
            t = (t + 1) % cfg.horizon
        counts[t] += 1
        t_of[i] = t
        ids_by_t[t].append(i)

    user_of = np.empty(cfg.n_orders, dtype=np.int64)
    batt_of = np.empty(cfg.n_orders, dtype=np.int64)
    station_of = np.empty(cfg.n_orders, dtype=np.int64)
    for t in range(cfg.horizon):
        ids = ids_by_t[t]
        if not ids:
            continue
        k = len(ids)
        batts = rng.permutation(cfg.n_batteries)[:k]
        users = rng.permutation(cfg.n_users)[:k]
        stations = rng.integers(cfg.n_stations, size=(k,))
        for j, oid in enumerate(ids):
            user_of[oid] = users[j]
            batt_of[oid] = batts[j]
            station_of[oid] = stations[j]
    return t_of, user_of, batt_of, station_of


def generate(cfg: GeneratorConfig):
    """Produce (orders, graph), fully determined by cfg.seed."""
    cfg.validate()
    n = cfg.n_orders
    caps = battery_capacities(cfg)
    t_of, user_of, batt_of, station_of = _assign_slots(cfg)

    # One substream per order id; rows are that substream's uniform draws.
    seeds = derive_seeds(cfg.seed, _ORDER_KEY_BASE + np.arange(n, dtype=np.int64))
    raw = kernels.splitmix64_block(seeds, _N_DRAWS)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    noise_scale = cfg.noise / NOISE_REF
    ride = cfg.ride_mean + cfg.ride_sd * _normals(u, _C_RIDE, 1)[:, 0]
    ride = np.maximum(ride, 1.0)
    base_speed = BASE_SPEED_RANGE[0] + (
        BASE_SPEED_RANGE[1] - BASE_SPEED_RANGE[0]) * u[:, _C_BASE_SPEED]
    ambient = AMBIENT_RANGE[0] + (
        AMBIENT_RANGE[1] - AMBIENT_RANGE[0]) * u[:, _C_AMBIENT]
    payload = PAYLOAD_RANGE[0] + (
        PAYLOAD_RANGE[1] - PAYLOAD_RANGE[0]) * u[:, _C_PAYLOAD]
    label_eps = _normals(u, _C_LABEL_NOISE, 1)[:, 0]

    blk = 2 * SEQ_LEN
    speed_eps = _normals(u, _C_BLOCKS + 0 * blk, SEQ_LEN)
    grade_eps = _normals(u, _C_BLOCKS + 1 * blk, SEQ_LEN)
    volt_eps = _normals(u, _C_BLOCKS + 2 * blk, SEQ_LEN)
    curr_eps = _normals(u, _C_BLOCKS + 3 * blk, SEQ_LEN)
    temp_eps = _normals(u, _C_BLOCKS + 4 * blk, SEQ_LEN)

    speed = np.maximum(
        SPEED_MIN,
        base_speed[:, None] + _ar_walk(speed_eps, SPEED_WALK_PHI,
                                       SPEED_WALK_SD * noise_scale),
    )
    grade = np.clip(
        _ar_walk(grade_eps, GRADE_WALK_PHI, GRADE_WALK_SD * noise_scale),
        -GRADE_LIMIT, GRADE_LIMIT,
    )

    power = np.maximum(
        0.0,
        BASE_POWER + SPEED2_COEF * speed**2
        + GRADE_LOAD_COEF * grade * payload[:, None],
    )
    temp = kernels.temperature_scan(power, ambient, HEAT_GAIN, COOL_RATE, ambient)
    energy = power + HEAT_LOSS_COEF * np.maximum(0.0, temp - TEMP_KNEE)

    consumed_cum = (
        KM_PER_ENERGY * (ride[:, None] / RIDE_REF)
        * np.cumsum(energy, axis=1) / SEQ_LEN
    )
    consumed = consumed_cum[:, -1]
    full = caps[batt_of] * FULL_RANGE_KM
    label_sd = cfg.noise * FULL_RANGE_KM
    labels = np.clip(full - consumed + label_sd * label_eps, 0.0, full)

    voltage = (
        VOLTAGE_FULL - VOLTAGE_DROP * consumed_cum / FULL_RANGE_KM
        + VOLTAGE_NOISE_SD * noise_scale * volt_eps
    )
    current = CURRENT_FACTOR * energy + CURRENT_NOISE_SD * noise_scale * curr_eps
    temp_ch = temp + TEMP_NOISE_SD * noise_scale * temp_eps
    payload_ch = np.repeat(payload[:, None], SEQ_LEN, axis=1)

    telemetry = np.stack(
        [speed, voltage, current, temp_ch, payload_ch, grade], axis=2
    )

    g = TemporalGraph(cfg.n_users, cfg.n_batteries, cfg.horizon)
    orders = []
    for i in range(n):
        orders.append(Order(
            order_id=i,
            user=user(int(user_of[i])),
            battery=battery(int(batt_of[i])),
            t=int(t_of[i]),
            telemetry=telemetry[i],
            ride_length=float(ride[i]),
            label=float(labels[i]),
        ))
        g.add_edge(SwapEdge(orders[-1].user, orders[-1].battery,
                            int(t_of[i]), int(station_of[i])))
    return orders, g


@dataclass
class SummaryStats:
    """Dataset statistics for the generation report."""

    n_orders: int
    ride_mean: float
    ride_sd: float
    ride_hist_edges: np.ndarray
    ride_hist_counts: np.ndarray
    label_mean: float
    label_sd: float
    battery_reuse: dict = field(repr=False)

    def format(self) -> str:
        reuse = np.array(list(self.battery_reuse.values()))
        lines = [
            f"orders: {self.n_orders}",
            f"ride length: mean {self.ride_mean:.2f}, sd {self.ride_sd:.2f}",
            f"label (km): mean {self.label_mean:.2f}, sd {self.label_sd:.2f}",
            f"battery reuse: {len(self.battery_reuse)} batteries, "
            f"mean {reuse.mean():.2f}, max {reuse.max()} orders each",
            "ride histogram:",
        ]
        for i, c in enumerate(self.ride_hist_counts):
            lo, hi = self.ride_hist_edges[i], self.ride_hist_edges[i + 1]
            lines.append(f"  [{lo:8.2f}, {hi:8.2f}): {c}")
        return "\n".join(lines)


def summarize(orders) -> SummaryStats:
    if not orders:
        raise ConfigError("cannot summarize an empty order list")
    ride = np.array([o.ride_length for o in orders])
    labels = np.array([o.label for o in orders])
    counts, edges = np.histogram(ride, bins=10)
    reuse = {}
    for o in orders:
        reuse[o.battery.index] = reuse.get(o.battery.index, 0) + 1
    return SummaryStats(
        n_orders=len(orders),
        ride_mean=float(ride.mean()),
        ride_sd=float(ride.std(ddof=1)) if len(orders) > 1 else 0.0,
        ride_hist_edges=edges,
        ride_hist_counts=counts,
        label_mean=float(labels.mean()),
        label_sd=float(labels.std(ddof=1)) if len(orders) > 1 else 0.0,
        battery_reuse=reuse,
    )


# ---------------------------------------------------------------------------
# dataset files: orders + graph in one directory, bit-exact round trip
# ---------------------------------------------------------------------------

def write_orders(orders, path):
    lines = [f"{ORDERS_HEADER_PREFIX}{N_FEATURES}"]
    for o in orders:
        lines.append(
            f"{o.order_id},{o.user.index},{o.battery.index},{o.t},"
            f"{float(o.ride_length)!r},{float(o.label)!r}"
        )
        for row in o.telemetry:
            lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_orders(path):
    with open(path, newline="\n") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith(ORDERS_HEADER_PREFIX):
        found = lines[0] if lines else "<empty file>"
        raise VersionError(path, 1,
                           f"expected header {ORDERS_HEADER_PREFIX}<F>, found {found!r}")
    try:
        n_features = int(lines[0][len(ORDERS_HEADER_PREFIX):])
    except ValueError:
        raise VersionError(path, 1, f"bad feature count in header {lines[0]!r}") from None
    if n_features != N_FEATURES:
        raise VersionError(path, 1,
                           f"unsupported feature count {n_features} (expected {N_FEATURES})")
    orders = []
    i = 1
    while i < len(lines):
        line_no = i + 1
        meta = lines[i].split(",")
        if len(meta) != 6:
            raise ParseError(path, line_no,
                             f"expected 6 metadata fields, got {len(meta)}")
        try:
            oid, u_idx, b_idx, t = (int(x) for x in meta[:4])
            ride_length, label = float(meta[4]), float(meta[5])
        except ValueError:
            raise ParseError(path, line_no, f"bad metadata line {lines[i]!r}") from None
        if i + SEQ_LEN >= len(lines):
            raise ParseError(path, len(lines) + 1,
                             f"order {oid} truncated: expected {SEQ_LEN} telemetry rows")
        rows = np.empty((SEQ_LEN, N_FEATURES))
        for k in range(SEQ_LEN):
            row_no = line_no + 1 + k
            parts = lines[i + 1 + k].split(",")
            if len(parts) != N_FEATURES:
                raise ParseError(path, row_no,
                                 f"expected {N_FEATURES} values, got {len(parts)}")
            try:
                rows[k] = [float(x) for x in parts]
            except ValueError:
                raise ParseError(path, row_no,
                                 f"bad telemetry value in {lines[i + 1 + k]!r}") from None
        orders.append(Order(oid, user(u_idx), battery(b_idx), t, rows,
                            ride_length, label))
        i += 1 + SEQ_LEN
    return orders


ORDERS_FILENAME = "orders.seb"
GRAPH_FILENAME = "graph.seb"


def write_dataset(orders, g, dirpath):
    os.makedirs(dirpath, exist_ok=True)
    write_orders(orders, os.path.join(dirpath, ORDERS_FILENAME))
    save_graph(g, os.path.join(dirpath, GRAPH_FILENAME))


def read_dataset(dirpath):
    orders_path = os.path.join(dirpath, ORDERS_FILENAME)
    graph_path = os.path.join(dirpath, GRAPH_FILENAME)
    if not os.path.exists(orders_path) or not os.path.exists(graph_path):
        raise FileNotFoundError(f"dataset files not found under {dirpath}")
    return read_orders(orders_path), load_graph(graph_path)
