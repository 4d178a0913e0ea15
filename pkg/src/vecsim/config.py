"""Scenario configuration: schema, defaults, validation, JSON loading.

A scenario file is one JSON object whose sections mirror the dataclasses
below. Validation collects every problem it can find and names the offending
field path, so a bad file is rejected before slot 0 with actionable
diagnostics rather than a mid-run crash.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from vecsim.channel import ChannelParams
from vecsim.mac import CtuPool
from vecsim.mobility import MarkovJumpModel, ModelValidationError, RoadGraph, line_graph

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Scenario rejected; .errors lists field-named diagnostics."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid scenario: " + "; ".join(errors))
        self.errors = errors


@dataclass
class VehicleSpec:
    vehicle_id: int
    cell: int
    velocity_class: str = "default"


@dataclass
class ApSpec:
    ap_id: int
    x: float
    y: float
    an_id: int
    fronthaul_snr_db: float = 30.0


@dataclass
class AnSpec:
    an_id: int
    power_budget_w: float = 2.0
    controller_capacity: float = 100.0
    storage_capacity: float = 10.0


@dataclass
class MacConfig:
    payload_bits: int = 128
    allowed_payload_bits: tuple[int, ...] = (128, 256)
    bler_alpha: float = 1.0
    bler_beta: dict[int, float] = field(default_factory=lambda: {128: 5.0, 256: 8.0})
    k_max: int = 2
    relay_mode: str = "AF"                 # AF | DF
    replicas: int = 2                      # used when the bandit is off
    ctu_policy: str = "random"             # random | preconfigured
    preconfigured: dict[int, list[tuple[int, int]]] = field(default_factory=dict)


@dataclass
class BanditConfig:
    enabled: bool = False
    epsilon: float = 0.1
    cost_per_replica: float = 0.05
    r_max: int = 4


@dataclass
class ClusterConfig:
    k_cluster: int = 2
    downlink_ctu_demand: int = 1


@dataclass
class DownlinkConfig:
    policy: str = "eco"                    # eco | random
    power_levels_w: tuple[float, ...] = (0.1, 1.0)
    ap_ranks: int = 2
    epsilon: float = 0.1
    eta: float = 0.3
    gamma: float = 0.5
    w_delivery: float = 1.0
    w_power: float = 0.5
    load_buckets: int = 3
    snr_bucket_db: float = 10.0


@dataclass
class PredictorConfig:
    policy: str = "bayes"                  # bayes | persistence
    threshold: float = 0.5
    obs_floor: float = 0.01
    obs_ceiling: float = 0.99
    downlink_uses_current_slot: bool = False
    observation_matrix: list[list[float]] | None = None


@dataclass
class ControlConfig:
    enabled: bool = True
    latency_bound_s: float = 0.01
    target_mean_latency_s: float | None = None
    tighten_factor: float = 0.8
    max_feedback_iters: int = 3
    rate_per_vehicle: float = 1.0
    period_slots: int = 50
    kappa: float = 1e-4
    edges: list[tuple[int, int, float, float]] = field(default_factory=list)   # u, v, weight_s, capacity


@dataclass
class EdgeComputeConfig:
    enabled: bool = True
    services: list[dict] = field(default_factory=lambda: [
        {"service_id": 0, "size": 2.0, "cycles_per_task": 2e6, "popularity": 1.0},
    ])
    task_arrival_prob: float = 0.1
    input_bits: float = 1e5
    recache_period: int = 100
    cpu_rate: float = 5e9
    cloud_rate: float = 5e10
    backhaul_rtt: float = 0.05
    backhaul_rate: float = 1e8
    joules_per_cycle: float = 1e-9
    joules_per_bit: float = 1e-8
    energy_budget_per_slot: float = 0.01
    tradeoff_v: float = 1.0
    offload_policy: str = "drift"          # drift | greedy_local | always_cloud


@dataclass
class CipherConfig:
    enabled: bool = True
    window: int = 4
    max_resync: int = 10
    an_view_flip_prob: float = 0.0         # chance an association bit is mis-recorded AN-side


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    horizon: int = 100
    slot_duration: float = 1e-3
    latency_deadline_s: float = 1e-3
    road: RoadGraph = field(default_factory=lambda: line_graph(5)[0])
    mobility: MarkovJumpModel = field(default_factory=lambda: line_graph(5)[1])
    vehicles: list[VehicleSpec] = field(default_factory=list)
    velocity_schedule: list[tuple[int, int, str]] = field(default_factory=list)  # slot, vehicle, class
    aps: list[ApSpec] = field(default_factory=list)
    ans: list[AnSpec] = field(default_factory=list)
    channel: ChannelParams = field(default_factory=ChannelParams)
    snr_threshold_db: float = 3.0
    ctu_pool: CtuPool = field(default_factory=CtuPool)
    mac: MacConfig = field(default_factory=MacConfig)
    bandit: BanditConfig = field(default_factory=BanditConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    downlink: DownlinkConfig = field(default_factory=DownlinkConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    edge_compute: EdgeComputeConfig = field(default_factory=EdgeComputeConfig)
    cipher: CipherConfig = field(default_factory=CipherConfig)

    def ap_positions(self) -> dict[int, tuple[float, float]]:
        return {ap.ap_id: (ap.x, ap.y) for ap in self.aps}

    def ap_owner(self) -> dict[int, int]:
        return {ap.ap_id: ap.an_id for ap in self.aps}

    def validate(self) -> list[str]:
        return validate_scenario(self)


def validate_scenario(cfg: ScenarioConfig) -> list[str]:
    """All invariant checks; returns a list of 'path: problem' strings."""
    errors: list[str] = []
    if cfg.horizon < 1:
        errors.append(f"horizon: must be >= 1, got {cfg.horizon}")
    if cfg.slot_duration <= 0:
        errors.append(f"slot_duration: must be > 0, got {cfg.slot_duration}")
    if cfg.latency_deadline_s <= 0:
        errors.append(f"latency_deadline_s: must be > 0, got {cfg.latency_deadline_s}")

    try:
        cfg.road.validate()
    except ModelValidationError as exc:
        errors.append(f"road: {exc}")
    else:
        try:
            cfg.mobility.validate(cfg.road)
        except ModelValidationError as exc:
            errors.append(f"mobility: {exc}")

    cells = set(cfg.road.centers)
    vclasses = set(cfg.mobility.rows)
    seen_vehicles = set()
    for i, veh in enumerate(cfg.vehicles):
        if veh.vehicle_id in seen_vehicles:
            errors.append(f"vehicles[{i}]: duplicate vehicle id {veh.vehicle_id}")
        seen_vehicles.add(veh.vehicle_id)
        if veh.cell not in cells:
            errors.append(f"vehicles[{i}].cell: unknown cell {veh.cell}")
        if veh.velocity_class not in vclasses:
            errors.append(f"vehicles[{i}].velocity_class: unknown class {veh.velocity_class!r}")
    if not cfg.vehicles:
        errors.append("vehicles: at least one vehicle required")

    an_ids = {an.an_id for an in cfg.ans}
    if not cfg.ans:
        errors.append("ans: at least one AN required")
    seen_aps = set()
    for i, ap in enumerate(cfg.aps):
        if ap.ap_id in seen_aps:
            errors.append(f"aps[{i}]: duplicate AP id {ap.ap_id}")
        seen_aps.add(ap.ap_id)
        if ap.an_id not in an_ids:
            errors.append(f"aps[{i}].an_id: unknown AN {ap.an_id}")
    if not cfg.aps:
        errors.append("aps: at least one AP required")

    for i, (slot, vid, vclass) in enumerate(cfg.velocity_schedule):
        if vid not in seen_vehicles:
            errors.append(f"velocity_schedule[{i}]: unknown vehicle {vid}")
        if vclass not in vclasses:
            errors.append(f"velocity_schedule[{i}]: unknown class {vclass!r}")
        if slot < 0:
            errors.append(f"velocity_schedule[{i}]: negative slot {slot}")

    if min(cfg.ctu_pool.slots_per_frame, cfg.ctu_pool.freq_blocks, cfg.ctu_pool.sequences) < 1:
        errors.append("ctu_pool: all dimensions must be >= 1")

    mac = cfg.mac
    if mac.payload_bits not in mac.allowed_payload_bits:
        errors.append(
            f"mac.payload_bits: {mac.payload_bits} not in allowed set {sorted(mac.allowed_payload_bits)}"
        )
    if mac.payload_bits not in mac.bler_beta:
        errors.append(f"mac.bler_beta: no threshold for payload_bits {mac.payload_bits}")
    if mac.k_max < 1:
        errors.append(f"mac.k_max: must be >= 1, got {mac.k_max}")
    if mac.relay_mode not in ("AF", "DF"):
        errors.append(f"mac.relay_mode: must be AF or DF, got {mac.relay_mode!r}")
    if mac.ctu_policy not in ("random", "preconfigured"):
        errors.append(f"mac.ctu_policy: must be random or preconfigured, got {mac.ctu_policy!r}")
    if mac.replicas < 1:
        errors.append(f"mac.replicas: must be >= 1, got {mac.replicas}")
    elif mac.replicas > cfg.ctu_pool.size:
        errors.append(
            f"mac.replicas: {mac.replicas} exceeds ctu_pool size {cfg.ctu_pool.size} "
            "(mac.replicas vs ctu_pool)"
        )
    if mac.ctu_policy == "preconfigured":
        for vid, pairs in mac.preconfigured.items():
            for j, (ctu, ap) in enumerate(pairs):
                if not 0 <= ctu < cfg.ctu_pool.size:
                    errors.append(f"mac.preconfigured[{vid}][{j}]: CTU {ctu} outside pool")
                if ap not in seen_aps:
                    errors.append(f"mac.preconfigured[{vid}][{j}]: unknown AP {ap}")

    bandit = cfg.bandit
    if not 0.0 <= bandit.epsilon <= 1.0:
        errors.append(f"bandit.epsilon: must lie in [0, 1], got {bandit.epsilon}")
    if bandit.r_max < 1:
        errors.append(f"bandit.r_max: must be >= 1, got {bandit.r_max}")
    elif bandit.enabled and bandit.r_max > cfg.ctu_pool.size:
        errors.append(f"bandit.r_max: {bandit.r_max} exceeds ctu_pool size {cfg.ctu_pool.size}")

    if cfg.cluster.k_cluster < 1:
        errors.append(f"cluster.k_cluster: must be >= 1, got {cfg.cluster.k_cluster}")
    if cfg.cluster.downlink_ctu_demand < 0:
        errors.append("cluster.downlink_ctu_demand: must be >= 0")

    dl = cfg.downlink
    if dl.policy not in ("eco", "random"):
        errors.append(f"downlink.policy: must be eco or random, got {dl.policy!r}")
    if not dl.power_levels_w or any(p <= 0 for p in dl.power_levels_w):
        errors.append("downlink.power_levels_w: need at least one positive level")
    if dl.ap_ranks < 1:
        errors.append("downlink.ap_ranks: must be >= 1")
    if not 0.0 < dl.eta <= 1.0:
        errors.append(f"downlink.eta: must lie in (0, 1], got {dl.eta}")
    if not 0.0 <= dl.gamma < 1.0:
        errors.append(f"downlink.gamma: must lie in [0, 1), got {dl.gamma}")

    pred = cfg.predictor
    if pred.policy not in ("bayes", "persistence"):
        errors.append(f"predictor.policy: must be bayes or persistence, got {pred.policy!r}")
    if not 0.0 < pred.threshold < 1.0:
        errors.append(f"predictor.threshold: must lie in (0, 1), got {pred.threshold}")
    if pred.observation_matrix is not None:
        n_cells, n_aps = len(cfg.road.centers), len(cfg.aps)
        mat = pred.observation_matrix
        if len(mat) != n_cells or any(len(row) != n_aps for row in mat):
            errors.append(
                f"predictor.observation_matrix: expected {n_cells}x{n_aps}, "
                f"got {len(mat)}x{len(mat[0]) if mat else 0}"
            )
        elif any(not 0.0 <= v <= 1.0 for row in mat for v in row):
            errors.append("predictor.observation_matrix: entries must lie in [0, 1]")

    ctl = cfg.control
    if ctl.enabled:
        if ctl.latency_bound_s <= 0:
            errors.append("control.latency_bound_s: must be > 0")
        if not 0.0 < ctl.tighten_factor < 1.0:
            errors.append(f"control.tighten_factor: must lie in (0, 1), got {ctl.tighten_factor}")
        if ctl.rate_per_vehicle <= 0:
            errors.append("control.rate_per_vehicle: must be > 0")
        if ctl.period_slots < 1:
            errors.append("control.period_slots: must be >= 1")
        for i, (u, v, w, cap) in enumerate(ctl.edges):
            if u not in an_ids or v not in an_ids:
                errors.append(f"control.edges[{i}]: endpoint not an AN id")
            if w <= 0 or cap <= 0:
                errors.append(f"control.edges[{i}]: weight and capacity must be positive")
        if len(cfg.ans) > 1 and not ctl.edges:
            errors.append("control.edges: required when more than one AN exists")

    ec = cfg.edge_compute
    if ec.enabled:
        seen_services = set()
        for i, svc in enumerate(ec.services):
            sid = svc.get("service_id")
            if sid in seen_services:
                errors.append(f"edge_compute.services[{i}]: duplicate service id {sid}")
            seen_services.add(sid)
            if svc.get("size", 0) <= 0 or svc.get("cycles_per_task", 0) <= 0:
                errors.append(f"edge_compute.services[{i}]: size and cycles_per_task must be positive")
        if not ec.services:
            errors.append("edge_compute.services: at least one service required when enabled")
        if not 0.0 <= ec.task_arrival_prob <= 1.0:
            errors.append("edge_compute.task_arrival_prob: must lie in [0, 1]")
        if ec.energy_budget_per_slot <= 0:
            errors.append("edge_compute.energy_budget_per_slot: must be > 0")
        if ec.tradeoff_v <= 0:
            errors.append("edge_compute.tradeoff_v: must be > 0")
        if ec.recache_period < 1:
            errors.append("edge_compute.recache_period: must be >= 1")
        if ec.offload_policy not in ("drift", "greedy_local", "always_cloud"):
            errors.append(f"edge_compute.offload_policy: unknown policy {ec.offload_policy!r}")

    ci = cfg.cipher
    if ci.enabled:
        if ci.window < 1:
            errors.append(f"cipher.window: must be >= 1, got {ci.window}")
        if ci.max_resync < 1:
            errors.append(f"cipher.max_resync: must be >= 1, got {ci.max_resync}")
        if not 0.0 <= ci.an_view_flip_prob <= 1.0:
            errors.append("cipher.an_view_flip_prob: must lie in [0, 1]")

    return errors


# ---------------------------------------------------------------------------
# JSON tree -> ScenarioConfig
# ---------------------------------------------------------------------------

def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed JSON object tree.

    Structural problems (wrong types, unknown keys) raise ConfigError here;
    semantic invariants are checked by validate_scenario afterwards.
    """
    errors: list[str] = []
    cfg = ScenarioConfig()
    known = {
        "schema_version", "name", "seed", "horizon", "slot_duration", "latency_deadline_s",
        "road", "mobility", "vehicles", "velocity_schedule", "aps", "ans", "channel",
        "snr_threshold_db", "ctu_pool", "mac", "bandit", "cluster", "downlink",
        "predictor", "control", "edge_compute", "cipher",
    }
    for key in data:
        if key not in known:
            errors.append(f"{key}: unknown section")

    cfg.name = str(data.get("name", cfg.name))
    for key in ("seed", "horizon"):
        if key in data:
            try:
                setattr(cfg, key, int(data[key]))
            except (TypeError, ValueError):
                errors.append(f"{key}: expected integer, got {data[key]!r}")
    for key in ("slot_duration", "latency_deadline_s", "snr_threshold_db"):
        if key in data:
            try:
                setattr(cfg, key, float(data[key]))
            except (TypeError, ValueError):
                errors.append(f"{key}: expected number, got {data[key]!r}")

    if "road" in data or "mobility" in data:
        _parse_road_mobility(cfg, data, errors)

    if "vehicles" in data:
        cfg.vehicles = _parse_vehicles(data["vehicles"], cfg, errors)
    if "velocity_schedule" in data:
        sched = []
        for i, item in enumerate(data["velocity_schedule"]):
            try:
                sched.append((int(item["slot"]), int(item["vehicle_id"]), str(item["velocity_class"])))
            except (KeyError, TypeError, ValueError):
                errors.append(f"velocity_schedule[{i}]: expected slot, vehicle_id, velocity_class")
        cfg.velocity_schedule = sched

    if "aps" in data:
        aps = []
        for i, item in enumerate(data["aps"]):
            try:
                aps.append(ApSpec(
                    ap_id=int(item["ap_id"]), x=float(item["x"]), y=float(item["y"]),
                    an_id=int(item["an_id"]),
                    fronthaul_snr_db=float(item.get("fronthaul_snr_db", 30.0)),
                ))
            except (KeyError, TypeError, ValueError):
                errors.append(f"aps[{i}]: expected ap_id, x, y, an_id")
        cfg.aps = aps
    if "ans" in data:
        ans = []
        for i, item in enumerate(data["ans"]):
            try:
                ans.append(AnSpec(
                    an_id=int(item["an_id"]),
                    power_budget_w=float(item.get("power_budget_w", 2.0)),
                    controller_capacity=float(item.get("controller_capacity", 100.0)),
                    storage_capacity=float(item.get("storage_capacity", 10.0)),
                ))
            except (KeyError, TypeError, ValueError):
                errors.append(f"ans[{i}]: expected an_id with numeric parameters")
        cfg.ans = ans

    if "channel" in data:
        cfg.channel = _parse_into(ChannelParams, data["channel"], "channel", errors)
    if "ctu_pool" in data:
        cfg.ctu_pool = _parse_into(CtuPool, data["ctu_pool"], "ctu_pool", errors)
    if "mac" in data:
        cfg.mac = _parse_mac(data["mac"], errors)
    if "bandit" in data:
        cfg.bandit = _parse_into(BanditConfig, data["bandit"], "bandit", errors)
    if "cluster" in data:
        cfg.cluster = _parse_into(ClusterConfig, data["cluster"], "cluster", errors)
    if "downlink" in data:
        cfg.downlink = _parse_into(DownlinkConfig, data["downlink"], "downlink", errors,
                                   tuple_fields={"power_levels_w"})
    if "predictor" in data:
        cfg.predictor = _parse_into(PredictorConfig, data["predictor"], "predictor", errors)
    if "control" in data:
        ctl_data = dict(data["control"])
        edges = ctl_data.pop("edges", [])
        cfg.control = _parse_into(ControlConfig, ctl_data, "control", errors)
        parsed_edges = []
        for i, e in enumerate(edges):
            try:
                parsed_edges.append((int(e[0]), int(e[1]), float(e[2]), float(e[3])))
            except (TypeError, ValueError, IndexError):
                errors.append(f"control.edges[{i}]: expected [u, v, weight_s, capacity]")
        cfg.control.edges = parsed_edges
    if "edge_compute" in data:
        cfg.edge_compute = _parse_into(EdgeComputeConfig, data["edge_compute"], "edge_compute", errors)
    if "cipher" in data:
        cfg.cipher = _parse_into(CipherConfig, data["cipher"], "cipher", errors)

    if errors:
        raise ConfigError(errors)
    return cfg


def _parse_vehicles(data, cfg, errors) -> list[VehicleSpec]:
    vehicles = []
    for i, item in enumerate(data):
        try:
            vehicles.append(VehicleSpec(
                vehicle_id=int(item["vehicle_id"]),
                cell=int(item["cell"]),
                velocity_class=str(item.get("velocity_class", "default")),
            ))
        except (KeyError, TypeError, ValueError):
            errors.append(f"vehicles[{i}]: expected vehicle_id, cell, optional velocity_class")
    return vehicles


def _parse_into(cls, data, path, errors, tuple_fields: set[str] = frozenset()):
    import dataclasses

    if not isinstance(data, dict):
        errors.append(f"{path}: expected object")
        return cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            errors.append(f"{path}.{key}: unknown field")
            continue
        if key in tuple_fields and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
        return cls()


def _parse_mac(data, errors) -> MacConfig:
    data = dict(data)
    beta = data.pop("bler_beta", None)
    pre = data.pop("preconfigured", None)
    allowed = data.pop("allowed_payload_bits", None)
    mac = _parse_into(MacConfig, data, "mac", errors)
    if beta is not None:
        try:
            mac.bler_beta = {int(k): float(v) for k, v in beta.items()}
        except (TypeError, ValueError, AttributeError):
            errors.append("mac.bler_beta: expected mapping payload_bits -> threshold_db")
    if allowed is not None:
        try:
            mac.allowed_payload_bits = tuple(int(x) for x in allowed)
        except (TypeError, ValueError):
            errors.append("mac.allowed_payload_bits: expected list of integers")
    if pre is not None:
        try:
            mac.preconfigured = {
                int(vid): [(int(c), int(a)) for c, a in pairs] for vid, pairs in pre.items()
            }
        except (TypeError, ValueError, AttributeError):
            errors.append("mac.preconfigured: expected mapping vehicle -> [[ctu, ap], ...]")
    return mac


def _parse_road_mobility(cfg: ScenarioConfig, data: dict, errors: list[str]) -> None:
    road_data = data.get("road", {})
    if isinstance(road_data, dict) and road_data.get("builder") == "line":
        n = int(road_data.get("cells", 5))
        spacing = float(road_data.get("spacing_m", 100.0))
        forward = float(road_data.get("forward_prob", 0.8))
        cfg.road, cfg.mobility = line_graph(n, spacing_m=spacing, forward_prob=forward)
        if "mobility" in data:
            cfg.mobility = _parse_mobility(data["mobility"], errors)
        return
    if "road" in data:
        try:
            centers = {int(c["cell_id"]): (float(c["x"]), float(c["y"])) for c in road_data["cells"]}
            adjacency = {}
            for item in road_data["edges"]:
                src = int(item[0])
                adjacency.setdefault(src, []).append(int(item[1]))
            cfg.road = RoadGraph(
                centers=centers,
                adjacency={c: tuple(adjacency.get(c, ())) for c in centers},
            )
        except (KeyError, TypeError, ValueError):
            errors.append("road: expected cells [{cell_id, x, y}] and edges [[src, dst]]")
            return
    if "mobility" in data:
        cfg.mobility = _parse_mobility(data["mobility"], errors)


def _parse_mobility(data, errors) -> MarkovJumpModel:
    try:
        rows = {
            str(vclass): {
                int(cell): {int(t): float(p) for t, p in row.items()}
                for cell, row in per_cell.items()
            }
            for vclass, per_cell in data["rows"].items()
        }
        return MarkovJumpModel(rows=rows)
    except (KeyError, TypeError, ValueError, AttributeError):
        errors.append('mobility: expected {"rows": {velocity_class: {cell: {target: prob}}}}')
        return line_graph(5)[1]


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read, parse, and fully validate a scenario file."""
    p = Path(path)
    try:
        raw = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{p}: unreadable ({exc})"])
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{p}: not valid JSON ({exc})"])
    if not isinstance(data, dict):
        raise ConfigError([f"{p}: top level must be an object"])
    cfg = scenario_from_dict(data)
    problems = validate_scenario(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, object]) -> ScenarioConfig:
    """Apply dotted-path overrides like {"bandit.enabled": True} in place."""
    errors = []
    for dotted, value in overrides.items():
        target = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not hasattr(target, part):
                errors.append(f"{dotted}: no such section {part!r}")
                break
            target = getattr(target, part)
        else:
            leaf = parts[-1]
            if not hasattr(target, leaf):
                errors.append(f"{dotted}: no such field {leaf!r}")
                continue
            current = getattr(target, leaf)
            if isinstance(current, tuple) and isinstance(value, list):
                value = tuple(value)
            setattr(target, leaf, value)
    if errors:
        raise ConfigError(errors)
    return cfg
