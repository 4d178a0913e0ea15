"""Scenario wiring: builds entities from a config and runs the slot loop.

One Simulation owns all mutable state (vehicle positions, beliefs, caches,
cipher sessions, learners) and registers one handler per phase on the slot
engine. Everything iterates in sorted entity order, and every random draw
comes from an entity-scoped stream, so a fixed seed fixes the whole trace.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from vecsim import channel, cipher, clustering, control_plane, ecorouting, edge, mac, mobility, predictor
from vecsim.config import ConfigError, ScenarioConfig, validate_scenario
from vecsim.kernel import Phase, SlotEngine, SlotTime
from vecsim.metrics import DecisionRecord, MetricsReport, PacketRecord
from vecsim.rng import RngStream


@dataclass
class VehicleRuntime:
    """Per-vehicle mutable state across slots."""

    mobility: mobility.MobilityState
    bandit: Optional[mac.BanditState] = None
    last_outcome: Optional[mac.DecodeOutcome] = None
    last_replicas: Optional[int] = None
    cluster: Optional[clustering.VirtualCluster] = None
    selection: Optional[mac.CtuSelection] = None
    packet: Optional[mac.UplinkPacket] = None
    assoc_true: Optional[predictor.AssociationVector] = None
    assoc_an: Optional[predictor.AssociationVector] = None
    belief: Optional[predictor.PosteriorBelief] = None
    predicted: dict[int, tuple[int, ...]] = field(default_factory=dict)
    serving_an: Optional[int] = None
    window_self: deque = field(default_factory=deque)
    window_an: deque = field(default_factory=deque)
    session_self: Optional[cipher.CipherState] = None
    session_an: Optional[cipher.CipherState] = None
    session_an_id: Optional[int] = None
    session_generation: int = 0
    session_resyncs: int = 0
    session_compromised: bool = False


@dataclass
class AnRuntime:
    """Per-access-network mutable state."""

    cache: edge.CacheState
    ledger: edge.EnergyLedger
    queued_cycles: float = 0.0
    learner: Optional[ecorouting.QLearner] = None
    pending: Optional[tuple] = None
    request_counts: dict[int, int] = field(default_factory=dict)
    slot_energy: float = 0.0


class Simulation:
    def __init__(self, cfg: ScenarioConfig):
        problems = validate_scenario(cfg)
        if problems:
            raise ConfigError(problems)
        self.cfg = cfg
        self.root = RngStream(cfg.seed, "root")
        self.engine = SlotEngine(cfg.horizon, cfg.slot_duration)
        self._streams: dict[str, RngStream] = {}

        self.ap_ids = sorted(a.ap_id for a in cfg.aps)
        self.an_ids = sorted(a.an_id for a in cfg.ans)
        self.ap_owner = cfg.ap_owner()
        self.ap_specs = {a.ap_id: a for a in cfg.aps}
        self.an_specs = {a.an_id: a for a in cfg.ans}
        self.ap_col = {ap: i for i, ap in enumerate(self.ap_ids)}
        self.n_aps = len(self.ap_ids)
        self.fronthaul = {
            ap: channel.SignalQuality(self.ap_specs[ap].fronthaul_snr_db) for ap in self.ap_ids
        }

        # Static geometry: cells and APs never move, so SNRs are a table.
        positions = cfg.ap_positions()
        self.cell_sq: dict[int, dict[int, channel.SignalQuality]] = {}
        self.cell_candidates: dict[int, list[tuple[int, float]]] = {}
        for cell in cfg.road.cells:
            center = cfg.road.centers[cell]
            self.cell_sq[cell] = {
                ap: channel.signal_quality(center, positions[ap], cfg.channel) for ap in self.ap_ids
            }
            self.cell_candidates[cell] = channel.candidate_aps(
                center, positions, cfg.channel, cfg.snr_threshold_db
            )

        self.pool = cfg.ctu_pool
        self.curve = mac.BlerCurve(cfg.mac.bler_alpha, dict(cfg.mac.bler_beta))

        self.rows: dict[tuple[str, int], tuple[list[int], list[float]]] = {}
        for vclass in sorted(cfg.mobility.rows):
            for cell in cfg.road.cells:
                self.rows[(vclass, cell)] = mobility.row_arrays(cfg.mobility, vclass, cell)

        self.cells = list(cfg.road.cells)
        self.transitions = {
            vclass: cfg.mobility.transition_matrix(vclass, self.cells)
            for vclass in sorted(cfg.mobility.rows)
        }
        self.obs_model = self._build_observation_model()

        self.sched_by_slot: dict[int, dict[int, str]] = {}
        for slot, vid, vclass in cfg.velocity_schedule:
            self.sched_by_slot.setdefault(slot, {})[vid] = vclass

        self.vehicles: dict[int, VehicleRuntime] = {}
        for spec in sorted(cfg.vehicles, key=lambda v: v.vehicle_id):
            vr = VehicleRuntime(
                mobility=mobility.MobilityState(spec.cell, spec.velocity_class),
            )
            if cfg.bandit.enabled:
                vr.bandit = mac.BanditState(
                    r_max=cfg.bandit.r_max,
                    epsilon=cfg.bandit.epsilon,
                    cost_per_replica=cfg.bandit.cost_per_replica,
                )
            vr.belief = predictor.uniform_belief(spec.vehicle_id, len(self.cells))
            vr.window_self = deque(maxlen=cfg.cipher.window)
            vr.window_an = deque(maxlen=cfg.cipher.window)
            self.vehicles[spec.vehicle_id] = vr

        self.actions = [
            (rank, p)
            for rank in range(cfg.downlink.ap_ranks)
            for p in range(len(cfg.downlink.power_levels_w))
        ]
        ec = cfg.edge_compute
        self.cparams = edge.ComputeParams(
            cpu_rate=ec.cpu_rate,
            cloud_rate=ec.cloud_rate,
            backhaul_rtt=ec.backhaul_rtt,
            backhaul_rate=ec.backhaul_rate,
            joules_per_cycle=ec.joules_per_cycle,
            joules_per_bit=ec.joules_per_bit,
        )
        self.ans: dict[int, AnRuntime] = {}
        for an_id in self.an_ids:
            spec = self.an_specs[an_id]
            ar = AnRuntime(
                cache=edge.CacheState(an_id, spec.storage_capacity),
                ledger=edge.EnergyLedger(an_id, ec.energy_budget_per_slot, ec.tradeoff_v),
            )
            if cfg.downlink.policy == "eco":
                ar.learner = ecorouting.QLearner(
                    owner_an=an_id,
                    actions=list(self.actions),
                    eta=cfg.downlink.eta,
                    gamma=cfg.downlink.gamma,
                    epsilon=cfg.downlink.epsilon,
                )
            self.ans[an_id] = ar

        self.catalog: dict[int, edge.Service] = {}
        for svc in ec.services:
            s = edge.Service(
                service_id=int(svc["service_id"]),
                size=float(svc["size"]),
                cycles_per_task=float(svc["cycles_per_task"]),
                popularity=float(svc.get("popularity", 1.0)),
            )
            self.catalog[s.service_id] = s
        self.service_order = sorted(self.catalog)
        pop_total = sum(self.catalog[s].popularity for s in self.service_order)
        self.service_cum: list[float] = []
        acc = 0.0
        for sid in self.service_order:
            acc += self.catalog[sid].popularity / pop_total if pop_total else 0.0
            self.service_cum.append(acc)
        if self.service_cum:
            self.service_cum[-1] = 1.0

        self.topology: Optional[control_plane.ControlTopology] = None
        if cfg.control.enabled:
            self.topology = control_plane.ControlTopology(
                capacity={a: self.an_specs[a].controller_capacity for a in self.an_ids},
                edges={
                    (min(u, v), max(u, v)): (w, c) for u, v, w, c in cfg.control.edges
                },
                kappa=cfg.control.kappa,
            )
            self.topology.validate()

        self.master_keys = {
            vid: cipher.master_key_for(vid, self.root.substream("cipher-master"))
            for vid in sorted(self.vehicles)
        }

        self.report = MetricsReport(
            scenario_name=cfg.name,
            seed=cfg.seed,
            horizon=cfg.horizon,
            slot_duration=cfg.slot_duration,
            latency_deadline_s=cfg.latency_deadline_s,
        )

        self.stat = {
            "slices_allocated": 0,
            "slices_unsatisfied": 0,
            "downlink_attempts": 0,
            "downlink_delivered": 0,
            "downlink_power_sum": 0.0,
            "downlink_energy_j": 0.0,
            "pred_bits": 0,
            "pred_correct": 0,
            "persist_bits": 0,
            "persist_correct": 0,
            "pred_fallbacks": 0,
            "cipher_messages": 0,
            "cipher_roundtrip_ok": 0,
            "cipher_resyncs": 0,
            "cipher_sessions": 0,
            "cipher_compromised": 0,
            "collision_ctus": 0,
            "mud_resolved_ctus": 0,
        }
        self.replica_hist: dict[int, int] = {}
        self.control_hist: list[dict] = []

        self._register()

    # -- construction helpers -------------------------------------------------

    def _build_observation_model(self) -> predictor.ObservationModel:
        cfg = self.cfg
        if cfg.predictor.observation_matrix is not None:
            return predictor.ObservationModel(
                np.array(cfg.predictor.observation_matrix, dtype=float)
            )
        # P(AP hears vehicle | cell): in the top-k cluster and the one-replica
        # path decodes. AP ids map to likelihood columns in ascending order.
        cell_cols: dict[int, list[tuple[int, float]]] = {}
        success: dict[tuple[int, int], float] = {}
        for cell in self.cells:
            pairs = []
            for ap_id, snr in self.cell_candidates[cell][: cfg.cluster.k_cluster]:
                col = self.ap_col[ap_id]
                eff = mac.effective_snr_db(
                    self.cell_sq[cell][ap_id], self.fronthaul[ap_id], cfg.mac.relay_mode
                )
                pairs.append((col, snr))
                success[(cell, col)] = 1.0 - self.curve.bler(eff, cfg.mac.payload_bits)
            cell_cols[cell] = pairs
        return predictor.derive_observation_model(
            self.cells,
            cell_cols,
            self.n_aps,
            success,
            floor=cfg.predictor.obs_floor,
            ceiling=cfg.predictor.obs_ceiling,
        )

    def _register(self) -> None:
        e = self.engine
        e.register(Phase.MOBILITY, self._phase_mobility)
        e.register(Phase.UPLINK, self._phase_uplink)
        e.register(Phase.RELAY_DECODE, self._phase_relay_decode)
        e.register(Phase.PREDICTION, self._phase_prediction)
        e.register(Phase.DOWNLINK, self._phase_downlink)
        e.register(Phase.CONTROL_PLANE, self._phase_control)
        e.register(Phase.EDGE_COMPUTE, self._phase_edge)
        e.register(Phase.CIPHER, self._phase_cipher)

    def stream(self, label: str) -> RngStream:
        """One cached generator per (purpose, entity); adding entities or
        toggling one subsystem never shifts another subsystem's draws."""
        if label not in self._streams:
            self._streams[label] = self.root.substream(label)
        return self._streams[label]

    def _best_snr_db(self, cell: int, ap: int) -> float:
        return self.cell_sq[cell][ap].snr_db

    # -- phases ---------------------------------------------------------------

    def _phase_mobility(self, t: SlotTime) -> None:
        sched = self.sched_by_slot.get(t.index, {})
        for vid in sorted(self.vehicles):
            vr = self.vehicles[vid]
            vclass = sched.get(vid, vr.mobility.velocity_class)
            targets, cum = self.rows[(vclass, vr.mobility.cell)]
            nxt = mobility.draw_from_row(targets, cum, self.stream(f"mobility/{vid}"))
            vr.mobility = mobility.MobilityState(nxt, vclass)

    def _phase_uplink(self, t: SlotTime) -> None:
        cfg = self.cfg
        for vid in sorted(self.vehicles):
            vr = self.vehicles[vid]
            cands = self.cell_candidates[vr.mobility.cell]
            vr.cluster = clustering.form_cluster(vid, cands, cfg.cluster.k_cluster, t.index)
            if vr.bandit is not None:
                replicas = mac.bandit_select_and_update(
                    vr.bandit, vr.last_outcome, vr.last_replicas, self.stream(f"bandit/{vid}")
                )
                replicas = min(replicas, self.pool.size)
            else:
                replicas = cfg.mac.replicas
            self.replica_hist[replicas] = self.replica_hist.get(replicas, 0) + 1
            vr.packet = mac.UplinkPacket(vid, t.index, cfg.mac.payload_bits)
            vr.last_replicas = replicas
            if vr.cluster.empty:
                vr.selection = None
                continue
            vr.selection = mac.select_ctus(
                vid,
                list(vr.cluster.members),
                replicas,
                self.pool,
                self.stream(f"mac/{vid}"),
                policy=cfg.mac.ctu_policy,
                preconfigured=cfg.mac.preconfigured or None,
            )
            vr.serving_an = self.ap_owner[vr.cluster.members[0]]

    def _phase_relay_decode(self, t: SlotTime) -> None:
        cfg = self.cfg
        selections = [
            self.vehicles[vid].selection
            for vid in sorted(self.vehicles)
            if self.vehicles[vid].selection is not None
        ]
        occupancy = mac.detect_collisions(selections)
        usable: dict[int, set[int]] = {}
        for ctu in sorted(occupancy):
            occupants = occupancy[ctu]
            if len(occupants) > 1:
                self.stat["collision_ctus"] += 1
            resolved = mac.mud_resolve(occupants, cfg.mac.k_max)
            if len(occupants) > 1 and all(resolved.values()):
                self.stat["mud_resolved_ctus"] += 1
            usable[ctu] = {v for v, ok in resolved.items() if ok}

        for vid in sorted(self.vehicles):
            vr = self.vehicles[vid]
            heard_aps: set[int] = set()
            if vr.selection is None:
                outcome = mac.combine([], resolved_by_mud=False)
                paths = 0
            else:
                flags = []
                any_mud = False
                for ctu, ap in zip(vr.selection.ctus, vr.selection.target_aps):
                    if vid not in usable[ctu]:
                        flags.append(False)
                        continue
                    if len(occupancy[ctu]) > 1:
                        any_mud = True
                    ok = mac.decode_path(
                        self.cell_sq[vr.mobility.cell][ap],
                        vr.packet,
                        cfg.mac.relay_mode,
                        self.fronthaul[ap],
                        self.curve,
                        self.stream(f"decode/{vid}"),
                    )
                    flags.append(ok)
                    if ok:
                        heard_aps.add(ap)
                outcome = mac.combine(flags, resolved_by_mud=any_mud)
                paths = len(set(vr.selection.target_aps))
            self.report.packets.append(
                PacketRecord(
                    vehicle_id=vid,
                    emit_slot=t.index,
                    delivered=outcome.combined,
                    delivery_slot=t.index if outcome.combined else None,
                    replicas=vr.last_replicas or 0,
                    paths=paths,
                )
            )
            vr.last_outcome = outcome
            bits = tuple(1 if ap in heard_aps else 0 for ap in self.ap_ids)
            vr.assoc_true = predictor.AssociationVector(vid, t.index, bits)
            flip = cfg.cipher.an_view_flip_prob
            if flip > 0.0:
                noise = self.stream(f"anview/{vid}")
                bits_an = tuple(b ^ (1 if noise.random() < flip else 0) for b in bits)
            else:
                bits_an = bits
            vr.assoc_an = predictor.AssociationVector(vid, t.index, bits_an)

    def _phase_prediction(self, t: SlotTime) -> None:
        cfg = self.cfg
        for vid in sorted(self.vehicles):
            vr = self.vehicles[vid]
            obs = vr.assoc_an
            # Score the predictions aimed at this slot before replacing them:
            # the filter's one-step-ahead bits and the persistence baseline
            # (yesterday's vector repeats), both against today's actual.
            want = vr.predicted.get(t.index)
            if want is not None:
                self.stat["pred_bits"] += self.n_aps
                self.stat["pred_correct"] += sum(1 for a, b in zip(want, obs.bits) if a == b)
            prev = vr.window_an[-1] if vr.window_an else None
            if prev is not None:
                self.stat["persist_bits"] += self.n_aps
                self.stat["persist_correct"] += sum(
                    1 for a, b in zip(prev.bits, obs.bits) if a == b
                )
            if cfg.predictor.policy == "bayes":
                trans = self.transitions[vr.mobility.velocity_class]
                vr.belief, fellback = predictor.update_belief(vr.belief, obs, trans, self.obs_model)
                if fellback:
                    self.stat["pred_fallbacks"] += 1
                vr.predicted[t.index + 1] = predictor.predict_association(
                    vr.belief, trans, self.obs_model, cfg.predictor.threshold, vid, t.index + 1
                ).bits
            else:
                vr.predicted[t.index + 1] = obs.bits
            vr.predicted.pop(t.index - 1, None)

    def _phase_downlink(self, t: SlotTime) -> None:
        cfg = self.cfg
        clusters = [
            self.vehicles[vid].cluster
            for vid in sorted(self.vehicles)
            if self.vehicles[vid].cluster is not None and not self.vehicles[vid].cluster.empty
        ]
        demands = {c.center_vehicle: cfg.cluster.downlink_ctu_demand for c in clusters}
        slices = clustering.allocate_slices(
            clusters,
            self.pool,
            demands,
            {a: self.an_specs[a].power_budget_w for a in self.an_ids},
            self.ap_owner,
        )
        self.stat["slices_allocated"] += sum(len(v) for v in slices.ctus.values())
        self.stat["slices_unsatisfied"] += sum(slices.unsatisfied.values())

        an_load: dict[int, int] = {}
        for c in clusters:
            an = self.ap_owner[c.members[0]]
            an_load[an] = an_load.get(an, 0) + 1

        for vid in sorted(demands):
            vr = self.vehicles[vid]
            if not slices.ctus.get(vid):
                continue                       # no downlink resources this slot
            an_id = self.ap_owner[vr.cluster.members[0]]
            ar = self.ans[an_id]
            key = t.index + 1 if cfg.predictor.downlink_uses_current_slot else t.index
            pred_bits = vr.predicted.get(key)
            if pred_bits is None:
                pred_bits = tuple(
                    1 if ap in vr.cluster.members else 0 for ap in self.ap_ids
                )
            cand_aps = [ap for ap, bit in zip(self.ap_ids, pred_bits) if bit]
            load_b = min(cfg.downlink.load_buckets - 1, an_load.get(an_id, 1) - 1)
            best_snr = self._best_snr_db(vr.mobility.cell, vr.cluster.members[0])
            snr_b = int(best_snr // cfg.downlink.snr_bucket_db)
            state = (load_b, snr_b)

            if ar.learner is not None:
                action = ecorouting.eco_route_step(ar.learner, state, self.stream(f"eco/{an_id}"))
            else:
                action = self.actions[self.stream(f"eco/{an_id}").integers(len(self.actions))]
            rank, p_idx = action
            # Slice power is the hard cap; the learner sees the consequence.
            power_w = min(cfg.downlink.power_levels_w[p_idx], slices.power_w.get(vid, 0.0))
            delivered = False
            if rank < len(cand_aps) and power_w > 0.0:
                ap = cand_aps[rank]
                up_snr = self._best_snr_db(vr.mobility.cell, ap)
                if up_snr >= cfg.snr_threshold_db:
                    delta_db = 10.0 * np.log10(power_w * 1000.0) - cfg.channel.tx_power_dbm
                    dl_snr = up_snr + delta_db
                    p_ok = 1.0 - self.curve.bler(dl_snr, cfg.mac.payload_bits)
                    delivered = self.stream(f"dldecode/{an_id}").random() < p_ok
            energy = power_w * cfg.slot_duration
            self.report.record_energy(an_id, t.index, energy)
            self.stat["downlink_attempts"] += 1
            self.stat["downlink_delivered"] += 1 if delivered else 0
            self.stat["downlink_power_sum"] += power_w
            self.stat["downlink_energy_j"] += energy
            reward = ecorouting.delivery_reward(
                delivered, power_w, cfg.downlink.w_delivery, cfg.downlink.w_power
            )
            if ar.learner is not None:
                if ar.pending is not None:
                    ps, pa, pr = ar.pending
                    ar.learner.update(ps, pa, pr, state)
                ar.pending = (state, action, reward)

    def _phase_control(self, t: SlotTime) -> None:
        cfg = self.cfg
        if not cfg.control.enabled or self.topology is None:
            return
        if t.index % cfg.control.period_slots != 0:
            return
        demands = []
        for vid in sorted(self.vehicles):
            vr = self.vehicles[vid]
            snrs = self.cell_sq[vr.mobility.cell]
            best_ap = max(self.ap_ids, key=lambda a: (snrs[a].snr_db, -a))
            demands.append(
                control_plane.Demand(vid, self.ap_owner[best_ap], cfg.control.rate_per_vehicle)
            )
        entry: dict = {"slot": t.index}
        try:
            placement = control_plane.place_controllers(
                self.topology, demands, cfg.control.latency_bound_s
            )
            routing = control_plane.balance_control_traffic(placement, self.topology, demands)
            target = cfg.control.target_mean_latency_s
            if target is not None and routing.mean_latency > target:
                placement = control_plane.replace_on_feedback(
                    placement,
                    self.topology,
                    demands,
                    routing.mean_latency,
                    target,
                    tighten_factor=cfg.control.tighten_factor,
                    max_iters=cfg.control.max_feedback_iters,
                )
                routing = control_plane.balance_control_traffic(placement, self.topology, demands)
            entry["controllers"] = sorted(placement.controllers)
            entry["exact"] = placement.exact
            entry["mean_latency_s"] = routing.mean_latency
            sync_graph = control_plane.relay_free_controller_graph(
                self.topology, placement.controllers
            )
            views = {
                c: {f"view_{c}": 1, **{f"view_{o}": 0 for o in placement.controllers if o != c}}
                for c in placement.controllers
            }
            rounds, _ = control_plane.sync_controllers(sync_graph, views)
            entry["sync_rounds"] = rounds
            for c in sorted(placement.controllers):
                self.report.decisions.append(
                    DecisionRecord(kind="controller", slot=t.index, an_id=c, decision="open")
                )
        except control_plane.InfeasiblePlacement as exc:
            entry["infeasible"] = exc.binding
        except control_plane.CongestionInfeasible:
            entry["infeasible"] = "congestion"
        self.control_hist.append(entry)

    def _phase_edge(self, t: SlotTime) -> None:
        cfg = self.cfg
        ec = cfg.edge_compute
        if ec.enabled and self.catalog:
            if t.index % ec.recache_period == 0:
                for an_id in self.an_ids:
                    ar = self.ans[an_id]
                    pop = (
                        {sid: float(n) for sid, n in ar.request_counts.items()}
                        if ar.request_counts
                        else {sid: self.catalog[sid].popularity for sid in self.service_order}
                    )
                    ar.cache.cached = edge.decide_cache(self.catalog, pop, ar.cache.capacity)
                    ar.request_counts = {}
            rng = self.stream("edge/tasks")
            for vid in sorted(self.vehicles):
                vr = self.vehicles[vid]
                if rng.random() >= ec.task_arrival_prob:
                    continue
                u = rng.random()
                si = 0
                while si < len(self.service_cum) - 1 and u > self.service_cum[si]:
                    si += 1
                service = self.catalog[self.service_order[si]]
                an_id = vr.serving_an if vr.serving_an is not None else self.an_ids[0]
                ar = self.ans[an_id]
                ar.request_counts[service.service_id] = (
                    ar.request_counts.get(service.service_id, 0) + 1
                )
                task = edge.Task(service.service_id, vid, ec.input_bits, t.index)
                if ec.offload_policy == "always_cloud":
                    lat, en = edge.cloud_cost(task, service, self.cparams)
                    decision = edge.OffloadDecision("cloud", lat, en)
                elif ec.offload_policy == "greedy_local":
                    if service.service_id in ar.cache.cached:
                        lat, en = edge.local_cost(task, service, ar.queued_cycles, self.cparams)
                        decision = edge.OffloadDecision("local", lat, en)
                    else:
                        lat, en = edge.cloud_cost(task, service, self.cparams)
                        decision = edge.OffloadDecision("cloud", lat, en)
                else:
                    decision = edge.decide_offload(
                        task, service, ar.cache, ar.ledger, ar.queued_cycles, self.cparams
                    )
                if decision.where == "local":
                    ar.queued_cycles += service.cycles_per_task
                ar.slot_energy += decision.energy_j
                self.report.decisions.append(
                    DecisionRecord(
                        kind="offload",
                        slot=t.index,
                        an_id=an_id,
                        vehicle_id=vid,
                        service_id=service.service_id,
                        decision=decision.where,
                        latency_s=decision.latency_s,
                        energy_j=decision.energy_j,
                    )
                )
        for an_id in self.an_ids:
            ar = self.ans[an_id]
            ar.queued_cycles = max(0.0, ar.queued_cycles - self.cparams.cpu_rate * cfg.slot_duration)
            edge.settle_slot(ar.ledger, ar.slot_energy)
            self.report.record_energy(an_id, t.index, ar.slot_energy)
            ar.slot_energy = 0.0

    def _phase_cipher(self, t: SlotTime) -> None:
        cfg = self.cfg
        for vid in sorted(self.vehicles):
            vr = self.vehicles[vid]
            vr.window_self.append(vr.assoc_true)
            vr.window_an.append(vr.assoc_an)
            if not cfg.cipher.enabled:
                continue
            an_id = vr.serving_an
            if an_id is None:
                continue
            if vr.session_self is None or vr.session_an_id != an_id:
                pair = cipher.start_session(vid, an_id, self.stream(f"cipher/{vid}"))
                vr.session_self, vr.session_an = pair
                vr.session_an_id = an_id
                vr.session_generation = 0
                vr.session_resyncs = 0
                vr.session_compromised = False
                self.stat["cipher_sessions"] += 1
            if vr.session_compromised:
                continue
            fp_v = cipher.Fingerprint(vid, tuple(vr.window_self))
            fp_a = cipher.Fingerprint(vid, tuple(vr.window_an))
            tag = cipher.integrity_tag(fp_v, vr.session_self.counter)
            n_bits = cfg.mac.payload_bits
            msg = cipher.deterministic_message(vid, t.index, n_bits)
            ct, vr.session_self = cipher.crypt(vr.session_self, fp_v, msg, n_bits)
            self.stat["cipher_messages"] += 1
            if cipher.verify_key(fp_a, tag, vr.session_an):
                pt, vr.session_an = cipher.crypt(vr.session_an, fp_a, ct, n_bits)
                if pt == msg:
                    self.stat["cipher_roundtrip_ok"] += 1
            else:
                vr.session_resyncs += 1
                self.stat["cipher_resyncs"] += 1
                if vr.session_resyncs > cfg.cipher.max_resync:
                    vr.session_compromised = True
                    self.stat["cipher_compromised"] += 1
                    continue
                vr.session_generation += 1
                pair = cipher.resync_session(self.master_keys[vid], fp_a, vr.session_generation)
                vr.session_self, vr.session_an = pair
                # The vehicle adopts the AN-side window out of band.
                vr.window_self = deque(vr.window_an, maxlen=cfg.cipher.window)

    # -- results --------------------------------------------------------------

    def finalize(self) -> MetricsReport:
        r = self.report
        s = self.stat
        attempts = s["downlink_attempts"]
        r.downlink = {
            "attempts": attempts,
            "delivered": s["downlink_delivered"],
            "delivery_rate": (s["downlink_delivered"] / attempts) if attempts else None,
            "mean_power_w": (s["downlink_power_sum"] / attempts) if attempts else None,
            "energy_j": s["downlink_energy_j"],
        }
        r.prediction = {
            "accuracy": (s["pred_correct"] / s["pred_bits"]) if s["pred_bits"] else None,
            "persistence_accuracy": (
                (s["persist_correct"] / s["persist_bits"]) if s["persist_bits"] else None
            ),
            "fallbacks": s["pred_fallbacks"],
            "bits_scored": s["pred_bits"],
        }
        r.control = {"checkpoints": self.control_hist}
        r.edge = self._edge_summary()
        r.cipher = {
            "messages": s["cipher_messages"],
            "roundtrip_ok": s["cipher_roundtrip_ok"],
            "resyncs": s["cipher_resyncs"],
            "sessions": s["cipher_sessions"],
            "compromised": s["cipher_compromised"],
        }
        r.slices = {
            "allocated_ctus": s["slices_allocated"],
            "unsatisfied": s["slices_unsatisfied"],
            "overlaps": 0,     # allocate_slices validates disjointness every slot
        }
        r.bandit = {
            "replica_histogram": {str(k): v for k, v in sorted(self.replica_hist.items())},
            "collision_ctus": s["collision_ctus"],
            "mud_resolved_ctus": s["mud_resolved_ctus"],
        }
        return r

    def _edge_summary(self) -> dict:
        offloads = [d for d in self.report.decisions if d.kind == "offload"]
        local = sum(1 for d in offloads if d.decision == "local")
        n = len(offloads)
        deficits = {a: self.ans[a].ledger.deficit for a in self.an_ids}
        return {
            "tasks": n,
            "local": local,
            "cloud": n - local,
            "local_fraction": (local / n) if n else None,
            "mean_latency_s": (sum(d.latency_s for d in offloads) / n) if n else None,
            "final_deficit_by_an": {str(a): deficits[a] for a in sorted(deficits)},
        }


def run_scenario(cfg: ScenarioConfig) -> MetricsReport:
    """Build a simulation from the config, run it to horizon, return the report."""
    sim = Simulation(cfg)
    sim.engine.run()
    return sim.finalize()
