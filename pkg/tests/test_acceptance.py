"""System-level acceptance gate.

Thirteen criteria covering determinism, the contention and combining
statistics, filter correctness against an independent oracle, placement
optimality, routing and sync behaviour, the energy-drift controller, the
eco downlink policy, the cipher resync path, slice disjointness and the
degenerate deadline case. Each test prints one PASS/FAIL line.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque

import networkx as nx
import numpy as np
import pytest

from vecsim import cipher, cli, clustering, control_plane, edge, mac
from vecsim.channel import SignalQuality
from vecsim.config import scenario_from_dict
from vecsim.control_plane import (
    ControlTopology,
    Demand,
    InfeasiblePlacement,
    Placement,
    balance_control_traffic,
    place_controllers,
    sync_controllers,
)
from vecsim.predictor import (
    AssociationVector,
    ObservationModel,
    PosteriorBelief,
    update_belief,
    uniform_belief,
)
from vecsim.rng import RngStream
from vecsim.simulation import run_scenario

from conftest import load_bundled, scenario_path


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num:02d} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


# --- 1: byte-identical reruns ---------------------------------------------


def test_criterion_01_byte_identical_reruns(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli.main(["run", str(scenario_path("smoke")), "--out", str(out)]) == 0
        outs.append(out)
    same = all(
        (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
        for f in ("packets.csv", "summary.json", "decisions.csv")
    )
    _report(1, same, "two identical runs produced byte-identical output files")


# --- 2: contention probability --------------------------------------------


def test_criterion_02_collision_probability():
    # 3 vehicles each picking 1 of 8 CTUs: P(all distinct) = 336/512
    pool = mac.CtuPool(slots_per_frame=1, freq_blocks=8, sequences=1)
    streams = [RngStream(20260822, f"ctu/{v}") for v in range(3)]
    slots = 100_000
    clear = 0
    for _ in range(slots):
        sels = [mac.select_ctus(v, [0], 1, pool, streams[v]) for v in range(3)]
        if all(len(vs) == 1 for vs in mac.detect_collisions(sels).values()):
            clear += 1
    freq = clear / slots
    err = abs(freq - 0.65625)
    _report(2, err <= 0.005, f"no-collision frequency {freq:.5f} vs 0.65625 (err {err:.5f})")


# --- 3: selection combining -----------------------------------------------


def test_criterion_03_selection_combining():
    # per-path decode probability 0.9, three routes: 1 - 0.1^3 = 0.999
    curve = mac.BlerCurve(alpha=1.0, beta_per_payload={128: 0.0})
    sq = SignalQuality(snr_db=math.log(9.0))
    rng = RngStream(20260822, "combining")
    pkt = mac.UplinkPacket(0, 0, 128)
    trials = 100_000
    wins = 0
    for _ in range(trials):
        flags = [mac.decode_path(sq, pkt, "DF", sq, curve, rng) for _ in range(3)]
        if mac.combine(flags, resolved_by_mud=False).combined:
            wins += 1
    freq = wins / trials
    err = abs(freq - 0.999)
    _report(3, err <= 0.002, f"combined success {freq:.5f} vs 0.999 (err {err:.5f})")


# --- 4: filter vs forward oracle ------------------------------------------


def _forward_oracle(b, P, L, bits):
    n = len(b)
    prior = [sum(b[i] * P[i][j] for i in range(n)) for j in range(n)]
    like = []
    for j in range(n):
        l = 1.0
        for a, bit in enumerate(bits):
            l *= L[j][a] if bit else (1.0 - L[j][a])
        like.append(l)
    unnorm = [prior[j] * like[j] for j in range(n)]
    z = sum(unnorm)
    if z <= 0.0:
        zp = sum(prior)
        return [p / zp for p in prior], True
    return [u / z for u in unnorm], False


def test_criterion_04_filter_matches_oracle():
    rng = np.random.default_rng(1717)
    worst = 0.0
    flags_agree = True
    for _ in range(100):
        n_cells = int(rng.integers(2, 9))
        n_aps = int(rng.integers(1, 5))
        P = rng.random((n_cells, n_cells))
        P /= P.sum(axis=1, keepdims=True)
        L = rng.random((n_cells, n_aps)) * 0.9 + 0.05
        model = ObservationModel(likelihood=L)
        belief = uniform_belief(0, n_cells)
        ref = list(belief.probs)
        for step in range(20):
            bits = tuple(int(b) for b in rng.integers(0, 2, size=n_aps))
            belief, fb = update_belief(belief, AssociationVector(0, step, bits), P, model)
            ref, fb_ref = _forward_oracle(ref, P, L, bits)
            flags_agree = flags_agree and (fb == fb_ref)
            worst = max(worst, max(abs(belief.probs[i] - ref[i]) for i in range(n_cells)))
    _report(4, worst <= 1e-9 and flags_agree, f"100 filter traces, max deviation {worst:.2e}")


# --- 5: prediction beats persistence --------------------------------------


def test_criterion_05_prediction_beats_persistence():
    wins = 0
    detail = []
    for seed in range(10):
        rep = run_scenario(load_bundled("oracle", seed=seed))
        acc = rep.prediction["accuracy"]
        per = rep.prediction["persistence_accuracy"]
        if acc > per:
            wins += 1
        detail.append(f"{acc:.3f}>{per:.3f}")
    _report(5, wins >= 9, f"filter beat persistence on {wins}/10 seeds ({', '.join(detail[:3])} ...)")


# --- 6: placement optimality ----------------------------------------------


def _random_topology(rng, n):
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(v))
        a, b = min(u, v), max(u, v)
        edges[(a, b)] = (float(rng.uniform(0.01, 0.05)), 10.0)
    for _ in range(int(rng.integers(0, n))):
        a, b = sorted(rng.choice(n, size=2, replace=False).tolist())
        if (a, b) not in edges:
            edges[(a, b)] = (float(rng.uniform(0.01, 0.05)), 10.0)
    caps = {i: float(rng.integers(1, 4)) for i in range(n)}
    return ControlTopology(capacity=caps, edges=edges)


def _subset_feasible(topology, demands, subset, dist, bound):
    # unit demands and integer capacities: max-flow integrality applies
    g = nx.DiGraph()
    for d in demands:
        g.add_edge("s", f"v{d.vehicle_id}", capacity=1)
        for c in subset:
            if dist[d.ingress_an][c] <= bound:
                g.add_edge(f"v{d.vehicle_id}", f"c{c}", capacity=1)
    for c in subset:
        g.add_edge(f"c{c}", "t", capacity=int(topology.capacity[c]))
    if "s" not in g or "t" not in g:
        return False
    return nx.maximum_flow_value(g, "s", "t") >= len(demands)


def _brute_force_optimum(topology, demands, bound):
    ans = sorted(topology.capacity)
    dist = topology.all_pairs_latency()
    for k in range(1, len(ans) + 1):
        for subset in itertools.combinations(ans, k):
            if _subset_feasible(topology, demands, subset, dist, bound):
                return k
    return None


def test_criterion_06_placement_optimality():
    rng = np.random.default_rng(3131)
    n = 8
    exact_ok = greedy_close = total = 0
    for _ in range(100):
        topo = _random_topology(rng, n)
        demands = [Demand(v, int(rng.integers(n)), 1.0) for v in range(5)]
        dist = topo.all_pairs_latency()
        pair = [dist[a][b] for a in range(n) for b in range(n) if a < b]
        bound = float(np.median(pair))
        best = _brute_force_optimum(topo, demands, bound)
        try:
            got = len(place_controllers(topo, demands, bound).controllers)
        except InfeasiblePlacement:
            got = None
        if best is None:
            exact_ok += got is None
            continue
        total += 1
        exact_ok += got == best
        greedy = place_controllers(topo, demands, bound, exact_limit=0)
        greedy_close += len(greedy.controllers) <= best + 1
    ok = exact_ok == 100 and greedy_close >= 0.9 * total
    _report(6, ok, f"exact matched brute force {exact_ok}/100, greedy within +1 on {greedy_close}/{total}")


# --- 7: sync rounds equal the diameter ------------------------------------


def _bfs_diameter(neighbors):
    best = 0
    for src in neighbors:
        depth = {src: 0}
        q = deque([src])
        while q:
            u = q.popleft()
            for v in neighbors[u]:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    q.append(v)
        best = max(best, max(depth.values()))
    return best


def test_criterion_07_sync_rounds_equal_diameter():
    rng = np.random.default_rng(909)
    ok = 0
    for _ in range(50):
        n = int(rng.integers(2, 12))
        neighbors = {u: set() for u in range(n)}
        for v in range(1, n):
            u = int(rng.integers(v))
            neighbors[u].add(v)
            neighbors[v].add(u)
        for _ in range(int(rng.integers(0, n))):
            a, b = sorted(rng.choice(n, size=2, replace=False).tolist())
            neighbors[a].add(b)
            neighbors[b].add(a)
        views = {u: {f"k{u}": 1, **{f"k{v}": 0 for v in range(n) if v != u}} for u in range(n)}
        rounds, _ = sync_controllers({u: sorted(vs) for u, vs in neighbors.items()}, views)
        ok += rounds == _bfs_diameter(neighbors)
    _report(7, ok == 50, f"flooding rounds matched the BFS diameter on {ok}/50 graphs")


# --- 8: diamond routing vs exhaustive enumeration -------------------------


def _edge_latency(w, cap, f, kappa):
    return w + kappa * f / (cap - f)


def _diamond_best_split(n, w_top, w_bot, cap, kappa):
    best = None
    for k in range(n + 1):
        top = 2 * k * _edge_latency(w_top, cap, float(k), kappa) if k else 0.0
        bot = 2 * (n - k) * _edge_latency(w_bot, cap, float(n - k), kappa) if n - k else 0.0
        total = top + bot
        if best is None or total < best:
            best = total
    return best


def test_criterion_08_diamond_routing_is_optimal():
    cases = [
        (0.001, 0.001, 8.0, 6, 1e-3),
        (0.001, 0.002, 8.0, 6, 1e-3),
        (0.001, 0.003, 12.0, 4, 1e-3),
        (0.002, 0.002, 8.0, 7, 1e-2),
        (0.001, 0.005, 8.0, 6, 1e-2),
    ]
    worst = 0.0
    for w_top, w_bot, cap, n, kappa in cases:
        topo = ControlTopology(
            capacity={0: 100.0, 1: 100.0, 2: 100.0, 3: 100.0},
            edges={
                (0, 1): (w_top, cap),
                (1, 3): (w_top, cap),
                (0, 2): (w_bot, cap),
                (2, 3): (w_bot, cap),
            },
            kappa=kappa,
        )
        demands = [Demand(v, 0, 1.0) for v in range(n)]
        placement = Placement(frozenset({3}), {v: 3 for v in range(n)}, 1.0, exact=True)
        routing = balance_control_traffic(placement, topo, demands)
        best = _diamond_best_split(n, w_top, w_bot, cap, kappa)
        worst = max(worst, abs(routing.mean_latency * n - best) / best)
    _report(8, worst <= 1e-12, f"diamond routing within {worst:.2e} of enumerated optimum")


# --- 9: energy drift control ----------------------------------------------


def test_criterion_09_energy_drift_keeps_the_budget():
    params = edge.ComputeParams(
        cpu_rate=5e9,
        cloud_rate=5e10,
        backhaul_rtt=0.05,
        backhaul_rate=1e8,
        joules_per_cycle=1e-9,
        joules_per_bit=1e-8,
    )
    svc = edge.Service(service_id=0, size=1.0, cycles_per_task=5e7)
    cache = edge.CacheState(an_id=0, capacity=4.0, cached={0})
    slots = 10_000
    e_bar = 0.03

    led = edge.EnergyLedger(an_id=0, budget_per_slot=e_bar, tradeoff_v=1.0)
    spent = lat = 0.0
    for t in range(slots):
        task = edge.Task(service_id=0, vehicle_id=0, input_bits=1_000_000, arrival_slot=t)
        dec = edge.decide_offload(task, svc, cache, led, 0.0, params)
        spent += dec.energy_j
        lat += dec.latency_s
        edge.settle_slot(led, dec.energy_j)
    avg = spent / slots
    rel = abs(avg - e_bar) / e_bar

    greedy_avg = edge.local_cost(edge.Task(0, 0, 1_000_000, 0), svc, 0.0, params)[1]
    cloud_lat = edge.cloud_cost(edge.Task(0, 0, 1_000_000, 0), svc, params)[0]
    ok = rel <= 0.05 and greedy_avg >= 1.5 * e_bar and lat / slots <= cloud_lat
    _report(
        9,
        ok,
        f"drift avg {avg:.5f} J/slot vs budget {e_bar} (rel {rel:.4f}); "
        f"greedy-local would burn {greedy_avg / e_bar:.2f}x budget; "
        f"latency {lat / slots:.4f} <= cloud {cloud_lat:.4f}",
    )


# --- 10: eco downlink saves energy at equal delivery -----------------------


def test_criterion_10_eco_policy_saves_energy():
    good = 0
    detail = []
    for seed in range(10):
        row = {}
        for policy in ("eco", "random"):
            rep = run_scenario(
                load_bundled("eco_toy", seed=seed, horizon=5000, downlink__policy=policy)
            )
            row[policy] = (rep.downlink["energy_j"], rep.downlink["delivery_rate"])
        e_eco, d_eco = row["eco"]
        e_rnd, d_rnd = row["random"]
        if e_eco < e_rnd and abs(d_eco - d_rnd) <= 0.02:
            good += 1
        detail.append(f"{e_eco:.2f}<{e_rnd:.2f}J")
    _report(10, good == 10, f"eco beat random on {good}/10 seeds ({detail[0]}, ...)")


# --- 11: cipher roundtrip and resync --------------------------------------


def test_criterion_11_cipher_roundtrip_and_resync():
    rng = RngStream(777, "cipher-acc")
    vc, an = cipher.start_session(0, 0, rng)
    fp = cipher.Fingerprint(
        vehicle_id=0,
        window=tuple(AssociationVector(0, s, (1, 0, s % 2)) for s in range(4)),
    )
    roundtrip = True
    for n_bits in range(1, 4097):
        msg = cipher.deterministic_message(0, n_bits, n_bits)
        ct, vc = cipher.crypt(vc, fp, msg, n_bits)
        pt, an = cipher.crypt(an, fp, ct, n_bits)
        if pt != msg or vc.counter != an.counter:
            roundtrip = False
            break

    # one flipped association bit on the AN side must be caught and recovered
    fp_vc = cipher.Fingerprint(
        vehicle_id=0,
        window=tuple(AssociationVector(0, s, (1, 1, 0)) for s in range(4, 8)),
    )
    fp_an = cipher.Fingerprint(
        vehicle_id=0,
        window=tuple(
            AssociationVector(0, s, (1, 1, 0) if s != 6 else (1, 0, 0)) for s in range(4, 8)
        ),
    )
    check = cipher.integrity_tag(fp_vc, vc.counter)
    caught = not cipher.verify_key(fp_an, check, an)
    master = cipher.master_key_for(0, RngStream(777, "master"))
    vc2, an2 = cipher.resync_session(master, fp_an, generation=1)
    msg = cipher.deterministic_message(0, 99, 256)
    ct, vc2 = cipher.crypt(vc2, fp_an, msg, 256)
    pt, an2 = cipher.crypt(an2, fp_an, ct, 256)
    recovered = pt == msg and vc2.counter == an2.counter
    _report(
        11,
        roundtrip and caught and recovered,
        f"roundtrip 1..4096 bits ok={roundtrip}, divergence caught={caught}, resync recovered={recovered}",
    )


# --- 12: slice disjointness across the bundled scenarios -------------------


def test_criterion_12_slices_never_overlap(monkeypatch):
    real = clustering.allocate_slices
    seen = []

    def recorder(*args, **kwargs):
        out = real(*args, **kwargs)
        seen.append(out)
        return out

    monkeypatch.setattr(clustering, "allocate_slices", recorder)
    overlap_free_reports = 0
    for name, horizon in (("smoke", 60), ("degenerate", 120), ("oracle", 150), ("eco_toy", 150)):
        rep = run_scenario(load_bundled(name, horizon=horizon))
        overlap_free_reports += rep.slices["overlaps"] == 0
    overlaps = 0
    for assignment in seen:
        used: set[int] = set()
        for vid in sorted(assignment.ctus):
            for ctu in assignment.ctus[vid]:
                if ctu in used:
                    overlaps += 1
                used.add(ctu)
    ok = overlaps == 0 and overlap_free_reports == 4 and len(seen) > 0
    _report(12, ok, f"{len(seen)} slice allocations across 4 scenarios, {overlaps} overlapping CTUs")


# --- 13: degenerate deadline case ------------------------------------------


def test_criterion_13_degenerate_deadline_fraction(tmp_path):
    out = tmp_path / "degenerate"
    assert cli.main(["run", str(scenario_path("degenerate")), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    frac = summary["packets"]["deadline_hit_fraction"]
    _report(13, frac == 1.0, f"deadline hit fraction {frac!r} (exact equality required)")
