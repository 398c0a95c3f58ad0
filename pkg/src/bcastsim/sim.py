"""Mini-slot and slotted simulation engines, metrics, and random graphs.

Each run owns four independent RNG streams (arrivals, edge activation, class
labels, policy sampling) spawned from one seed, so runs with equal seeds see
identical arrival sample paths regardless of the policy under test.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import CapabilityError, SchedulingError
from .graph import Digraph, broadcast_capacity, tree_packing
from .policies import (MultiClassState, RandomizedTable, assign_class,
                       build_randomized_table, default_eps, max_weight_decide,
                       multiclass_apply, multiclass_decide, randomized_decide,
                       sample_reachable_sequences, static_tree_decide)
from .queues import VirtualQueueState
from .wireless import ActivationFamily, choose_activation, edge_weight

POLICIES = ("max-weight", "multiclass", "static-tree", "randomized")
TIME_MODELS = ("mini-slot", "slotted-wireless")

# Virtual-queue policies key their state by node subsets; cap the width.
MAX_WEIGHT_NODE_LIMIT = 25

_CHUNK_SLOTS = 1024


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: arrival rate in packets per slot, horizon in slots.

    ``classes`` applies to the multiclass policy; ``eps`` and
    ``extra_sequences`` to the randomized one (defaults: half the capacity
    slack, and four sequences per edge). ``burn_in`` defaults to a tenth of
    the horizon.
    """

    lam: float
    horizon: int
    seed: int = 1
    time_model: str = "mini-slot"
    policy: str = "max-weight"
    classes: int = 1
    eps: float | None = None
    extra_sequences: int | None = None
    sample_every: int = 1000
    burn_in: int | None = None

    def validation_errors(self, g: Digraph | None = None,
                          fam: ActivationFamily | None = None) -> list[str]:
        errs = []
        if self.lam < 0:
            errs.append(f"arrival rate must be non-negative, got {self.lam}")
        if self.horizon < 1:
            errs.append(f"horizon must be at least 1 slot, got {self.horizon}")
        if self.sample_every < 1:
            errs.append(f"sample_every must be positive, got {self.sample_every}")
        if self.policy not in POLICIES:
            errs.append(f"unknown policy '{self.policy}' (choose from {', '.join(POLICIES)})")
        if self.time_model not in TIME_MODELS:
            errs.append(f"unknown time model '{self.time_model}'")
        if self.policy == "multiclass" and self.classes < 1:
            errs.append(f"multiclass policy needs classes >= 1, got {self.classes}")
        if self.eps is not None and self.eps <= 0:
            errs.append(f"eps must be positive, got {self.eps}")
        if self.extra_sequences is not None and self.extra_sequences < 1:
            errs.append(f"extra_sequences must be positive, got {self.extra_sequences}")
        if self.burn_in is not None and not 0 <= self.burn_in < self.horizon:
            errs.append(f"burn_in must lie in [0, horizon), got {self.burn_in}")
        if self.time_model == "slotted-wireless":
            if fam is None and g is not None:
                errs.append("slotted-wireless mode requires an activation family")
            if self.policy not in ("max-weight", "multiclass"):
                errs.append(f"policy '{self.policy}' has no slotted-wireless weights")
        elif fam is not None:
            errs.append("activation family only applies to slotted-wireless mode")
        if g is not None:
            if fam is not None and fam.edge_count != g.m:
                errs.append(f"activation family built for {fam.edge_count} edges, graph has {g.m}")
            if self.policy in ("max-weight", "randomized") and g.n > MAX_WEIGHT_NODE_LIMIT:
                errs.append(
                    f"policy '{self.policy}' tracks node subsets and is capped "
                    f"at n={MAX_WEIGHT_NODE_LIMIT}, got n={g.n}")
        return errs


@dataclass(frozen=True)
class Sample:
    slot: int
    admitted: int
    delivered: int
    min_received: int
    received: tuple[int, ...]
    backlog: int


@dataclass(frozen=True)
class RunResult:
    """Per-run time series plus the burn-in-adjusted broadcast rate."""

    config: SimConfig
    node_count: int
    samples: tuple[Sample, ...]
    rate: float
    rand_table: RandomizedTable | None = None


def broadcast_rate(result: RunResult, burn_in: int | None = None) -> float:
    """Slope of the minimum per-node received count after a warm-up window.

    The baseline is the last recorded sample at or before ``burn_in`` slots
    (default: the configured burn-in, else a tenth of the horizon).
    """
    cfg = result.config
    if burn_in is None:
        burn_in = cfg.burn_in if cfg.burn_in is not None else cfg.horizon // 10
    if not 0 <= burn_in < cfg.horizon:
        raise ValueError(f"burn_in must lie in [0, horizon), got {burn_in}")
    base = result.samples[0]
    for sample in result.samples:
        if sample.slot <= burn_in:
            base = sample
        else:
            break
    last = result.samples[-1]
    return (last.min_received - base.min_received) / (last.slot - base.slot)


class _MaxWeightRun:
    def __init__(self, g: Digraph):
        self.state = VirtualQueueState(g)

    def admit(self, count: int):
        self.state.admit(count)

    def on_edge(self, eid: int):
        fset = max_weight_decide(self.state, eid)
        if fset is not None:
            self.state.transmit(fset, eid)

    def edge_weight(self, eid: int) -> int:
        return edge_weight(self.state, eid)

    def received_all(self) -> list[int]:
        st = self.state
        return [st.received_count(v) for v in range(st.graph.n)]

    @property
    def admitted(self):
        return self.state.admitted

    @property
    def delivered(self):
        return self.state.delivered

    def backlog(self):
        return self.state.total_backlog()


class _RandomizedRun(_MaxWeightRun):
    def __init__(self, g: Digraph, table: RandomizedTable, rng: np.random.Generator):
        super().__init__(g)
        self.table = table
        self.rng = rng

    def on_edge(self, eid: int):
        fset = randomized_decide(self.table, self.state, eid, self.rng)
        if fset is not None:
            self.state.transmit(fset, eid)


class _MultiClassRun:
    def __init__(self, g: Digraph, k: int, class_rng: np.random.Generator):
        self.state = MultiClassState(g, k)
        self.class_rng = class_rng

    def admit(self, count: int):
        for _ in range(count):
            self.state.admit_packet(assign_class(self.class_rng, self.state.k))

    def on_edge(self, eid: int):
        c = multiclass_decide(self.state, eid)
        if c is not None:
            multiclass_apply(self.state, c, eid)

    def edge_weight(self, eid: int) -> int:
        return edge_weight(self.state, eid)

    def received_all(self) -> list[int]:
        st = self.state
        return [st.received_count(v) for v in range(st.graph.n)]

    @property
    def admitted(self):
        return self.state.mirror.admitted

    @property
    def delivered(self):
        return self.state.mirror.delivered

    def backlog(self):
        return self.state.mirror.total_backlog()


class _StaticTreeRun(_MultiClassRun):
    def __init__(self, g: Digraph, trees, class_rng: np.random.Generator):
        super().__init__(g, len(trees), class_rng)
        self.trees = trees

    def on_edge(self, eid: int):
        c = static_tree_decide(self.state, self.trees, eid)
        if c is not None:
            multiclass_apply(self.state, c, eid)


def _build_adapter(config: SimConfig, g: Digraph, class_rng, policy_rng):
    table = None
    if config.policy == "max-weight":
        adapter = _MaxWeightRun(g)
    elif config.policy == "multiclass":
        adapter = _MultiClassRun(g, config.classes, class_rng)
    elif config.policy == "static-tree":
        trees = tree_packing(g)
        if not trees:
            raise ValueError("static-tree policy needs broadcast capacity >= 1")
        adapter = _StaticTreeRun(g, trees, class_rng)
    elif config.policy == "randomized":
        trees = tree_packing(g)
        if not trees:
            raise ValueError("randomized policy needs broadcast capacity >= 1")
        eps = config.eps
        if eps is None:
            eps = default_eps(len(trees), config.lam, g.n)
        bprime = config.extra_sequences
        if bprime is None:
            bprime = 4 * g.m
        extra = sample_reachable_sequences(g, bprime, policy_rng)
        table = build_randomized_table(g, trees, extra, eps)
        adapter = _RandomizedRun(g, table, policy_rng)
    else:  # pragma: no cover - caught by validation
        raise ValueError(f"unknown policy '{config.policy}'")
    return adapter, table


def run(config: SimConfig, g: Digraph, fam: ActivationFamily | None = None) -> RunResult:
    """Simulate one run and return its sampled time series.

    Mini-slot mode: every slot is ``m`` mini-slots, each drawing arrivals and
    one uniformly active edge, with at most one transmission. Slotted mode:
    arrivals once per slot, then a max-weight feasible activation forwards at
    most one packet per activated edge, edges applied in ascending id order.
    Fully deterministic given the seed.
    """
    errors = config.validation_errors(g, fam)
    if errors:
        capacity_errs = [e for e in errors if "capped at n=" in e]
        if capacity_errs:
            raise CapabilityError("; ".join(errors))
        raise ValueError("; ".join(errors))

    arr_seq, act_seq, cls_seq, pol_seq = np.random.SeedSequence(config.seed).spawn(4)
    arr_rng = np.random.default_rng(arr_seq)
    act_rng = np.random.default_rng(act_seq)
    cls_rng = np.random.default_rng(cls_seq)
    pol_rng = np.random.default_rng(pol_seq)

    adapter, table = _build_adapter(config, g, cls_rng, pol_rng)

    samples: list[Sample] = []

    def record(slot: int):
        received = adapter.received_all()
        backlog = adapter.backlog()
        if adapter.admitted != adapter.delivered + backlog:
            raise SchedulingError(
                f"conservation violated at slot {slot}: admitted={adapter.admitted} "
                f"delivered={adapter.delivered} backlog={backlog}")
        samples.append(Sample(slot, adapter.admitted, adapter.delivered,
                              min(received), tuple(received), backlog))

    record(0)
    m = g.m
    slot = 0
    if config.time_model == "mini-slot":
        lam_mini = config.lam / m
        while slot < config.horizon:
            chunk = min(_CHUNK_SLOTS, config.horizon - slot)
            arrivals = arr_rng.poisson(lam_mini, size=chunk * m).tolist()
            active = act_rng.integers(0, m, size=chunk * m).tolist()
            idx = 0
            for _ in range(chunk):
                for _ in range(m):
                    a = arrivals[idx]
                    if a:
                        adapter.admit(a)
                    adapter.on_edge(active[idx])
                    idx += 1
                slot += 1
                if slot % config.sample_every == 0 or slot == config.horizon:
                    record(slot)
    else:
        while slot < config.horizon:
            chunk = min(_CHUNK_SLOTS, config.horizon - slot)
            arrivals = arr_rng.poisson(config.lam, size=chunk).tolist()
            for a in arrivals:
                if a:
                    adapter.admit(a)
                weights = [adapter.edge_weight(e) for e in range(m)]
                smask = choose_activation(weights, fam)
                while smask:
                    low = smask & -smask
                    adapter.on_edge(low.bit_length() - 1)
                    smask ^= low
                slot += 1
                if slot % config.sample_every == 0 or slot == config.horizon:
                    record(slot)

    result = RunResult(config, g.n, tuple(samples), 0.0, table)
    return replace(result, rate=broadcast_rate(result))


def random_digraph(n: int, m: int, seed: int) -> Digraph:
    """Random simple digraph: ``m`` distinct node pairs, each given a uniform
    direction (never both), rooted at node 0 and resampled until every node is
    reachable from the root.

    One direction per pair keeps the unit-capacity broadcast capacity within
    n/2, matching the bound used by the tree-count checks.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    max_m = n * (n - 1) // 2
    if not n - 1 <= m <= max_m:
        raise ValueError(f"need n-1 <= m <= n(n-1)/2 = {max_m}, got m={m}")
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    for _ in range(10000):
        chosen = rng.choice(len(pairs), size=m, replace=False)
        flips = rng.integers(0, 2, size=m)
        edges = []
        for idx, flip in zip(chosen.tolist(), flips.tolist()):
            u, v = pairs[idx]
            edges.append((v, u) if flip else (u, v))
        g = Digraph(n, edges, 0)
        if broadcast_capacity(g) >= 1:
            return g
    raise RuntimeError(f"no connected sample found for n={n}, m={m}, seed={seed}")


def sweep_k(g: Digraph, lam: float, k_values: Sequence[int], horizon: int,
            seed: int, sample_every: int = 1000) -> list[tuple[int, float]]:
    """Multiclass broadcast rate per class count, one run each, sharing the
    seed so every run sees the same arrival sample path."""
    if lam >= broadcast_capacity(g):
        raise ValueError("sweep arrival rate must sit below the broadcast capacity")
    rows = []
    for k in k_values:
        cfg = SimConfig(lam=lam, horizon=horizon, seed=seed, policy="multiclass",
                        classes=k, sample_every=sample_every)
        rows.append((k, run(cfg, g).rate))
    return rows


def run_csv(result: RunResult) -> str:
    lines = ["slot,admitted,delivered,min_received,backlog"]
    lines.extend(
        f"{s.slot},{s.admitted},{s.delivered},{s.min_received},{s.backlog}"
        for s in result.samples)
    return "\n".join(lines) + "\n"


def received_csv(result: RunResult) -> str:
    header = "slot," + ",".join(f"recv_{v}" for v in range(result.node_count))
    lines = [header]
    lines.extend(
        f"{s.slot}," + ",".join(str(c) for c in s.received) for s in result.samples)
    return "\n".join(lines) + "\n"


def sweep_csv(rows: Sequence[tuple[int, float]]) -> str:
    lines = ["k,rate"]
    lines.extend(f"{k},{rate:.6f}" for k, rate in rows)
    return "\n".join(lines) + "\n"
