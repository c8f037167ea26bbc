"""Agent-based routing layer: parameters, simulation wrapper, agent math.

The numerical heart lives in :mod:`antroute._kernel` (compiled when built,
interpreted otherwise); this module translates between the domain model
(:class:`~antroute.net.Network`, :class:`~antroute.net.Flow`) and the
kernel's array world, and exposes the individual agent operations in a
form convenient for testing and inspection.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from .net import FlowTable, Network, Path

OUT_ADOPTED = _kernel.OUT_ADOPTED
OUT_KEPT = _kernel.OUT_KEPT
OUT_REJECTED = _kernel.OUT_REJECTED
OUT_ABORTED = _kernel.OUT_ABORTED

recalibrate = _kernel.recalibrate_value
stats_update = _kernel.stats_update


@dataclass(frozen=True)
class AlgoParams:
    """Tunable constants of the routing algorithm.

    ``pi_e`` is the exploration probability of a forward agent; ``alpha``
    the attenuation of the running cost average (> 1); ``eta`` the
    smoothing factor of the cost statistics; ``epsilon``, ``a``, ``b`` and
    ``h`` shape the recalibration of raw cost samples.  ``max_hops`` caps a
    forward walk (0 picks 4*nodes+16).
    """

    pi_e: float = 0.1
    alpha: float = 2.0
    eta: float = 0.1
    epsilon: float = 0.25
    a: float = 10.0
    b: float = 9.0
    h: float = 0.04
    max_hops: int = 0

    KEYS = ("pi_e", "alpha", "eta", "epsilon", "a", "b", "h", "max_hops")

    @classmethod
    def from_dict(cls, mapping):
        known = {k: v for k, v in mapping.items() if k in cls.KEYS}
        unknown = set(mapping) - set(cls.KEYS)
        if unknown:
            raise ValueError(f"unknown algorithm parameters: {sorted(unknown)}")
        numeric = {
            k: (int(v) if k == "max_hops" else float(v)) for k, v in known.items()
        }
        return cls(**numeric)

    def updated(self, **kwargs):
        return replace(self, **kwargs)


@dataclass
class ForwardAgent:
    """Transient forward-walk record (visited nodes and per-hop costs)."""

    flow_id: int
    visited: list = field(default_factory=list)
    hop_costs: list = field(default_factory=list)


def remove_cycle(agent: ForwardAgent, revisited) -> ForwardAgent:
    """Erase the loop closed by re-entering ``revisited``.

    The visited list and the hop costs shrink back to the first occurrence
    of the node, as if the detour had never happened.  Agents without the
    node are returned unchanged.
    """
    if revisited not in agent.visited:
        return agent
    pos = agent.visited.index(revisited)
    return ForwardAgent(
        agent.flow_id, agent.visited[: pos + 1], agent.hop_costs[:pos]
    )


def direct_cost(hop_costs, position) -> float:
    """Sum of the downstream marginal hop costs from ``position`` on.

    ``hop_costs[k]`` is the marginal cost of the link leaving the k-th
    route node; at the destination (position past the last hop) the sum is
    empty and the direct cost is zero.
    """
    return float(sum(hop_costs[position:]))


def indirect_cost_init(gamma, path_links) -> float:
    """Initial indirect cost: total leave penalty over the current path."""
    return float(sum(gamma[link] for link in path_links))


def indirect_cost_step(c_at_j, hop_link, path_links, gamma) -> float:
    """Indirect cost after the backward move across ``hop_link``.

    The penalty of a current-path link is subtracted as the agent passes
    it; other links leave the value unchanged.  A significantly negative
    result means the penalty bookkeeping is broken.
    """
    if hop_link not in path_links:
        return float(c_at_j)
    out = c_at_j - gamma[hop_link]
    if out < -1e-9:
        raise RuntimeError(f"indirect cost went negative ({out}); gamma inconsistent")
    return max(out, 0.0)


def update_goodness(vec, came_index, ra):
    """Return a copy of the preference vector after one reinforcement."""
    out = np.array(vec, dtype=np.float64)
    _kernel.goodness_update(out, came_index, float(ra))
    return out


class AntSimulation:
    """One simulation instance: a network, its flows, and the agent engine.

    Strictly sequential inside; independent instances share nothing and may
    run in parallel.  Identical (network, flows, parameters, seed) produce
    identical results, compiled or not.
    """

    def __init__(self, net: Network, flows, params: AlgoParams | None = None,
                 seed: int = 0, bootstrap: FlowTable | None = None):
        from .baselines import spf_routes

        self.net = net
        self.flows = list(flows)
        self.params = params or AlgoParams()
        self.seed = int(seed)
        if bootstrap is None:
            bootstrap = spf_routes(net, self.flows)
        self.bootstrap = bootstrap
        self.engine = self._build_engine()

    # -- construction -------------------------------------------------------

    def _build_engine(self) -> _kernel.Engine:
        net, flows = self.net, self.flows
        out_start, lk_from, lk_to = net.csr()
        lk_mu = np.array([l.mu for l in net.links], dtype=np.float64)
        lk_cap = np.array([l.capacity for l in net.links], dtype=np.float64)

        profiles = []
        prof_ids = {}
        lk_prof = np.zeros(net.n_links, dtype=np.int32)
        for l in net.links:
            key = (l.profile.a0, l.profile.poly)
            if key not in prof_ids:
                prof_ids[key] = len(profiles)
                profiles.append(l.profile)
            lk_prof[l.index] = prof_ids[key]
        width = max(1, max(len(p.poly) for p in profiles))
        prof_a0 = np.array([p.a0 for p in profiles], dtype=np.float64)
        prof_coef = np.zeros((len(profiles), width), dtype=np.float64)
        prof_deg = np.zeros(len(profiles), dtype=np.int32)
        for i, p in enumerate(profiles):
            coefs = p.poly if p.poly else (0.0,)
            prof_coef[i, : len(coefs)] = coefs
            prof_deg[i] = len(coefs)

        F = len(flows)
        fl_src = np.array([f.src for f in flows], dtype=np.int32)
        fl_dst = np.array([f.dst for f in flows], dtype=np.int32)
        fl_rate = np.array([f.rate for f in flows], dtype=np.float64)
        fl_active = np.array([max(0, f.active_from) for f in flows], dtype=np.int32)
        boot_links = np.zeros((F, net.n_nodes + 1), dtype=np.int32)
        boot_len = np.zeros(F, dtype=np.int32)
        for i, f in enumerate(flows):
            links = self.bootstrap.path_for(f).link_indices()
            boot_len[i] = len(links)
            boot_links[i, : len(links)] = links

        p = self.params
        return _kernel.Engine(
            out_start, lk_from, lk_to, lk_mu, lk_cap, lk_prof,
            prof_a0, prof_coef, prof_deg,
            fl_src, fl_dst, fl_rate, fl_active, boot_links, boot_len,
            self.seed,
            pi_e=p.pi_e, alpha=p.alpha, eta=p.eta, epsilon=p.epsilon,
            a=p.a, b=p.b, h=p.h, max_hops=p.max_hops,
        )

    # -- driving --------------------------------------------------------------

    def run(self, iterations: int) -> dict:
        """Advance the simulation; returns per-iteration metric arrays."""
        return self.engine.run(int(iterations))

    def run_agent(self, flow_index: int, collect: bool = False):
        """Process one agent for the flow at list position ``flow_index``.

        A flow that has not joined yet is first placed on its bootstrap
        route, so single-agent experiments work without driving ``run``.
        """
        if not self.engine.flow_active(flow_index):
            links = self.bootstrap.path_for(self.flows[flow_index]).link_indices()
            self.engine.install_path(flow_index, np.asarray(links, dtype=np.int64))
        return self.engine.run_agent(flow_index, collect)

    def choose_next(self, flow_index: int, node: int):
        """One live next-hop selection; returns the chosen neighbor node."""
        link = self.engine.choose_next(flow_index, node)
        return None if link < 0 else self.net.links[link].dst

    # -- state views ------------------------------------------------------------

    @property
    def iteration(self) -> int:
        return self.engine.counters()["iteration"]

    def loads(self) -> np.ndarray:
        return self.engine.loads_copy()

    def loads_recomputed(self) -> np.ndarray:
        return self.engine.loads_from_scratch()

    def network_power(self) -> float:
        return self.engine.network_power()

    def path_of(self, flow_index: int) -> Path:
        return Path([self.net.links[i] for i in self.engine.path_of(flow_index)])

    def install_path(self, flow_index: int, path) -> None:
        links = path.link_indices() if isinstance(path, Path) else list(path)
        self.engine.install_path(flow_index, np.asarray(links, dtype=np.int64))

    def goodness(self, flow_index: int, node: int) -> dict:
        row = self.engine.goodness_row(flow_index, node)
        return {l.dst: float(g) for l, g in zip(self.net.out_links[node], row)}

    def set_goodness(self, flow_index: int, node: int, by_neighbor: dict) -> None:
        values = [by_neighbor[l.dst] for l in self.net.out_links[node]]
        self.engine.set_goodness_row(flow_index, node, np.asarray(values, dtype=np.float64))

    def goodness_sums(self, flow_index: int) -> np.ndarray:
        """Per-node sums of the flow's preference vectors (1.0 expected)."""
        full = self.engine.goodness_full(flow_index)
        out_start, _, _ = self.net.csr()
        return np.array(
            [full[out_start[i]: out_start[i + 1]].sum() for i in range(self.net.n_nodes)
             if out_start[i + 1] > out_start[i]]
        )

    def stats(self, flow_index: int, node: int):
        return self.engine.stats(flow_index, node)

    def gamma(self, flow_index: int) -> dict:
        arr = self.engine.gamma_of(flow_index)
        return {i: float(v) for i, v in enumerate(arr) if v != 0.0}

    def counters(self) -> dict:
        return self.engine.counters()

    def flow_table(self) -> FlowTable:
        """Snapshot of the currently adopted routes as a FlowTable."""
        table = FlowTable(self.net, self.flows)
        for i, f in enumerate(self.flows):
            if self.engine.flow_active(i):
                table.assign(f, Path([self.net.links[k] for k in self.engine.path_of(i)]))
        return table


def state_footprint(sim: AntSimulation) -> dict:
    """Stored-entry counts per node role, for memory-scaling checks.

    Core nodes hold one preference entry per (flow, outgoing link), two
    cost-statistics per flow, and one traffic estimate per outgoing link.
    Source nodes additionally hold, per originated flow, the rate, the path
    and one leave penalty per path link.  Transient agent state scales with
    the route length: forward agents carry the visited list, the per-hop
    costs and the current path with its penalties.
    """
    net, flows = sim.net, sim.flows
    n_flows = len(flows)
    per_node = {}
    for node in net.nodes:
        deg = net.out_degree(node.index)
        per_node[node.index] = {
            "goodness": n_flows * deg,
            "cost_stats": 2 * n_flows,
            "traffic_estimates": deg,
        }
    per_source = {}
    for i, f in enumerate(flows):
        plen = len(sim.engine.path_of(i)) if sim.engine.flow_active(i) else 0
        entry = per_source.setdefault(f.src, {"rates": 0, "path_entries": 0, "gamma_entries": 0})
        entry["rates"] += 1
        entry["path_entries"] += plen
        entry["gamma_entries"] += plen
    return {"core": per_node, "sources": per_source}


def forward_agent_footprint(route_len: int, path_len: int) -> int:
    """Entries a forward agent carries on an h-hop route: O(h)."""
    return (route_len + 1) + route_len + path_len + path_len
