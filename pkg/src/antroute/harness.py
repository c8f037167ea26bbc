"""Scenario orchestration: traffic schedules, replications, aggregation.

A scenario bundles a topology source, a traffic matrix, the algorithm
parameter block and the run schedule.  Scenarios live in a small
line-oriented text format (``key value...``, ``#`` comments); a set of
named presets ships with the package.

Replications are independent (seed = base seed + replicate index) and their
aggregation is a pure reduction, so they can be distributed freely; a single
run is strictly sequential.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .ants import AlgoParams, AntSimulation
from .baselines import UnroutableError, reroute_after_prune, spf_routes
from .net import (
    UNLIMITED,
    Flow,
    FlowTable,
    Network,
    build_five_node_demo,
    build_lattice,
    build_nsfnet,
    load_sndlib,
    parse_topology,
)

#: Default coast node sets for the NSFNet traffic matrices (editable per
#: scenario with the ``west``/``east`` keys).
NSFNET_WEST = ("WA", "CA1", "CA2", "UT", "CO")
NSFNET_EAST = ("NY", "NJ", "PA", "MD", "GA", "MI")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    topology: tuple = ("lattice", 8)
    profile: object = None          # preset name, coefficient list, or None
    capacity: float = UNLIMITED
    mu_ref: float = 1.0
    traffic: str = "auto"           # auto | demands | coast2coast | intracoast
    rate: float = 1.0
    west: tuple = NSFNET_WEST
    east: tuple = NSFNET_EAST
    iterations: int = 1000
    replications: int = 1
    seed: int = 1
    stages: int = 1
    stage_interval: int = 0
    mode: str = "ant"               # ant | prune
    spf_tie: str = "count"
    params: AlgoParams = field(default_factory=AlgoParams)
    base_dir: str = ""

    def updated(self, **kw):
        return replace(self, **kw)


# --------------------------------------------------------------------------
# scenario text format


_SCALARS = {
    "rate": float,
    "mu-ref": float,
    "iterations": int,
    "replications": int,
    "seed": int,
    "stages": int,
    "stage-interval": int,
}


def parse_scenario(text: str, name: str = "scenario", base_dir: str = "") -> Scenario:
    fields = {"name": name, "base_dir": base_dir}
    params = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if not rest:
            raise ScenarioError(f"line {lineno}: key {key!r} has no value")
        if key == "name":
            fields["name"] = rest[0]
        elif key == "topology":
            fields["topology"] = _parse_topology_spec(rest, lineno)
        elif key == "profile":
            fields["profile"] = rest[0] if len(rest) == 1 else [float(v) for v in rest]
        elif key == "capacity":
            fields["capacity"] = UNLIMITED if rest[0] in ("inf", "unlimited") else float(rest[0])
        elif key == "traffic":
            if rest[0] not in ("auto", "demands", "coast2coast", "intracoast"):
                raise ScenarioError(f"line {lineno}: unknown traffic kind {rest[0]!r}")
            fields["traffic"] = rest[0]
        elif key in ("west", "east"):
            fields[key] = tuple(rest)
        elif key == "mode":
            if rest[0] not in ("ant", "prune"):
                raise ScenarioError(f"line {lineno}: unknown mode {rest[0]!r}")
            fields["mode"] = rest[0]
        elif key == "spf-tie":
            if rest[0] not in ("count", "lex"):
                raise ScenarioError(f"line {lineno}: unknown spf tie-break {rest[0]!r}")
            fields["spf_tie"] = rest[0]
        elif key in _SCALARS:
            try:
                fields[key.replace("-", "_")] = _SCALARS[key](rest[0])
            except ValueError:
                raise ScenarioError(f"line {lineno}: bad value for {key}: {rest[0]!r}") from None
        elif key in AlgoParams.KEYS:
            params[key] = rest[0]
        else:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
    try:
        fields["params"] = AlgoParams.from_dict(params)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    s = Scenario(**fields)
    if s.replications < 1 or s.iterations < 1:
        raise ScenarioError("iterations and replications must be >= 1")
    return s


def _parse_topology_spec(rest, lineno):
    kind = rest[0]
    if kind == "lattice":
        if len(rest) != 2:
            raise ScenarioError(f"line {lineno}: topology lattice needs a size")
        return ("lattice", int(rest[1]))
    if kind == "nsfnet":
        return ("nsfnet",)
    if kind == "fivenode":
        return ("fivenode",)
    if kind in ("file", "sndlib"):
        if len(rest) != 2:
            raise ScenarioError(f"line {lineno}: topology {kind} needs a path")
        return (kind, rest[1])
    raise ScenarioError(f"line {lineno}: unknown topology {kind!r}")


def preset_names():
    root = resources.files("antroute.data").joinpath("scenarios")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def load_scenario(name_or_path: str) -> Scenario:
    """Resolve a preset name or a file path to a Scenario."""
    if os.path.exists(name_or_path):
        with open(name_or_path) as fh:
            text = fh.read()
        name = os.path.splitext(os.path.basename(name_or_path))[0]
        return parse_scenario(text, name=name, base_dir=os.path.dirname(name_or_path))
    bundle = resources.files("antroute.data").joinpath(f"scenarios/{name_or_path}.scn")
    if bundle.is_file():
        return parse_scenario(bundle.read_text(), name=name_or_path)
    raise FileNotFoundError(f"no scenario file or preset named {name_or_path!r}")


def apply_overrides(s: Scenario, overrides: dict) -> Scenario:
    """Apply ``--param key=value`` style overrides to a scenario."""
    fields = {}
    params = s.params
    for key, value in overrides.items():
        if key in AlgoParams.KEYS:
            params = params.updated(
                **{key: int(value) if key == "max_hops" else float(value)}
            )
        elif key in ("iterations", "replications", "seed", "stages", "stage_interval"):
            fields[key] = int(value)
        elif key == "rate":
            fields[key] = float(value)
        elif key == "profile":
            fields[key] = value
        elif key == "spf_tie":
            fields["spf_tie"] = value
        else:
            raise ScenarioError(f"unknown override {key!r}")
    return s.updated(params=params, **fields)


# --------------------------------------------------------------------------
# instance construction


def build_instance(s: Scenario):
    """Materialize the scenario's network and flow list."""
    kind = s.topology[0]
    demand_flows = None
    if kind == "lattice":
        net = build_lattice(s.topology[1], capacity=s.capacity, mu_ref=s.mu_ref)
    elif kind == "nsfnet":
        net = build_nsfnet(capacity=s.capacity, mu_ref=s.mu_ref)
    elif kind == "fivenode":
        net = build_five_node_demo()
    elif kind == "file":
        path = _resolve(s, s.topology[1])
        with open(path) as fh:
            net = parse_topology(fh.read(), mu_ref=s.mu_ref)
    elif kind == "sndlib":
        net, demand_flows = load_sndlib(_resolve(s, s.topology[1]), mu_ref=s.mu_ref)
    else:
        raise ScenarioError(f"unknown topology kind {kind!r}")

    if s.profile is not None:
        net = net.with_profile(s.profile)

    if s.traffic == "demands":
        if demand_flows is None:
            raise ScenarioError("traffic 'demands' requires an sndlib topology")
        flows = demand_flows
    elif s.traffic == "auto":
        if net.sources and net.sinks:
            pairs = [(a, b) for a in net.sources for b in net.sinks if a != b]
        else:
            pairs = [(a, b) for a in net.edge_nodes for b in net.edge_nodes if a != b]
        flows = [Flow(i, a, b, s.rate) for i, (a, b) in enumerate(pairs)]
    elif s.traffic in ("coast2coast", "intracoast"):
        west = [net.index_of(n) for n in s.west]
        east = [net.index_of(n) for n in s.east]
        if s.traffic == "coast2coast":
            pairs = [(a, b) for a in west for b in east]
            pairs += [(a, b) for a in east for b in west]
        else:
            pairs = [(a, b) for a in west for b in west if a != b]
            pairs += [(a, b) for a in east for b in east if a != b]
        flows = [Flow(i, a, b, s.rate) for i, (a, b) in enumerate(pairs)]
    else:
        raise ScenarioError(f"unknown traffic kind {s.traffic!r}")

    if s.stages > 1:
        interval = s.stage_interval if s.stage_interval > 0 else max(1, s.iterations // (2 * s.stages))
        flows = [
            replace_flow(f, active_from=(i % s.stages) * interval)
            for i, f in enumerate(flows)
        ]
    return net, flows


def replace_flow(f: Flow, **kw) -> Flow:
    data = {"id": f.id, "src": f.src, "dst": f.dst, "rate": f.rate, "active_from": f.active_from}
    data.update(kw)
    return Flow(**data)


def _resolve(s: Scenario, path: str) -> str:
    if os.path.isabs(path) or os.path.exists(path):
        return path
    if s.base_dir:
        candidate = os.path.join(s.base_dir, path)
        if os.path.exists(candidate):
            return candidate
    return path  # bundled-data fallback happens in the loader


# --------------------------------------------------------------------------
# metrics


@dataclass
class RunMetrics:
    """Per-iteration series of one simulation run.

    ``savings`` is 1 - power/spf_power per iteration (0 when the reference
    power is not positive); the "final" accessors average the last tenth of
    the iterations.
    """

    scenario: str
    seed: int
    power: np.ndarray
    spf_power: np.ndarray
    savings: np.ndarray
    avg_path_len: np.ndarray
    spf_avg_len: np.ndarray
    adoptions: np.ndarray
    rejections: np.ndarray
    aborted: np.ndarray

    @property
    def n_iterations(self) -> int:
        return len(self.power)

    def _tail(self):
        return slice(max(0, self.n_iterations - max(1, self.n_iterations // 10)), None)

    def final_savings(self) -> float:
        return float(np.mean(self.savings[self._tail()])) if self.n_iterations else 0.0

    def final_power(self) -> float:
        return float(np.mean(self.power[self._tail()])) if self.n_iterations else 0.0

    def final_path_len(self) -> float:
        return float(np.mean(self.avg_path_len[self._tail()])) if self.n_iterations else 0.0

    def final_spf_len(self) -> float:
        return float(np.mean(self.spf_avg_len[self._tail()])) if self.n_iterations else 0.0

    def length_increment(self) -> float:
        ref = self.final_spf_len()
        return self.final_path_len() / ref - 1.0 if ref > 0 else 0.0


def convergence_iterations(m: RunMetrics, threshold: float):
    """First iteration whose savings reach ``threshold`` times the final
    savings; None when the run never saves power."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    final = m.final_savings()
    if final <= 0.0:
        return None
    hits = np.nonzero(m.savings >= threshold * final)[0]
    return int(hits[0]) if len(hits) else None


def link_occupation_histogram(table: FlowTable) -> dict:
    """Map flow-count -> number of links carrying that many flows (bin 0
    counts the unused links)."""
    counts = table.link_flow_counts()
    hist = {}
    for c in counts:
        hist[int(c)] = hist.get(int(c), 0) + 1
    return hist


# --------------------------------------------------------------------------
# running


def run_scenario(s: Scenario, seed=None) -> RunMetrics:
    """Execute one replication.  Flows active at iteration 0 start on their
    hop-count routes; later stages join on theirs when due.  Infeasible
    scenarios (unreachable flows, bootstrap overload) fail before iteration
    zero."""
    if seed is None:
        seed = s.seed
    net, flows = build_instance(s)
    try:
        spf = spf_routes(net, flows, tie=s.spf_tie)
    except UnroutableError as exc:
        raise ScenarioError(str(exc)) from None
    _check_bootstrap_fits(net, spf)

    spf_power_by_iter, spf_len_by_iter = _reference_series(net, flows, spf, s.iterations)
    sim = AntSimulation(net, flows, s.params, seed=seed, bootstrap=spf)
    res = sim.run(s.iterations)

    power = res["power"]
    with np.errstate(divide="ignore", invalid="ignore"):
        savings = np.where(spf_power_by_iter > 0, 1.0 - power / spf_power_by_iter, 0.0)
    return RunMetrics(
        scenario=s.name,
        seed=int(seed),
        power=power,
        spf_power=spf_power_by_iter,
        savings=savings,
        avg_path_len=res["avg_path_len"],
        spf_avg_len=spf_len_by_iter,
        adoptions=res["adoptions"],
        rejections=res["rejections"],
        aborted=res["aborted"],
    )


def _check_bootstrap_fits(net: Network, spf: FlowTable):
    loads = spf.loads()
    for link in net.links:
        if math.isfinite(link.capacity) and loads[link.index] > link.capacity * (1 + 1e-12) + 1e-9:
            raise ScenarioError(
                f"hop-count bootstrap overloads link "
                f"({net.nodes[link.src].name}->{net.nodes[link.dst].name}): "
                f"{loads[link.index]:g} > {link.capacity:g}"
            )


def _reference_series(net, flows, spf: FlowTable, iterations: int):
    """Per-iteration reference power and mean route length of the hop-count
    routing over the currently active flows."""
    starts = sorted({max(0, f.active_from) for f in flows})
    power = np.zeros(iterations, dtype=np.float64)
    length = np.zeros(iterations, dtype=np.float64)
    from .power import network_power

    for t0 in starts:
        active = [f for f in flows if max(0, f.active_from) <= t0]
        sub = FlowTable(net, active, {f.id: spf.paths[f.id] for f in active})
        p = network_power(net, sub.loads())
        l = sub.mean_path_length()
        t1 = min(iterations, min((x for x in starts if x > t0), default=iterations))
        if t0 < iterations:
            power[t0:t1] = p
            length[t0:t1] = l
    return power, length


@dataclass
class ReplicationSummary:
    """Across-replication aggregate: mean and 95% half-width per metric
    (normal approximation; the half-width is None below two replications)."""

    n_reps: int
    savings: tuple
    path_len: tuple
    length_increment: tuple
    power: tuple
    conv90: tuple
    conv99: tuple
    conv90_values: list
    conv99_values: list
    savings_values: list

    @staticmethod
    def _agg(values):
        vals = [v for v in values if v is not None]
        if not vals:
            return (None, None)
        mean = float(np.mean(vals))
        if len(vals) < 2:
            return (mean, None)
        half = 1.96 * float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
        return (mean, half)


def replicate(s: Scenario, progress=None):
    """Run ``s.replications`` independent replications (seeds base+k) and
    aggregate.  Returns ``(runs, summary)``."""
    runs = []
    for k in range(s.replications):
        runs.append(run_scenario(s, seed=s.seed + k))
        if progress is not None:
            progress(k + 1, s.replications)
    conv90 = [convergence_iterations(r, 0.9) for r in runs]
    conv99 = [convergence_iterations(r, 0.99) for r in runs]
    savings = [r.final_savings() for r in runs]
    summary = ReplicationSummary(
        n_reps=len(runs),
        savings=ReplicationSummary._agg(savings),
        path_len=ReplicationSummary._agg([r.final_path_len() for r in runs]),
        length_increment=ReplicationSummary._agg([r.length_increment() for r in runs]),
        power=ReplicationSummary._agg([r.final_power() for r in runs]),
        conv90=ReplicationSummary._agg(conv90),
        conv99=ReplicationSummary._agg(conv99),
        conv90_values=conv90,
        conv99_values=conv99,
        savings_values=savings,
    )
    return runs, summary


# --------------------------------------------------------------------------
# pruning comparison


@dataclass
class PruneComparison:
    spf_power: float
    pruned_power: float
    n_links_before: int
    n_links_after: int

    @property
    def ratio(self) -> float:
        return self.pruned_power / self.spf_power

    @property
    def increase(self) -> float:
        return self.ratio - 1.0


def run_prune_compare(s: Scenario) -> PruneComparison:
    """Compare hop-count routing power on the full network against the
    network pruned to each node's most used outgoing link."""
    net, flows = build_instance(s)
    flows = [replace_flow(f, active_from=0) for f in flows]
    try:
        spf = spf_routes(net, flows, tie=s.spf_tie)
        pruned_net, pruned_table = reroute_after_prune(net, spf)
    except UnroutableError as exc:
        raise ScenarioError(str(exc)) from None
    return PruneComparison(
        spf_power=spf.power(),
        pruned_power=pruned_table.power(),
        n_links_before=net.n_links,
        n_links_after=pruned_net.n_links,
    )
