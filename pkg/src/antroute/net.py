"""Network model: directed graphs, flows, paths and topology construction.

Networks are immutable after construction and safe to share between
concurrently running simulations.  Links are kept sorted by (tail, head)
node index so that the links leaving a node occupy one contiguous range;
the simulation kernel relies on this ordering.

Three topology sources are supported: programmatic generators (switching
lattice, the bundled NSFNet map, the small five-node routing example), a
line-oriented text format, and a read-only subset of the SNDlib native
format (NODES/LINKS/DEMANDS).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .power import PROFILES, CostProfile, network_power, resolve_profile

UNLIMITED = math.inf


class TopologyError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Node:
    index: int
    name: str
    edge: bool = False


@dataclass(frozen=True)
class Link:
    """One directed link.  ``mu`` is the load-normalization divisor: the
    capacity when finite, otherwise the network's reference capacity."""

    index: int
    src: int
    dst: int
    capacity: float
    profile: CostProfile
    mu: float


@dataclass(frozen=True)
class Flow:
    id: int
    src: int
    dst: int
    rate: float
    active_from: int = 0


class Path:
    """An ordered chain of adjacent directed links."""

    __slots__ = ("links",)

    def __init__(self, links):
        self.links = tuple(links)

    def nodes(self):
        if not self.links:
            return ()
        return (self.links[0].src, *(l.dst for l in self.links))

    def link_indices(self):
        return [l.index for l in self.links]

    def __len__(self):
        return len(self.links)

    def __eq__(self, other):
        return isinstance(other, Path) and self.link_indices() == other.link_indices()

    def __hash__(self):
        return hash(tuple(self.link_indices()))

    def __repr__(self):
        return f"Path({'->'.join(str(n) for n in self.nodes())})"


class Network:
    """Directed network with capacity- and profile-annotated links."""

    def __init__(self, node_specs, link_specs, mu_ref=1.0, sources=None, sinks=None):
        """``node_specs``: (name, edge) pairs; ``link_specs``: (src, dst,
        capacity, profile) with node indices.  Links are sorted internally;
        duplicate directed pairs and self-loops are rejected."""
        self.mu_ref = float(mu_ref)
        self.nodes = [Node(i, name, bool(edge)) for i, (name, edge) in enumerate(node_specs)]
        self.name_to_index = {n.name: n.index for n in self.nodes}
        if len(self.name_to_index) != len(self.nodes):
            raise TopologyError("duplicate node names")

        n = len(self.nodes)
        seen = set()
        for src, dst, _cap, _prof in link_specs:
            if not (0 <= src < n and 0 <= dst < n):
                raise TopologyError(f"link endpoint out of range: ({src}, {dst})")
            if src == dst:
                raise TopologyError(f"self-loop at node {src}")
            if (src, dst) in seen:
                raise TopologyError(f"duplicate directed link ({src}, {dst})")
            seen.add((src, dst))

        ordered = sorted(link_specs, key=lambda s: (s[0], s[1]))
        self.links = []
        for i, (src, dst, cap, prof) in enumerate(ordered):
            cap = float(cap)
            if cap <= 0:
                raise TopologyError(f"non-positive capacity on link ({src}, {dst})")
            mu = cap if math.isfinite(cap) else self.mu_ref
            self.links.append(Link(i, src, dst, cap, prof, mu))

        self.link_index = {(l.src, l.dst): l for l in self.links}
        self.out_links = [[] for _ in range(n)]
        for l in self.links:
            self.out_links[l.src].append(l)
        self.edge_nodes = [node.index for node in self.nodes if node.edge]
        self.sources = list(sources) if sources else []
        self.sinks = list(sinks) if sinks else []

    # -- views ------------------------------------------------------------

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_links(self):
        return len(self.links)

    def out_degree(self, node):
        return len(self.out_links[node])

    def neighbors(self, node):
        return [l.dst for l in self.out_links[node]]

    def link_between(self, src, dst):
        return self.link_index.get((src, dst))

    def index_of(self, name):
        try:
            return self.name_to_index[name]
        except KeyError:
            raise TopologyError(f"unknown node name {name!r}") from None

    def csr(self):
        """(out_start, lk_from, lk_to) arrays describing the link ordering."""
        n = self.n_nodes
        out_start = np.zeros(n + 1, dtype=np.int32)
        for l in self.links:
            out_start[l.src + 1] += 1
        np.cumsum(out_start, out=out_start)
        lk_from = np.array([l.src for l in self.links], dtype=np.int32)
        lk_to = np.array([l.dst for l in self.links], dtype=np.int32)
        return out_start, lk_from, lk_to

    # -- derived networks ---------------------------------------------------

    def with_profile(self, profile) -> "Network":
        """Copy of the network with every link's profile replaced."""
        profile = resolve_profile(profile)
        return Network(
            [(n.name, n.edge) for n in self.nodes],
            [(l.src, l.dst, l.capacity, profile) for l in self.links],
            mu_ref=self.mu_ref,
            sources=self.sources,
            sinks=self.sinks,
        )

    def keep_links(self, link_indices) -> "Network":
        """Copy retaining only the given links (same node set)."""
        keep = set(link_indices)
        return Network(
            [(n.name, n.edge) for n in self.nodes],
            [(l.src, l.dst, l.capacity, l.profile) for l in self.links if l.index in keep],
            mu_ref=self.mu_ref,
            sources=self.sources,
            sinks=self.sinks,
        )


class FlowTable:
    """A set of flows with their currently adopted paths."""

    def __init__(self, net: Network, flows, paths=None):
        self.net = net
        self.flows = list(flows)
        self.paths = dict(paths) if paths else {}

    def assign(self, flow: Flow, path: Path):
        self.paths[flow.id] = path

    def path_for(self, flow: Flow) -> Path:
        return self.paths[flow.id]

    def loads(self) -> np.ndarray:
        """Per-link carried traffic induced by the current paths."""
        out = np.zeros(self.net.n_links, dtype=np.float64)
        for flow in self.flows:
            path = self.paths.get(flow.id)
            if path is None:
                continue
            for link in path.links:
                out[link.index] += flow.rate
        return out

    def link_flow_counts(self) -> np.ndarray:
        out = np.zeros(self.net.n_links, dtype=np.int64)
        for flow in self.flows:
            path = self.paths.get(flow.id)
            if path is None:
                continue
            for link in path.links:
                out[link.index] += 1
        return out

    def power(self) -> float:
        return network_power(self.net, self.loads())

    def mean_path_length(self) -> float:
        routed = [len(self.paths[f.id]) for f in self.flows if f.id in self.paths]
        return float(np.mean(routed)) if routed else 0.0

    def leave_penalty_of(self, flow: Flow, link: Link) -> float:
        from .power import leave_penalty

        path = self.paths.get(flow.id)
        if path is None or link.index not in path.link_indices():
            raise ValueError(
                f"flow {flow.id} does not traverse link ({link.src}, {link.dst})"
            )
        return leave_penalty(link, self.loads(), flow)


def path_is_valid(net: Network, flow: Flow, path: Path) -> bool:
    """True iff ``path`` is a simple, adjacent chain of links of ``net``
    going from the flow's origin to its destination."""
    if not path.links:
        return False
    for link in path.links:
        if net.link_between(link.src, link.dst) is None:
            return False
    if path.links[0].src != flow.src or path.links[-1].dst != flow.dst:
        return False
    for a, b in zip(path.links, path.links[1:]):
        if a.dst != b.src:
            return False
    nodes = path.nodes()
    return len(set(nodes)) == len(nodes)


# --------------------------------------------------------------------------
# generators


def _both_directions(pairs, capacity, profile):
    out = []
    for u, v in pairs:
        out.append((u, v, capacity, profile))
        out.append((v, u, capacity, profile))
    return out


def build_lattice(n: int, profile="linear", capacity=UNLIMITED, mu_ref=1.0) -> Network:
    """Regular switching lattice: n rows by n+2 columns.

    Column 0 holds the traffic sources and column n+1 the destinations;
    the n columns in between are switching stages.  Adjacent columns are
    joined by horizontal and (both) diagonal links; vertical links exist
    only inside the switching columns.  All links share one profile and
    capacity.  Any source-to-destination route needs at least n+1 hops.
    """
    if n < 2:
        raise TopologyError(f"lattice needs n >= 2, got {n}")
    profile = resolve_profile(profile)
    cols = n + 2

    def nid(c, r):
        return c * n + r

    node_specs = []
    for c in range(cols):
        for r in range(n):
            if c == 0:
                name, edge = f"src{r}", True
            elif c == cols - 1:
                name, edge = f"dst{r}", True
            else:
                name, edge = f"sw{c}_{r}", False
            node_specs.append((name, edge))
    # Network sorts links; emit in any order
    pairs = []
    for c in range(cols - 1):
        for r in range(n):
            pairs.append((nid(c, r), nid(c + 1, r)))
            if r > 0:
                pairs.append((nid(c, r), nid(c + 1, r - 1)))
            if r < n - 1:
                pairs.append((nid(c, r), nid(c + 1, r + 1)))
    for c in range(1, cols - 1):
        for r in range(n - 1):
            pairs.append((nid(c, r), nid(c, r + 1)))
    return Network(
        node_specs,
        _both_directions(pairs, capacity, profile),
        mu_ref=mu_ref,
        sources=[nid(0, r) for r in range(n)],
        sinks=[nid(cols - 1, r) for r in range(n)],
    )


def build_nsfnet(profile="linear", capacity=UNLIMITED, mu_ref=1.0) -> Network:
    """The classic 14-node, 21-link NSFNet T1 backbone.

    The link list ships as a replaceable data file (data/nsfnet.topo); node
    names follow the usual geographic labels.  Every node is an edge node.
    """
    text = resources.files("antroute.data").joinpath("nsfnet.topo").read_text()
    net = parse_topology(text, mu_ref=mu_ref)
    if profile is not None:
        net = net.with_profile(profile)
    if capacity != UNLIMITED:
        net = Network(
            [(nd.name, nd.edge) for nd in net.nodes],
            [(l.src, l.dst, capacity, l.profile) for l in net.links],
            mu_ref=mu_ref,
            sources=net.sources,
            sinks=net.sinks,
        )
    return net


def build_five_node_demo(profile="log") -> Network:
    """Five-node example with three unit flows into one sink.

    Three sources A, B, C feed the sink T directly or through the relay M;
    every link has capacity 3.  Depending on the profile shape, the optimal
    routing either aggregates the flows onto the A-B-C-T chain or spreads
    them across the relay.
    """
    profile = resolve_profile(profile)
    names = [("A", True), ("B", True), ("C", True), ("M", False), ("T", True)]
    ix = {name: i for i, (name, _) in enumerate(names)}
    pairs = [
        (ix["A"], ix["B"]),
        (ix["B"], ix["C"]),
        (ix["C"], ix["T"]),
        (ix["B"], ix["M"]),
        (ix["C"], ix["M"]),
        (ix["M"], ix["T"]),
    ]
    return Network(
        names,
        _both_directions(pairs, 3.0, profile),
        sources=[ix["A"], ix["B"], ix["C"]],
        sinks=[ix["T"]],
    )


def flows_for(net: Network, rate=1.0) -> list:
    """Unit traffic matrix for a network: every source to every sink when
    the network declares them, otherwise all ordered edge-node pairs."""
    if net.sources and net.sinks:
        pairs = [(s, t) for s in net.sources for t in net.sinks if s != t]
    else:
        pairs = [(s, t) for s in net.edge_nodes for t in net.edge_nodes if s != t]
    return [Flow(i, s, t, rate) for i, (s, t) in enumerate(pairs)]


# --------------------------------------------------------------------------
# custom topology text format


def parse_topology(text: str, mu_ref=1.0) -> Network:
    """Parse the line-oriented topology format.

    Lines: ``node <name> [edge]`` or ``link <from> <to> <capacity|inf>
    <a0> <a1> ...``; ``#`` starts a comment.  Every link line creates both
    directions with a shared capacity and profile.
    """
    node_specs = []
    names = {}
    link_specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "node":
            if len(parts) < 2 or len(parts) > 3:
                raise ParseError("node line needs: node <name> [edge]", lineno)
            name = parts[1]
            edge = False
            if len(parts) == 3:
                if parts[2] != "edge":
                    raise ParseError(f"unexpected token {parts[2]!r}", lineno)
                edge = True
            if name in names:
                raise ParseError(f"duplicate node {name!r}", lineno)
            names[name] = len(node_specs)
            node_specs.append((name, edge))
        elif kind == "link":
            if len(parts) < 5:
                raise ParseError(
                    "link line needs: link <from> <to> <capacity|inf> <a0> [a1 ...]",
                    lineno,
                )
            u, v = parts[1], parts[2]
            for name in (u, v):
                if name not in names:
                    raise ParseError(f"link references unknown node {name!r}", lineno)
            cap = UNLIMITED if parts[3] in ("inf", "unlimited") else _num(parts[3], lineno)
            coefs = [_num(p, lineno) for p in parts[4:]]
            profile = CostProfile(a0=coefs[0], poly=tuple(coefs[1:]))
            link_specs.append((names[u], names[v], cap, profile))
            link_specs.append((names[v], names[u], cap, profile))
        else:
            raise ParseError(f"unknown directive {kind!r}", lineno)
    return Network(node_specs, link_specs, mu_ref=mu_ref)


def _num(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got {token!r}", lineno) from None


def write_topology(net: Network) -> str:
    """Serialize a network to the topology text format.

    Only symmetric networks (every link paired with an identical reverse)
    are expressible; asymmetric ones are rejected.
    """
    lines = []
    for node in net.nodes:
        lines.append(f"node {node.name} edge" if node.edge else f"node {node.name}")
    for l in net.links:
        if l.src > l.dst:
            continue
        rev = net.link_between(l.dst, l.src)
        if rev is None or rev.capacity != l.capacity or rev.profile != l.profile:
            raise TopologyError(
                f"link ({l.src}, {l.dst}) has no matching reverse; not serializable"
            )
        cap = "inf" if not math.isfinite(l.capacity) else _fmt(l.capacity)
        coefs = " ".join(_fmt(c) for c in l.profile.coefficients())
        lines.append(
            f"link {net.nodes[l.src].name} {net.nodes[l.dst].name} {cap} {coefs}"
        )
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# --------------------------------------------------------------------------
# SNDlib native format (read-only subset)

_SEC_RE = re.compile(r"^([A-Z_]+)\s*\(\s*$")


def import_sndlib(text: str, mu_ref=1.0):
    """Import the NODES/LINKS/DEMANDS sections of an SNDlib native file.

    Returns ``(network, flows)``.  Parallel links between a node pair
    collapse to one; capacities are set to unlimited; each demand becomes
    one flow with its demand value as the rate.
    """
    nodes = []
    names = {}
    pair_set = set()
    pairs = []
    flows = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("?"):
            continue
        m = _SEC_RE.match(line)
        if m:
            section = m.group(1)
            continue
        if line == ")":
            section = None
            continue
        if section == "NODES":
            name = line.split()[0]
            if name == "(":
                raise ParseError("malformed node line", lineno)
            if name in names:
                raise ParseError(f"duplicate node {name!r}", lineno)
            names[name] = len(nodes)
            nodes.append((name, True))
        elif section == "LINKS":
            u, v = _parenthesized_pair(line, lineno)
            for name in (u, v):
                if name not in names:
                    raise ParseError(f"link references unknown node {name!r}", lineno)
            a, b = names[u], names[v]
            key = (min(a, b), max(a, b))
            if key in pair_set:
                continue  # parallel links collapse to one
            pair_set.add(key)
            pairs.append((a, b))
        elif section == "DEMANDS":
            u, v = _parenthesized_pair(line, lineno)
            for name in (u, v):
                if name not in names:
                    raise ParseError(f"demand references unknown node {name!r}", lineno)
            tail = line.split(")", 1)[1].split()
            if len(tail) < 2:
                raise ParseError("demand line needs a routing unit and a value", lineno)
            value = _num(tail[1], lineno)
            flows.append(Flow(len(flows), names[u], names[v], value))
        elif section is None:
            continue
        # other sections are ignored
    placeholder = PROFILES["linear"]
    net = Network(nodes, _both_directions(pairs, UNLIMITED, placeholder), mu_ref=mu_ref)
    return net, flows


def _parenthesized_pair(line, lineno):
    m = re.search(r"\(\s*(\S+)\s+(\S+)\s*\)", line)
    if not m:
        raise ParseError("expected '( source target )'", lineno)
    return m.group(1), m.group(2)


def load_sndlib(path_or_name, mu_ref=1.0):
    """Load an SNDlib file from a path, falling back to the bundled data."""
    import os

    if os.path.exists(path_or_name):
        with open(path_or_name) as fh:
            return import_sndlib(fh.read(), mu_ref=mu_ref)
    bundle = resources.files("antroute.data").joinpath(path_or_name)
    if bundle.is_file():
        return import_sndlib(bundle.read_text(), mu_ref=mu_ref)
    raise FileNotFoundError(path_or_name)
