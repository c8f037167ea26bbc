"""Hop-count routing baseline, exact optimum oracle, and link pruning.

The oracle enumerates every unsplittable path assignment, so it only runs
on instances whose assignment space fits a configurable budget.  It refuses
oversized instances outright instead of approximating; that keeps it
trustworthy as ground truth for the heuristic.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

from .net import Flow, FlowTable, Network, Path
from .power import link_cost


class UnroutableError(ValueError):
    """A flow has no usable route in the (possibly pruned) network."""


class BudgetExceededError(RuntimeError):
    """The instance is too large for exhaustive search; not an approximation."""


# --------------------------------------------------------------------------
# shortest-path-first baseline


def hop_distances_to(net: Network, dst: int):
    """BFS hop distance from every node to ``dst`` (-1 when unreachable)."""
    dist = [-1] * net.n_nodes
    dist[dst] = 0
    # reverse adjacency walk
    rev = [[] for _ in range(net.n_nodes)]
    for l in net.links:
        rev[l.dst].append(l.src)
    q = deque([dst])
    while q:
        v = q.popleft()
        for u in rev[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist

def _spf_tree(net: Network, dst: int, tie: str):
    """Deterministic next-hop link toward ``dst`` for every node.

    Candidates are the out-links that stay on some minimum-hop route.  Ties
    break on the number of minimum-hop continuations through the candidate
    (more is better; mirrors destination-rooted route aggregation) and then
    on the lowest neighbor index; ``tie='lex'`` orders by neighbor index
    alone, which yields lexicographically smallest node sequences.
    """
    dist = hop_distances_to(net, dst)
    counts = [0] * net.n_nodes
    counts[dst] = 1
    order = sorted((d, v) for v, d in enumerate(dist) if d > 0)
    nxt = [None] * net.n_nodes
    for _, v in order:
        best = None
        best_key = None
        for link in net.out_links[v]:
            u = link.dst
            if dist[u] != dist[v] - 1:
                continue
            counts[v] += counts[u]
            key = (-counts[u], u) if tie == "count" else u
            if best is None or key < best_key:
                best, best_key = link, key
        nxt[v] = best
    return dist, nxt


def spf_routes(net: Network, flows, tie: str = "count") -> FlowTable:
    """Minimum-hop route assignment, oblivious to power profiles.

    Routing is destination-based and deterministic, hence invariant under
    permutations of the flow list.  Raises UnroutableError naming the first
    flow whose destination cannot be reached.
    """
    trees = {}
    table = FlowTable(net, flows)
    for flow in flows:
        if flow.dst not in trees:
            trees[flow.dst] = _spf_tree(net, flow.dst, tie)
        dist, nxt = trees[flow.dst]
        if dist[flow.src] < 0:
            raise UnroutableError(
                f"flow {flow.id}: no route from {net.nodes[flow.src].name} "
                f"to {net.nodes[flow.dst].name}"
            )
        links = []
        v = flow.src
        while v != flow.dst:
            link = nxt[v]
            links.append(link)
            v = link.dst
        table.assign(flow, Path(links))
    return table


# --------------------------------------------------------------------------
# exhaustive optimum


def simple_paths(net: Network, src: int, dst: int, cap: int):
    """All simple src->dst paths in deterministic (lexicographic) order.

    Raises BudgetExceededError when more than ``cap`` paths exist.
    """
    out = []
    links = []
    on_stack = [False] * net.n_nodes

    def rec(v):
        if v == dst:
            out.append(Path(list(links)))
            if len(out) > cap:
                raise BudgetExceededError(
                    f"more than {cap} simple paths between {src} and {dst}"
                )
            return
        on_stack[v] = True
        for link in net.out_links[v]:
            if not on_stack[link.dst]:
                links.append(link)
                rec(link.dst)
                links.pop()
        on_stack[v] = False

    rec(src)
    return out


def exhaustive_optimum(net: Network, flows, max_states: int = 250_000, path_cap: int = 5000):
    """Globally optimal unsplittable assignment by exhaustive enumeration.

    Enumerates all simple-path combinations, discards capacity-infeasible
    ones, and returns ``(table, power)`` for the exact minimum of the total
    network power.  Refuses (BudgetExceededError) when the assignment space
    exceeds ``max_states``; it never silently approximates.
    """
    flows = list(flows)
    choices = []
    for flow in flows:
        paths = simple_paths(net, flow.src, flow.dst, path_cap)
        if not paths:
            raise UnroutableError(f"flow {flow.id} has no simple path")
        choices.append(paths)

    n_states = 1
    for paths in choices:
        n_states *= len(paths)
        if n_states > max_states:
            raise BudgetExceededError(
                f"assignment space exceeds budget ({n_states} > {max_states} states)"
            )

    order = sorted(range(len(flows)), key=lambda i: len(choices[i]))
    loads = [0.0] * net.n_links
    cost_now = [link_cost(l, 0.0) for l in net.links]
    best_power = math.inf
    best_choice = None
    chosen = [None] * len(flows)

    def place(i, total):
        nonlocal best_power, best_choice
        if total >= best_power:
            return  # monotone non-negative costs: partial sums only grow
        if i == len(order):
            best_power = total
            best_choice = list(chosen)
            return
        fi = order[i]
        flow = flows[fi]
        for path in choices[fi]:
            delta = 0.0
            ok = True
            for link in path.links:
                new_load = loads[link.index] + flow.rate
                if new_load > link.capacity * (1.0 + 1e-12) + 1e-9:
                    ok = False
                    break
                delta += link_cost(link, new_load) - cost_now[link.index]
            if not ok:
                continue
            for link in path.links:
                loads[link.index] += flow.rate
                cost_now[link.index] = link_cost(link, loads[link.index])
            chosen[fi] = path
            place(i + 1, total + delta)
            chosen[fi] = None
            for link in path.links:
                loads[link.index] -= flow.rate
                cost_now[link.index] = link_cost(link, loads[link.index])

    place(0, 0.0)
    if best_choice is None:
        raise UnroutableError("no capacity-feasible assignment exists")

    table = FlowTable(net, flows)
    for flow, path in zip(flows, best_choice):
        table.assign(flow, path)
    # report the exact power of the winning assignment, not the running sum
    return table, table.power()


# --------------------------------------------------------------------------
# power-profile-unaware pruning


def prune_to_most_used(net: Network, spf_table: FlowTable, keep_reverse: bool = True) -> Network:
    """Keep, per node, only the outgoing link carrying the most traffic
    under the given routing (ties: lowest link index).

    With ``keep_reverse`` (default) the reverse direction of every kept
    link survives as well, modeling that a physical link is powered as a
    whole; without it the copy keeps literally one directed link per node.
    """
    loads = spf_table.loads()
    kept = set()
    for node in range(net.n_nodes):
        links = net.out_links[node]
        if not links:
            continue
        best = max(links, key=lambda l: (loads[l.index], -l.index))
        kept.add(best.index)
    if keep_reverse:
        for l in list(net.links):
            if l.index in kept:
                rev = net.link_between(l.dst, l.src)
                if rev is not None:
                    kept.add(rev.index)
    return net.keep_links(kept)


def reroute_after_prune(net: Network, spf_table: FlowTable, keep_reverse: bool = True):
    """Prune to the most-used links, re-run the hop-count routing on the
    remainder, and return ``(pruned_net, pruned_table)``.

    Raises UnroutableError listing every flow that became unroutable; no
    partial result is returned.
    """
    pruned = prune_to_most_used(net, spf_table, keep_reverse=keep_reverse)
    stranded = []
    for flow in spf_table.flows:
        dist = hop_distances_to(pruned, flow.dst)
        if dist[flow.src] < 0:
            stranded.append(flow.id)
    if stranded:
        raise UnroutableError(
            f"{len(stranded)} flows unroutable after pruning: {stranded[:10]}"
        )
    return pruned, spf_routes(pruned, spf_table.flows)
