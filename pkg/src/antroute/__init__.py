"""antroute: decentralized ant-based routing for power-aware networks.

The package simulates a routing algorithm in which lightweight agents
explore a directed network, measure the marginal power cost of carrying
each flow across each link, and reinforce per-node next-hop preferences so
that the set of adopted routes drifts toward a low-power configuration for
whatever load-dependent power profile the links have.  A hop-count (SPF)
baseline, an exhaustive optimum oracle for small instances, and a scenario
harness with seeded replications complete the toolkit.

The simulation core is one source file run either as a compiled extension
or as plain Python (``KERNEL_COMPILED`` says which); results are identical
either way.
"""

import os as _os

from ._kernel import KERNEL_COMPILED
from .ants import AlgoParams, AntSimulation, state_footprint
from .baselines import (
    BudgetExceededError,
    UnroutableError,
    exhaustive_optimum,
    prune_to_most_used,
    spf_routes,
)
from .exports import export_dot, run_metrics_csv, summary_csv
from .harness import (
    RunMetrics,
    Scenario,
    ScenarioError,
    build_instance,
    convergence_iterations,
    link_occupation_histogram,
    load_scenario,
    parse_scenario,
    preset_names,
    replicate,
    run_prune_compare,
    run_scenario,
)
from .net import (
    UNLIMITED,
    Flow,
    FlowTable,
    Link,
    Network,
    Node,
    ParseError,
    Path,
    TopologyError,
    build_five_node_demo,
    build_lattice,
    build_nsfnet,
    flows_for,
    import_sndlib,
    parse_topology,
    path_is_valid,
    write_topology,
)
from .power import (
    PROFILES,
    CostProfile,
    LoadDomainError,
    ProfileError,
    eval_cost,
    leave_penalty,
    marginal_cost,
    network_power,
)

if _os.environ.get("ANTROUTE_PURE"):
    from . import kernel_variants as _kv

    _pure = _kv.pure_kernel()
    if _pure is not None:
        from . import ants as _ants
        from . import power as _power

        _ants._kernel = _pure
        _power._kernel = _pure
        KERNEL_COMPILED = False

__version__ = "0.1.0"

__all__ = [
    "AlgoParams",
    "AntSimulation",
    "BudgetExceededError",
    "CostProfile",
    "Flow",
    "FlowTable",
    "KERNEL_COMPILED",
    "Link",
    "LoadDomainError",
    "Network",
    "Node",
    "ParseError",
    "Path",
    "PROFILES",
    "ProfileError",
    "RunMetrics",
    "Scenario",
    "ScenarioError",
    "TopologyError",
    "UNLIMITED",
    "UnroutableError",
    "build_five_node_demo",
    "build_instance",
    "build_lattice",
    "build_nsfnet",
    "convergence_iterations",
    "eval_cost",
    "exhaustive_optimum",
    "export_dot",
    "flows_for",
    "import_sndlib",
    "leave_penalty",
    "link_occupation_histogram",
    "load_scenario",
    "marginal_cost",
    "network_power",
    "parse_scenario",
    "parse_topology",
    "path_is_valid",
    "preset_names",
    "prune_to_most_used",
    "replicate",
    "run_metrics_csv",
    "run_prune_compare",
    "run_scenario",
    "spf_routes",
    "state_footprint",
    "summary_csv",
    "write_topology",
]
