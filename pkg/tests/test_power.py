import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antroute.net import Flow, Network, UNLIMITED
from antroute.power import (
    PROFILES,
    CostProfile,
    LoadDomainError,
    ProfileError,
    eval_cost,
    leave_penalty,
    link_cost,
    marginal_cost,
    network_power,
    resolve_profile,
)

LOG = PROFILES["log"]
LINEAR = PROFILES["linear"]
CUBIC = PROFILES["cubic"]


def two_node_net(profile, capacity=UNLIMITED, mu_ref=1.0):
    return Network(
        [("a", True), ("b", True)],
        [(0, 1, capacity, profile), (1, 0, capacity, profile)],
        mu_ref=mu_ref,
    )


class TestEvalCost:
    def test_log_profile_at_full_load(self):
        assert eval_cost(LOG, 1.0) == pytest.approx(math.log10(2.0), abs=1e-12)

    def test_cubic_profile_at_half_load(self):
        assert eval_cost(CUBIC, 0.5) == pytest.approx(0.125, abs=1e-15)

    def test_overload_is_infinite_on_capacitated_link(self):
        for prof in (LOG, LINEAR, CUBIC):
            assert eval_cost(prof, 1.2, finite_capacity=True) == math.inf

    def test_overload_allowed_without_capacity(self):
        assert eval_cost(CUBIC, 1.2) == pytest.approx(1.2**3)

    def test_negative_load_rejected(self):
        with pytest.raises(LoadDomainError):
            eval_cost(LOG, -0.1)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    @settings(max_examples=200)
    def test_monotone_on_unit_interval(self, x, y):
        lo, hi = min(x, y), max(x, y)
        for prof in (LOG, LINEAR, CUBIC):
            assert prof.value(hi) >= prof.value(lo) - 1e-12


class TestProfileValidation:
    def test_decreasing_profile_rejected(self):
        with pytest.raises(ProfileError):
            CostProfile(poly=(1.0, -1.0))

    def test_negative_profile_rejected(self):
        with pytest.raises(ProfileError):
            CostProfile(poly=(-0.5, 1.0))

    def test_presets_resolve_by_name(self):
        assert resolve_profile("cubic") is CUBIC
        with pytest.raises(ProfileError):
            resolve_profile("nope")

    def test_coefficient_list_roundtrip(self):
        p = resolve_profile([0.5, 0.0, 1.0])
        assert p.a0 == 0.5 and p.poly == (0.0, 1.0)
        assert p.coefficients() == [0.5, 0.0, 1.0]


class TestMarginalCost:
    def test_joining_empty_link_cubic(self):
        net = two_node_net(CUBIC, capacity=2.0)
        link = net.links[0]
        loads = np.zeros(net.n_links)
        f = Flow(0, 0, 1, 1.0)
        assert marginal_cost(link, loads, f, False) == pytest.approx(0.125)

    def test_share_on_link_already_in_path_cubic(self):
        net = two_node_net(CUBIC, capacity=2.0)
        link = net.links[0]
        loads = np.zeros(net.n_links)
        loads[link.index] = 1.0  # the flow itself
        f = Flow(0, 0, 1, 1.0)
        assert marginal_cost(link, loads, f, True) == pytest.approx(0.125)

    def test_joining_loaded_log_link(self):
        # derived from eval_cost: c(1.0) - c(0.5) on the normalized scale
        net = two_node_net(LOG, capacity=2.0)
        link = net.links[0]
        loads = np.zeros(net.n_links)
        loads[link.index] = 1.0  # other traffic, rho = 0.5
        f = Flow(0, 0, 1, 1.0)
        expected = math.log10(2.0) - math.log10(1.5)
        got = marginal_cost(link, loads, f, False)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.1249387366, abs=1e-9)

    def test_overload_signals_infeasible(self):
        net = two_node_net(LINEAR, capacity=1.0)
        link = net.links[0]
        loads = np.zeros(net.n_links)
        loads[link.index] = 0.6
        f = Flow(0, 0, 1, 0.6)
        assert marginal_cost(link, loads, f, False) == math.inf

    def test_share_plus_reduced_cost_is_total(self):
        # the share definition is exactly additive
        net = two_node_net(LOG, capacity=4.0)
        link = net.links[0]
        f = Flow(0, 0, 1, 1.2)
        loads = np.zeros(net.n_links)
        loads[link.index] = 3.1
        share = marginal_cost(link, loads, f, True)
        c_without = link_cost(link, 3.1 - 1.2)
        assert share + c_without == pytest.approx(link_cost(link, 3.1), abs=1e-12)


class TestLeavePenalty:
    def test_superadditive_profile_clips_to_zero(self):
        net = two_node_net(CUBIC, capacity=1.0)
        link = net.links[0]
        loads = np.zeros(net.n_links)
        loads[link.index] = 1.0
        f = Flow(0, 0, 1, 0.5)
        assert leave_penalty(link, loads, f) == 0.0

    def test_log_profile_penalty_value(self):
        # 2*log10(1.5) - log10(2), loads normalized by capacity 1
        net = two_node_net(LOG, capacity=1.0)
        link = net.links[0]
        loads = np.zeros(net.n_links)
        loads[link.index] = 1.0
        f = Flow(0, 0, 1, 0.5)
        expected = 2 * math.log10(1.5) - math.log10(2.0)
        assert leave_penalty(link, loads, f) == pytest.approx(expected, abs=1e-12)
        assert leave_penalty(link, loads, f) == pytest.approx(0.05115, abs=1e-5)

    def test_flow_alone_on_link_pays_nothing(self):
        for prof in (LOG, LINEAR, CUBIC):
            net = two_node_net(prof, capacity=2.0)
            link = net.links[0]
            loads = np.zeros(net.n_links)
            loads[link.index] = 0.7
            f = Flow(0, 0, 1, 0.7)
            assert leave_penalty(link, loads, f) == pytest.approx(0.0, abs=1e-15)

    @given(
        st.floats(0.1, 1.0),
        st.floats(0.0, 2.0),
        st.sampled_from(["log", "linear", "cubic"]),
    )
    @settings(max_examples=200)
    def test_never_negative(self, rate, extra, prof_name):
        net = two_node_net(PROFILES[prof_name], capacity=4.0)
        link = net.links[0]
        loads = np.zeros(net.n_links)
        loads[link.index] = rate + extra
        f = Flow(0, 0, 1, rate)
        assert leave_penalty(link, loads, f) >= 0.0

    def test_table_contract_checks_membership(self):
        from antroute.net import FlowTable, Path

        net = two_node_net(LOG, capacity=2.0)
        f = Flow(0, 0, 1, 1.0)
        table = FlowTable(net, [f], {0: Path([net.links[0]])})
        reverse = net.link_between(1, 0)
        with pytest.raises(ValueError):
            table.leave_penalty_of(f, reverse)


class TestNetworkPower:
    def test_zero_loads_zero_power(self):
        net = two_node_net(LOG)
        assert network_power(net, np.zeros(net.n_links)) == 0.0

    def test_overloaded_network_is_infinite(self):
        net = two_node_net(LINEAR, capacity=1.0)
        loads = np.array([1.5, 0.0])
        assert network_power(net, loads) == math.inf

    def test_five_node_demo_routings_match_published_totals(self):
        # chain aggregation under log costs 0.65; relay spread under cubic 0.48
        from antroute.net import FlowTable, Path, build_five_node_demo

        for prof, chain_total, spread_total in (
            ("log", 0.65, 0.85),
            ("cubic", 1.33, 0.48),
        ):
            net = build_five_node_demo().with_profile(prof)
            ia = net.index_of
            a, b, c, m, t = ia("A"), ia("B"), ia("C"), ia("M"), ia("T")
            lk = lambda u, v: net.link_between(u, v)
            flows = [Flow(0, a, t, 1.0), Flow(1, b, t, 1.0), Flow(2, c, t, 1.0)]
            chain = FlowTable(
                net,
                flows,
                {
                    0: Path([lk(a, b), lk(b, c), lk(c, t)]),
                    1: Path([lk(b, c), lk(c, t)]),
                    2: Path([lk(c, t)]),
                },
            )
            spread = FlowTable(
                net,
                flows,
                {
                    0: Path([lk(a, b), lk(b, m), lk(m, t)]),
                    1: Path([lk(b, c), lk(c, m), lk(m, t)]),
                    2: Path([lk(c, t)]),
                },
            )
            assert round(chain.power(), 2) == chain_total
            assert round(spread.power(), 2) == spread_total

    def test_table_power_matches_independent_load_accumulation(self):
        from antroute.net import build_lattice, flows_for
        from antroute.baselines import spf_routes

        net = build_lattice(4, profile="log")
        flows = flows_for(net)
        table = spf_routes(net, flows)
        loads = np.zeros(net.n_links)
        for flow in flows:
            for link in table.path_for(flow).links:
                loads[link.index] += flow.rate
        direct = network_power(net, loads)
        assert table.power() == pytest.approx(direct, rel=1e-12)
