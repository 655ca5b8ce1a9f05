import math
from collections import Counter

import networkx as nx
import numpy as np
import pytest

import qping.network as network
import qping.strategies as strategies
from qping import (
    DecisionPolicy,
    GraphResource,
    HardwareProfile,
    InvalidParameterError,
    Outcome,
    SimClock,
    StrategyConfig,
    ThresholdSpec,
    line_topology,
    make_prior,
    passive_extract,
    ping,
    ping_passive,
    ping_path_bouncing,
    ping_path_endnode,
    ping_segments,
    swap_compose,
)
from qping.network import with_profile
from qping.strategies import uniform_root_threshold

from test_inference import brute_force_stop


def cfg(strategy, f0, **kw):
    threshold = kw.pop("threshold", None) or ThresholdSpec(f0)
    return StrategyConfig(strategy, threshold, **kw)


def rates(outcomes):
    c = Counter(o.outcome for o in outcomes)
    n = sum(c.values())
    return {k: v / n for k, v in c.items()}


def test_endnode_noiseless_matches_brute_force():
    _, path = line_topology(3)
    v = ping_path_endnode(path, cfg("path-endnode", 0.9), SimClock(0))
    assert v.outcome is Outcome.ACCEPT
    assert v.trials_used == brute_force_stop(True, 0.9, 0.95)
    assert v.pairs_consumed == v.trials_used


def test_endnode_rejects_bad_path():
    _, path = line_topology(3, HardwareProfile(f_link=0.6))
    r = rates(ping_path_endnode(path, cfg("path-endnode", 0.9), SimClock(s)) for s in range(200))
    assert r.get(Outcome.REJECT, 0) >= 0.9


def test_endnode_prior_skip():
    _, path = line_topology(3)
    c = cfg("path-endnode", 0.5, prior=make_prior("point", point=0.99), policy=DecisionPolicy(eta=0.8))
    v = ping_path_endnode(path, c, SimClock(0))
    assert v.outcome is Outcome.SKIP and v.pairs_consumed == 0


def test_infeasible_threshold():
    spec = ThresholdSpec(0.9, tau_memory=100.0, time_to_use=100.0)
    _, path = line_topology(3)
    for fn in (ping_path_endnode, ping_path_bouncing, ping_segments):
        v = fn(path, cfg("path-endnode", 0, threshold=spec), SimClock(0))
        assert v.outcome is Outcome.INFEASIBLE and v.pairs_consumed == 0
        assert v.threshold_at_decision == pytest.approx(0.9 * math.e)


def test_time_to_use_raises_the_bar():
    spec = ThresholdSpec(0.9, tau_memory=1e5, time_to_use=5000.0)
    _, path = line_topology(3)
    v = ping_path_endnode(path, cfg("path-endnode", 0, threshold=spec), SimClock(0))
    assert v.outcome is Outcome.ACCEPT
    assert v.threshold_at_decision == pytest.approx(spec.threshold_at(v.elapsed))
    assert 0.9 < v.threshold_at_decision < spec.threshold_at(0.0)


def test_bouncing_noiseless_accepts():
    _, path = line_topology(3)
    v = ping_path_bouncing(path, cfg("path-bouncing", 0.9), SimClock(0))
    assert v.outcome is Outcome.ACCEPT
    assert v.details["non_markovian_round_trip_noise"] == "not modeled"


def test_bouncing_good_link():
    _, path = line_topology(2, HardwareProfile(f_link=0.98))
    r = rates(ping_path_bouncing(path, cfg("path-bouncing", 0.9), SimClock(s)) for s in range(200))
    assert r.get(Outcome.ACCEPT, 0) >= 0.9


def test_bouncing_boundary_is_unreliable():
    # success probability sits exactly on the effective threshold
    _, path = line_topology(2, HardwareProfile(f_link=0.9))
    c = cfg("path-bouncing", 0.9, policy=DecisionPolicy(max_trials=300))
    r = rates(ping_path_bouncing(path, c, SimClock(s)) for s in range(200))
    assert r.get(Outcome.ACCEPT, 0) < 0.5
    assert r.get(Outcome.INCONCLUSIVE, 0) > 0.2


def test_uniform_root_threshold():
    assert uniform_root_threshold(0.9, 3, 0.98) == pytest.approx(0.97858, abs=1e-5)
    for f, n, q in [(0.9, 3, 0.98), (0.5, 5, 0.9), (0.99, 2, 1.0)]:
        t = uniform_root_threshold(f, n, q)
        assert swap_compose([t] * n, q) >= f - 1e-12


def test_segments_noiseless_accept():
    _, path = line_topology(4)
    v = ping_segments(path, cfg("segment", 0.9, threshold=ThresholdSpec(0.9, q_swap=0.98)), SimClock(0))
    assert v.outcome is Outcome.ACCEPT
    assert [s["outcome"] for s in v.details["segments"]] == ["accept"] * 3
    assert v.details["segments"][0]["threshold"] == pytest.approx(0.97858, abs=1e-5)
    assert v.elapsed == max(s["elapsed_ns"] for s in v.details["segments"])


def test_segments_flag_the_bad_link():
    topo, path = line_topology(4)
    with_profile(topo, "n1", "n2", f_link=0.5)
    vs = [ping_segments(path, cfg("segment", 0.9), SimClock(s)) for s in range(200)]
    flagged = sum(v.outcome is Outcome.REJECT and v.details["failing_segments"] == [1] for v in vs)
    assert flagged / 200 >= 0.9


def test_segments_length_two_units():
    _, path = line_topology(5)
    v = ping_segments(path, cfg("segment", 0.9, length_two_segments=True), SimClock(0))
    assert [len(s["nodes"]) for s in v.details["segments"]] == [3, 3]


def test_segment_mixed_outcomes_are_inconclusive(monkeypatch):
    canned = iter([Outcome.ACCEPT, Outcome.INCONCLUSIVE])
    real = strategies.sequential_test

    def fake(*args, **kw):
        v = real(*args, **kw)
        v.outcome = next(canned)
        return v

    monkeypatch.setattr(strategies, "sequential_test", fake)
    _, path = line_topology(3)
    assert ping_segments(path, cfg("segment", 0.9), SimClock(0)).outcome is Outcome.INCONCLUSIVE


def test_explicit_allocation_must_compose():
    with pytest.raises(InvalidParameterError):
        cfg("segment", 0.9, segment_allocation=(0.9, 0.9))
    ok = cfg("segment", 0.81, segment_allocation=(0.9, 0.9))
    _, path = line_topology(3)
    v = ping_segments(path, ok, SimClock(0))
    assert [s["threshold"] for s in v.details["segments"]] == [0.9, 0.9]


def test_pairs_consumed_equals_distribution_calls(monkeypatch):
    calls = {"n": 0}
    for name in ("distribute_end_to_end", "distribute_round_trip"):
        real = getattr(network, name)

        def counted(*a, real=real, **kw):
            calls["n"] += 1
            return real(*a, **kw)

        monkeypatch.setattr(strategies, name, counted)
    _, path = line_topology(4, HardwareProfile(f_link=0.97, p_gen=0.4))
    for fn, name in ((ping_path_endnode, "path-endnode"), (ping_path_bouncing, "path-bouncing"),
                     (ping_segments, "segment")):
        calls["n"] = 0
        v = fn(path, cfg(name, 0.85), SimClock(1))
        assert v.pairs_consumed == calls["n"] > 0


def test_extraction_examples():
    direct = GraphResource.from_edges(["a", "b"], [("a", "b", 1.0)], 1.0)
    e = passive_extract(direct, "a", "b")
    assert e.state.fidelity == 1.0 and e.measured_count == 0
    line = GraphResource.from_edges("abc", [("a", "b", 0.99), ("b", "c", 0.99)], 0.99)
    e = passive_extract(line, "a", "c")
    assert e.state.fidelity == pytest.approx(0.97030, abs=1e-5) and e.measured_count == 1
    split = GraphResource.from_edges("abcd", [("a", "b", 1.0), ("c", "d", 1.0)])
    assert passive_extract(split, "a", "d") is None
    with pytest.raises(InvalidParameterError):
        passive_extract(split, "a", "z")
    with pytest.raises(InvalidParameterError):
        passive_extract(split, "a", "a")


def test_extraction_measures_neighbours():
    # star around the middle node plus a spur on an endpoint
    g = GraphResource.from_edges("abcxyz", [("a", "b", 1), ("b", "c", 1), ("b", "x", 1), ("b", "y", 1),
                                            ("a", "z", 1)], 0.9)
    e = passive_extract(g, "a", "c")
    assert e.path == ("a", "b", "c")
    assert e.measured_count == 1 + 3
    assert e.state.fidelity == pytest.approx(0.9**4)


def test_extraction_against_networkx():
    for seed in range(100):
        g = nx.gnp_random_graph(10, 0.2, seed=seed)
        res = GraphResource.from_edges(range(10), [(u, v, 0.99) for u, v in g.edges], 0.99)
        e = passive_extract(res, 0, 9)
        assert (e is None) == (not nx.has_path(g, 0, 9))
        if e is not None:
            assert len(e.path) - 1 == nx.shortest_path_length(g, 0, 9)


def test_passive_examples():
    direct = GraphResource.from_edges(["a", "b"], [("a", "b", 1.0)])
    c = cfg("passive", 0.9, passive_method="witness")
    v = ping_passive(direct, "a", "b", c, seed=0)
    assert v.outcome is Outcome.ACCEPT and v.details["shots_used"] == 10_000
    split = GraphResource.from_edges("abc", [("a", "b", 1.0)])
    v = ping_passive(split, "a", "c", c, seed=0)
    assert v.outcome is Outcome.REJECT and v.reason == "no-path" and v.details["shots_used"] == 0
    # 0.9**4 * 0.99**3 = 0.637 sits in the witness band of the auto rule
    line = GraphResource.from_edges("abcde", [(u, w, 0.9) for u, w in zip("abcd", "bcde")], 0.99)
    v = ping_passive(line, "a", "e", cfg("passive", 0.5), seed=0)
    assert v.details["extracted_fidelity"] == pytest.approx(0.9**4 * 0.99**3)
    assert v.details["method"] == "witness" and v.outcome is Outcome.ACCEPT
    poor = GraphResource.from_edges("abcde", [(u, w, 0.85) for u, w in zip("abcd", "bcde")], 0.99)
    v = ping_passive(poor, "a", "e", cfg("passive", 0.5), seed=0)
    assert v.details["extracted_fidelity"] < 0.6
    assert v.details["method"] == "fidelity"
    assert v.outcome in (Outcome.ACCEPT, Outcome.REJECT, Outcome.INCONCLUSIVE)


def test_passive_time_is_verification_only():
    direct = GraphResource.from_edges(["a", "b"], [("a", "b", 1.0)])
    v = ping_passive(direct, "a", "b", cfg("passive", 0.9, passive_method="chsh", shots=400, shot_time=2.0), 0)
    assert v.elapsed == 800.0 == v.details["verification_time_ns"]


def test_determinism_all_strategies():
    _, path = line_topology(3, HardwareProfile(f_link=0.95, p_gen=0.5, tau_memory=1e4))
    res = GraphResource.from_edges(["n0", "n1", "n2"], [("n0", "n1", 0.97), ("n1", "n2", 0.97)], 0.99)
    for name in ("path-endnode", "path-bouncing", "segment", "passive"):
        c = cfg(name, 0.8, passive_method="witness")
        run = lambda: ping(name, c, path=path, clock=SimClock(8), resource=res, src="n0", dst="n2", seed=8)
        a, b = run(), run()
        assert a.to_dict() == b.to_dict()
        assert a.record.outcomes == b.record.outcomes


def test_dispatcher_requirements():
    with pytest.raises(InvalidParameterError):
        ping("passive", cfg("passive", 0.9))
    with pytest.raises(InvalidParameterError):
        ping("segment", cfg("segment", 0.9))
    with pytest.raises(ValueError):
        ping("teleport", cfg("segment", 0.9))
