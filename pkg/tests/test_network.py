import math

import numpy as np
import pytest

from qping import (
    HardwareProfile,
    InvalidParameterError,
    PathRoute,
    SimClock,
    SimulationTimeout,
    Topology,
    distribute_end_to_end,
    distribute_round_trip,
    generate_link,
    line_topology,
    swap_compose,
)
from qping.network import ideal_end_to_end_fidelity, sample_attempts, with_profile


def test_certain_generation_is_deterministic():
    clock = SimClock(3)
    state, elapsed = generate_link(HardwareProfile(p_gen=1, t_attempt=10, f_link=0.97), clock)
    assert (state.fidelity, elapsed, clock.now) == (0.97, 10, 10)


@pytest.mark.parametrize("p", [0.1, 0.5])
def test_geometric_mean_attempts(p):
    rng = np.random.default_rng(11)
    mean = np.mean([sample_attempts(p, rng) for _ in range(10_000)])
    assert abs(mean - 1 / p) <= 0.05 / p


def test_mean_generation_time_at_half():
    clock = SimClock(5)
    prof = HardwareProfile(p_gen=0.5, t_attempt=10)
    mean = np.mean([generate_link(prof, clock).elapsed for _ in range(10_000)])
    assert mean == pytest.approx(20, rel=0.05)


def test_attempt_cap_raises_timeout():
    with pytest.raises(SimulationTimeout):
        generate_link(HardwareProfile(p_gen=1e-6, max_attempts=1), SimClock(0))


def test_noiseless_two_hop():
    prof = HardwareProfile(t_attempt=10, t_swap=3, t_classical=5)
    _, path = line_topology(3, prof)
    state, elapsed = distribute_end_to_end(path, SimClock(0))
    assert state.fidelity == 1.0
    assert elapsed == 10 + 3 + 5


def test_three_hop_composition():
    _, path = line_topology(4, HardwareProfile(f_link=0.95, q_swap=0.98))
    state, _ = distribute_end_to_end(path, SimClock(0))
    assert state.fidelity == pytest.approx(0.95**3 * 0.98**2, abs=1e-12)
    assert state.fidelity == pytest.approx(swap_compose([0.95] * 3, 0.98), abs=1e-12)
    assert ideal_end_to_end_fidelity(path) == pytest.approx(state.fidelity, abs=1e-12)


def test_single_hop():
    _, path = line_topology(2, HardwareProfile(f_link=0.9, p_gen=0.3, t_attempt=7, q_swap=0.5))
    clock = SimClock(9)
    state, elapsed = distribute_end_to_end(path, clock)
    assert state.fidelity == 0.9
    assert elapsed % 7 == 0 and elapsed >= 7


def test_elapsed_lower_bound_and_composition_law():
    prof = HardwareProfile(p_gen=0.2, t_attempt=10, t_swap=4, t_classical=6, f_link=0.97, q_swap=0.99)
    topo, path = line_topology(5, prof)
    for seed in range(50):
        clock = SimClock(seed)
        probe = SimClock(seed)
        gen_times = [sample_attempts(0.2, probe.rng) * 10 for _ in range(4)]
        state, elapsed = distribute_end_to_end(path, clock)
        assert elapsed == pytest.approx(max(gen_times) + 3 * (4 + 6))
        assert state.fidelity == pytest.approx(swap_compose([0.97] * 4, 0.99), abs=1e-12)


def test_waiting_links_decay():
    topo, path = line_topology(3, HardwareProfile(tau_memory=100.0))
    with_profile(topo, "n1", "n2", p_gen=0.01)
    fids = [distribute_end_to_end(path, SimClock(s)).state.fidelity for s in range(20)]
    assert max(fids) <= 1.0 and min(fids) < 0.9


def test_swap_failures_take_longer():
    prof = HardwareProfile(t_attempt=10, t_swap=1)
    _, path = line_topology(4, prof)
    _, flaky = line_topology(4, HardwareProfile(t_attempt=10, t_swap=1, p_swap=0.3))
    base = distribute_end_to_end(path, SimClock(0)).elapsed
    slow = np.mean([distribute_end_to_end(flaky, SimClock(s)).elapsed for s in range(50)])
    assert slow > base


@pytest.mark.parametrize("f, expected", [(1.0, 1.0), (0.9, 0.81333), (0.25, 0.25)])
def test_round_trip_probability(f, expected):
    _, path = line_topology(2, HardwareProfile(f_link=f, t_attempt=10, t_classical=2))
    clock = SimClock(0)
    prob, elapsed = distribute_round_trip(path, clock)
    assert prob == pytest.approx(expected, abs=1e-5)
    assert elapsed == 10 + 10 + 2 and clock.now == elapsed


def test_determinism():
    prof = HardwareProfile(p_gen=0.3, p_swap=0.7, tau_memory=500.0, f_link=0.96)
    _, path = line_topology(4, prof)
    run = lambda s: [tuple(distribute_end_to_end(path, c)) for c in [SimClock(s)] for _ in range(30)]
    assert run(4) == run(4)
    assert run(4) != run(5)


def test_spawned_clocks_are_reproducible():
    a, b = SimClock(1), SimClock(1)
    assert a.spawn().rng_seed == b.spawn().rng_seed


def test_topology_invariants():
    topo = Topology(["a", "b", "c"])
    topo.add_link("a", "b")
    with pytest.raises(InvalidParameterError):
        topo.add_link("a", "a")
    with pytest.raises(InvalidParameterError):
        topo.add_link("b", "a")
    with pytest.raises(InvalidParameterError):
        topo.add_link("a", "z")
    with pytest.raises(InvalidParameterError):
        PathRoute(topo, ["a", "c"])
    with pytest.raises(InvalidParameterError):
        PathRoute(topo, ["a"])
    assert topo.shortest_path("a", "c") is None
    topo.add_link("b", "c")
    assert topo.shortest_path("a", "c").nodes == ("a", "b", "c")


@pytest.mark.parametrize("kw", [{"p_gen": 0}, {"p_swap": 1.5}, {"f_link": -0.1}, {"t_attempt": -1},
                                {"tau_memory": 0}, {"q_swap": 0}])
def test_profile_validation(kw):
    with pytest.raises(InvalidParameterError):
        HardwareProfile(**kw)


def test_clock_never_runs_backwards():
    with pytest.raises(InvalidParameterError):
        SimClock().advance(-1)
