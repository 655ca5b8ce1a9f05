"""
The four ping strategies.

Active strategies drive the network simulator and feed pass/fail outcomes
into the sequential Bayesian test:

* ``path-endnode``: distribute an end-to-end pair, run a random stabilizer
  check at the end nodes.
* ``path-bouncing``: send half of a local pair out and back, project onto
  |Phi+>; inference runs over the round-trip fidelity against the effective
  threshold.
* ``segment``: test every link (or every two-link unit) independently and
  in parallel against an allocated share of the end-to-end requirement.

The passive strategy works on a pre-shared graph state: it extracts a pair
along a path by local Pauli measurements and certifies it.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InfeasibleError, InvalidParameterError
from .inference import (
    DecisionPolicy,
    FidelityDistribution,
    Outcome,
    PingVerdict,
    TrialRecord,
    make_prior,
    sequential_test,
)
from .network import PathRoute, SimClock, distribute_end_to_end, distribute_round_trip
from .state_algebra import (
    ThresholdSpec,
    WernerState,
    clamp_unit,
    effective_threshold,
    required_initial_fidelity,
    swap_compose,
)
from .verification import (
    ShotBudget,
    estimate_chsh,
    estimate_fidelity_sequential,
    estimate_witness,
    sample_stabilizer_check,
    select_method,
    stabilizer_likelihood,
)

Node = Hashable


class Strategy(str, enum.Enum):
    PATH_ENDNODE = "path-endnode"
    PATH_BOUNCING = "path-bouncing"
    SEGMENT = "segment"
    PASSIVE = "passive"


PASSIVE_METHODS = ("auto", "witness", "chsh", "fidelity")


@dataclass(frozen=True)
class StrategyConfig:
    """Everything a ping needs besides the network itself.

    ``segment_allocation`` is ``"uniform-root"`` or an explicit list of
    per-unit thresholds; an explicit list must compose back to at least
    ``threshold.f_required``.
    """

    strategy: Strategy
    threshold: ThresholdSpec
    policy: DecisionPolicy = field(default_factory=DecisionPolicy)
    prior: FidelityDistribution = field(default_factory=make_prior)
    segment_allocation: str | tuple[float, ...] = "uniform-root"
    length_two_segments: bool = False
    passive_method: str = "auto"
    shots: int = 10_000
    shot_time: float = 0.0
    use_prior_gate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.passive_method not in PASSIVE_METHODS:
            raise InvalidParameterError(f"passive_method must be one of {PASSIVE_METHODS}")
        alloc = self.segment_allocation
        if isinstance(alloc, str):
            if alloc != "uniform-root":
                raise InvalidParameterError(f"unknown segment allocation {alloc!r}")
        else:
            alloc = tuple(float(x) for x in alloc)
            object.__setattr__(self, "segment_allocation", alloc)
            if swap_compose(alloc, self.threshold.q_swap) < self.threshold.f_required - 1e-12:
                raise InvalidParameterError("explicit segment thresholds do not compose to f_required")


def _infeasible(cfg: StrategyConfig) -> PingVerdict | None:
    try:
        required_initial_fidelity(cfg.threshold, cfg.threshold.time_to_use)
    except InfeasibleError as exc:
        return PingVerdict(Outcome.INFEASIBLE, 0.0, threshold_at_decision=exc.value,
                           reason=f"required initial fidelity {exc.value:.6g} > 1")
    return None


def ping_path_endnode(path: PathRoute, cfg: StrategyConfig, clock: SimClock) -> PingVerdict:
    """End-node ping: each trial distributes a pair and checks one stabilizer."""
    verdict = _infeasible(cfg)
    if verdict is not None:
        return verdict
    start = clock.now

    def sampler():
        state, _ = distribute_end_to_end(path, clock)
        return sample_stabilizer_check(state, clock.rng), clock.now

    return sequential_test(sampler, lambda t: cfg.threshold.threshold_at(t - start), cfg.prior, cfg.policy,
                           stabilizer_likelihood, start_time=start, use_gate=cfg.use_prior_gate)


def _identity(f: np.ndarray) -> np.ndarray:
    return f


def ping_path_bouncing(path: PathRoute, cfg: StrategyConfig, clock: SimClock) -> PingVerdict:
    """Bouncing ping: inference over the round-trip fidelity F_rt.

    The prior in ``cfg`` is read as a prior over F_rt, and each trial
    succeeds with probability F_rt, so the likelihood is the identity.
    """
    verdict = _infeasible(cfg)
    if verdict is not None:
        return verdict
    start = clock.now

    def sampler():
        success_prob, _ = distribute_round_trip(path, clock)
        return bool(clock.rng.random() < success_prob), clock.now

    def threshold_fn(t):
        return effective_threshold(clamp_unit(cfg.threshold.threshold_at(t - start)))

    verdict = sequential_test(sampler, threshold_fn, cfg.prior, cfg.policy, _identity,
                              start_time=start, use_gate=cfg.use_prior_gate)
    verdict.details["non_markovian_round_trip_noise"] = "not modeled"
    return verdict


def segment_units(path: PathRoute, length_two: bool = False) -> list[PathRoute]:
    """Split a path into single links, or into two-link units (last may be single)."""
    step = 2 if length_two else 1
    n = path.n_segments
    return [path.subpath(i, min(i + step, n)) for i in range(0, n, step)]


def uniform_root_threshold(f_required: float, n_units: int, q_swap: float) -> float:
    """Per-unit threshold whose N-fold composition equals ``f_required``."""
    return (f_required / q_swap ** (n_units - 1)) ** (1.0 / n_units)


def allocate_thresholds(cfg: StrategyConfig, n_units: int) -> list[float]:
    alloc = cfg.segment_allocation
    if isinstance(alloc, str):
        return [uniform_root_threshold(cfg.threshold.f_required, n_units, cfg.threshold.q_swap)] * n_units
    if len(alloc) != n_units:
        raise InvalidParameterError(f"expected {n_units} segment thresholds, got {len(alloc)}")
    return list(alloc)


def ping_segments(path: PathRoute, cfg: StrategyConfig, clock: SimClock) -> PingVerdict:
    """Test every segment in parallel simulated time and combine the verdicts."""
    verdict = _infeasible(cfg)
    if verdict is not None:
        return verdict
    units = segment_units(path, cfg.length_two_segments)
    base = allocate_thresholds(cfg, len(units))
    f_req = cfg.threshold.f_required
    start = clock.now

    def unit_threshold(f_i):
        # time dependence enters through an equal share of the end-to-end slack
        def fn(t):
            return f_i * (cfg.threshold.threshold_at(t - start) / f_req) ** (1.0 / len(units))
        return fn

    results = []
    for unit, f_i in zip(units, base):
        sub = clock.spawn()
        if f_i > 1.0:
            v = PingVerdict(Outcome.INFEASIBLE, 0.0, threshold_at_decision=f_i,
                            reason=f"segment threshold {f_i:.6g} > 1")
        else:
            fn = unit_threshold(f_i)

            def sampler(unit=unit, sub=sub):
                state, _ = distribute_end_to_end(unit, sub)
                return sample_stabilizer_check(state, sub.rng), sub.now

            v = sequential_test(sampler, fn, cfg.prior, cfg.policy, stabilizer_likelihood,
                                start_time=sub.now, use_gate=cfg.use_prior_gate)
        results.append(v)

    outcomes = [v.outcome for v in results]
    failing = [i for i, o in enumerate(outcomes) if o in (Outcome.REJECT, Outcome.ABORT)]
    if Outcome.INFEASIBLE in outcomes:
        overall = Outcome.INFEASIBLE
    elif failing:
        overall = Outcome.REJECT
    elif all(o in (Outcome.ACCEPT, Outcome.SKIP) for o in outcomes):
        overall = Outcome.ACCEPT
    else:
        overall = Outcome.INCONCLUSIVE

    means = [v.posterior.mean() if v.posterior is not None else math.nan for v in results]
    composed = swap_compose(means, cfg.threshold.q_swap) if not any(map(math.isnan, means)) else math.nan
    elapsed = max(v.elapsed for v in results)
    clock.advance(elapsed)
    trials = sum(v.trials_used for v in results)
    segments = [
        {
            "nodes": [str(n) for n in unit.nodes],
            "outcome": v.outcome.value,
            "posterior_tail": v.posterior_tail,
            "threshold": v.threshold_at_decision,
            "trials_used": v.trials_used,
            "posterior_mean": m,
            "elapsed_ns": v.elapsed,
        }
        for unit, v, m in zip(units, results, means)
    ]
    return PingVerdict(
        overall,
        float(math.prod(v.posterior_tail for v in results)),
        trials,
        sum(v.pairs_consumed for v in results),
        elapsed,
        cfg.threshold.threshold_at(elapsed),
        reason="segments",
        details={
            "segments": segments,
            "failing_segments": failing,
            "composed_prediction": composed,
            "caveat": "composed prediction ignores swap delays and decay of early links",
        },
    )


@dataclass
class GraphResource:
    """Pre-shared graph state with per-edge quality and per-qubit measurement quality."""

    nodes: list
    edge_factor: dict[frozenset, float]
    q_meas: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.q_meas <= 1.0:
            raise InvalidParameterError(f"q_meas must lie in (0, 1], got {self.q_meas!r}")
        self.nodes = list(self.nodes)
        known = set(self.nodes)
        self._adj = {n: [] for n in self.nodes}
        for key, factor in self.edge_factor.items():
            if len(key) != 2:
                raise InvalidParameterError(f"edge {set(key)} is a self-loop")
            if not 0.0 <= factor <= 1.0:
                raise InvalidParameterError(f"edge factor must lie in [0, 1], got {factor!r}")
            if not key <= known:
                raise InvalidParameterError(f"edge {set(key)} references an unknown node")
            a, b = key
            self._adj[a].append(b)
            self._adj[b].append(a)

    @classmethod
    def from_edges(cls, nodes: Iterable[Node], edges: Iterable[tuple], q_meas: float = 1.0) -> "GraphResource":
        factors: dict[frozenset, float] = {}
        for a, b, *rest in edges:
            key = frozenset((a, b))
            if a == b:
                raise InvalidParameterError(f"self-loop on node {a!r}")
            if key in factors:
                raise InvalidParameterError(f"duplicate edge {a!r}-{b!r}")
            factors[key] = float(rest[0]) if rest else 1.0
        return cls(list(nodes), factors, q_meas)

    def neighbors(self, node: Node) -> list:
        return list(self._adj[node])

    def factor(self, a: Node, b: Node) -> float:
        return self.edge_factor[frozenset((a, b))]


class Extraction(NamedTuple):
    state: WernerState
    measured_count: int
    path: tuple


def _bfs_path(resource: GraphResource, a: Node, b: Node) -> list | None:
    prev = {a: None}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            out = [b]
            while prev[out[-1]] is not None:
                out.append(prev[out[-1]])
            return out[::-1]
        for v in resource.neighbors(u):
            if v not in prev:
                prev[v] = u
                queue.append(v)
    return None


def passive_extract(resource: GraphResource, a: Node, b: Node) -> Extraction | None:
    """Extract a Bell pair between ``a`` and ``b`` along a shortest path.

    Interior path qubits are measured in Y and every off-path neighbour of
    the path in Z. Returns None when no path exists.
    """
    for n in (a, b):
        if n not in resource._adj:
            raise InvalidParameterError(f"unknown node {n!r}")
    if a == b:
        raise InvalidParameterError("passive extraction needs two distinct nodes")
    path = _bfs_path(resource, a, b)
    if path is None:
        return None
    on_path = set(path)
    y_measured = path[1:-1]
    z_measured = {v for u in path for v in resource.neighbors(u) if v not in on_path}
    count = len(y_measured) + len(z_measured)
    f = math.prod(resource.factor(u, v) for u, v in zip(path, path[1:])) * resource.q_meas**count
    return Extraction(WernerState(clamp_unit(f)), count, tuple(path))


def _normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def ping_passive(resource: GraphResource, a: Node, b: Node, cfg: StrategyConfig, seed=None) -> PingVerdict:
    """Extract a pair from the resource and certify it with the chosen method."""
    extraction = passive_extract(resource, a, b)
    if extraction is None:
        return PingVerdict(Outcome.REJECT, 0.0, threshold_at_decision=cfg.threshold.f_required,
                           reason="no-path", details={"shots_used": 0})
    state = extraction.state
    method = cfg.passive_method
    if method == "auto":
        method = select_method(state.fidelity)
    rng = np.random.default_rng(seed)

    if method == "fidelity":
        report = estimate_fidelity_sequential(state, cfg.threshold.f_required, cfg.prior, cfg.policy, rng,
                                              shot_time=cfg.shot_time)
        tail = report.estimate
        threshold = cfg.threshold.f_required
    else:
        budget = ShotBudget(cfg.shots, int(rng.integers(0, 2**63)))
        report = estimate_witness(state, budget) if method == "witness" else estimate_chsh(state, budget)
        # approximate confidence that the finite-shot statistic sits on the entangled side
        margin = -report.estimate if method == "witness" else abs(report.estimate) - 2.0
        if report.standard_error > 0:
            tail = _normal_cdf(margin / report.standard_error)
        else:
            tail = 1.0 if report.decision else 0.0
        threshold = 0.0 if method == "witness" else 2.0

    outcome = Outcome.ACCEPT if report.decision else Outcome.REJECT
    if method == "fidelity" and report.verdict.outcome not in (Outcome.ACCEPT, Outcome.REJECT):
        outcome = report.verdict.outcome
    verification_time = report.shots_used * cfg.shot_time
    return PingVerdict(
        outcome,
        tail,
        report.shots_used,
        report.shots_used,
        verification_time,
        threshold,
        reason=method,
        posterior=report.verdict.posterior if report.verdict else None,
        record=report.verdict.record if report.verdict else TrialRecord(),
        details={
            "method": method,
            "estimate": report.estimate,
            "standard_error": report.standard_error,
            "shots_used": report.shots_used,
            "extracted_fidelity": state.fidelity,
            "measured_count": extraction.measured_count,
            "path": [str(n) for n in extraction.path],
            "verification_time_ns": verification_time,
        },
    )


def ping(strategy: Strategy | str, cfg: StrategyConfig, *, path: PathRoute | None = None,
         clock: SimClock | None = None, resource: GraphResource | None = None,
         src: Node = None, dst: Node = None, seed=None) -> PingVerdict:
    """Dispatch to one of the four strategies."""
    strategy = Strategy(strategy)
    if strategy is Strategy.PASSIVE:
        if resource is None:
            raise InvalidParameterError("passive ping needs a graph resource")
        return ping_passive(resource, src, dst, cfg, seed)
    if path is None:
        raise InvalidParameterError(f"{strategy.value} ping needs a path")
    clock = clock or SimClock(0 if seed is None else seed)
    runner = {
        Strategy.PATH_ENDNODE: ping_path_endnode,
        Strategy.PATH_BOUNCING: ping_path_bouncing,
        Strategy.SEGMENT: ping_segments,
    }[strategy]
    return runner(path, cfg, clock)
