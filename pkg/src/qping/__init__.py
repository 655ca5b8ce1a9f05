"""
Quantum ping: decide whether two nodes of a simulated noisy quantum network
can share entanglement above a time-dependent fidelity threshold.

Example:

    from qping import HardwareProfile, StrategyConfig, ThresholdSpec, line_topology
    from qping import SimClock, ping_path_endnode

    topo, path = line_topology(3, HardwareProfile(f_link=0.97))
    cfg = StrategyConfig("path-endnode", ThresholdSpec(0.9))
    print(ping_path_endnode(path, cfg, SimClock(7)).outcome)

"""

__version__ = "0.1.0"

from .errors import (
    DegenerateEvidenceError,
    InfeasibleError,
    InvalidParameterError,
    PolicyError,
    QPingError,
    SimulationTimeout,
    TopologyError,
)
from .inference import (
    DecisionPolicy,
    FidelityDistribution,
    Gate,
    Outcome,
    PingVerdict,
    TrialRecord,
    bayes_update,
    decide,
    make_prior,
    parse_prior,
    posterior_tail,
    prior_gate,
    sequential_decide,
    sequential_test,
)
from .network import (
    HardwareProfile,
    PathRoute,
    SimClock,
    Topology,
    distribute_end_to_end,
    distribute_round_trip,
    generate_link,
    line_topology,
)
from .state_algebra import (
    BellDiagonalState,
    ThresholdSpec,
    WernerState,
    chsh_value,
    decay,
    effective_threshold,
    pass_probability,
    required_initial_fidelity,
    round_trip_fidelity,
    swap_compose,
    witness_value,
)
from .strategies import (
    GraphResource,
    Strategy,
    StrategyConfig,
    passive_extract,
    ping,
    ping_passive,
    ping_path_bouncing,
    ping_path_endnode,
    ping_segments,
)
from .verification import (
    ShotBudget,
    WitnessReport,
    estimate_chsh,
    estimate_fidelity_sequential,
    estimate_witness,
    sample_stabilizer_check,
    select_method,
)
