"""
Command-line front end: ``qping run | sweep | validate``.

Exit codes for ``run``: 0 accept, 1 reject, 2 any other verdict
(inconclusive, skip, abort, timeout, infeasible; the report says which),
64 usage or configuration error, 65 malformed topology, 66 unreadable input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .errors import QPingError, TopologyError
from .inference import DecisionPolicy, Outcome, PingVerdict, parse_prior
from .network import SimClock
from .scenario import Scenario, load_topology
from .state_algebra import ThresholdSpec
from .strategies import PASSIVE_METHODS, Strategy, StrategyConfig, ping

log = logging.getLogger("qping")

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_OTHER = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_NOINPUT = 66

EXIT_CODES = {
    Outcome.ACCEPT: EXIT_ACCEPT,
    Outcome.REJECT: EXIT_REJECT,
    Outcome.INCONCLUSIVE: EXIT_OTHER,
    Outcome.SKIP: EXIT_OTHER,
    Outcome.ABORT: EXIT_OTHER,
    Outcome.TIMEOUT: EXIT_OTHER,
    Outcome.INFEASIBLE: EXIT_OTHER,
}

# qualitative comparison axes per strategy family
STRATEGY_PROFILE = {
    "path-endnode": {"time_sensitivity": "yes", "operations": "local (end nodes)",
                     "certification": "sequential hypothesis test", "information_per_trial": "medium",
                     "robustness": "medium"},
    "path-bouncing": {"time_sensitivity": "yes", "operations": "global (round trip)",
                      "certification": "sequential hypothesis test", "information_per_trial": "medium",
                      "robustness": "medium"},
    "segment": {"time_sensitivity": "partial", "operations": "local, all segments in parallel",
                "certification": "sequential hypothesis test", "information_per_trial": "low-medium",
                "robustness": "high"},
    "passive": {"time_sensitivity": "low", "operations": "local",
                "certification": "witness / Bell inequality / fidelity", "information_per_trial": "high",
                "robustness": "low"},
}

MODEL_ASSUMPTIONS = [
    "Werner (depolarized) states throughout",
    "fidelity-level exponential memory decay",
    "Markovian round-trip noise",
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _scenario_args(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--topology", required=True, help="topology file (YAML or JSON)")
    p.add_argument("--from", dest="src", required=True, help="source node")
    p.add_argument("--to", dest="dst", required=True, help="destination node")
    p.add_argument("--strategy", default="path-endnode",
                   help="path-endnode | path-bouncing | segment | passive"
                        + (" (comma-separated list allowed)" if sweep else ""))
    p.add_argument("--f-required", type=_float, default=0.9)
    p.add_argument("--eta", type=_float, default=0.95)
    p.add_argument("--delta", type=_float, default=0.0)
    p.add_argument("--prior", default="uniform", help="uniform | gaussian:m,s | point:f")
    p.add_argument("--max-trials", type=int, default=1000)
    p.add_argument("--min-trials", type=int, default=1)
    p.add_argument("--max-time-ns", type=_float, default=math.inf)
    p.add_argument("--prior-margin", type=_float, default=0.1)
    p.add_argument("--time-to-use-ns", type=_float, default=0.0)
    p.add_argument("--n-gates", type=int, default=0)
    p.add_argument("--length-two", action="store_true", help="segment strategy: test two-link units")
    p.add_argument("--passive-method", default="auto", choices=PASSIVE_METHODS)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qping", description="Quantum ping diagnostics on a simulated network.")
    parser.add_argument("--version", action="version", version=f"qping {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _scenario_args(sub.add_parser("run", help="execute one ping"))
    sweep = sub.add_parser("sweep", help="repeat a ping with derived seeds and aggregate")
    _scenario_args(sweep, sweep=True)
    sweep.add_argument("--reps", type=int, default=100)
    sweep.add_argument("--jobs", type=int, default=1, help="worker processes")
    val = sub.add_parser("validate", help="check a topology file")
    val.add_argument("topology_file", nargs="?")
    val.add_argument("--topology", dest="topology_opt")
    return parser


CONFIG_KEYS = ("topology", "src", "dst", "strategy", "f_required", "eta", "delta", "prior", "max_trials",
               "min_trials", "max_time_ns", "prior_margin", "time_to_use_ns", "n_gates", "length_two",
               "passive_method", "shots", "seed")


def config_from_args(args: argparse.Namespace) -> dict:
    return {k: getattr(args, k) for k in CONFIG_KEYS}


def config_to_argv(config: dict) -> list[str]:
    """Rebuild ``run`` arguments from a report's configuration echo."""
    argv = ["run"]
    for key in CONFIG_KEYS:
        value = config[key]
        flag = {"src": "--from", "dst": "--to"}.get(key, "--" + key.replace("_", "-"))
        if key == "length_two":
            if value:
                argv.append(flag)
            continue
        if key == "max_time_ns" and value is None:
            value = math.inf
        argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


@dataclass
class PingReport:
    """One ping's machine-readable report."""

    version: str
    seed: int
    config: dict
    verdict: dict
    trials: list = field(default_factory=list)
    posterior: dict | None = None
    assumptions: list = field(default_factory=lambda: list(MODEL_ASSUMPTIONS))

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "verdict": self.verdict,
            "trials": self.trials,
            "posterior": self.posterior,
            "assumptions": self.assumptions,
        }

    def to_json(self) -> str:
        return json.dumps(_sanitize(self.to_dict()), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PingReport":
        return cls(**json.loads(text))


def _sanitize(obj):
    """Non-finite floats become null so the output stays strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def _load(path: str) -> Scenario:
    try:
        return load_topology(path)
    except OSError as exc:
        raise _Exit(EXIT_NOINPUT, f"cannot read topology {path!r}: {exc.strerror}") from None
    except TopologyError as exc:
        raise _Exit(EXIT_DATAERR, "\n".join(exc.diagnostics)) from None


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


def _strategy_config(config: dict, scenario: Scenario, strategy: Strategy, path) -> StrategyConfig:
    profiles = path.profiles() if path is not None else []
    threshold = ThresholdSpec(
        f_required=config["f_required"],
        tau_memory=min((p.tau_memory for p in profiles), default=math.inf),
        q_gate=min((p.q_gate for p in profiles), default=1.0),
        n_gates=config["n_gates"],
        q_swap=min((p.q_swap for p in profiles[1:]), default=1.0),
        time_to_use=config["time_to_use_ns"],
    )
    policy = DecisionPolicy(
        eta=config["eta"],
        delta=config["delta"],
        max_trials=config["max_trials"],
        max_time=config["max_time_ns"] if config["max_time_ns"] is not None else math.inf,
        prior_margin=config["prior_margin"],
        min_trials=config["min_trials"],
    )
    return StrategyConfig(strategy, threshold, policy, parse_prior(config["prior"]),
                          length_two_segments=config["length_two"], passive_method=config["passive_method"],
                          shots=config["shots"])


def execute(config: dict, scenario: Scenario | None = None, seed: int | None = None,
            strategy: str | None = None) -> tuple[PingVerdict, PingReport]:
    """Run one ping described by a configuration dict."""
    scenario = scenario or _load(config["topology"])
    seed = config["seed"] if seed is None else seed
    try:
        strategy = Strategy(strategy or config["strategy"])
    except ValueError:
        raise _Exit(EXIT_USAGE, f"unknown strategy {strategy or config['strategy']!r}") from None
    topo = scenario.topology
    for role, node in (("--from", config["src"]), ("--to", config["dst"])):
        if node not in topo:
            raise _Exit(EXIT_USAGE, f"unknown node {node!r} given to {role}")
    if config["src"] == config["dst"]:
        raise _Exit(EXIT_USAGE, "--from and --to must name different nodes")

    try:
        if strategy is Strategy.PASSIVE:
            if scenario.resource is None:
                raise _Exit(EXIT_USAGE, "passive strategy needs a graph_resource section in the topology")
            cfg = _strategy_config(config, scenario, strategy, None)
            verdict = ping(strategy, cfg, resource=scenario.resource, src=config["src"], dst=config["dst"],
                           seed=seed)
        else:
            path = topo.shortest_path(config["src"], config["dst"])
            if path is None:
                cfg = _strategy_config(config, scenario, strategy, None)
                verdict = PingVerdict(Outcome.REJECT, 0.0, threshold_at_decision=config["f_required"],
                                      reason="no-path")
            else:
                cfg = _strategy_config(config, scenario, strategy, path)
                log.info("ping %s over %s", strategy.value, path)
                verdict = ping(strategy, cfg, path=path, clock=SimClock(seed))
    except _Exit:
        raise
    except (QPingError, ValueError) as exc:
        raise _Exit(EXIT_USAGE, f"invalid configuration: {exc}") from None

    echo = dict(config, strategy=strategy.value, seed=seed)
    posterior = None
    if verdict.posterior is not None:
        posterior = dict(verdict.posterior.summary(), tail=verdict.posterior_tail)
    trials = []
    if verdict.record is not None:
        trials = [{"t_ns": t, "pass": ok} for t, ok in zip(verdict.record.timestamps, verdict.record.outcomes)]
    report = PingReport(__version__, seed, echo, verdict.to_dict(), trials, posterior)
    log.info("verdict %s after %d trials", verdict.outcome.value, verdict.trials_used)
    return verdict, report


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise _Exit(EXIT_USAGE, f"cannot write {out!r}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    config = config_from_args(args)
    verdict, report = execute(config)
    _emit(report.to_json(), args.out)
    return EXIT_CODES[verdict.outcome]


def _sweep_one(job):
    config, seed, strategy = job
    verdict, _ = execute(config, seed=seed, strategy=strategy)
    return verdict.outcome.value, verdict.trials_used, verdict.pairs_consumed, verdict.elapsed


def aggregate(strategy: str, results: list) -> dict:
    """Summary row for one strategy; ``results`` are in repetition order."""
    n = len(results)
    outcomes = [r[0] for r in results]
    row = {"strategy": strategy, "reps": n}
    for o in Outcome:
        row[f"{o.value}_rate"] = outcomes.count(o.value) / n
    row["mean_trials"] = sum(r[1] for r in results) / n
    row["mean_pairs_consumed"] = sum(r[2] for r in results) / n
    row["mean_elapsed_ns"] = sum(r[3] for r in results) / n
    row["profile"] = STRATEGY_PROFILE[strategy]
    row["outcomes"] = outcomes
    return row


def cmd_sweep(args) -> int:
    if args.reps < 1:
        raise _Exit(EXIT_USAGE, "--reps must be at least 1")
    config = config_from_args(args)
    scenario = _load(config["topology"])
    strategies = [s.strip() for s in config["strategy"].split(",") if s.strip()]
    for s in strategies:
        if s not in STRATEGY_PROFILE:
            raise _Exit(EXIT_USAGE, f"unknown strategy {s!r}")
    # validate once up front so configuration errors surface before any work
    execute(dict(config, max_trials=1, min_trials=1), scenario, strategy=strategies[0])
    rows = []
    for s in strategies:
        jobs = [(config, args.seed + i, s) for i in range(args.reps)]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                results = list(pool.map(_sweep_one, jobs))
        else:
            results = [_sweep_one(j) for j in jobs]
        rows.append(aggregate(s, results))
    report = {"version": __version__, "base_seed": args.seed, "config": config, "rows": rows}
    _emit(json.dumps(_sanitize(report), indent=2) + "\n", args.out)
    return 0


def cmd_validate(args) -> int:
    path = args.topology_file or args.topology_opt
    if not path:
        raise _Exit(EXIT_USAGE, "validate needs a topology file")
    scenario = _load(path)
    topo = scenario.topology
    extra = f", graph resource with {len(scenario.resource.edge_factor)} edges" if scenario.resource else ""
    print(f"{path}: ok ({len(topo.nodes)} nodes, {len(topo.links())} links{extra})")
    return 0


def _configure_logging() -> None:
    level = os.environ.get("QPING_LOG", "off").lower()
    levels = {"off": logging.CRITICAL + 1, "info": logging.INFO, "trace": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.CRITICAL + 1), stream=sys.stderr,
                        format="qping %(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handler = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except _Exit as exc:
        print(f"qping: {exc.message}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
