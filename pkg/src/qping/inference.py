"""
Grid-based Bayesian inference over fidelity and the sequential ping test.

The posterior over F lives on a fixed grid of points in [0, 1]; integrals
become sums over grid weights. Evidence arrives as binomial pass/fail
counts whose per-trial pass probability is a caller-supplied likelihood
function of F.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateEvidenceError, InvalidParameterError, PolicyError, SimulationTimeout

log = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 1001

# absorbs linspace rounding so that e.g. f0=0.5 counts the grid point 0.5
_GRID_TOL = 1e-12


class Outcome(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    INCONCLUSIVE = "inconclusive"
    SKIP = "skip"
    ABORT = "abort"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"


class Gate(str, enum.Enum):
    SKIP = "skip"
    ABORT = "abort"
    RUN = "run"


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FidelityDistribution:
    """Discrete probability distribution over fidelity values."""

    grid: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        grid = _frozen(self.grid)
        weights = _frozen(self.weights)
        if grid.ndim != 1 or grid.shape != weights.shape or grid.size < 1:
            raise InvalidParameterError("grid and weights must be 1-D arrays of equal length")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise InvalidParameterError("grid must be strictly increasing")
        if grid[0] < 0 or grid[-1] > 1:
            raise InvalidParameterError("grid points must lie in [0, 1]")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", weights)

    def mean(self) -> float:
        return float(self.grid @ self.weights)

    def std(self) -> float:
        m = self.mean()
        return float(math.sqrt(max(0.0, ((self.grid - m) ** 2) @ self.weights)))

    def tail(self, f0: float) -> float:
        return posterior_tail(self, f0)

    def credible_interval(self, level: float = 0.95) -> tuple[float, float]:
        """Equal-tailed interval read off the cumulative weights."""
        cdf = np.cumsum(self.weights)
        lo = self.grid[np.searchsorted(cdf, (1 - level) / 2)]
        hi = self.grid[min(np.searchsorted(cdf, 1 - (1 - level) / 2), self.grid.size - 1)]
        return float(lo), float(hi)

    def summary(self) -> dict:
        lo, hi = self.credible_interval()
        return {"mean": self.mean(), "std": self.std(), "ci95": [lo, hi]}


@dataclass
class TrialRecord:
    n: int = 0
    k: int = 0
    timestamps: list[float] = field(default_factory=list)
    outcomes: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise InvalidParameterError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")
        if self.timestamps and len(self.timestamps) != self.n:
            raise InvalidParameterError("timestamps must have one entry per trial")
        if any(b < a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise InvalidParameterError("timestamps must be non-decreasing")

    def append(self, passed: bool, t: float) -> None:
        if self.timestamps and t < self.timestamps[-1]:
            raise InvalidParameterError("timestamps must be non-decreasing")
        self.n += 1
        self.k += int(bool(passed))
        self.timestamps.append(float(t))
        self.outcomes.append(bool(passed))


@dataclass(frozen=True)
class DecisionPolicy:
    """Confidence settings for accept/reject decisions.

    ``prior_margin`` gives the prior gate's "much greater than eta" a number:
    the gate fires only when a tail mass reaches ``eta + prior_margin``.
    ``min_trials`` is a burn-in: no early stop before that many trials.
    """

    eta: float = 0.95
    delta: float = 0.0
    max_trials: int = 1000
    max_time: float = math.inf
    prior_margin: float = 0.1
    min_trials: int = 1

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise PolicyError(f"eta must lie in (0, 1), got {self.eta!r}")
        if self.delta < 0:
            raise PolicyError("delta must be non-negative")
        if not (self.eta - self.delta > 0 and self.eta + self.delta < 1):
            raise PolicyError(f"inconclusive band [{self.eta - self.delta}, {self.eta + self.delta}] must sit inside (0, 1)")
        if int(self.max_trials) != self.max_trials or self.max_trials < 1:
            raise PolicyError(f"max_trials must be a positive integer, got {self.max_trials!r}")
        if not self.max_time > 0:
            raise PolicyError("max_time must be positive")
        if self.prior_margin < 0:
            raise PolicyError("prior_margin must be non-negative")
        if not 1 <= self.min_trials <= self.max_trials:
            raise PolicyError("min_trials must lie in [1, max_trials]")


@dataclass
class PingVerdict:
    """Outcome of a ping plus the evidence and resources behind it."""

    outcome: Outcome
    posterior_tail: float
    trials_used: int = 0
    pairs_consumed: int = 0
    elapsed: float = 0.0
    threshold_at_decision: float = math.nan
    reason: str = ""
    posterior: FidelityDistribution | None = field(default=None, repr=False)
    record: TrialRecord = field(default_factory=TrialRecord, repr=False)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.outcome = Outcome(self.outcome)

    def to_dict(self) -> dict:
        out = {
            "outcome": self.outcome.value,
            "reason": self.reason,
            "posterior_tail": self.posterior_tail,
            "trials_used": self.trials_used,
            "pairs_consumed": self.pairs_consumed,
            "elapsed_ns": self.elapsed,
            "threshold_at_decision": self.threshold_at_decision,
        }
        if self.details:
            out["details"] = self.details
        return out


def make_grid(grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    if grid_size < 2:
        raise InvalidParameterError("grid_size must be at least 2")
    return np.linspace(0.0, 1.0, int(grid_size))


def make_prior(kind: str = "uniform", grid_size: int = DEFAULT_GRID_SIZE, *, mean: float | None = None,
               sd: float | None = None, point: float | None = None) -> FidelityDistribution:
    """Build a prior on a uniform grid.

    ``kind`` is ``"uniform"``, ``"gaussian"`` (truncated to [0, 1], needs
    ``mean`` and ``sd``) or ``"point"`` (all mass on the grid point nearest
    ``point``).
    """
    grid = make_grid(grid_size)
    if kind == "uniform":
        weights = np.full(grid.size, 1.0 / grid.size)
    elif kind == "gaussian":
        if mean is None or sd is None or not 0 <= mean <= 1 or not sd > 0:
            raise InvalidParameterError("gaussian prior needs mean in [0, 1] and sd > 0")
        weights = np.exp(-0.5 * ((grid - mean) / sd) ** 2)
        weights /= weights.sum()
    elif kind == "point":
        if point is None or not 0 <= point <= 1:
            raise InvalidParameterError("point prior needs a fidelity in [0, 1]")
        weights = np.zeros(grid.size)
        weights[int(np.argmin(np.abs(grid - point)))] = 1.0
    else:
        raise InvalidParameterError(f"unknown prior kind {kind!r}")
    return FidelityDistribution(grid, weights)


def parse_prior(text: str, grid_size: int = DEFAULT_GRID_SIZE) -> FidelityDistribution:
    """Parse ``uniform``, ``gaussian:m,s`` or ``point:f``."""
    kind, _, args = text.partition(":")
    try:
        if kind == "uniform" and not args:
            return make_prior("uniform", grid_size)
        if kind == "gaussian":
            m, s = (float(x) for x in args.split(","))
            return make_prior("gaussian", grid_size, mean=m, sd=s)
        if kind == "point":
            return make_prior("point", grid_size, point=float(args))
    except ValueError as exc:
        raise InvalidParameterError(f"bad prior {text!r}: {exc}") from None
    raise InvalidParameterError(f"bad prior {text!r}; expected uniform, gaussian:m,s or point:f")


def _log_binomial_kernel(p: np.ndarray, k: int, n: int) -> np.ndarray:
    with np.errstate(divide="ignore"):
        out = np.zeros_like(p)
        if k:
            out += k * np.log(p)
        if n - k:
            out += (n - k) * np.log1p(-p)
    return out


def bayes_update(prior: FidelityDistribution, record: TrialRecord,
                 likelihood: Callable[[np.ndarray], np.ndarray]) -> FidelityDistribution:
    """Posterior after ``record.k`` passes in ``record.n`` trials."""
    if record.n == 0:
        return prior
    p = np.clip(np.asarray(likelihood(prior.grid), dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        log_w = np.log(prior.weights) + _log_binomial_kernel(p, record.k, record.n)
    top = np.max(log_w)
    if not np.isfinite(top):
        raise DegenerateEvidenceError("observed data has zero likelihood under the whole prior support")
    w = np.exp(log_w - top)
    return FidelityDistribution(prior.grid, w / w.sum())


def posterior_tail(dist: FidelityDistribution, f0: float) -> float:
    """Probability mass at fidelities >= f0."""
    return float(min(1.0, dist.weights[dist.grid >= f0 - _GRID_TOL].sum()))


def decide(tail: float, policy: DecisionPolicy) -> Outcome:
    """One-shot decision rule; the inconclusive band wins over accept."""
    if policy.delta > 0 and policy.eta - policy.delta <= tail <= policy.eta + policy.delta:
        return Outcome.INCONCLUSIVE
    return Outcome.ACCEPT if tail >= policy.eta else Outcome.REJECT


def sequential_decide(tail: float, policy: DecisionPolicy, prior_tail: float | None = None) -> Outcome | None:
    """Stopping rule: accept or reject once either hypothesis reaches confidence.

    Returns None while neither ``F >= f0`` nor ``F < f0`` is supported
    at level ``eta`` (outside the inconclusive band). With ``prior_tail``
    given, a verdict also needs the data to have moved the tail its way;
    decisions carried by the prior alone belong to :func:`prior_gate`.
    """
    if decide(tail, policy) is Outcome.ACCEPT and (prior_tail is None or tail >= prior_tail - _GRID_TOL):
        return Outcome.ACCEPT
    if decide(1.0 - tail, policy) is Outcome.ACCEPT and (prior_tail is None or tail <= prior_tail + _GRID_TOL):
        return Outcome.REJECT
    return None


def prior_gate(prior: FidelityDistribution, f0: float, policy: DecisionPolicy) -> Gate:
    """Decide from a trusted prior alone whether a ping is worth running."""
    bar = policy.eta + policy.prior_margin
    if bar >= 1.0:
        raise PolicyError(f"eta + prior_margin = {bar} >= 1, the prior gate can never fire")
    p1 = posterior_tail(prior, f0)
    if p1 >= bar:
        return Gate.SKIP
    if 1.0 - p1 >= bar:
        return Gate.ABORT
    return Gate.RUN


Sampler = Callable[[], tuple[bool, float]]


def sequential_test(sampler: Sampler, threshold_fn: Callable[[float], float], prior: FidelityDistribution,
                    policy: DecisionPolicy, likelihood: Callable[[np.ndarray], np.ndarray], *,
                    start_time: float = 0.0, use_gate: bool = True) -> PingVerdict:
    """Draw one trial at a time until the posterior settles the question.

    ``sampler()`` performs one trial and returns ``(passed, t)`` with ``t``
    the simulated time at which it completed. ``threshold_fn(t)`` is the
    fidelity bar in force at time ``t``. Stops with Accept/Reject as soon as
    :func:`sequential_decide` fires; otherwise the budget ends the test with
    Inconclusive (trial budget) or Timeout (time budget or sampler timeout).
    Each trial's outcome is folded in as a one-trial :func:`bayes_update`.
    """
    f0 = threshold_fn(start_time)
    tail = posterior_tail(prior, f0)
    # a gate whose bar is unreachable could never fire, so it is not consulted
    if use_gate and policy.eta + policy.prior_margin < 1.0:
        gate = prior_gate(prior, f0, policy)
        if gate is not Gate.RUN:
            outcome = Outcome.SKIP if gate is Gate.SKIP else Outcome.ABORT
            return PingVerdict(outcome, tail, threshold_at_decision=f0, reason="prior-gate", posterior=prior)

    grid = prior.grid
    lik = np.clip(np.asarray(likelihood(grid), dtype=np.float64), 0.0, 1.0)
    miss = 1.0 - lik
    w = np.array(prior.weights)
    record = TrialRecord()
    t = start_time
    trace = log.isEnabledFor(logging.DEBUG)

    def verdict(outcome, reason):
        post = FidelityDistribution(grid, w) if record.n else prior
        return PingVerdict(outcome, tail, record.n, record.n, t - start_time, f0,
                           reason=reason, posterior=post, record=record)

    while record.n < policy.max_trials:
        try:
            passed, t = sampler()
        except SimulationTimeout as exc:
            return verdict(Outcome.TIMEOUT, f"sampler-timeout: {exc}")
        record.append(passed, t)
        # one-trial Bayes update, same result as bayes_update with n=1
        w *= lik if passed else miss
        total = w.sum()
        if total <= 0.0:
            raise DegenerateEvidenceError("observed data has zero likelihood under the whole prior support")
        w /= total
        f0 = threshold_fn(t)
        tail = float(min(1.0, w[grid >= f0 - _GRID_TOL].sum()))
        if trace:
            log.debug("trial %d pass=%s t=%.6g threshold=%.6g tail=%.6g", record.n, passed, t, f0, tail)
        if record.n >= policy.min_trials:
            prior_tail = float(prior.weights[grid >= f0 - _GRID_TOL].sum())
            outcome = sequential_decide(tail, policy, prior_tail)
            if outcome is not None:
                return verdict(outcome, "evidence")
        if t - start_time >= policy.max_time:
            return verdict(Outcome.TIMEOUT, "time-budget")
    return verdict(Outcome.INCONCLUSIVE, "trial-budget")
