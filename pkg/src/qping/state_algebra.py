"""
Closed-form algebra for Werner and Bell-diagonal two-qubit states.

All states are referenced to |Phi+> = (|00> + |11>)/sqrt(2). A Werner state of
fidelity F puts weight F on |Phi+> and (1 - F)/3 on each of the other three
Bell states. Functions here are pure and operate on plain floats or on the
immutable state classes below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InfeasibleError, InvalidParameterError

SQRT2 = math.sqrt(2.0)

# Bell basis ordering used throughout: Phi+, Phi-, Psi+, Psi-
_BELL_VECTORS = np.array(
    [
        [1, 0, 0, 1],
        [1, 0, 0, -1],
        [0, 1, 1, 0],
        [0, 1, -1, 0],
    ],
    dtype=np.float64,
) / SQRT2


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def _check_open_unit(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 < value <= 1.0) or math.isnan(value):
        raise InvalidParameterError(f"{name} must lie in (0, 1], got {value!r}")
    return value


def clamp_unit(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


@dataclass(frozen=True)
class WernerState:
    """Bell-diagonal state fully described by its overlap with |Phi+>."""

    fidelity: float

    def __post_init__(self):
        object.__setattr__(self, "fidelity", _check_unit("fidelity", self.fidelity))

    @property
    def werner_parameter(self) -> float:
        """Depolarizing weight p with rho = p |Phi+><Phi+| + (1 - p) I/4."""
        return (4.0 * self.fidelity - 1.0) / 3.0

    def bell_coefficients(self) -> np.ndarray:
        rest = (1.0 - self.fidelity) / 3.0
        return np.array([self.fidelity, rest, rest, rest])

    def to_bell_diagonal(self) -> "BellDiagonalState":
        return BellDiagonalState(tuple(self.bell_coefficients()))

    def density_matrix(self) -> np.ndarray:
        return self.to_bell_diagonal().density_matrix()


@dataclass(frozen=True)
class BellDiagonalState:
    """General mixture of the four Bell states (Phi+, Phi-, Psi+, Psi-)."""

    coefficients: tuple[float, float, float, float]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) != 4:
            raise InvalidParameterError("a Bell-diagonal state needs exactly 4 coefficients")
        if any(c < 0 for c in coeffs):
            raise InvalidParameterError(f"Bell coefficients must be non-negative, got {coeffs}")
        if abs(sum(coeffs) - 1.0) > 1e-12:
            raise InvalidParameterError(f"Bell coefficients must sum to 1, got {sum(coeffs)!r}")
        object.__setattr__(self, "coefficients", coeffs)

    def fidelity(self) -> float:
        return self.coefficients[0]

    def density_matrix(self) -> np.ndarray:
        weights = np.asarray(self.coefficients)
        return np.einsum("k,ki,kj->ij", weights, _BELL_VECTORS, _BELL_VECTORS)

    def twirl(self) -> WernerState:
        """Project onto the Werner family (random bilateral twirl)."""
        return WernerState(self.fidelity())


@dataclass(frozen=True)
class ThresholdSpec:
    """Application fidelity requirement plus the degradation it must survive.

    ``time_to_use`` is the simulated time (ns, measured from the start of a
    ping) at which the delivered pair will actually be consumed. A pair
    certified at time ``t`` must still meet ``f_required`` after decaying for
    the remaining ``time_to_use - t`` and after ``n_gates`` noisy gates.
    """

    f_required: float
    tau_memory: float = math.inf
    q_gate: float = 1.0
    n_gates: int = 0
    q_swap: float = 1.0
    time_to_use: float = 0.0

    def __post_init__(self):
        f = float(self.f_required)
        if not (0.0 < f <= 1.0):
            raise InvalidParameterError(f"f_required must lie in (0, 1], got {f!r}")
        _check_open_unit("q_gate", self.q_gate)
        _check_open_unit("q_swap", self.q_swap)
        if not self.tau_memory > 0:
            raise InvalidParameterError(f"tau_memory must be positive, got {self.tau_memory!r}")
        if int(self.n_gates) != self.n_gates or self.n_gates < 0:
            raise InvalidParameterError(f"n_gates must be a non-negative integer, got {self.n_gates!r}")
        if self.time_to_use < 0:
            raise InvalidParameterError("time_to_use must be non-negative")

    def degradation(self, remaining: float) -> float:
        """Multiplicative fidelity loss over ``remaining`` ns plus the gate budget."""
        remaining = max(0.0, float(remaining))
        return math.exp(-remaining / self.tau_memory) * self.q_gate**self.n_gates

    def threshold_at(self, t: float) -> float:
        """Fidelity a pair certified at ping time ``t`` must have.

        May exceed 1, in which case no physical state passes.
        """
        return self.f_required / self.degradation(self.time_to_use - t)


def decay(state: WernerState, elapsed: float, tau: float) -> WernerState:
    """Memory decoherence acting on the fidelity: F exp(-elapsed/tau)."""
    if not tau > 0:
        raise InvalidParameterError(f"tau must be positive, got {tau!r}")
    if elapsed < 0:
        raise InvalidParameterError(f"elapsed must be non-negative, got {elapsed!r}")
    return WernerState(clamp_unit(state.fidelity * math.exp(-elapsed / tau)))


def required_initial_fidelity(spec: ThresholdSpec, time_to_use: float) -> float:
    """Initial fidelity needed so the pair still meets ``spec.f_required`` at use.

    Raises InfeasibleError (carrying the computed value) when that exceeds 1.
    """
    if time_to_use < 0:
        raise InvalidParameterError("time_to_use must be non-negative")
    value = spec.f_required / spec.degradation(time_to_use)
    if value > 1.0:
        raise InfeasibleError(value)
    return value


def pass_probability(fidelity: float) -> float:
    """Probability a uniformly random stabilizer check (XX, -YY, ZZ) passes."""
    f = _check_unit("fidelity", fidelity)
    return (2.0 * f + 1.0) / 3.0


def round_trip_fidelity(fidelity: float) -> float:
    """Fidelity after traversing a depolarizing channel of fidelity F twice."""
    f = _check_unit("fidelity", fidelity)
    return f * f + (1.0 - f) ** 2 / 3.0


def effective_threshold(f0: float) -> float:
    """Threshold to apply to round-trip data when the one-way target is ``f0``."""
    return round_trip_fidelity(f0)


def swap_compose(fidelities: Sequence[float], q_swap: float) -> float:
    """End-to-end fidelity of N segments joined by N-1 swaps of quality q_swap."""
    fs = [_check_unit("fidelity", f) for f in fidelities]
    if not fs:
        raise InvalidParameterError("swap_compose needs at least one segment")
    q = _check_open_unit("q_swap", q_swap)
    return clamp_unit(math.prod(fs) * q ** (len(fs) - 1))


def werner_swap_compose(fidelities: Iterable[float]) -> float:
    """Exact Werner-parameter composition under ideal swapping.

    Multiplies depolarizing weights rather than fidelities; kept for
    comparison against :func:`swap_compose`.
    """
    fs = [_check_unit("fidelity", f) for f in fidelities]
    if not fs:
        raise InvalidParameterError("werner_swap_compose needs at least one segment")
    p = math.prod((4.0 * f - 1.0) / 3.0 for f in fs)
    return (1.0 + 3.0 * p) / 4.0


def chsh_value(fidelity: float) -> float:
    """CHSH value at the optimal |Phi+> settings, 2 sqrt(2) (4F - 1)/3."""
    f = _check_unit("fidelity", fidelity)
    return 2.0 * SQRT2 * (4.0 * f - 1.0) / 3.0


def witness_value(fidelity: float) -> float:
    """Expectation of W = I/2 - |Phi+><Phi+|; negative iff F > 1/2."""
    f = _check_unit("fidelity", fidelity)
    return 0.5 - f


CHSH_BOUNDARY_FIDELITY = (1.0 + 3.0 / SQRT2) / 4.0
