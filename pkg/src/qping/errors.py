"""Exception hierarchy shared across the package."""


class QPingError(Exception):
    """Base class for all qping errors."""


class InvalidParameterError(QPingError, ValueError):
    """A numeric argument is outside its allowed range."""


class InfeasibleError(QPingError):
    """The hardware cannot deliver the requested fidelity at time of use.

    ``value`` carries the initial fidelity that would have been required.
    """

    def __init__(self, value: float, message: str | None = None):
        self.value = value
        super().__init__(message or f"required initial fidelity {value:.6g} exceeds 1")


class DegenerateEvidenceError(QPingError):
    """The posterior has no mass left after an update."""


class PolicyError(QPingError, ValueError):
    """A decision policy is inconsistent."""


class SimulationTimeout(QPingError):
    """Entanglement generation or swapping hit its attempt cap."""


class TopologyError(QPingError, ValueError):
    """A topology document violates one or more invariants.

    ``diagnostics`` is a list of human-readable messages, each prefixed
    with the source line when known.
    """

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
