"""Exception types shared across the package.

The CLI maps these onto its exit codes: InputError -> 2, ResourceError -> 3.
"""


class GateVqeError(Exception):
    pass


class InputError(GateVqeError, ValueError):
    """Malformed or inconsistent user input."""


class ResourceError(GateVqeError):
    """A problem exceeds a configured size cap (qubits, enumeration size)."""


class InfeasibleError(GateVqeError):
    """No assignment satisfies the constraints."""


class OptimizerAbort(GateVqeError, FloatingPointError):
    """The objective returned a non-finite value."""
