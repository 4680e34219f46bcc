"""Exception types raised by the library and mapped to CLI exit codes."""


class ConfigurationError(ValueError):
    """Invalid parameter, gain, or experiment configuration."""


class InvalidTopologyError(ConfigurationError):
    """Graph that cannot be used for simulation (too small, disconnected, ...)."""


class GainViolationError(ConfigurationError):
    """A gain does not satisfy the inequality required for convergence."""


class SymmetryViolationError(ValueError):
    """A matrix that must be symmetric is not, beyond tolerance."""


class SimulationDivergedError(RuntimeError):
    """Non-finite or escaping value encountered during integration."""

    def __init__(self, t, agent, field, reason="non-finite value"):
        self.t = t
        self.agent = agent
        self.field = field
        self.reason = reason
        super().__init__(f"{reason} in {field!r} of agent {agent} at t={t:.6g}")


class OracleFailure(RuntimeError):
    """Newton iteration for the optimal trajectory failed to converge."""

    def __init__(self, t, residual):
        self.t = t
        self.residual = residual
        super().__init__(
            f"optimal-trajectory Newton solve did not converge at t={t:.6g} "
            f"(|grad| = {residual:.3e})"
        )


class InvariantViolation(AssertionError):
    """A structural invariant of the closed loop was broken during a run."""
