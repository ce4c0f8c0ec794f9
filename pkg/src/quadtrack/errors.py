"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class ScenarioError(SimulationError):
    """Scenario file or configuration is invalid."""


class NonFiniteError(SimulationError):
    """A state, input, or derived quantity became NaN or infinite."""


class AngleGuardError(SimulationError):
    """Roll or pitch left the model's validity range."""

    def __init__(self, t: float, roll: float, pitch: float):
        self.t = t
        self.roll = roll
        self.pitch = pitch
        super().__init__(
            f"attitude left validity range at t={t:.6f} s "
            f"(roll={roll:.4f} rad, pitch={pitch:.4f} rad)"
        )


class DenominatorTooSmallError(SimulationError):
    """Vertical virtual control too close to free fall for thrust extraction."""

    def __init__(self, value: float, limit: float):
        self.value = value
        self.limit = limit
        super().__init__(
            f"thrust extraction denominator U_z + g = {value:.6f} m/s^2 "
            f"is below the {limit} m/s^2 guard"
        )
