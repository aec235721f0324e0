"""
Error types raised by the simulator, the engine and the command layer.
"""


class MaqaError(Exception):
    """Base class for every error raised by the maqa app."""


class DimensionMismatch(MaqaError):
    """A gate, observable or register does not fit the state it is applied to."""


class NonUnitary(MaqaError):
    """Matrix rejected because U^dagger U deviates from the identity."""

    def __init__(self, deviation: float, field: str = None):
        self.deviation = deviation
        self.field = field
        where = f" in '{field}'" if field else ""
        super().__init__(f"Matrix{where} is not unitary (max |U^dagger U - I| = {deviation:.3e})")


class NonHermitian(MaqaError):
    """Observable rejected because M deviates from its conjugate transpose."""

    def __init__(self, deviation: float, field: str = None):
        self.deviation = deviation
        self.field = field
        where = f" in '{field}'" if field else ""
        super().__init__(f"Observable{where} is not Hermitian (max |M - M^dagger| = {deviation:.3e})")


class InvalidSpec(MaqaError):
    """An experiment description violates one of its invariants."""


class RegisterTooLarge(MaqaError):
    """Requested register exceeds the dense simulation cap."""


class NumericalError(MaqaError):
    """A numerical hygiene check failed (norm drift, imaginary residue)."""


class TrainingDiverged(MaqaError):
    """Training produced a non-finite loss or parameter update."""

    def __init__(self, epoch: int, loss: float, detail: str = None):
        self.epoch = epoch
        self.loss = loss
        detail = detail or f"Loss became {loss}"
        super().__init__(f"{detail} at epoch {epoch}; training aborted")


class ConfigError(MaqaError):
    """Experiment config is malformed or fails schema validation."""

    def __init__(self, message: str, field: str = None, line: int = None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field:
            prefix += f"{field}: "
        super().__init__(prefix + message)
