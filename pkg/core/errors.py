class SwapBinError(Exception):
    pass


class DomainError(SwapBinError, ValueError):
    pass


class LossValidationError(SwapBinError, ValueError):
    pass


class ConfigError(SwapBinError, ValueError):
    pass


class SolverFailure(SwapBinError, RuntimeError):
    pass


class ProtocolError(SwapBinError, RuntimeError):
    pass


class InvariantViolation(SwapBinError, RuntimeError):
    pass
