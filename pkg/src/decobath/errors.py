"""Exception hierarchy shared by the simulation modules and the CLI."""


class DecobathError(Exception):
    pass


class ConfigError(DecobathError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class NumericalError(DecobathError, RuntimeError):
    """Numerical failure (CLI exit code 3)."""


class ConvergenceError(NumericalError):
    pass


class PropagatorError(NumericalError):
    pass


class IntegrationError(NumericalError):
    pass
