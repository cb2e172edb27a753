"""Exception hierarchy shared by the solvers, simulator and CLI."""


class PosMacroError(Exception):
    """Base class for all library errors."""


class DomainError(PosMacroError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class SolverError(PosMacroError):
    """A numerical solve failed; the CLI maps these to exit code 2."""


class DegeneratePolynomialError(SolverError, ValueError):
    """All coefficients are zero, or the polynomial is otherwise unusable."""


class DescartesPreconditionError(SolverError, ValueError):
    """The coefficient sequence does not have exactly one sign change."""

    def __init__(self, message, sign_changes):
        super().__init__(message)
        self.sign_changes = sign_changes


class NoRootError(SolverError):
    """No sign change was found before hitting the root bound."""


class ConvergenceError(SolverError):
    """Iteration budget exhausted; ``bracket`` holds the best enclosing interval."""

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


class EquilibriumError(SolverError):
    """An equilibrium solve produced an internally inconsistent state."""


class ConfigError(PosMacroError, ValueError):
    """Invalid run configuration; the CLI maps these to exit code 1."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
