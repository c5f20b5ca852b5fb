class OLGError(Exception):
    """Base class for model errors."""


class ValidationError(OLGError, ValueError):
    pass


class SchemaError(ValidationError):
    pass


class DataLoadError(OLGError):
    """A data file is missing or malformed; carries per-row diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class ClosureError(OLGError):
    pass


class InfeasibleHousehold(OLGError):
    def __init__(self, message, cohort=None, age=None):
        super().__init__(message)
        self.cohort = cohort
        self.age = age


class ConvergenceError(OLGError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class CoverageError(OLGError):
    pass


class UnknownScenario(OLGError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class AllocationError(OLGError):
    """Factor allocation inconsistent with equalized wages or returns."""

    def __init__(self, message, gaps=None):
        super().__init__(message)
        self.gaps = gaps


class DomainError(OLGError, ValueError):
    """An argument lies outside the domain of a welfare or accounting formula."""
