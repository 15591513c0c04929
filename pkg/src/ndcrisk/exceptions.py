"""Exception and warning types shared across the package."""


class RiskWarning(UserWarning):
    """Non-fatal condition worth surfacing in a report (short series, beta out of band, ...)."""


class NotPositiveSemidefinite(ValueError):
    """Correlation matrix failed the eigenvalue check."""


class ConvergenceError(RuntimeError):
    """A numerical procedure could not produce a usable answer."""
