"""Exception types shared across the package.

The CLI maps these onto exit codes, so each one names a failure class rather
than a single call site.
"""


class DomainError(ValueError):
    """Parameters outside the physical domain of a formula."""


class WindowError(ValueError):
    """Requested frequency or delay window not covered by the data."""


class NoClearMinimumError(ValueError):
    """A search window has its minimum on the window edge."""


class AmbiguousAlignmentError(ValueError):
    """Two candidate offsets fit a trace equally well."""


class StepSizeError(ValueError):
    """Delay grid too coarse for the propagator accuracy guard."""


class FitError(RuntimeError):
    """A least-squares problem could not be solved."""


class DegenerateFitError(FitError):
    """The data carry no information about the fitted parameters."""
