"""Exception types shared across the package.

Validation problems (bad shapes, schema violations, out-of-range
parameters) and numerical failures (non-convergence, degenerate
systems) are kept distinct so callers, and in particular the CLI,
can map them to different exit codes.
"""


class ValidationError(ValueError):
    """Input does not satisfy a documented precondition or schema."""


class NumericalError(RuntimeError):
    """A numerical procedure failed on otherwise valid input."""
