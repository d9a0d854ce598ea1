"""Exception types shared across the package.

ValueError is used for domain/usage problems (bad parameters, malformed
input); NumericalError marks failures of the numerical routines themselves.
The CLI maps ValueError to exit code 1 and NumericalError to exit code 2.
"""


class NumericalError(RuntimeError):
    """An iterative routine failed to produce a usable result."""


class ComponentCollapseError(NumericalError):
    """A mixture component lost all its responsibility mass."""
