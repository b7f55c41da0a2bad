"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, NumericalError -> 3.
"""


class InputError(ValueError):
    """Malformed or inconsistent user input (files, ids, parameters)."""


class NumericalError(RuntimeError):
    """A numerical routine produced a non-finite or degenerate result."""
