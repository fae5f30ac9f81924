"""Exception hierarchy.

Input problems (bad files, mismatched shapes, out-of-range arguments) derive
from :class:`InputError`, which is also a ``ValueError``.  Failures that only
show up once the numbers are crunched derive from :class:`NumericalError`.
The CLI maps the two families to exit codes 2 and 3.
"""


class PwSparseError(Exception):
    pass


class InputError(PwSparseError, ValueError):
    pass


class NumericalError(PwSparseError):
    pass


class RankDeficientError(NumericalError):
    pass


class BudgetExceededError(NumericalError):
    pass


class InfeasibleError(NumericalError):
    pass
