"""Exception hierarchy.

``Refusal`` subclasses signal that a request was declined before any work
was done (budget or precondition); the CLI maps them to exit code 3.
``CertificateViolation`` signals that a checked property failed (exit 2).
"""


class GapforgeError(Exception):
    pass


class ContractViolation(GapforgeError, ValueError):
    """Inputs are inconsistent with each other (arity, alphabet, ranges)."""


class Refusal(GapforgeError):
    pass


class BudgetExceeded(Refusal):
    def __init__(self, what, size, budget):
        super().__init__(f"{what}: size {size} exceeds budget {budget}")
        self.what = what
        self.size = size
        self.budget = budget


class PreconditionFailed(Refusal):
    pass


class StructuralError(GapforgeError):
    """A certificate is missing a distribution it must contain."""


class CertificateViolation(GapforgeError):
    pass


class NotATree(PreconditionFailed):
    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class LPError(GapforgeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass
