"""Exception hierarchy shared by all modules."""


class QSL2RError(Exception):
    """Base class for library errors."""


class DomainError(QSL2RError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConditionError(QSL2RError):
    """A linear system is singular or too ill-conditioned to trust."""


class InvarianceError(QSL2RError):
    """A subspace that should be invariant leaks under a generator."""


class FamilyMismatch(QSL2RError, ValueError):
    """A module or point does not belong to the family an operation expects."""
