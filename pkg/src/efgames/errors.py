"""Exception types shared across the workbench."""


class EfgamesError(Exception):
    """Base class for all workbench errors."""


class FormulaParseError(EfgamesError):
    """Raised on malformed formula text; carries a character position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class StructureFormatError(EfgamesError):
    """Malformed structure or region file."""


class BudgetExceededError(EfgamesError):
    """An exhaustive search ran past its node budget.

    Deliberately distinct from any game verdict: callers must never
    interpret this as a win or loss.
    """


class PreconditionError(EfgamesError):
    """A strategy translation was invoked on inputs that fail its
    oracle-checked precondition (e.g. the active domains are not
    game-equivalent at the required depth)."""


class StrategyError(EfgamesError):
    """A duplicator strategy could not produce a legal answer.  With
    correct preconditions this never happens, so it signals that the
    claimed conditions did not actually hold."""


class ExtractionError(EfgamesError):
    """A Ramsey-style extraction ran out of window before finding the
    requested number of uniform positions."""

    def __init__(self, message, found=0):
        super().__init__(message)
        self.found = found


class InsufficiencyError(EfgamesError):
    """A cut set is not sufficient for a region relation; carries the
    offending cell."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class InfeasibleParameterError(EfgamesError):
    """A requested exact value is provably too large to materialize
    (e.g. lcm{1..n} for astronomically large n)."""
