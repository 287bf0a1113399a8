"""Exception types raised across the package."""


class CpnFedSLError(Exception):
    pass


class DanglingEndpoint(CpnFedSLError):
    """A link references a node that was never declared."""


class DuplicateId(CpnFedSLError):
    pass


class ParseError(CpnFedSLError):
    """Malformed input file or config; message carries the offending field or line."""


class InvariantViolation(CpnFedSLError):
    pass


class LayoutMismatch(CpnFedSLError):
    pass


class InvalidSchedule(CpnFedSLError):
    """A scheduler produced an assignment that breaks one of the round constraints."""


class BudgetExceeded(CpnFedSLError):
    pass


class LpInfeasible(CpnFedSLError):
    pass
