"""Exception hierarchy shared by every module.

The CLI maps :class:`DeadlineExceeded` to exit code 3 and every other
:class:`PCSPError` to exit code 2.
"""

from __future__ import annotations


class PCSPError(Exception):
    """Base class for all toolkit errors."""


class MalformedStructure(PCSPError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UnknownName(PCSPError):
    pass


class BadParam(PCSPError):
    pass


class BadArity(PCSPError):
    pass


class BadInput(PCSPError):
    pass


class SizeCapExceeded(PCSPError):
    def __init__(self, cap, requested, what="size"):
        self.cap = cap
        self.requested = requested
        super().__init__(f"{what} cap exceeded: requested {requested}, cap {cap}")


class SignatureMismatch(PCSPError):
    pass


class OutOfRangeElement(PCSPError):
    pass


class ArityOrRangeMismatch(PCSPError):
    pass


class DeadlineExceeded(PCSPError):
    """Search ran out of wall-clock budget; says nothing about existence."""


class ArityMismatch(PCSPError):
    pass


class DomainMismatch(PCSPError):
    pass


class NotCyclic(PCSPError):
    pass


class NotAreaRare(PCSPError):
    pass


class NotAHomomorphism(PCSPError):
    pass


class CyclicPolymorphismExists(PCSPError):
    def __init__(self, p):
        self.p = p
        super().__init__(f"template has a cyclic polymorphism of arity {p}")


class UndeclaredVariable(PCSPError):
    pass


class ChainSpaceCapExceeded(SizeCapExceeded):
    def __init__(self, cap, requested):
        super().__init__(cap, requested, what="chain")


class FragmentTooLarge(SizeCapExceeded):
    def __init__(self, cap, requested):
        super().__init__(cap, requested, what="fragment")


class MinorLinkViolation(PCSPError):
    def __init__(self, upper, lower):
        self.upper = upper
        self.lower = lower
        super().__init__(f"minor link t(W) = t(U)_pi fails for U={upper}, W={lower}")


class MissingXiEntry(PCSPError):
    pass


class ParseError(PCSPError):
    pass


class ValidationError(PCSPError):
    pass


class ValueTooLarge(PCSPError):
    pass
