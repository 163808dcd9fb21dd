"""Exception types shared across the package.

Every error that reports a witness carries it as a plain attribute so the
CLI can serialize it.
"""

from __future__ import annotations


class MDGError(Exception):
    """Base class for all package errors."""


class NotALattice(MDGError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotGeometric(MDGError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DuplicateAtom(MDGError):
    pass


class DuplicateEdge(MDGError):
    pass


class SelfLoop(MDGError):
    pass


class ForeignFlat(MDGError):
    pass


class NotComparable(MDGError):
    pass


class NotModular(MDGError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotModularCoatom(MDGError):
    pass


class NotAModularCut(MDGError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateCut(MDGError):
    pass


class MismatchedBase(MDGError):
    pass


class InvalidExtension(MDGError):
    pass


class NotContractible(MDGError):
    pass


class ImproperFlat(MDGError):
    pass


class LatticeMismatch(MDGError):
    pass


class NotIso(MDGError):
    pass


class InconsistentChain(MDGError):
    pass


class SpecParse(MDGError):
    pass


class ResourceLimit(MDGError):
    pass
