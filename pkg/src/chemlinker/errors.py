"""Exception hierarchy shared across the package."""


class ChemlinkerError(Exception):
    """Base class for all domain errors."""


# --- molecular string parsing -------------------------------------------

class ParseError(ChemlinkerError):
    """A molecular string could not be parsed into a valid molecule."""


class EmptyInput(ParseError):
    pass


class LexError(ParseError):
    pass


class UnclosedBranch(ParseError):
    pass


class UnclosedRing(ParseError):
    pass


class ValenceViolation(ParseError):
    pass


class KekulizationFailure(ParseError):
    pass


class DecodeFailure(ChemlinkerError):
    """A SELFIES token string yields no atoms at all."""


class UnsupportedFeature(ChemlinkerError):
    """The operation does not support this molecule (e.g. stereo in SELFIES)."""


# --- fingerprints / metrics ----------------------------------------------

class SchemeMismatch(ChemlinkerError):
    """Tanimoto comparison between fingerprints of different schemes."""


class InvalidReference(ChemlinkerError):
    """A reference string in an evaluation set failed to parse."""


# --- neural stack ---------------------------------------------------------

class ShapeError(ChemlinkerError):
    pass


class DimensionMismatch(ChemlinkerError):
    pass


class VocabError(ChemlinkerError):
    pass


class LengthMismatch(ChemlinkerError):
    pass


class EmptyDataset(ChemlinkerError):
    pass


# --- sampling -------------------------------------------------------------

class TargetUnreached(ChemlinkerError):
    """Raised when temperature escalation is exhausted before reaching the
    requested number of unique passing molecules.

    Carries the partial result set and the accounting stats.
    """

    def __init__(self, message, molecules=None, stats=None):
        super().__init__(message)
        self.molecules = molecules if molecules is not None else set()
        self.stats = stats


# --- dataset pipeline ------------------------------------------------------

class MalformedRow(ChemlinkerError):
    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class DuplicateCid(ChemlinkerError):
    pass


class SampleTooLarge(ChemlinkerError):
    pass


# --- consensus --------------------------------------------------------------

class EmptyTable(ChemlinkerError):
    pass


class EmptySet(ChemlinkerError):
    pass
