"""
Errors - Exception hierarchy shared by the toolkit and mapped to CLI exit codes
"""
from typing import Optional, Sequence, Tuple


class VarianceToolkitError(Exception):
    """Base class for every error raised on purpose by this package"""


class InputError(VarianceToolkitError, ValueError):
    """Bad user input: malformed documents, invalid parameters, unknown ids"""


class LocatedError(InputError):
    """Input error that points at a line (and optionally a column) of a document"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 ids: Sequence[str] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.ids: Tuple[str, ...] = tuple(ids)
        location = ""
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location += f", column {column}"
            location += ": "
        super().__init__(f"{location}{message}")


class GameFormatError(LocatedError):
    """Syntax or semantic error in a game document"""


class PolicyFormatError(LocatedError):
    """Error in a policy document"""


class PopulationFormatError(LocatedError):
    """Error in a rated-population document"""


class DatasetFormatError(LocatedError):
    """Error in a playthrough log"""


class GameValidationError(InputError):
    """A game tree failed structural validation"""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        summary = "; ".join(str(d) for d in self.diagnostics[:5])
        more = f" (+{len(self.diagnostics) - 5} more)" if len(self.diagnostics) > 5 else ""
        super().__init__(f"invalid game: {summary}{more}")


class InvalidParameters(InputError):
    """Parameter outside its documented range"""


class UnknownPlayer(InputError):
    """Player index not present in the game"""


class MissingTableEntry(InputError):
    """An estimator table lacks an information state that the data visits"""

    def __init__(self, info_state: str, table: str = "table"):
        self.info_state = info_state
        super().__init__(f"{table} has no entry for information state '{info_state}'")


class EmptyDataset(InputError):
    """An estimator was handed a dataset without records"""


class AsymmetricGame(InputError):
    """Three-way decomposition needs a two-player zero-sum game"""


class ResourceCapError(VarianceToolkitError):
    """An exact enumeration would exceed its configured cap"""


class EnumerationTooLarge(ResourceCapError):
    """Joint assignment enumeration larger than the cap"""

    def __init__(self, required: int, cap: int, what: str = "assignments"):
        self.required = required
        self.cap = cap
        super().__init__(f"enumeration of {required} {what} exceeds cap {cap}")


class ChanceEnumerationTooLarge(EnumerationTooLarge):
    """Joint chance-assignment enumeration larger than the cap"""

    def __init__(self, required: int, cap: int):
        super().__init__(required, cap, what="chance assignments")


class SingularDesign(VarianceToolkitError):
    """Normal equations are singular and no ridge penalty was requested"""
