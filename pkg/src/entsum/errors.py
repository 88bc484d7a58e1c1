"""Exception hierarchy shared by all entsum modules.

Two broad families matter for the CLI exit codes: ``DataError`` (bad or
inconsistent input, exit code 2) and ``NumericError`` (shape or numeric
failures during computation, exit code 3).
"""


class EntsumError(Exception):
    pass


class DataError(EntsumError):
    pass


class NumericError(EntsumError):
    pass


class MalformedLine(DataError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        msg = f"malformed statement on line {line_no}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class EmptyDescription(DataError):
    pass


class MissingFile(DataError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"missing file: {self.path}")


class InvalidManifest(DataError):
    pass


class UnknownEntity(DataError):
    def __init__(self, iri: str):
        self.iri = iri
        super().__init__(f"no entity with IRI {iri}")


class InvalidFold(DataError):
    def __init__(self, index: int, reason: str):
        self.index = index
        super().__init__(f"fold {index}: {reason}")


class GoldNotSubset(DataError):
    pass


class GoldTooLarge(DataError):
    pass


class NoGoldForK(DataError):
    def __init__(self, k: int):
        self.k = k
        super().__init__(f"no ground-truth summaries for k={k}")


class DimMismatch(DataError):
    def __init__(self, line_no: int, expected: int, got: int):
        self.line_no = line_no
        super().__init__(
            f"line {line_no}: expected {expected} vector components, got {got}"
        )


class ParseError(DataError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        msg = f"unparseable line {line_no}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class ShapeMismatch(NumericError):
    pass


class NonFiniteLoss(NumericError):
    pass


class VersionMismatch(DataError):
    pass


class CorruptCheckpoint(DataError):
    pass


class EmptySummary(DataError):
    pass


class LengthMismatch(DataError):
    pass


class DegenerateVariance(DataError):
    pass
