"""Exception hierarchy.

Every error carries a ``category`` used by the CLI to pick an exit code:
``usage`` -> 1, ``data`` -> 2, anything else -> 3.
"""


class KeyReuseError(Exception):
    category = "internal"


class DataError(KeyReuseError):
    category = "data"


class UsageError(KeyReuseError):
    category = "usage"


# curve-core
class InvalidKey(DataError):
    pass


class InvalidPrefix(InvalidKey):
    pass


class WrongLength(InvalidKey):
    pass


class NotOnCurve(InvalidKey):
    pass


class PointAtInfinity(InvalidKey):
    pass


class InvalidSignatureScalars(DataError):
    pass


class UnrecoverablePoint(DataError):
    pass


class BoundsTooLarge(UsageError):
    pass


# chain registry
class UnknownChain(UsageError):
    pass


# scripts
class MalformedScript(DataError):
    pass


# account recovery
class UnsupportedTxType(DataError):
    pass


class NoCandidateRecoverable(DataError):
    pass


# addresses
class BadChecksum(DataError):
    pass


class BadPrefix(DataError):
    pass


# ingest
class UnreadableFile(DataError):
    pass


class SchemaVersionMismatch(DataError):
    pass


# analysis
class IncompatibleFormats(DataError):
    pass


class MalformedTagFile(DataError):
    pass
