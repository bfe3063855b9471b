"""Exception hierarchy shared by every stage of the toolkit."""


class FaithselError(Exception):
    """Base class. ``exit_code`` is what the CLI returns for it."""

    exit_code = 2


class InputError(FaithselError):
    exit_code = 2


class ConsistencyError(FaithselError):
    exit_code = 3


class MalformedMarkup(InputError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TurnContainsReservedToken(InputError):
    pass


class SchemaViolation(InputError):
    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


class DuplicateId(InputError):
    pass


class EmptyReference(InputError):
    pass


class NotADistribution(InputError):
    pass


class UnknownLabel(InputError):
    pass


class MissingLabelExamples(InputError):
    pass


class EmptyCorpus(InputError):
    pass


class InvalidRange(InputError):
    pass


class SeparatorCollision(InputError):
    pass


class TransportError(FaithselError):
    exit_code = 3


class ProtocolError(FaithselError):
    exit_code = 3


class InventoryMismatch(ConsistencyError):
    pass


class ConfigMismatch(ConsistencyError):
    pass


class LengthMismatch(ConsistencyError):
    pass


class EmptyInput(InputError):
    pass


class MissingArtifact(ConsistencyError):
    def __init__(self, dialog_id, what):
        super().__init__(f"dialog {dialog_id!r}: missing {what}")
        self.dialog_id = dialog_id
        self.what = what


class MissingDistribution(MissingArtifact):
    def __init__(self, dialog_id):
        super().__init__(dialog_id, "call-type distribution")


class UnknownDialog(ConsistencyError):
    pass


class UnknownConfig(ConsistencyError):
    pass


class CountMismatch(ConsistencyError):
    pass
