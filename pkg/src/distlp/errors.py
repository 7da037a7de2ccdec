"""Exception hierarchy shared by every layer of the engine."""


class DistLPError(Exception):
    """Base class for all errors raised by distlp."""


class ConfigError(DistLPError):
    """Invalid parameter or flag combination."""


class DataError(DistLPError):
    """Input data violates a model invariant."""


class ParseError(DataError):
    """A line of an input file could not be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ContractError(DistLPError):
    """A caller broke an operation's precondition."""


class ProtocolError(DistLPError):
    """A peer sent a message that the protocol does not allow here."""


class HandshakeError(ProtocolError):
    """Version or configuration fingerprint mismatch between parties."""


class RuntimeFault(DistLPError):
    """A worker failed, timed out, or disconnected during a run."""


class VerificationMismatch(DistLPError):
    """Two engines that must agree produced different results."""


class StartupError(RuntimeFault):
    """A transport could not bind or connect."""
