"""Exception hierarchy shared across the package."""


class OnuwError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(OnuwError):
    """Malformed game, trainer, agent or experiment configuration."""


class PhaseError(OnuwError):
    """An operation was attempted in the wrong game phase."""


class IllegalActionError(OnuwError):
    def __init__(self, actor, reason):
        super().__init__(f"illegal action by player {actor}: {reason}")
        self.actor = actor
        self.reason = reason


class VoteValidationError(OnuwError):
    """Self-votes, unknown targets or missing voters."""


class IntegrityError(OnuwError):
    """A replayed or received artifact disagrees with its own record."""

    def __init__(self, message, event=None):
        super().__init__(message if event is None else f"{message} (at {event})")
        self.event = event


class IncompleteLogError(IntegrityError):
    pass


class ImpossibleObservation(OnuwError):
    """Every type in the belief support assigns zero likelihood to an observation."""


class ConstraintViolation(OnuwError):
    def __init__(self, failed, detail=None):
        names = ", ".join(failed)
        super().__init__(f"belief triple outside the equilibrium region: {names}")
        self.failed = tuple(failed)
        self.detail = detail or {}


class NumericError(OnuwError):
    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"{message} (batch row {index})")
        self.index = index


class GatewayError(OnuwError):
    """Base class for LLM/embedding transport failures."""


class TransportError(GatewayError):
    pass


class CredentialError(GatewayError):
    pass


class RenderError(OnuwError):
    def __init__(self, missing):
        super().__init__("missing template variables: " + ", ".join(sorted(missing)))
        self.missing = tuple(sorted(missing))
