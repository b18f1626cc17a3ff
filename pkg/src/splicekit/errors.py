"""Exception types shared across the toolkit."""


class SpliceKitError(Exception):
    """Base class for all toolkit errors."""


class FormatError(SpliceKitError):
    """A file (WAV, cache, checkpoint) is malformed or truncated."""


class UnsupportedFormatError(FormatError):
    """The container is valid but uses an encoding we do not handle."""


class ContractError(SpliceKitError, ValueError):
    """A caller violated an operation's precondition."""


class DegenerateInputError(SpliceKitError, ValueError):
    """Input is structurally valid but numerically degenerate (e.g. silent signal)."""


class AssetResolutionError(SpliceKitError):
    """A referenced source, impulse response, or noise file cannot be resolved."""


class RenderRejected(SpliceKitError):
    """A rendered forgery fell outside the duration bounds; resample the spec."""


class SpecSampleError(SpliceKitError):
    """Forgery spec sampling exhausted its retry budget."""


class ExternalCodecError(SpliceKitError):
    """The external encoder command failed; carries its captured output."""


class CheckpointError(SpliceKitError):
    """A checkpoint file is invalid or incompatible with the requested model."""


class TrainingError(SpliceKitError):
    """Training aborted (e.g. non-finite gradients)."""
