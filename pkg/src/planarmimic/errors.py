"""Exception types shared across the package."""


class PlanarMimicError(Exception):
    """Base class for all package errors."""


class ModelError(PlanarMimicError):
    """Character model fails validation or does not match a state."""


class DivergenceError(PlanarMimicError):
    """Simulation blew up; carries the frame index where it happened."""

    def __init__(self, frame: int, detail: str = ""):
        self.frame = frame
        super().__init__(f"simulation diverged at frame {frame}" + (f": {detail}" if detail else ""))


class ClipError(PlanarMimicError):
    """Motion clip fails validation or an out-of-range query."""


class ConfigError(PlanarMimicError):
    """Bad configuration file or value; carries the offending field name."""

    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"config field '{field}': {detail}")


class CheckpointError(PlanarMimicError):
    """Checkpoint missing, malformed, or version-mismatched."""


class WireError(PlanarMimicError):
    """Malformed or unknown session message."""
