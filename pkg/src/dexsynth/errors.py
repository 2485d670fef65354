"""Exception types raised by the toolkit."""


class DexsynthError(Exception):
    """Base class for all toolkit errors."""


class MeshError(DexsynthError):
    """Unusable mesh input: unreadable file, empty after cleanup, degenerate."""


class HandError(DexsynthError):
    """Invalid hand description or annotation sidecar."""


class RecordError(DexsynthError):
    """Malformed grasp record or dataset file."""


class ConfigError(DexsynthError):
    """Invalid run configuration."""
