"""Exception types shared across the pipeline stages."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class NumericalError(RuntimeError):
    """A computation produced non-finite values or a decomposition failed."""


class MissingArtifactError(FileNotFoundError):
    """A pipeline stage requires an output file of an earlier stage."""
