"""Shared error types for on-disk formats and configuration."""


class FormatError(RuntimeError):
    """A file (dataset image, manifest, checkpoint) is malformed."""


class ConfigError(ValueError):
    """A configuration document is invalid."""


class TrainingDiverged(RuntimeError):
    """Training hit a non-finite loss; the message names the term."""
