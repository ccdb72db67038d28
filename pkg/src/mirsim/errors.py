"""Exception types shared across the package. Plain invalid arguments use
the builtin ValueError; these classes mark domain conditions callers may
want to catch selectively."""

from __future__ import annotations


class MirError(Exception):
    """Base class for package-specific errors."""


class InvalidStateError(MirError):
    """Operation applied to an object in the wrong state (e.g. converting
    an IMU sample that is already in the target frame)."""


class WireDecodeError(MirError):
    """Payload bytes do not match the schema of the topic they claim."""


class SchemaConflictError(MirError):
    """A topic was advertised or published with a different schema than it
    already carries."""


class ConfigError(MirError):
    """Configuration file invalid: parse failure, unknown key, or a field
    value that violates its constraint."""
