"""Exception hierarchy shared by all aeye modules."""


class AeyeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AeyeError):
    """A configuration field is missing, malformed, or out of range."""


class InputError(AeyeError):
    """An operation received invalid in-process input."""


class SequencingError(AeyeError):
    """Frames arrived out of tick order."""


class CaptureError(AeyeError):
    """A corner-case snapshot could not be taken."""


class StorageError(AeyeError):
    """On-disk persistence failed (id collision, unwritable root)."""


class FormatError(AeyeError):
    """An on-disk artifact is malformed; message names the offending file."""


class EnrichmentError(AeyeError):
    """Pedestrian enrichment could not reach its target within budget."""

    def __init__(self, message, achieved_mean=None):
        super().__init__(message)
        self.achieved_mean = achieved_mean
