"""Exception hierarchy shared by all beaconcast modules."""

from __future__ import annotations


class BeaconcastError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(BeaconcastError, ValueError):
    """A parameter or configuration value violates its documented invariants."""


class EncodingError(BeaconcastError, ValueError):
    """A position-report field is outside its encodable range."""


class PayloadLengthError(BeaconcastError, ValueError):
    """An SSID payload is not exactly 32 characters long."""


class PayloadAlphabetError(BeaconcastError, ValueError):
    """An SSID payload contains characters outside the base64 alphabet."""


class CrcMismatchError(BeaconcastError, ValueError):
    """An SSID payload failed its integrity check (corrupt or foreign SSID)."""


class RankDeficiencyError(BeaconcastError, ValueError):
    """A regression input cannot identify the model (no distance spread)."""


class InsufficientDataError(BeaconcastError, ValueError):
    """Too few samples to run the requested analysis."""


class EmptyDataError(BeaconcastError, ValueError):
    """The input contains no data at all."""
