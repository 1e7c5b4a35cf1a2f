#!/usr/bin/env python3
"""Typed errors raised across the toolkit."""


class LocalizationError(Exception):
    """Root of every domain error; the CLI maps it to exit code 1."""


# pathloss
class EmptyWindow(LocalizationError, ValueError):
    pass


class MixedSource(LocalizationError, ValueError):
    pass


class NonPositiveDistance(LocalizationError, ValueError):
    pass


class DegenerateModel(LocalizationError, ValueError):
    pass


class DistanceOutOfRange(LocalizationError, ValueError):
    pass


class InsufficientPoints(LocalizationError, ValueError):
    pass


class ZeroVarianceInDistance(LocalizationError, ValueError):
    pass


class TooFewSamples(LocalizationError, ValueError):
    pass


# geometry
class AngleOutOfRange(LocalizationError, ValueError):
    pass


class NegativeInput(LocalizationError, ValueError):
    pass


class ZeroReference(LocalizationError, ValueError):
    pass


# trilateration
class TooFewStations(LocalizationError, ValueError):
    pass


class DuplicateStation(LocalizationError, ValueError):
    pass


class SingularSystem(LocalizationError):
    pass


class ImaginaryHeight(LocalizationError):
    """Spheres do not meet above the station plane."""

    def __init__(self, radicand):
        self.radicand = radicand
        super().__init__(f"height radicand is negative ({radicand:.3f} m^2)")


# remote_id
class IdNotEncodable(LocalizationError, ValueError):
    pass


class MalformedPayload(LocalizationError, ValueError):
    pass


# simulator
class InvalidScenario(LocalizationError, ValueError):
    pass


# station_net
class MalformedLine(LocalizationError, ValueError):
    pass


class UnknownStation(LocalizationError, LookupError):
    pass
