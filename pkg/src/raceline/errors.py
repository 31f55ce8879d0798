"""Exception hierarchy for the raceline toolkit.

Every error raised on bad input derives from :class:`RacelineError`, so
callers (notably the CLI) can distinguish input problems from genuine bugs.
"""


class RacelineError(Exception):
    """Base class for all toolkit errors caused by invalid input or data."""


# track parsing / serialization
class MalformedRow(RacelineError):
    """A CSV row has the wrong arity or a non-numeric field."""


class DegenerateTrack(RacelineError):
    """Track has too few points or is too short for the requested spacing."""


class NonPositiveWidth(RacelineError):
    """A half-width is zero or negative."""


class EmptyLine(RacelineError):
    """Racing line has no waypoints."""


# geometry
class ZeroSpacing(RacelineError):
    """Requested resampling spacing is not positive."""


class DegenerateTangent(RacelineError):
    """Neighbouring centerline points coincide; no tangent exists."""


class Unresolvable(RacelineError):
    """Normal intersections persist at the maximum allowed tilt."""


class OutOfRange(RacelineError):
    """Waypoint fraction outside [0, 1]."""


class NoIntersection(RacelineError):
    """A polyline misses one of the normals."""


class MultipleIntersections(RacelineError):
    """A polyline crosses a normal more than once."""


class BoundariesCross(RacelineError):
    """Inner and outer boundaries touch or cross; track width vanishes."""


# windows / dataset
class TooShort(RacelineError):
    """Track has fewer normals than one window requires."""


class TooFewFamilies(RacelineError):
    """Not enough track families to split."""


class BadK(RacelineError):
    """Invalid fold count for cross-validation."""


class MissingTargets(RacelineError):
    """Evaluation requested but no reference targets are available."""


# numerics / network
class LengthMismatch(RacelineError):
    """Two per-normal sequences differ in length."""


class ShapeMismatch(RacelineError):
    """Array shapes do not chain through the network."""


class EmptyDataset(RacelineError):
    """Training requested on an empty dataset."""


class EmptySeries(RacelineError):
    """Metrics requested on an empty error series."""


class CorruptFile(RacelineError):
    """Model file is truncated or fails integrity checks."""


class VersionMismatch(RacelineError):
    """Model file version or window configuration does not match."""


class IncompatibleModel(RacelineError):
    """Model metadata is inconsistent with its own layer shapes."""


class WidthTooLarge(RacelineError):
    """Vehicle width meets or exceeds the local track width."""
