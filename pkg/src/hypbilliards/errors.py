"""Exception types raised across the package."""


class BilliardsError(Exception):
    """Base class for every error raised by hypbilliards."""


class DegenerateGeometry(BilliardsError, ValueError):
    """The (M, N) pair does not define a hyperbolic two-piece tiling."""


class CapExceeded(BilliardsError):
    """A configured size budget (tiles, ranks, word length) would be exceeded."""


class InvalidLabel(BilliardsError):
    """A tile has a parent count that no type label accounts for."""


class EmptyLayer(BilliardsError, LookupError):
    """A requested layer is outside the generated depth."""


class AmbiguousSupport(BilliardsError):
    """The point lies on a side continuation, where the support vertex is not unique."""

    def __init__(self, message: str, iterate: int | None = None):
        super().__init__(message)
        self.iterate = iterate


class InsideTable(BilliardsError):
    """The point is inside (or on the boundary of) the table."""


class ImageOutsideAtlas(BilliardsError):
    """The image of a tile falls beyond the generated part of the tiling."""


class CenterMismatch(BilliardsError):
    """No atlas tile matches the image of a tile; the image straddles grid lines."""


class NotCyclic(BilliardsError):
    """The induced map on a layer is not a constant-jump rotation."""


class LayerOutOfRange(BilliardsError, ValueError):
    """A recurrence or closed form was evaluated outside its valid layer range."""


class AngularTie(BilliardsError):
    """Two tiles of one layer sit at the same angle, so the layer order is undefined."""


class UnsupportedPair(BilliardsError, ValueError):
    """A hyperbolic pair outside the counting families (M = 3, N >= 7 or M, N >= 4)."""
