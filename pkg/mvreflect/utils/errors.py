"""
Exception types raised across mvreflect.

The command line maps ConfigError to exit code 2 and every other
MvreflectError to exit code 3.
"""


class MvreflectError(Exception):
    pass


class ConfigError(MvreflectError):
    """Invalid or incomplete run configuration. `field` names the offending key."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = '{}: {}'.format(field, message)
        super().__init__(message)


class GeometryError(MvreflectError):
    pass


class ProjectionError(GeometryError):
    """Projection onto the closed domain did not converge.

    Args:
        message: summary of the failure.
        diagnostics: dict with the offending points, last signed distances and iteration count.
    """

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class TransportError(MvreflectError):
    pass


class CFLError(MvreflectError):
    pass


class NegativeDensityError(MvreflectError):
    pass


class GridMismatchError(MvreflectError):
    pass


class EntropyError(MvreflectError):
    pass
