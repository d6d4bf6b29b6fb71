"""Exception hierarchy shared by the library and the command line."""


class MiprError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class DomainError(MiprError, ValueError):
    """A physical parameter lies outside its valid range."""

    exit_code = 2


class UsageError(MiprError, ValueError):
    """An operation was called with an inconsistent combination of inputs."""

    exit_code = 2


class DimensionError(UsageError):
    """Grids or array shapes do not agree."""


class UnsupportedGlyphError(UsageError):
    def __init__(self, glyphs):
        self.glyphs = sorted(set(glyphs))
        super().__init__(f"unsupported glyph(s): {''.join(self.glyphs)!r}")


class SupportViolationError(UsageError):
    """A phantom object reaches outside the central quarter of the grid."""


class UnsupportedGeometryError(UsageError):
    """The operation is not defined for the measurement's recording mode."""


class NoComponentError(MiprError, ValueError):
    """Mask extraction found nothing above threshold."""

    exit_code = 3


class DivergedError(MiprError, ArithmeticError):
    exit_code = 3

    def __init__(self, iteration, seed=None):
        self.iteration = iteration
        self.seed = seed
        msg = f"reconstruction diverged at iteration {iteration}"
        if seed is not None:
            msg += f" (seed {seed})"
        super().__init__(msg)


class FormatError(MiprError, ValueError):
    exit_code = 4

    def __init__(self, message, offset=None):
        self.offset = offset
        self.reason = message
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ConfigError(MiprError, ValueError):
    exit_code = 2

    def __init__(self, message, path=()):
        self.path = tuple(path)
        if self.path:
            message = f"{'.'.join(str(p) for p in self.path)}: {message}"
        super().__init__(message)
