"""Exception hierarchy shared across the package."""


class PolydarcyError(Exception):
    """Base class for all errors raised by polydarcy."""


class MeshError(PolydarcyError):
    """Invalid mesh topology or geometry."""


class GeometryError(PolydarcyError):
    """Invalid or unsupported geometric input (fractures, seeds, domains)."""


class ConformityError(MeshError):
    """A bulk grid does not conform to a fracture branch."""


class ParseError(PolydarcyError):
    """Malformed input file (mesh, dataset or configuration)."""


class ConfigError(PolydarcyError):
    """Invalid run configuration."""


class NumericalError(PolydarcyError):
    """Numerical failure (singular system, residual too large)."""
