"""Exception types raised by the solver layers."""


class KinvolveError(Exception):
    """Base class for all solver errors."""


class MeshFormatError(KinvolveError):
    """Malformed mesh file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedElementError(MeshFormatError):
    """Element type outside the supported tet/pyramid/prism/hex + surface set."""


class GeometryError(KinvolveError):
    """Inverted or degenerate geometry (non-positive Jacobian, zero-area face)."""


class PairingError(KinvolveError):
    """Periodic boundary sides do not match face-for-face."""


class StencilError(KinvolveError):
    """A reconstruction stencil could not be assembled (topology hole)."""


class SingularStencilError(KinvolveError):
    """Square sub-stencil system is singular or near-singular."""


class PositivityError(KinvolveError):
    """Non-physical state (rho <= 0 or internal energy <= 0) where one is required."""


class FrameError(KinvolveError):
    """Rotation frame is not orthonormal."""


class VacuumError(KinvolveError):
    """Riemann problem data produce vacuum."""


class SelectionError(KinvolveError):
    """Line/plane extraction selected no cells."""


class ConfigError(KinvolveError):
    """Invalid or missing run configuration."""


class SolverError(KinvolveError):
    """Runtime solver failure (non-convergence, repeated step rejection)."""
