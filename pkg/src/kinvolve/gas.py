"""Gas model and conversions between conserved and primitive state vectors.

State conventions, used everywhere in the package:

* conserved  Q = (rho, rho*U, rho*V, rho*W, rho*E)
* primitive (kinetic) W = (rho, U, V, W, lam) where ``lam`` is the Maxwellian
  temperature parameter, lam = (K+3) rho / (4 (rhoE - rho|u|^2/2)).

With the gas constant absorbed (R = 1): p = rho/(2 lam) and T = p/rho.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import PositivityError


@dataclass(frozen=True)
class GasModel:
    """Polytropic gas with BGK internal degrees of freedom.

    K = (5 - 3*gamma)/(gamma - 1) internal degrees of freedom close the
    3D Maxwellian for a given specific-heat ratio. Prandtl number is the
    plain BGK value 1 (no heat-flux correction).
    """

    gamma: float = 1.4
    mu_ref: float = 0.0
    t_ref: float = 1.0
    temperature_exponent: float = 0.0  # mu = mu_ref * (T/T_ref)**exponent
    prandtl: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not 1.0 < self.gamma <= 5.0 / 3.0:
            raise ValueError(f"gamma must lie in (1, 5/3], got {self.gamma}")

    @property
    def K(self) -> float:
        return (5.0 - 3.0 * self.gamma) / (self.gamma - 1.0)

    def viscosity(self, temperature):
        """Power-law dynamic viscosity; constant when the exponent is 0."""
        if self.temperature_exponent == 0.0:
            return self.mu_ref
        return self.mu_ref * (temperature / self.t_ref) ** self.temperature_exponent

    def sound_speed(self, rho, p):
        return np.sqrt(self.gamma * p / rho)


def primitive_from_conserved(q, model, where=""):
    """(rho, U, V, W, lam) from a conserved 5-vector.

    Raises PositivityError for rho <= 0 or non-positive internal energy;
    ``where`` names the cell/face for the message.
    """
    q = np.asarray(q, dtype=float)
    rho = q[0]
    if not rho > 0.0:
        raise PositivityError(f"non-positive density {rho!r} {where}".rstrip())
    u = q[1] / rho
    v = q[2] / rho
    w = q[3] / rho
    e_int = q[4] - 0.5 * rho * (u * u + v * v + w * w)
    if not e_int > 0.0:
        raise PositivityError(f"non-positive internal energy {e_int!r} {where}".rstrip())
    lam = (model.K + 3.0) * rho / (4.0 * e_int)
    return np.array([rho, u, v, w, lam])


def conserved_from_primitive(prim, model):
    rho, u, v, w, lam = np.asarray(prim, dtype=float)
    e_int = (model.K + 3.0) * rho / (4.0 * lam)
    return np.array([rho, rho * u, rho * v, rho * w,
                     e_int + 0.5 * rho * (u * u + v * v + w * w)])


def pressure(q, model):
    """Static pressure from conserved variables (vectorized over leading axes)."""
    q = np.asarray(q, dtype=float)
    rho = q[..., 0]
    kin = 0.5 * (q[..., 1] ** 2 + q[..., 2] ** 2 + q[..., 3] ** 2) / rho
    return (model.gamma - 1.0) * (q[..., 4] - kin)


def temperature(q, model):
    return pressure(q, model) / np.asarray(q, dtype=float)[..., 0]


def is_physical(q, model):
    q = np.asarray(q, dtype=float)
    rho = q[..., 0]
    kin = 0.5 * (q[..., 1] ** 2 + q[..., 2] ** 2 + q[..., 3] ** 2) / np.where(rho > 0, rho, 1.0)
    return (rho > 0.0) & (q[..., 4] - kin > 0.0)


def euler_flux(q, normal, model):
    """Exact Euler flux of state ``q`` through a unit normal (global frame)."""
    q = np.asarray(q, dtype=float)
    n = np.asarray(normal, dtype=float)
    rho = q[0]
    u = q[1:4] / rho
    p = pressure(q, model)
    un = float(u @ n)
    return np.array([
        rho * un,
        q[1] * un + p * n[0],
        q[2] * un + p * n[1],
        q[3] * un + p * n[2],
        (q[4] + p) * un,
    ])
