"""Boundary-condition kinds and ghost-state recipes.

A BoundarySpec maps mesh boundary tags to BoundaryKind records. Ghost cells
hold mirrored geometry only; their flow values are produced on demand from
the donor cell by the recipes here (also compiled into the numba kernels).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .gas import pressure

# Integer codes shared with the kernels.
PERIODIC, SLIP, NOSLIP_ADIABATIC, NOSLIP_ISOTHERMAL, FARFIELD = 0, 1, 2, 3, 4
_KIND_NAMES = {PERIODIC: "periodic", SLIP: "reflective_slip",
               NOSLIP_ADIABATIC: "noslip_adiabatic",
               NOSLIP_ISOTHERMAL: "noslip_isothermal", FARFIELD: "riemann_farfield"}


@dataclass(frozen=True)
class BoundaryKind:
    code: int
    wall_velocity: tuple = (0.0, 0.0, 0.0)
    wall_temperature: float = 0.0
    farfield_state: tuple = (0.0,) * 5

    def __post_init__(self):
        if self.code == NOSLIP_ISOTHERMAL and not self.wall_temperature > 0.0:
            raise ConfigError("isothermal wall needs a positive temperature")

    @property
    def name(self):
        return _KIND_NAMES[self.code]


def periodic():
    return BoundaryKind(PERIODIC)


def slip():
    return BoundaryKind(SLIP)


def noslip_adiabatic(wall_velocity=(0.0, 0.0, 0.0)):
    return BoundaryKind(NOSLIP_ADIABATIC, wall_velocity=tuple(wall_velocity))


def noslip_isothermal(wall_temperature, wall_velocity=(0.0, 0.0, 0.0)):
    return BoundaryKind(NOSLIP_ISOTHERMAL, wall_velocity=tuple(wall_velocity),
                        wall_temperature=float(wall_temperature))


def farfield(state):
    return BoundaryKind(FARFIELD, farfield_state=tuple(float(v) for v in state))


def pack_params(bk):
    """10-float parameter row consumed by the kernels."""
    row = np.zeros(10)
    row[0:3] = bk.wall_velocity
    row[3] = bk.wall_temperature
    row[4:9] = bk.farfield_state
    return row


def ghost_state(q, kind, normal, model):
    """Exterior (ghost) conserved state for an interior state at a boundary.

    ``normal`` is the outward unit normal of the boundary face. Periodic
    boundaries never reach this recipe (they wire to real donor cells).
    """
    q = np.asarray(q, dtype=float)
    n = np.asarray(normal, dtype=float)
    if kind.code == SLIP:
        out = q.copy()
        mn = q[1:4] @ n
        out[1:4] = q[1:4] - 2.0 * mn * n
        return out
    if kind.code in (NOSLIP_ADIABATIC, NOSLIP_ISOTHERMAL):
        rho = q[0]
        v = q[1:4] / rho
        vg = 2.0 * np.asarray(kind.wall_velocity) - v
        e_int = q[4] - 0.5 * rho * (v @ v)
        if kind.code == NOSLIP_ADIABATIC:
            rho_g, e_g = rho, e_int
        else:
            p = pressure(q, model)
            t_int = p / rho
            t_g = 2.0 * kind.wall_temperature - t_int
            t_g = max(t_g, 0.05 * kind.wall_temperature)
            rho_g = p / t_g
            e_g = p / (model.gamma - 1.0)
        return np.array([rho_g, rho_g * vg[0], rho_g * vg[1], rho_g * vg[2],
                         e_g + 0.5 * rho_g * (vg @ vg)])
    if kind.code == FARFIELD:
        return _farfield_state(q, np.asarray(kind.farfield_state), n, model)
    raise ConfigError(f"no ghost recipe for boundary code {kind.code}")


def _farfield_state(q_in, q_inf, n, model):
    """Characteristic far-field state from Riemann invariants u_n +- 2a/(g-1)."""
    g = model.gamma
    rho_i = q_in[0]
    v_i = q_in[1:4] / rho_i
    p_i = pressure(q_in, model)
    a_i = np.sqrt(g * p_i / rho_i)
    un_i = v_i @ n

    rho_f = q_inf[0]
    v_f = q_inf[1:4] / rho_f
    p_f = pressure(q_inf, model)
    a_f = np.sqrt(g * p_f / rho_f)
    un_f = v_f @ n

    if un_f <= -a_f:      # supersonic inflow: all characteristics enter
        return q_inf.astype(float).copy()
    if un_i >= a_i:       # supersonic outflow: all leave
        return q_in.astype(float).copy()
    r_plus = un_i + 2.0 * a_i / (g - 1.0)
    r_minus = un_f - 2.0 * a_f / (g - 1.0)
    un_b = 0.5 * (r_plus + r_minus)
    a_b = 0.25 * (g - 1.0) * (r_plus - r_minus)
    if un_b >= 0.0:       # outflow: entropy and tangential velocity from inside
        s = p_i / rho_i ** g
        v_ref, un_ref = v_i, un_i
    else:
        s = p_f / rho_f ** g
        v_ref, un_ref = v_f, un_f
    rho_b = (a_b * a_b / (g * s)) ** (1.0 / (g - 1.0))
    p_b = rho_b * a_b * a_b / g
    v_b = v_ref + (un_b - un_ref) * n
    return np.array([rho_b, rho_b * v_b[0], rho_b * v_b[1], rho_b * v_b[2],
                     p_b / (g - 1.0) + 0.5 * rho_b * (v_b @ v_b)])
