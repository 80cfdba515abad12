"""Gas-kinetic flux operations at a single interface Gauss point.

Local-frame convention: component 1 of the state is momentum along the face
normal, components 2-3 tangential; directional derivatives are ordered the
same way. The time-dependent distribution is integrated analytically over the
requested interval, so a TimeFlux carries integrals, not instantaneous values.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import FrameError, PositivityError
from .gas import primitive_from_conserved

_SQRT_PI = np.sqrt(np.pi)


@dataclass
class MomentTable:
    """Maxwellian velocity moments of one primitive state.

    u carries full moments <u^a>, upos/uneg the half-range ones; v/w full
    moments of the tangential directions; s2/s4 the internal-energy moments
    <s^2>, <s^4>.
    """

    u: np.ndarray
    upos: np.ndarray
    uneg: np.ndarray
    v: np.ndarray
    w: np.ndarray
    s2: float
    s4: float


def moments(prim, model):
    """MomentTable for a primitive state (rho, U, V, W, lam)."""
    rho, u, v, w, lam = (float(x) for x in prim)
    if lam <= 0.0 or rho <= 0.0:
        raise PositivityError("moments need rho > 0 and lam > 0")
    mu = np.empty(7)
    mup = np.empty(7)
    mun = np.empty(7)
    mv = np.empty(7)
    mw = np.empty(7)
    K._moments_full(u, lam, mu)
    K._moments_half(u, lam, 1.0, mup)
    K._moments_half(u, lam, -1.0, mun)
    K._moments_full(v, lam, mv)
    K._moments_full(w, lam, mw)
    ck = model.K
    return MomentTable(u=mu, upos=mup, uneg=mun, v=mv, w=mw,
                       s2=0.5 * ck / lam,
                       s4=(ck * ck + 2.0 * ck) / (4.0 * lam * lam))


def micro_slope(dq, prim, model):
    """Expansion coefficients a with <a psi> = dq (an un-normalized 5-vector).

    Same closed-form 5x5 moment-system solution as the kernels; serves the
    spatial a^{l,r}, the equilibrium abar, and (with the compatibility right
    side) the temporal A coefficients.
    """
    rho, u, v, w, lam = (float(x) for x in prim)
    b = np.asarray(dq, dtype=float) / rho
    return np.array(K._micro_slope(b[0], b[1], b[2], b[3], b[4], u, v, w, lam,
                                   model.K))


def moment_apsi(a, table, shift=(0, 0, 0), half=None):
    """rho-normalized <a u^i v^j w^l psi> against a MomentTable.

    ``half``: None for full u-moments, '+'/'-' for the half ranges.
    """
    mu = table.u if half is None else (table.upos if half == "+" else table.uneg)
    out = np.zeros(5)
    i, j, l = shift
    K._apsi_acc(a[0], a[1], a[2], a[3], a[4], mu, table.v, table.w,
                table.s2, table.s4, i, j, l, 1.0, out)
    return out


def moment_psi(table, shift=(0, 0, 0), half=None):
    """rho-normalized <u^i v^j w^l psi> against a MomentTable."""
    mu = table.u if half is None else (table.upos if half == "+" else table.uneg)
    out = np.zeros(5)
    i, j, l = shift
    K._psi_acc(mu, table.v, table.w, table.s2, i, j, l, 1.0, out)
    return out


def equilibrium_interface(q_left, q_right, model):
    """Interface equilibrium state from colliding half Maxwellians.

    Returns (primitive, conserved) of Q0 = int_{u>0} psi g_l + int_{u<0} psi g_r,
    with u the local-normal velocity component.
    """
    pl = primitive_from_conserved(q_left, model, "(left)")
    pr = primitive_from_conserved(q_right, model, "(right)")
    tl = moments(pl, model)
    tr = moments(pr, model)
    q0 = pl[0] * moment_psi(tl, half="+") + pr[0] * moment_psi(tr, half="-")
    prim0 = primitive_from_conserved(q0, model, "(interface equilibrium)")
    return prim0, q0


def collision_time(p_left, p_right, mu, dt, mode, c_eps=0.01, c_jump=1.0):
    """Collision time at an interface.

    inviscid: c_eps*dt + c_jump*|pl-pr|/(pl+pr)*dt
    viscous:  mu/p + c_jump*|pl-pr|/(pl+pr)*dt
    smooth:   mu/p
    with p the interface pressure (side mean).
    """
    if p_left <= 0.0 or p_right <= 0.0:
        raise PositivityError("collision time needs positive pressures")
    jump = abs(p_left - p_right) / (p_left + p_right)
    p = 0.5 * (p_left + p_right)
    if mode == "inviscid":
        return c_eps * dt + c_jump * jump * dt
    if mode == "viscous":
        return mu / p + c_jump * jump * dt
    if mode == "smooth":
        return mu / p
    raise ValueError(f"unknown collision-time mode {mode!r}")


@dataclass
class TimeFlux:
    """Time-integrated Gauss-point flux (local frame) over [0, interval].

    ``half`` is the integral over [0, interval/2], used by the two-stage
    fourth-order marching to split flux and flux time-derivative.
    """

    integral: np.ndarray
    half: np.ndarray
    interval: float

    def mean(self):
        return self.integral / self.interval

    def split(self):
        """(F, F_t) of the linear-in-time representation from the pair."""
        dt = self.interval
        f = (4.0 * self.half - self.integral) / dt
        ft = 4.0 * (self.integral - 2.0 * self.half) / (dt * dt)
        return f, ft


def _point_flux(sample, tau_phys, tau_num, interval, model, mode):
    ql = np.ascontiguousarray(sample.q_left, dtype=float)
    qr = np.ascontiguousarray(sample.q_right, dtype=float)
    gl = np.ascontiguousarray(sample.grad_left, dtype=float)
    gr = np.ascontiguousarray(sample.grad_right, dtype=float)
    out1 = np.empty(5)
    out2 = np.empty(5)
    ws = np.empty(150)
    ok = K.gks_point_flux(ql, gl, qr, gr, model.gamma, model.K, tau_phys,
                          tau_num, 0.5 * interval, interval, mode, out1, out2, ws)
    if not ok:
        raise PositivityError("non-physical state in point flux")
    return TimeFlux(integral=out2, half=out1, interval=float(interval))


def full_flux(sample, tau, interval, model):
    """Time-integrated flux of the full second-order distribution.

    ``sample`` must already be in the local frame; ``tau`` is the effective
    collision time (including any pressure-jump augmentation).
    """
    return _point_flux(sample, tau, tau, interval, model, K.FLUX_FULL)


def smooth_flux(sample, tau, interval, model):
    """Time-integrated flux of the smooth-flow simplified distribution."""
    return _point_flux(sample, tau, tau, interval, model, K.FLUX_SMOOTH)


def _check_frame(frame):
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (3, 3):
        raise FrameError("frame must be 3 orthonormal row vectors")
    dev = np.abs(frame @ frame.T - np.eye(3)).max()
    if dev > 1e-10:
        raise FrameError(f"frame deviates from orthonormal by {dev:.2e}")
    return frame


def rotate_state(q, frame):
    """Conserved state into the local frame of rows (n1, t1, t2)."""
    frame = _check_frame(frame)
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[1:4] = frame @ q[1:4]
    return out


def rotate_state_back(q_local, frame):
    frame = _check_frame(frame)
    out = np.asarray(q_local, dtype=float).copy()
    out[1:4] = frame.T @ out[1:4]
    return out


def rotate_gradients(grads, frame):
    """(3,5) global directional derivatives into the local frame (covariant)."""
    frame = _check_frame(frame)
    g = frame @ np.asarray(grads, dtype=float)   # project directions
    g[:, 1:4] = g[:, 1:4] @ frame.T              # rotate momentum components
    return g


def rotate_sample(sample, frame):
    """InterfaceSample rotated into the local frame (new object)."""
    from .weno import InterfaceSample

    return InterfaceSample(
        q_left=rotate_state(sample.q_left, frame),
        q_right=rotate_state(sample.q_right, frame),
        grad_left=rotate_gradients(sample.grad_left, frame),
        grad_right=rotate_gradients(sample.grad_right, frame),
        point=sample.point, normal=sample.normal, fallback=sample.fallback)


def rotate_flux_back(flux5, frame):
    frame = _check_frame(frame)
    out = np.asarray(flux5, dtype=float).copy()
    out[1:4] = frame.T @ out[1:4]
    return out
