"""Time marching: explicit two-stage fourth-order and implicit LU-SGS/Jacobi.

The Solver owns the state array (cells + ghost slots), runs the
reconstruction/flux kernels and advances in time. The time-dependent flux is
integrated analytically over [0, dt/2] and [0, dt]; the pair determines the
instantaneous flux F and its time derivative F_t of the Lax-Wendroff-type
expansion, from which both stages of the fourth-order scheme are built:

    Q*      = Q^n + (dt/2) L + (dt^2/8) L_t
    Q^{n+1} = Q^n + dt L + (dt^2/6) (L_t + 2 L_t^*)

For steady runs the residual is the flux time-averaged over a stability-scale
interval, and backward Euler is solved by LU-SGS sweeps or k_max Jacobi inner
iterations with the split-flux implicit operator.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import PositivityError, SolverError
from .gas import euler_flux, is_physical, pressure
from .runtime import pack_kernel_arrays

FLUX_MODES = {"smooth": K.FLUX_SMOOTH, "full": K.FLUX_FULL}
TAU_MODES = {"smooth": K.TAU_SMOOTH, "inviscid": K.TAU_INVISCID, "viscous": K.TAU_VISCOUS}


@dataclass
class StepControl:
    """Marching mode and step-size policy."""

    mode: str = "explicit_s2o4"   # explicit_s2o4 | implicit_lusgs | implicit_jacobi
    cfl: float = 0.5              # explicit Courant number
    cfl_implicit: float = 10.0    # implicit CFL before the residual drops
    cfl_implicit_max: float = 50.0
    cfl_flux: float = 0.5         # flux time-integration scale for implicit runs
    k_max: int = 3                # Jacobi inner iterations
    max_retries: int = 5          # explicit dt halvings on positivity failure


@dataclass
class FluxConfig:
    """Gas-kinetic flux selection and collision-time model."""

    flux_mode: str = "full"       # full (Eq. type-1) | smooth (Eq. type-2)
    tau_mode: str = "inviscid"    # inviscid | viscous | smooth
    c_eps: float = 0.01           # epsilon * dt contribution (inviscid)
    c_jump: float = 1.0           # pressure-jump weight


@dataclass
class WenoParams:
    gamma_sub: float = 0.0125
    epsilon: float = 1.0e-6


@dataclass
class ResidualField:
    values: np.ndarray
    volume: np.ndarray

    def norms(self):
        v = self.volume[:, None]
        tot = self.volume.sum()
        l1 = (np.abs(self.values) * v).sum(axis=0) / tot
        l2 = np.sqrt(((self.values ** 2) * v).sum(axis=0) / tot)
        linf = np.abs(self.values).max(axis=0)
        return l1, l2, linf


def split_flux_T(q, normal, model):
    """Euler split flux T(Q) through a unit normal and its spectral radius."""
    q = np.asarray(q, dtype=float)
    t = euler_flux(q, normal, model)
    rho = q[0]
    p = pressure(q, model)
    a = np.sqrt(model.gamma * p / rho)
    un = (q[1:4] / rho) @ np.asarray(normal, dtype=float)
    return t, abs(un) + a


def s2o4_ode_step(q, rhs, rhs_t, dt):
    """Generic two-stage fourth-order update for dq/dt = rhs(q).

    rhs_t(q) must return the time derivative of rhs along the solution.
    Shared by the PDE marcher (with kernel-extracted L, L_t) and by the
    scalar ODE diagnostics.
    """
    q1 = q + 0.5 * dt * rhs(q) + 0.125 * dt * dt * rhs_t(q)
    return q + dt * rhs(q) + dt * dt / 6.0 * (rhs_t(q) + 2.0 * rhs_t(q1))


class Solver:
    """Finite-volume gas-kinetic solver bound to one mesh and gas model."""

    def __init__(self, mesh, model, flux=None, weno=None, control=None):
        self.mesh = mesh
        self.model = model
        self.flux = flux or FluxConfig()
        self.weno = weno or WenoParams()
        self.control = control or StepControl()
        self.k = pack_kernel_arrays(mesh)
        nc, ng = self.k.nc, self.k.ng
        self.q = np.zeros((nc + ng, 5))
        nf = len(self.k.f_left)
        self._i1 = np.zeros((nf, 5))
        self._i2 = np.zeros((nf, 5))
        self._fb = np.zeros(nf, dtype=np.int64)
        self._err = np.zeros(nf, dtype=np.int8)
        self._g1 = np.zeros((nc, 5))
        self._g2 = np.zeros((nc, 5))
        self._comb = np.zeros((nc, 5, 10))
        self._dtc = np.zeros(nc)
        self._rad = np.zeros(nf)
        self._dq = np.zeros((nc, 5))
        self._dq_old = np.zeros((nc, 5))
        self.time = 0.0
        self.step_count = 0
        self.fallback_count = 0
        self.reject_count = 0
        self.relax_count = 0
        self.history = []

    # -- state ------------------------------------------------------------

    def set_state(self, q_cells):
        q_cells = np.asarray(q_cells, dtype=float)
        if q_cells.shape != (self.k.nc, 5):
            raise ValueError(f"state must be ({self.k.nc}, 5)")
        self.q[:self.k.nc] = q_cells
        self._check_cells()

    def state(self):
        return self.q[:self.k.nc].copy()

    def _check_cells(self):
        ok = is_physical(self.q[:self.k.nc], self.model)
        if not ok.all():
            bad = int(np.nonzero(~ok)[0][0])
            raise PositivityError(f"non-physical cell average at cell {bad}")

    # -- kernels ----------------------------------------------------------

    def fill_ghosts(self):
        if self.k.ng:
            K.fill_ghost_states(self.q, self.k.ghost_donor, self.k.ghost_bcidx,
                                self.k.ghost_normal, self.k.bc_kind, self.k.bc_param,
                                self.model.gamma, self.k.nc)

    def reconstruct(self):
        K.reconstruct(self.q, self.k.big_ids, self.k.big_op, self.k.sub_ids,
                      self.k.sub_op, self.k.sub_count, self.k.czm,
                      self.weno.gamma_sub, self.weno.epsilon, self._comb)

    def flux_pass(self, dth, dtf):
        """Face-flux integrals over [0, dth] and [0, dtf]; updates counters."""
        m = self.model
        K.face_fluxes(self._comb, self.q, self.k.h, self.k.f_left, self.k.f_right,
                      self.k.f_bcidx, self.k.gp_sl, self.k.gp_sr, self.k.gp_n,
                      self.k.gp_t1, self.k.gp_t2, self.k.gp_w, self.k.bc_kind,
                      self.k.bc_param, m.gamma, m.K, m.mu_ref, m.t_ref,
                      m.temperature_exponent, TAU_MODES[self.flux.tau_mode],
                      FLUX_MODES[self.flux.flux_mode], self.flux.c_eps,
                      self.flux.c_jump, dth, dtf, self._i1, self._i2,
                      self._fb, self._err)
        if self._err.any():
            f = int(np.nonzero(self._err)[0][0])
            raise PositivityError(
                f"non-physical interface state at face {f} "
                f"(cells {self.k.f_left[f]}, {self.k.f_right[f]})")
        self.fallback_count += int(self._fb.sum())

    def _prepare(self):
        self.fill_ghosts()
        self.reconstruct()

    def residual_pair(self, dt):
        """(L, L_t) extracted from the half/full-interval flux integrals."""
        self._prepare()
        self.flux_pass(0.5 * dt, dt)
        K.accumulate_cells(self._i1, self.k.cf_ptr, self.k.cf_face,
                           self.k.cf_sign, self._g1)
        K.accumulate_cells(self._i2, self.k.cf_ptr, self.k.cf_face,
                           self.k.cf_sign, self._g2)
        vol = self.k.volume[:, None]
        f_inst = (4.0 * self._g1 - self._g2) / dt
        f_dot = 4.0 * (self._g2 - 2.0 * self._g1) / (dt * dt)
        return -f_inst / vol, -f_dot / vol

    def residual_avg(self, dt_flux):
        """Time-averaged spatial operator over [0, dt_flux] (implicit Res)."""
        self._prepare()
        self.flux_pass(dt_flux, dt_flux)
        K.accumulate_cells(self._i2, self.k.cf_ptr, self.k.cf_face,
                           self.k.cf_sign, self._g2)
        return -self._g2 / (dt_flux * self.k.volume[:, None])

    def spatial_residual(self, dt):
        """ResidualField of L(Q) plus the time-derivative field (S2O4 data)."""
        l_op, l_dot = self.residual_pair(dt)
        return (ResidualField(l_op, self.k.volume),
                ResidualField(l_dot, self.k.volume))

    def compute_dt(self, cfl=None):
        mu = self.model.mu_ref
        K.compute_dt_kernel(self.q, self.k.cf_ptr, self.k.cf_face, self.k.cf_sign,
                            self.k.f_area, self.k.f_normal, self.k.volume,
                            self.k.h, self.model.gamma, mu, self._dtc)
        c = self.control.cfl if cfl is None else cfl
        return c * float(self._dtc.min())

    # -- explicit marching --------------------------------------------------

    def s2o4_step(self, dt):
        """One explicit two-stage fourth-order step of size dt."""
        q0 = self.q[:self.k.nc].copy()
        l0, lt0 = self.residual_pair(dt)
        q_star = q0 + 0.5 * dt * l0 + 0.125 * dt * dt * lt0
        if not is_physical(q_star, self.model).all():
            raise _StepRejected()
        self.q[:self.k.nc] = q_star
        _, lt1 = self.residual_pair(dt)
        q_new = q0 + dt * l0 + dt * dt / 6.0 * (lt0 + 2.0 * lt1)
        if not is_physical(q_new, self.model).all():
            self.q[:self.k.nc] = q0
            raise _StepRejected()
        self.q[:self.k.nc] = q_new

    def advance_to(self, t_end, max_steps=10 ** 9, on_step=None):
        """Explicit marching to exactly t_end with positivity retry."""
        while self.time < t_end - 1e-14 and self.step_count < max_steps:
            dt = min(self.compute_dt(), t_end - self.time)
            for attempt in range(self.control.max_retries + 1):
                q_save = self.q[:self.k.nc].copy()
                try:
                    self.s2o4_step(dt)
                    break
                except _StepRejected:
                    self.q[:self.k.nc] = q_save
                    self.reject_count += 1
                    dt *= 0.5
                    if attempt == self.control.max_retries:
                        raise SolverError(
                            f"step rejected {attempt + 1} times at t={self.time}")
            self.time += dt
            self.step_count += 1
            if on_step is not None:
                on_step(self, dt)
        return self.time

    # -- implicit marching --------------------------------------------------

    def implicit_step(self, dt, mode=None, k_max=None):
        """One backward-Euler step solved by LU-SGS sweeps or Jacobi iteration.

        Returns the (time-averaged) residual field used as the right side.
        """
        mode = mode or self.control.mode
        dt_flux = self.compute_dt(self.control.cfl_flux)
        res = self.residual_avg(dt_flux)
        K.face_spectral_radius(self.q, self.k.f_left, self.k.f_right,
                               self.k.f_normal, self.model.gamma, self._rad)
        if mode == "implicit_jacobi":
            K.jacobi_iterations(self.q, res, dt, k_max or self.control.k_max,
                                self.k.cf_ptr, self.k.cf_face, self.k.cf_sign,
                                self.k.f_left, self.k.f_right, self.k.f_area,
                                self.k.f_normal, self._rad, self.model.gamma,
                                self._dq, self._dq_old)
        else:
            K.lusgs_sweeps(self.q, res, dt, self.k.cf_ptr, self.k.cf_face,
                           self.k.cf_sign, self.k.f_left, self.k.f_right,
                           self.k.f_area, self.k.f_normal, self._rad,
                           self.model.gamma, self._dq)
        self._apply_increment()
        self.step_count += 1
        return res

    def _apply_increment(self):
        nc = self.k.nc
        dq = self._dq
        for _ in range(60):
            q_new = self.q[:nc] + dq
            ok = is_physical(q_new, self.model)
            if ok.all():
                self.q[:nc] = q_new
                return
            dq = dq.copy()
            dq[~ok] *= 0.5          # local under-relaxation on offending cells
            self.relax_count += 1
        raise SolverError("implicit update stayed non-physical after relaxation")

    def run_steady(self, tol=1e-8, max_steps=20000, mode=None, k_max=None,
                   on_step=None, stall_steps=5000, stall_level=1e-4):
        """March to steady state; returns (converged, relative residual)."""
        mode = mode or self.control.mode
        res0 = None
        rel = 1.0
        stall = 0
        for _ in range(max_steps):
            cfl = (self.control.cfl_implicit if rel > 1e-2
                   else self.control.cfl_implicit_max)
            dt = self.compute_dt(cfl)
            res = self.implicit_step(dt, mode=mode, k_max=k_max)
            r = float(np.sqrt((self.k.volume * res[:, 0] ** 2).sum()
                              / self.k.volume.sum()))
            if res0 is None:
                res0 = max(r, 1e-300)
            rel = r / res0
            self.history.append((self.step_count, self.time, dt, rel))
            if on_step is not None:
                on_step(self, dt, rel)
            if rel <= tol:
                return True, rel
            if rel > stall_level:
                stall += 1
                if stall >= stall_steps:
                    return False, rel
            else:
                stall = 0
        return rel <= tol, rel

    # -- diagnostics --------------------------------------------------------

    def conserved_totals(self):
        return (self.k.volume[:, None] * self.q[:self.k.nc]).sum(axis=0)


class _StepRejected(Exception):
    pass
