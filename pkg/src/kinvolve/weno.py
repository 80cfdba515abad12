"""WENO reconstruction operations on a built mesh.

Candidate polynomials live over the per-cell zero-mean basis in scaled local
coordinates s = (x - x_c)/V^(1/3); the constant term is then exactly the cell
average. The nonlinear combination follows the simple-WENO form with
topology-independent linear weights (gamma_m = 0.0125, gamma_0 = 1 - 0.0125 M)
and smoothness-scaled nonlinear weights w_m = gamma_m (1 + tau/(beta_m+eps)).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import StencilError
from .gas import is_physical


@dataclass(frozen=True)
class WenoConfig:
    gamma_sub: float = 0.0125
    epsilon: float = 1.0e-6

    def gamma_0(self, m):
        g0 = 1.0 - self.gamma_sub * m
        if g0 <= 0.0:
            raise ValueError("gamma_sub too large for this sub-stencil count")
        return g0


@dataclass
class ReconPolynomial:
    """One candidate polynomial of one cell, all 5 components at once.

    coeffs rows are [x, y, z, xx, yy, zz, xy, xz, yz] in scaled coordinates;
    quadratic rows are zero for linear candidates.
    """

    mesh: object
    cell: int
    q0: np.ndarray            # (5,)
    coeffs: np.ndarray        # (9, 5)
    degree: int

    def _scaled(self, x):
        return (np.asarray(x, dtype=float) - self.mesh.centroid[self.cell]) \
            / self.mesh.h[self.cell]

    def __call__(self, x):
        s = self._scaled(x)
        czm = self.mesh.czm[self.cell]
        basis = np.array([s[0], s[1], s[2],
                          s[0] ** 2 - czm[0], s[1] ** 2 - czm[1], s[2] ** 2 - czm[2],
                          s[0] * s[1] - czm[3], s[0] * s[2] - czm[4],
                          s[1] * s[2] - czm[5]])
        return self.q0 + basis @ self.coeffs

    def gradient(self, x):
        """(3, 5) spatial derivatives at a physical point, global frame."""
        s = self._scaled(x)
        a = self.coeffs
        g = np.empty((3, 5))
        g[0] = a[0] + 2.0 * a[3] * s[0] + a[6] * s[1] + a[7] * s[2]
        g[1] = a[1] + 2.0 * a[4] * s[1] + a[6] * s[0] + a[8] * s[2]
        g[2] = a[2] + 2.0 * a[5] * s[2] + a[7] * s[0] + a[8] * s[1]
        return g / self.mesh.h[self.cell]

    def cell_average(self):
        return self.q0.copy()


def _gather_dq(mesh, cell, ids, averages):
    return averages[ids] - averages[cell]


def fit_quadratic(mesh, cell, averages):
    """Least-squares quadratic fit over the big stencil (all components)."""
    dq = _gather_dq(mesh, cell, mesh.big_ids[cell], np.asarray(averages, dtype=float))
    a = mesh.big_op[cell] @ dq
    return ReconPolynomial(mesh=mesh, cell=cell, q0=np.asarray(averages)[cell].copy(),
                           coeffs=a, degree=2)


def fit_linear(mesh, cell, m, averages):
    """Linear fit over sub-stencil m (square for hex/prism, LS for tet/pyr)."""
    if m >= int(mesh.sub_count[cell]):
        raise StencilError(f"cell {cell} has {mesh.sub_count[cell]} sub-stencils")
    dq = _gather_dq(mesh, cell, mesh.sub_ids[cell, m], np.asarray(averages, dtype=float))
    b = mesh.sub_op[cell, m] @ dq
    coeffs = np.zeros((9, 5))
    coeffs[:3] = b
    return ReconPolynomial(mesh=mesh, cell=cell, q0=np.asarray(averages)[cell].copy(),
                           coeffs=coeffs, degree=1)


def smoothness(poly):
    """Smoothness indicators (per component) of a candidate polynomial.

    Sum over derivative orders 1..degree of |cell|^(2|l|/3 - 1) times the
    integral of the squared derivatives; in scaled coordinates this reduces to
    cell averages against the centered second moments.
    """
    a = poly.coeffs
    if poly.degree == 1:
        return (a[:3] ** 2).sum(axis=0)
    m = poly.mesh.czm[poly.cell]
    mxx, myy, mzz, mxy, mxz, myz = m
    a0, a1, a2, a3, a4, a5, a6, a7, a8 = a
    gx2 = (a0 ** 2 + 4 * a3 ** 2 * mxx + a6 ** 2 * myy + a7 ** 2 * mzz
           + 4 * a3 * a6 * mxy + 4 * a3 * a7 * mxz + 2 * a6 * a7 * myz)
    gy2 = (a1 ** 2 + 4 * a4 ** 2 * myy + a6 ** 2 * mxx + a8 ** 2 * mzz
           + 4 * a4 * a6 * mxy + 4 * a4 * a8 * myz + 2 * a6 * a8 * mxz)
    gz2 = (a2 ** 2 + 4 * a5 ** 2 * mzz + a7 ** 2 * mxx + a8 ** 2 * myy
           + 4 * a5 * a7 * mxz + 4 * a5 * a8 * myz + 2 * a7 * a8 * mxy)
    second = 4.0 * (a3 ** 2 + a4 ** 2 + a5 ** 2) + a6 ** 2 + a7 ** 2 + a8 ** 2
    return gx2 + gy2 + gz2 + second


def weno_weights(beta0, betas, config):
    """(w0_bar, wm_bar array) normalized nonlinear weights per component."""
    betas = np.asarray(betas, dtype=float)
    m = betas.shape[0]
    tau = np.abs(beta0 - betas).sum(axis=0) / m
    g0 = config.gamma_0(m)
    w0 = g0 * (1.0 + tau / (beta0 + config.epsilon))
    wm = config.gamma_sub * (1.0 + tau / (betas + config.epsilon))
    total = w0 + wm.sum(axis=0)
    return w0 / total, wm / total


def weno_combine(big, subs, config, point):
    """Nonlinearly combined value and gradient at a physical point.

    Implements Q = w0 (P0/g0 - sum gm/g0 Pm) + sum wm Pm and the analogous
    derivative combination (candidates differentiated directly).
    """
    beta0 = smoothness(big)
    betas = np.array([smoothness(p) for p in subs])
    w0, wm = weno_weights(beta0, betas, config)
    g0 = config.gamma_0(len(subs))
    w0g = w0 / g0
    value = w0g * big(point)
    grad = w0g * big.gradient(point)
    for m, p in enumerate(subs):
        cm = wm[m] - w0g * config.gamma_sub
        value = value + cm * p(point)
        grad = grad + cm * p.gradient(point)
    return value, grad


def combined_polynomial(mesh, cell, averages, config):
    """The WENO-combined polynomial of one cell as a single ReconPolynomial."""
    big = fit_quadratic(mesh, cell, averages)
    subs = [fit_linear(mesh, cell, m, averages)
            for m in range(int(mesh.sub_count[cell]))]
    beta0 = smoothness(big)
    betas = np.array([smoothness(p) for p in subs])
    w0, wm = weno_weights(beta0, betas, config)
    w0g = w0 / config.gamma_0(len(subs))
    coeffs = w0g * big.coeffs
    for m, p in enumerate(subs):
        coeffs = coeffs + (wm[m] - w0g * config.gamma_sub) * p.coeffs
    return ReconPolynomial(mesh=mesh, cell=cell, q0=big.q0, coeffs=coeffs, degree=2)


@dataclass
class InterfaceSample:
    """Left/right states and spatial derivative vectors at a face Gauss point."""

    q_left: np.ndarray
    q_right: np.ndarray
    grad_left: np.ndarray     # (3, 5), global frame
    grad_right: np.ndarray
    point: np.ndarray
    normal: np.ndarray
    fallback: int = 0


def reconstruct_interface(mesh, averages, face, gauss_index, config=None, model=None):
    """InterfaceSample at one Gauss point of a kept face.

    ``averages`` must cover real cells and ghost slots (fill ghosts first for
    wall/far-field boundaries, e.g. via march.Solver). Positivity failures
    fall back to the cell average with zero gradient and are counted, never
    raised.
    """
    from .runtime import pack_kernel_arrays

    config = config or WenoConfig()
    k = pack_kernel_arrays(mesh)
    averages = np.asarray(averages, dtype=float)
    f = int(face)
    kk = int(gauss_index)
    left = int(k.f_left[f])
    point = mesh.gp_pos[k.kept[f], kk]
    fallback = 0

    pl = combined_polynomial(mesh, left, averages, config)
    ql = pl(point)
    gl = pl.gradient(point)
    if model is not None and not is_physical(ql, model):
        ql = averages[left].copy()
        gl = np.zeros((3, 5))
        fallback += 1

    right = int(k.f_right[f])
    n1 = k.gp_n[f, kk]
    if right >= 0:
        shifted = point - (mesh.centroid[right] + (mesh.face_pshift[k.kept[f]]
                                                   if k.f_bcidx[f] < 0 else 0.0))
        pr = combined_polynomial(mesh, right, averages, config)
        # evaluate the donor polynomial at the (possibly shifted) point
        pr_point = mesh.centroid[right] + shifted
        qr = pr(pr_point)
        gr = pr.gradient(pr_point)
        if model is not None and not is_physical(qr, model):
            qr = averages[right].copy()
            gr = np.zeros((3, 5))
            fallback += 1
    else:
        t1 = k.gp_t1[f, kk]
        t2 = k.gp_t2[f, kk]
        ql_loc = np.empty(5)
        gl_loc = np.empty((3, 5))
        K._rotate_in(ql, gl, n1, t1, t2, ql_loc, gl_loc)
        qr_loc = np.empty(5)
        gr_loc = np.empty((3, 5))
        scratch = (np.empty(5), np.empty(5), np.empty((3, 5)), np.empty((3, 5)))
        bci = int(k.f_bcidx[f])
        K._boundary_sample(ql_loc, gl_loc, int(k.bc_kind[bci]), k.bc_param[bci],
                           n1, t1, t2, model.gamma if model else 1.4,
                           qr_loc, gr_loc, scratch[0], scratch[2],
                           scratch[1], scratch[3])
        rot = np.vstack([n1, t1, t2])
        qr = qr_loc.copy()
        qr[1:4] = rot.T @ qr_loc[1:4]
        gr = np.einsum("dl,de->el", gr_loc, rot)  # back to global directions
        gr[:, 1:4] = gr[:, 1:4] @ rot
    return InterfaceSample(q_left=ql, q_right=qr, grad_left=gl, grad_right=gr,
                           point=point.copy(), normal=n1.copy(), fallback=fallback)
