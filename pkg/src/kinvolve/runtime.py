"""Packing of a finished Mesh into the flat arrays the kernels consume.

Kept faces: interior faces, true boundary faces, and one face per periodic
pair (the partner is dropped; the kept face updates both cells). All arrays
are cached on the mesh under ``mesh.k``.
"""

from types import SimpleNamespace

import numpy as np

from . import boundaries as bc
from . import geometry as geo


def pack_kernel_arrays(mesh):
    if getattr(mesh, "k", None) is not None:
        return mesh.k
    if not mesh.ghosts_built:
        raise RuntimeError("build_ghosts must run before kernel packing")
    nc = mesh.num_cells
    partner = mesh.face_partner
    keep = []
    for f in range(mesh.num_faces):
        if mesh.face_right[f] >= 0:
            keep.append(f)
        elif partner[f] < 0 or f < partner[f]:
            keep.append(f)
    keep = np.asarray(keep, dtype=np.int64)
    nf = len(keep)

    f_left = np.empty(nf, dtype=np.int32)
    f_right = np.empty(nf, dtype=np.int32)
    f_bcidx = np.empty(nf, dtype=np.int32)
    f_shift = np.zeros((nf, 3))
    for i, f in enumerate(keep):
        f_left[i] = mesh.face_left[f]
        if mesh.face_right[f] >= 0:
            f_right[i] = mesh.face_right[f]
            f_bcidx[i] = -1
        elif partner[f] >= 0:
            f_right[i] = mesh.face_left[partner[f]]
            f_bcidx[i] = -1
            f_shift[i] = mesh.face_pshift[f]
        else:
            f_right[i] = -1
            f_bcidx[i] = int(mesh.face_bcidx[f])

    gp_pos = mesh.gp_pos[keep]
    gp_n = np.ascontiguousarray(mesh.gp_normal[keep])
    gp_w = np.ascontiguousarray(geo.FACE_GAUSS_WEIGHT * mesh.gp_jac[keep])
    gp_t1 = np.empty_like(gp_n)
    gp_t2 = np.empty_like(gp_n)
    for i in range(nf):
        for k in range(4):
            t1, t2 = geo.tangent_basis(gp_n[i, k])
            gp_t1[i, k] = t1
            gp_t2[i, k] = t2

    cl = mesh.centroid[f_left]
    hl = mesh.h[f_left]
    gp_sl = (gp_pos - cl[:, None, :]) / hl[:, None, None]
    gp_sr = np.zeros_like(gp_sl)
    inter = f_right >= 0
    cr = mesh.centroid[f_right[inter]] + f_shift[inter]
    hr = mesh.h[f_right[inter]]
    gp_sr[inter] = (gp_pos[inter] - cr[:, None, :]) / hr[:, None, None]

    # Cell -> kept-face incidence with outflow signs.
    counts = np.zeros(nc + 1, dtype=np.int64)
    for i in range(nf):
        counts[f_left[i] + 1] += 1
        if f_right[i] >= 0:
            counts[f_right[i] + 1] += 1
    cf_ptr = np.cumsum(counts).astype(np.int64)
    total = cf_ptr[-1]
    cf_face = np.empty(total, dtype=np.int32)
    cf_sign = np.empty(total, dtype=np.int8)
    cursor = cf_ptr[:-1].copy()
    for i in range(nf):
        c = f_left[i]
        cf_face[cursor[c]] = i
        cf_sign[cursor[c]] = 1
        cursor[c] += 1
        r = f_right[i]
        if r >= 0:
            cf_face[cursor[r]] = i
            cf_sign[cursor[r]] = -1
            cursor[r] += 1

    nbc = len(mesh.bc_table)
    bc_kind = np.zeros(max(nbc, 1), dtype=np.int8)
    bc_param = np.zeros((max(nbc, 1), 10))
    for i, kind in enumerate(mesh.bc_table):
        bc_kind[i] = kind.code
        bc_param[i] = bc.pack_params(kind)

    k = SimpleNamespace(
        nc=nc,
        ng=mesh.num_ghosts,
        kept=keep,
        f_left=f_left,
        f_right=f_right,
        f_bcidx=f_bcidx,
        f_area=np.ascontiguousarray(mesh.face_area[keep]),
        f_normal=np.ascontiguousarray(mesh.face_normal[keep]),
        gp_sl=np.ascontiguousarray(gp_sl),
        gp_sr=np.ascontiguousarray(gp_sr),
        gp_n=gp_n,
        gp_t1=gp_t1,
        gp_t2=gp_t2,
        gp_w=gp_w,
        cf_ptr=cf_ptr,
        cf_face=cf_face,
        cf_sign=cf_sign,
        volume=np.ascontiguousarray(mesh.volume[:nc]),
        h=np.ascontiguousarray(mesh.h),
        bc_kind=bc_kind,
        bc_param=bc_param,
        big_ids=mesh.big_ids,
        big_op=mesh.big_op,
        sub_ids=mesh.sub_ids,
        sub_op=mesh.sub_op,
        sub_count=mesh.sub_count,
        czm=mesh.czm,
        ghost_donor=mesh.ghost_donor.astype(np.int64),
        ghost_bcidx=mesh.ghost_bcidx.astype(np.int64),
        ghost_normal=np.ascontiguousarray(mesh.ghost_normal),
    )
    mesh.k = k
    return k
