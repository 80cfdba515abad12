"""Ghost layers, WENO stencil selection and least-squares fit operators.

Stage B of the mesh build. `build_ghosts` resolves periodic pairings, creates
two ghost layers (mirrored geometry; flow values filled per boundary recipe at
reconstruction time), selects the big and sub-stencils for every cell and
precomputes the least-squares operators over the zero-mean basis

    p_n(x) = s^n - <s^n>_cell,   s = (x - x_c) / V^(1/3),

so a runtime fit is a small matrix-vector product. All quadratic-fit geometry
reduces to centroid offsets and centered second moments.
"""

from dataclasses import dataclass

import numpy as np

from . import boundaries as bc
from .errors import ConfigError, PairingError, SingularStencilError, StencilError

# Sub-stencil tables: (face indices of the neighbor entries, ring source face)
# per cell kind, faces 0-based in canonical order. ring=None for the square
# hex/prism systems; tet/pyramid stencils append 3 second-ring cells of the
# listed face's neighbor.
SUB_TABLES = {
    0: [((0, 1, 2), 0), ((0, 1, 3), 1), ((1, 2, 3), 2), ((2, 0, 3), 3)],  # tet
    1: [((0, 1, 2), 0), ((1, 2, 3), 1), ((2, 3, 0), 2), ((3, 0, 1), 3),   # pyramid
        ((0, 1, 4), 0), ((1, 2, 4), 1), ((2, 3, 4), 2), ((3, 0, 4), 3)],
    2: [((0, 2, 3), None), ((0, 3, 4), None), ((0, 4, 2), None),          # prism
        ((1, 2, 3), None), ((1, 3, 4), None), ((1, 4, 2), None)],
    3: [((0, 1, 2), None), ((0, 2, 3), None), ((0, 3, 4), None), ((0, 4, 1), None),
        ((5, 1, 2), None), ((5, 2, 3), None), ((5, 3, 4), None), ((5, 4, 1), None)],
}

_SHIFT_DECIMALS = 9


@dataclass
class StencilSet:
    """Stencil entries of one cell: lists of (state slot, shift 3-vector)."""

    cell: int
    big: list
    subs: list

    @property
    def M(self):
        return len(self.subs)


def _skey(shift):
    return (round(shift[0], _SHIFT_DECIMALS), round(shift[1], _SHIFT_DECIMALS),
            round(shift[2], _SHIFT_DECIMALS))


def _mirror_point(x, p0, n):
    return x - 2.0 * ((x - p0) @ n) * n


def _mirror_m2(m2, n):
    mat = np.array([[m2[0], m2[3], m2[4]],
                    [m2[3], m2[1], m2[5]],
                    [m2[4], m2[5], m2[2]]])
    r = np.eye(3) - 2.0 * np.outer(n, n)
    m = r @ mat @ r.T
    return np.array([m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[0, 2], m[1, 2]])


class _GhostFactory:
    """Creates and deduplicates ghost slots (geometry + state recipe)."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.key_to_slot = {}
        self.centroid = []
        self.volume = []
        self.m2 = []
        self.donor = []
        self.bcidx = []
        self.normal = []
        self.plane_point = []

    def __len__(self):
        return len(self.donor)

    def get(self, key, donor_slot, bcidx, plane_point, plane_normal,
            src_centroid, src_volume, src_m2):
        slot = self.key_to_slot.get(key)
        if slot is not None:
            return slot
        slot = self.mesh.num_cells + len(self.donor)
        self.key_to_slot[key] = slot
        self.centroid.append(_mirror_point(src_centroid, plane_point, plane_normal))
        self.volume.append(src_volume)
        self.m2.append(_mirror_m2(src_m2, plane_normal))
        self.donor.append(donor_slot)
        self.bcidx.append(bcidx)
        self.normal.append(plane_normal)
        self.plane_point.append(plane_point)
        return slot


def _pair_periodic(mesh, periodic_tags):
    """Match periodic faces across the box; returns donor wiring per face.

    face_partner[f] = partner face id; face_shift[f] = translation added to the
    partner's geometry so it sits adjacent to f. Keeper faces are the lower
    face id of each pair; partners are dropped from the flux face list.
    """
    if mesh.box is None:
        raise PairingError("periodic boundaries need a known bounding box")
    lo, hi = np.asarray(mesh.box[0], dtype=float), np.asarray(mesh.box[1], dtype=float)
    extent = hi - lo
    scale = float(np.linalg.norm(extent))
    from scipy.spatial import cKDTree

    faces = [f for f in mesh.boundary_faces() if int(mesh.face_tag[f]) in periodic_tags]
    partner = np.full(mesh.num_faces, -1, dtype=np.int64)
    shift = np.zeros((mesh.num_faces, 3))
    if not faces:
        return partner, shift
    tree = cKDTree(mesh.face_centroid[faces])
    faces_arr = np.asarray(faces)
    for f in faces:
        if partner[f] >= 0:
            continue
        axis = int(np.argmax(np.abs(mesh.face_normal[f])))
        sgn = 1.0 if mesh.face_normal[f][axis] > 0 else -1.0
        t = np.zeros(3)
        t[axis] = -sgn * extent[axis]  # translation from f's side to the partner side
        target = mesh.face_centroid[f] + t
        hits = tree.query_ball_point(target, 1e-8 * scale)
        mate = -1
        for idx in hits:
            if faces_arr[idx] != f:
                mate = int(faces_arr[idx])
                break
        if mate < 0:
            raise PairingError(
                f"periodic face {f} (centroid {mesh.face_centroid[f]}) has no partner "
                f"within 1e-8 of {target}")
        partner[f] = mate
        partner[mate] = f
        # The partner's left cell, shifted by -t, sits adjacent to f.
        shift[f] = -t
        shift[mate] = t
    return partner, shift


def build_ghosts(mesh, boundary_spec):
    """Complete a Mesh with periodic wiring, ghost layers, stencils, operators.

    ``boundary_spec`` maps each boundary tag name to a BoundaryKind. Finalizes
    the mesh in place and returns it.
    """
    missing = [t for t in mesh.tag_names if t not in boundary_spec]
    if missing:
        raise ConfigError(f"boundary tags without a condition: {missing}")
    kinds = [boundary_spec[t] for t in mesh.tag_names]
    mesh.bc_kinds = kinds
    nc = mesh.num_cells

    periodic_tags = {i for i, k in enumerate(kinds) if k.code == bc.PERIODIC}
    partner, pshift = _pair_periodic(mesh, periodic_tags) if periodic_tags else (
        np.full(mesh.num_faces, -1, dtype=np.int64), np.zeros((mesh.num_faces, 3)))
    mesh.face_partner = partner
    mesh.face_pshift = pshift

    # Distinct (tag) -> bc table row; periodic never lands in the table.
    bcidx_of_tag = {}
    bc_rows = []
    for i, k in enumerate(kinds):
        if k.code != bc.PERIODIC:
            bcidx_of_tag[i] = len(bc_rows)
            bc_rows.append(k)
    mesh.bc_table = bc_rows

    factory = _GhostFactory(mesh)
    face_bcidx = np.full(mesh.num_faces, -1, dtype=np.int64)

    # Layer-1 ghosts: one per non-periodic boundary face.
    for f in mesh.boundary_faces():
        tag = int(mesh.face_tag[f])
        if tag in periodic_tags:
            continue
        donor = int(mesh.face_left[f])
        bci = bcidx_of_tag[tag]
        face_bcidx[f] = bci
        factory.get(("g1", f), donor, bci, mesh.face_centroid[f], mesh.face_normal[f],
                    mesh.centroid[donor], mesh.volume[donor], mesh.m2[donor])
    mesh.face_bcidx = face_bcidx

    # Neighbor entries per canonical face slot: (state slot, shift).
    nbr_slot = np.full((nc, 6), -1, dtype=np.int64)
    nbr_shift = np.zeros((nc, 6, 3))
    for c in range(nc):
        for p in range(int(mesh.cell_num_faces[c])):
            f = int(mesh.cell_face_ids[c, p])
            left, right = int(mesh.face_left[f]), int(mesh.face_right[f])
            if right >= 0:
                nbr_slot[c, p] = right if left == c else left
            elif partner[f] >= 0:
                g = int(partner[f])
                nbr_slot[c, p] = int(mesh.face_left[g])
                nbr_shift[c, p] = pshift[f]
            else:
                nbr_slot[c, p] = factory.key_to_slot[("g1", f)]
    mesh.nbr_slot = nbr_slot
    mesh.nbr_shift = nbr_shift
    mesh._ghost_meta = factory  # geometry still growing; rings add layer 2

    def neighbor_entries(i):
        n = int(mesh.cell_num_faces[i])
        return [(int(nbr_slot[i, p]), nbr_shift[i, p].copy()) for p in range(n)]

    def ring_entries(i, p):
        """Neighbors-of-neighbor entries for cell i through face slot p."""
        j = int(nbr_slot[i, p])
        s = nbr_shift[i, p]
        if j < nc:
            out = []
            for q in range(int(mesh.cell_num_faces[j])):
                out.append((int(nbr_slot[j, q]), s + nbr_shift[j, q]))
            return out
        # Ghost neighbor: mirror image of i's other neighbors through the
        # same boundary face; back through the face sits i itself.
        f = int(mesh.cell_face_ids[i, p])
        plane_p = mesh.face_centroid[f]
        plane_n = mesh.face_normal[f]
        bci = int(face_bcidx[f])
        out = [(i, np.zeros(3))]
        for q in range(int(mesh.cell_num_faces[i])):
            if q == p:
                continue
            k = int(nbr_slot[i, q])
            ks = nbr_shift[i, q]
            cen, vol, m2 = _slot_geometry(mesh, factory, k)
            slot = factory.get(("g2", f, k, _skey(ks)), k, bci,
                               plane_p, plane_n, cen + ks, vol, m2)
            out.append((slot, np.zeros(3)))
        return out

    mesh._neighbor_entries = neighbor_entries
    mesh._ring_entries = ring_entries

    big_entries = []
    sub_entries = []
    for i in range(nc):
        st = _select_stencils(mesh, i, neighbor_entries, ring_entries)
        big_entries.append(st.big)
        sub_entries.append(st.subs)

    # Freeze ghost geometry into the extended arrays.
    ng = len(factory)
    mesh.num_ghosts = ng
    if ng:
        mesh.volume = np.concatenate([mesh.volume, np.asarray(factory.volume)])
        mesh.centroid = np.vstack([mesh.centroid, np.asarray(factory.centroid)])
        mesh.m2 = np.vstack([mesh.m2, np.asarray(factory.m2)])
        mesh.h = mesh.volume ** (1.0 / 3.0)
        mesh.ghost_donor = np.asarray(factory.donor, dtype=np.int64)
        mesh.ghost_bcidx = np.asarray(factory.bcidx, dtype=np.int64)
        mesh.ghost_normal = np.asarray(factory.normal)
        mesh.ghost_plane_point = np.asarray(factory.plane_point)
    else:
        mesh.ghost_donor = np.zeros(0, dtype=np.int64)
        mesh.ghost_bcidx = np.zeros(0, dtype=np.int64)
        mesh.ghost_normal = np.zeros((0, 3))
        mesh.ghost_plane_point = np.zeros((0, 3))

    _assemble_operators(mesh, big_entries, sub_entries)
    mesh._big_entries = big_entries
    mesh._sub_entries = sub_entries
    mesh.ghosts_built = True
    return mesh


def _slot_geometry(mesh, factory, slot):
    if slot < mesh.num_cells:
        return mesh.centroid[slot], mesh.volume[slot], mesh.m2[slot]
    g = slot - mesh.num_cells
    return (np.asarray(factory.centroid[g]), factory.volume[g],
            np.asarray(factory.m2[g]))


def _select_stencils(mesh, i, neighbor_entries, ring_entries):
    nbrs = neighbor_entries(i)
    if any(slot < 0 for slot, _ in nbrs):
        raise StencilError(f"cell {i} has an unresolved face neighbor")
    big = [(i, np.zeros(3))] + list(nbrs)
    for p in range(len(nbrs)):
        big.extend(ring_entries(i, p))
    seen = set()
    dedup = []
    for slot, shift in big:
        key = (slot, _skey(shift))
        if key not in seen:
            seen.add(key)
            dedup.append((slot, shift))
    if len(dedup) < 10:
        raise StencilError(
            f"cell {i}: big stencil has {len(dedup)} entries, need >= 10")

    kind = int(mesh.cell_kind[i])
    subs = []
    own_key = (i, _skey(np.zeros(3)))
    for faces, ring_face in SUB_TABLES[kind]:
        entries = [(i, np.zeros(3))]
        for p in faces:
            entries.append(nbrs[p])
        if ring_face is not None:
            extra = [e for e in ring_entries(i, ring_face)
                     if (e[0], _skey(e[1])) != own_key]
            if len(extra) < 3:
                raise StencilError(
                    f"cell {i}: sub-stencil ring through face {ring_face} "
                    f"has only {len(extra)} usable cells")
            entries.extend(extra[:3])
        subs.append(entries)
    return StencilSet(cell=i, big=dedup, subs=subs)


def select_stencils(mesh, cell):
    """StencilSet of one cell (requires build_ghosts to have run)."""
    if not mesh.ghosts_built:
        raise StencilError("stencils are available after build_ghosts")
    return StencilSet(cell=cell, big=mesh._big_entries[cell],
                      subs=mesh._sub_entries[cell])


def _basis_rows(mesh, i, entries, quadratic):
    """Mean-constraint rows of the zero-mean basis for stencil entries != owner."""
    hi = mesh.h[i]
    ci = mesh.centroid[i]
    czm = mesh.m2[i] / (hi * hi)
    rows = np.empty((len(entries), 9 if quadratic else 3))
    for r, (slot, shift) in enumerate(entries):
        d = (mesh.centroid[slot] + shift - ci) / hi
        rows[r, 0:3] = d
        if quadratic:
            m2s = mesh.m2[slot] / (hi * hi)
            rows[r, 3] = d[0] * d[0] + m2s[0] - czm[0]
            rows[r, 4] = d[1] * d[1] + m2s[1] - czm[1]
            rows[r, 5] = d[2] * d[2] + m2s[2] - czm[2]
            rows[r, 6] = d[0] * d[1] + m2s[3] - czm[3]
            rows[r, 7] = d[0] * d[2] + m2s[4] - czm[4]
            rows[r, 8] = d[1] * d[2] + m2s[5] - czm[5]
    return rows


def _batched_pinv(mats, rcond, context):
    """Moore-Penrose pseudo-inverses of a (n, R, K) stack with rank flags."""
    u, s, vt = np.linalg.svd(mats, full_matrices=False)
    cut = rcond * s[:, :1]
    inv_s = np.where(s > cut, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    pinv = np.einsum("nkr,nk,nmk->nrm", vt, inv_s, u)
    deficient = np.nonzero(s[:, -1] <= cut[:, 0])[0]
    return pinv, deficient


def _assemble_operators(mesh, big_entries, sub_entries):
    nc = mesh.num_cells
    kb = max(len(e) - 1 for e in big_entries)
    big_rows = np.zeros((nc, kb, 9))
    big_ids = np.empty((nc, kb), dtype=np.int32)
    for i, entries in enumerate(big_entries):
        tail = entries[1:]
        big_rows[i, :len(tail)] = _basis_rows(mesh, i, tail, quadratic=True)
        ids = [slot for slot, _ in tail] + [i] * (kb - len(tail))
        big_ids[i] = ids
    big_op, flagged = _batched_pinv(big_rows, 1e-10, "big stencil")
    mesh.big_ids = big_ids
    mesh.big_op = np.ascontiguousarray(big_op)
    mesh.rank_deficient_cells = flagged.astype(np.int64)

    mmax = max(len(s) for s in sub_entries)
    smax = max(len(e) - 1 for subs in sub_entries for e in subs)
    sub_rows = np.zeros((nc, mmax, smax, 3))
    sub_ids = np.empty((nc, mmax, smax), dtype=np.int32)
    sub_ids[:] = np.arange(nc, dtype=np.int32)[:, None, None]
    sub_count = np.empty(nc, dtype=np.int8)
    for i, subs in enumerate(sub_entries):
        sub_count[i] = len(subs)
        for m, entries in enumerate(subs):
            tail = entries[1:]
            sub_rows[i, m, :len(tail)] = _basis_rows(mesh, i, tail, quadratic=False)
            for r, (slot, _) in enumerate(tail):
                sub_ids[i, m, r] = slot

    flat = sub_rows.reshape(-1, smax, 3)
    # mask of real (cell, m) pairs; padded slots beyond sub_count are unused
    used = np.repeat(sub_count.astype(np.int64), mmax) > np.tile(np.arange(mmax), nc)
    u, s, vt = np.linalg.svd(flat, full_matrices=False)
    smin = s[:, -1]
    smax_v = s[:, 0]
    cond = np.where(smin > 0, smax_v / np.where(smin > 0, smin, 1.0), np.inf)
    bad = np.nonzero(used & (cond > 1e12))[0]
    if len(bad):
        cell = int(bad[0] // mmax)
        m = int(bad[0] % mmax)
        raise SingularStencilError(
            f"cell {cell} sub-stencil {m}: condition estimate {cond[bad[0]]:.3e} > 1e12 "
            "(coplanar stencil centroids)")
    inv_s = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    pinv = np.einsum("nkr,nk,nmk->nrm", vt, inv_s, u)
    mesh.sub_ids = sub_ids
    mesh.sub_op = np.ascontiguousarray(pinv.reshape(nc, mmax, 3, smax))
    mesh.sub_count = sub_count
    mesh.czm = np.ascontiguousarray(mesh.m2[:nc] / (mesh.h[:nc, None] ** 2))
