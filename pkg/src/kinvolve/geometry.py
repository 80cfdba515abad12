"""Reference-element tables, trilinear/bilinear maps and Gaussian quadrature.

Every cell kind (tetrahedron, pyramid, prism, hexahedron) is parameterized as a
possibly-degenerate hexahedron over the reference cube [-1/2, 1/2]^3; faces as
possibly-degenerate quadrilaterals over [-1/2, 1/2]^2. Volume integrals use the
3^3 tensor Gauss-Legendre rule (exact to degree 5 per direction), face
integrals the 2x2 rule with points at +-1/(2 sqrt(3)) and weights 1/4.
"""

import numpy as np

from .errors import GeometryError

TET, PYRAMID, PRISM, HEX = 0, 1, 2, 3
KIND_NAMES = {TET: "tetrahedron", PYRAMID: "pyramid", PRISM: "prism", HEX: "hexahedron"}
KIND_NUM_VERTS = {TET: 4, PYRAMID: 5, PRISM: 6, HEX: 8}

# Canonical face tables (0-based local vertex indices, cyclic order).
CANONICAL_FACES = {
    TET: ((0, 1, 2), (0, 1, 3), (1, 2, 3), (2, 0, 3)),
    PYRAMID: ((0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4), (0, 1, 2, 3)),
    PRISM: ((0, 1, 2), (3, 4, 5), (0, 1, 4, 3), (1, 2, 5, 4), (2, 0, 3, 5)),
    HEX: ((0, 1, 2, 3), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7), (4, 5, 6, 7)),
}

# Relabeling of each kind as a degenerate hexahedron (0-based slots).
DEGENERATE_HEX_LABELS = {
    TET: (0, 1, 2, 2, 3, 3, 3, 3),
    PYRAMID: (0, 1, 2, 3, 4, 4, 4, 4),
    PRISM: (0, 1, 2, 2, 3, 4, 5, 5),
    HEX: (0, 1, 2, 3, 4, 5, 6, 7),
}

# Reference-cube corners of hexahedron labels p1..p8: bottom cycle then top
# cycle, consistent with the canonical hex face table above.
HEX_CORNERS = 0.5 * np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
], dtype=float)

_G3 = 0.5 * np.sqrt(0.6)
GAUSS3_NODES = np.array([-_G3, 0.0, _G3])
GAUSS3_WEIGHTS = np.array([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0])

_G2 = 0.5 / np.sqrt(3.0)
GAUSS2_NODES = np.array([-_G2, _G2])
FACE_GAUSS_WEIGHT = 0.25

# 27-point tensor rule over the reference cube, flattened.
VOL_NODES = np.array([(x, y, z) for x in GAUSS3_NODES for y in GAUSS3_NODES for z in GAUSS3_NODES])
VOL_WEIGHTS = np.array([wx * wy * wz
                        for wx in GAUSS3_WEIGHTS for wy in GAUSS3_WEIGHTS for wz in GAUSS3_WEIGHTS])

# 4-point rule over the reference square, order (-,-), (-,+), (+,-), (+,+).
FACE_NODES = np.array([(e, z) for e in GAUSS2_NODES for z in GAUSS2_NODES])


def canonical_faces(kind):
    """Face vertex index lists of a cell kind, in canonical order."""
    return CANONICAL_FACES[kind]


def degenerate_hex_labels(kind):
    """The 8 local slots of the degenerate-hexahedron relabeling."""
    return DEGENERATE_HEX_LABELS[kind]


def trilinear_basis(xi, eta, zeta):
    """Values and reference gradients of the 8 corner basis functions.

    Returns (psi (8,), dpsi (8, 3)).
    """
    coords = np.array([xi, eta, zeta], dtype=float)
    factors = 0.5 + 2.0 * HEX_CORNERS * coords  # (8, 3)
    psi = factors.prod(axis=1)
    dpsi = np.empty((8, 3))
    for d in range(3):
        others = factors[:, [i for i in range(3) if i != d]].prod(axis=1)
        dpsi[:, d] = 2.0 * HEX_CORNERS[:, d] * others
    return psi, dpsi


def trilinear_map(hex_coords, xi, eta, zeta):
    """Physical point and 3x3 Jacobian of the trilinear map at (xi, eta, zeta).

    ``hex_coords`` are the 8 (possibly repeated) vertex positions in slot
    order; the Jacobian columns are dX/dxi, dX/deta, dX/dzeta.
    """
    psi, dpsi = trilinear_basis(xi, eta, zeta)
    hex_coords = np.asarray(hex_coords, dtype=float)
    point = psi @ hex_coords
    jac = hex_coords.T @ dpsi
    return point, jac


# Precomputed basis values at the 27 volume nodes: (27, 8) and (27, 8, 3).
_VOL_PSI = np.empty((27, 8))
_VOL_DPSI = np.empty((27, 8, 3))
for _i, (_x, _y, _z) in enumerate(VOL_NODES):
    _VOL_PSI[_i], _VOL_DPSI[_i] = trilinear_basis(_x, _y, _z)


def _det3(jac):
    """Determinant of (..., 3, 3) stacks without LAPACK overhead."""
    a = jac
    return (a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))


def volume_quadrature_points(hex_coords_many):
    """Quadrature points and |J| weights for a stack of cells.

    ``hex_coords_many``: (n, 8, 3) slot-ordered vertex coordinates.
    Returns (points (n, 27, 3), wdet (n, 27)) with wdet = weight * |det J|,
    plus the signed determinants (n, 27) for orientation checks.
    """
    hx = np.asarray(hex_coords_many, dtype=float)
    pts = np.einsum("km,nmd->nkd", _VOL_PSI, hx)
    jac = np.einsum("nmd,kme->nkde", hx, _VOL_DPSI)
    det = _det3(jac)
    wdet = VOL_WEIGHTS[None, :] * np.abs(det)
    return pts, wdet, det


def cell_moment(hex_coords, n1, n2, n3):
    """Integral of x^n1 y^n2 z^n3 over one cell via the 27-point rule."""
    pts, wdet, _ = volume_quadrature_points(np.asarray(hex_coords, dtype=float)[None])
    vals = pts[0, :, 0] ** n1 * pts[0, :, 1] ** n2 * pts[0, :, 2] ** n3
    return float(wdet[0] @ vals)


def cell_geometry(hex_coords_many, require_positive=False):
    """Volume, centroid and centered second moments for a stack of cells.

    Second moments are cell averages of (x-xc)_a (x-xc)_b packed as
    [xx, yy, zz, xy, xz, yz]. With ``require_positive`` the signed Jacobian
    must be positive at every node (inverted-cell check for input meshes).
    Returns (volume (n,), centroid (n,3), m2 (n,6)).
    """
    pts, wdet, det = volume_quadrature_points(hex_coords_many)
    if require_positive and np.any(det <= 0.0):
        bad = int(np.nonzero(np.any(det <= 0.0, axis=1))[0][0])
        raise GeometryError(f"inverted cell (non-positive Jacobian) at cell index {bad}")
    vol = wdet.sum(axis=1)
    if np.any(vol <= 0.0):
        bad = int(np.nonzero(vol <= 0.0)[0][0])
        raise GeometryError(f"zero-volume cell at cell index {bad}")
    centroid = np.einsum("nk,nkd->nd", wdet, pts) / vol[:, None]
    rel = pts - centroid[:, None, :]
    m2 = np.empty((len(vol), 6))
    pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    for j, (a, b) in enumerate(pairs):
        m2[:, j] = np.einsum("nk,nk->n", wdet, rel[:, :, a] * rel[:, :, b]) / vol
    return vol, centroid, m2


def quad_slot_coords(cyclic_coords):
    """Reorder a cyclic quad vertex list into bilinear slot order.

    Cyclic (c0, c1, c2, c3) traverses the reference-square corners
    (-,-) -> (-,+) -> (+,+) -> (+,-); the bilinear basis slots are
    (-,-), (-,+), (+,-), (+,+), i.e. (c0, c1, c3, c2).
    """
    c = np.asarray(cyclic_coords, dtype=float)
    return c[[0, 1, 3, 2]]


def bilinear_map(slot_coords, eta, zeta):
    """Point and tangent vectors (X_eta, X_zeta) of the face parameterization."""
    se, sz = 2.0 * eta, 2.0 * zeta
    phi = 0.25 * np.array([(1 - se) * (1 - sz), (1 - se) * (1 + sz),
                           (1 + se) * (1 - sz), (1 + se) * (1 + sz)])
    dphi_e = 0.5 * np.array([-(1 - sz), -(1 + sz), (1 - sz), (1 + sz)])
    dphi_z = 0.5 * np.array([-(1 - se), (1 - se), -(1 + se), (1 + se)])
    sc = np.asarray(slot_coords, dtype=float)
    return phi @ sc, dphi_e @ sc, dphi_z @ sc


def face_quadrature(cyclic_coords):
    """Gauss data for one (possibly degenerate) quadrilateral face.

    Returns (points (4,3), unit normals (4,3), jacobians (4,)) at the four
    2x2 Gauss nodes, with jacobian = ||X_eta x X_zeta||. The quadrature
    weight is 1/4 per point and Delta_eta = Delta_zeta = 1, so the face area
    equals sum(jacobians) / 4. Raises GeometryError for zero-area faces.
    """
    slots = quad_slot_coords(cyclic_coords)
    points = np.empty((4, 3))
    normals = np.empty((4, 3))
    jacs = np.empty(4)
    for k, (eta, zeta) in enumerate(FACE_NODES):
        x, xe, xz = bilinear_map(slots, eta, zeta)
        nvec = np.cross(xe, xz)
        norm = np.linalg.norm(nvec)
        points[k] = x
        jacs[k] = norm
        normals[k] = nvec / norm if norm > 0.0 else 0.0
    area = FACE_GAUSS_WEIGHT * jacs.sum()
    if area <= 0.0:
        raise GeometryError("zero-area face")
    bad = jacs <= 0.0
    if np.any(bad):
        # Collapsed corner of a degenerate quad: keep the (well-defined)
        # normal direction of the nearest regular node.
        good = int(np.nonzero(~bad)[0][0])
        normals[bad] = normals[good]
    return points, normals, jacs


def face_area_normal(cyclic_coords):
    """(area, mean unit normal, area-weighted centroid) of one face."""
    points, normals, jacs = face_quadrature(cyclic_coords)
    w = FACE_GAUSS_WEIGHT * jacs
    area = w.sum()
    nvec = (w[:, None] * normals).sum(axis=0)
    nn = np.linalg.norm(nvec)
    if nn == 0.0:
        raise GeometryError("face with vanishing mean normal")
    centroid = (w[:, None] * points).sum(axis=0) / area
    return area, nvec / nn, centroid


def tangent_basis(normal):
    """Deterministic orthonormal tangents (t1, t2) completing a unit normal."""
    n = np.asarray(normal, dtype=float)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    t1 = np.cross(n, axis)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2
