"""Mesh topology: face extraction, orientation, geometry tables, cell views.

Stage A of the mesh build: `parse_mesh` (or the generator) yields a Mesh with
cells classified, faces deduplicated and oriented, per-cell volume/centroid/
second-moment tables and per-face Gauss data. Stage B (`stencils.build_ghosts`)
wires periodic sides, constructs ghost layers and reconstruction operators.
"""

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import GeometryError, MeshFormatError
from .generator import parse_recipe
from .gmsh_io import parse_gmsh
from .rawmesh import RawMesh


def parse_mesh(stream):
    """Parse a Gmsh v2.2 subset file or a native 'boxmesh' recipe into a Mesh.

    Accepts a file object or a string. Geometry is validated: any cell with a
    non-positive Jacobian at a volume quadrature point raises GeometryError.
    """
    if hasattr(stream, "read"):
        text = stream.read()
    else:
        text = stream
    lead = ""
    for line in text.splitlines():
        line = line.strip()
        if line:
            lead = line
            break
    if lead.startswith("$MeshFormat"):
        raw = parse_gmsh(text)
    elif lead.startswith("boxmesh"):
        raw = parse_recipe(text)
    else:
        raise MeshFormatError(f"unrecognized mesh format (first line {lead!r})", line=1)
    return Mesh(raw)


@dataclass
class CellView:
    """Per-cell record exposed for inspection and tests."""

    index: int
    kind: int
    vertex_ids: np.ndarray
    hex8_ids: np.ndarray
    centroid: np.ndarray
    volume: float
    _mesh: "Mesh"

    @property
    def kind_name(self):
        return geo.KIND_NAMES[self.kind]

    def basis_moments(self):
        """Cell averages of x^n1 y^n2 z^n3 for |n| <= 2, keyed by multi-index."""
        out = {}
        coords = self._mesh.verts[self.hex8_ids]
        for n in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
                  (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)]:
            out[n] = geo.cell_moment(coords, *n) / self.volume
        return out


class FaceView:
    """Per-face record: Gauss data plus adjacency."""

    def __init__(self, mesh, f):
        self.index = f
        self.vertex_ids = mesh.face_verts[f]
        self.left_cell = int(mesh.face_left[f])
        self.right_cell = int(mesh.face_right[f])
        self.gauss_points = mesh.gp_pos[f]
        self.gauss_normals = mesh.gp_normal[f]
        self.gauss_jacobians = mesh.gp_jac[f]
        self.area = float(mesh.face_area[f])
        tag = int(mesh.face_tag[f])
        self.boundary_tag = mesh.tag_names[tag] if tag >= 0 else None


def _normalize_tri(quad):
    """Rotate a degenerate quad so the repeated vertex sits in slots 3,4."""
    q = list(quad)
    for s in range(4):
        if q[s] == q[(s + 1) % 4]:
            # rotate so the duplicate pair occupies the last two slots
            shift = (s + 2) % 4
            return tuple(q[(shift + m) % 4] for m in range(4))
    return tuple(q)


class Mesh:
    """Unstructured hybrid mesh with quadrature-ready geometry tables."""

    def __init__(self, raw: RawMesh):
        self.raw = raw
        self.verts = np.asarray(raw.verts, dtype=float)
        self.cell_kind = np.asarray(raw.cell_kinds, dtype=np.int8)
        self.cell_verts = np.asarray(raw.cell_verts, dtype=np.int64)
        self.num_cells = len(self.cell_kind)
        self.box = raw.box
        self._build_cell_geometry()
        self._build_faces()
        # Filled by stencils.build_ghosts (stage B):
        self.ghosts_built = False

    # -- stage A ----------------------------------------------------------

    def _build_cell_geometry(self):
        labels = np.array([geo.DEGENERATE_HEX_LABELS[int(k)] for k in self.cell_kind])
        self.hex8 = np.take_along_axis(self.cell_verts, labels, axis=1)
        coords = self.verts[self.hex8]
        vol, cen, m2 = geo.cell_geometry(coords, require_positive=True)
        self.volume = vol
        self.centroid = cen
        self.m2 = m2
        self.h = vol ** (1.0 / 3.0)

    def _build_faces(self):
        nc = self.num_cells
        max_faces = 6
        self.cell_face_ids = np.full((nc, max_faces), -1, dtype=np.int64)
        self.cell_num_faces = np.empty(nc, dtype=np.int8)

        lookup = {}
        face_verts = []
        face_left = []
        face_right = []
        left_slot = []
        for c in range(nc):
            kind = int(self.cell_kind[c])
            vids = self.cell_verts[c]
            faces = geo.CANONICAL_FACES[kind]
            self.cell_num_faces[c] = len(faces)
            for p, face in enumerate(faces):
                fv = tuple(int(vids[m]) for m in face)
                key = tuple(sorted(fv))
                fid = lookup.get(key)
                if fid is None:
                    fid = len(face_verts)
                    lookup[key] = fid
                    quad = fv if len(fv) == 4 else (fv[0], fv[1], fv[2], fv[2])
                    face_verts.append(_normalize_tri(quad))
                    face_left.append(c)
                    face_right.append(-1)
                    left_slot.append(p)
                else:
                    if face_right[fid] != -1:
                        raise MeshFormatError(f"face shared by more than two cells near cell {c}")
                    face_right[fid] = c
                self.cell_face_ids[c, p] = fid

        self.num_faces = len(face_verts)
        self.face_verts = np.asarray(face_verts, dtype=np.int64)
        self.face_left = np.asarray(face_left, dtype=np.int64)
        self.face_right = np.asarray(face_right, dtype=np.int64)
        self._face_key = {tuple(sorted(fv)): f for f, fv in enumerate(face_verts)}
        self._compute_face_geometry()
        self._assign_tags()

    def _compute_face_geometry(self):
        nf = self.num_faces
        self.gp_pos = np.empty((nf, 4, 3))
        self.gp_normal = np.empty((nf, 4, 3))
        self.gp_jac = np.empty((nf, 4))
        self.face_area = np.empty(nf)
        self.face_normal = np.empty((nf, 3))
        self.face_centroid = np.empty((nf, 3))
        for f in range(nf):
            self._face_gauss(f)

    def _face_gauss(self, f):
        quad = self.face_verts[f]
        pts, normals, jacs = geo.face_quadrature(self.verts[quad])
        w = geo.FACE_GAUSS_WEIGHT * jacs
        area = w.sum()
        mean_n = (w[:, None] * normals).sum(axis=0)
        mean_n /= np.linalg.norm(mean_n)
        centroid = (w[:, None] * pts).sum(axis=0) / area
        # Orient the stored cyclic order (and hence the normals) away from the
        # left cell; boundary faces then point out of the domain.
        to_face = centroid - self.centroid[self.face_left[f]]
        if mean_n @ to_face < 0.0:
            self.face_verts[f] = _normalize_tri(tuple(self.face_verts[f][::-1]))
            pts, normals, jacs = geo.face_quadrature(self.verts[self.face_verts[f]])
            w = geo.FACE_GAUSS_WEIGHT * jacs
            mean_n = (w[:, None] * normals).sum(axis=0)
            mean_n /= np.linalg.norm(mean_n)
            centroid = (w[:, None] * pts).sum(axis=0) / area
        self.gp_pos[f] = pts
        self.gp_normal[f] = normals
        self.gp_jac[f] = jacs
        self.face_area[f] = area
        self.face_normal[f] = mean_n
        self.face_centroid[f] = centroid

    def _assign_tags(self):
        names = sorted(set(self.raw.boundary_tags.values()))
        self.tag_names = names
        tag_index = {n: i for i, n in enumerate(names)}
        self.face_tag = np.full(self.num_faces, -1, dtype=np.int32)
        boundary = np.nonzero(self.face_right < 0)[0]
        for f in boundary:
            key = tuple(sorted(set(int(v) for v in self.face_verts[f])))
            name = self.raw.boundary_tags.get(key)
            if name is None:
                raise MeshFormatError(
                    f"boundary face {f} (verts {key}) carries no physical tag")
            self.face_tag[f] = tag_index[name]

    # -- inspection -------------------------------------------------------

    def cell(self, c) -> CellView:
        nverts = geo.KIND_NUM_VERTS[int(self.cell_kind[c])]
        return CellView(index=c, kind=int(self.cell_kind[c]),
                        vertex_ids=self.cell_verts[c, :nverts].copy(),
                        hex8_ids=self.hex8[c].copy(),
                        centroid=self.centroid[c].copy(),
                        volume=float(self.volume[c]), _mesh=self)

    def face(self, f) -> FaceView:
        return FaceView(self, f)

    def cell_hex_coords(self, c):
        return self.verts[self.hex8[c]]

    def canonical_face_vertices(self, c):
        """Global vertex-id tuples of cell c's faces, canonical order."""
        kind = int(self.cell_kind[c])
        vids = self.cell_verts[c]
        return [tuple(int(vids[m]) for m in face) for face in geo.CANONICAL_FACES[kind]]

    def boundary_faces(self):
        return np.nonzero(self.face_right < 0)[0]

    def summary(self):
        kinds, counts = np.unique(self.cell_kind, return_counts=True)
        by_kind = {geo.KIND_NAMES[int(k)]: int(n) for k, n in zip(kinds, counts)}
        return {
            "cells": self.num_cells,
            "faces": self.num_faces,
            "vertices": len(self.verts),
            "boundary_faces": int(np.sum(self.face_right < 0)),
            "volume": float(self.volume.sum()),
            "kinds": by_kind,
        }
