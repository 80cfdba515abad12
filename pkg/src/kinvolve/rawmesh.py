"""Raw mesh container shared by the file readers and the box generator."""

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo


@dataclass
class RawMesh:
    """Vertices + volume cells + tagged boundary faces, before topology build.

    ``cell_verts`` is padded with -1 beyond each kind's vertex count.
    ``boundary_tags`` maps a sorted vertex-id tuple of an exterior face to a
    boundary tag name. ``box`` is the (lo, hi) bounding box used to infer
    periodic translations for axis-aligned periodic sides.
    """

    verts: np.ndarray
    cell_kinds: np.ndarray
    cell_verts: np.ndarray
    boundary_tags: dict = field(default_factory=dict)
    box: tuple | None = None
    source: str = ""

    @property
    def num_cells(self):
        return len(self.cell_kinds)

    @property
    def num_verts(self):
        return len(self.verts)

    def cell_vertex_ids(self, c):
        n = geo.KIND_NUM_VERTS[int(self.cell_kinds[c])]
        return self.cell_verts[c, :n]


def pack_cells(cells):
    """(kinds, padded vert ids) arrays from a list of (kind, vertex ids)."""
    nc = len(cells)
    kinds = np.empty(nc, dtype=np.int8)
    verts = np.full((nc, 8), -1, dtype=np.int64)
    for i, (kind, vids) in enumerate(cells):
        kinds[i] = kind
        verts[i, :len(vids)] = vids
    return kinds, verts
