"""Reader for the Gmsh v2.2 ASCII subset.

Supported element types: 2 (triangle), 3 (quad) as physical-tagged boundary
faces; 4 (tet), 5 (hex), 6 (prism), 7 (pyramid) as volume cells. Points and
lines (types 15, 1) are skipped; anything else raises UnsupportedElementError.
Physical surface tags name the boundaries ($PhysicalNames when present,
otherwise the numeric tag).
"""

import io

import numpy as np

from . import geometry as geo
from .errors import MeshFormatError, UnsupportedElementError
from .rawmesh import RawMesh, pack_cells

_VOLUME_TYPES = {4: geo.TET, 5: geo.HEX, 6: geo.PRISM, 7: geo.PYRAMID}
_SURFACE_TYPES = {2: 3, 3: 4}  # type -> number of vertices
_SKIP_TYPES = {1, 15}
_TYPE_NUM_NODES = {1: 2, 2: 3, 3: 4, 4: 4, 5: 8, 6: 6, 7: 5, 15: 1}


class _LineReader:
    def __init__(self, stream):
        self._it = iter(stream)
        self.lineno = 0

    def next(self, context):
        for raw in self._it:
            self.lineno += 1
            line = raw.strip()
            if line:
                return line
        raise MeshFormatError(f"unexpected end of file while reading {context}",
                              line=self.lineno)


def parse_gmsh(stream):
    """Parse a Gmsh v2.2 ASCII stream (file object or string) into a RawMesh."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rd = _LineReader(stream)

    header = rd.next("$MeshFormat")
    if header != "$MeshFormat":
        raise MeshFormatError(f"expected $MeshFormat, got {header!r}", line=rd.lineno)
    version = rd.next("format line").split()
    if not version or not version[0].startswith("2."):
        raise MeshFormatError(f"unsupported Gmsh format version {version[:1]}", line=rd.lineno)
    if rd.next("$EndMeshFormat") != "$EndMeshFormat":
        raise MeshFormatError("expected $EndMeshFormat", line=rd.lineno)

    phys_names = {}
    node_ids = []
    coords = []
    elements = []

    while True:
        try:
            section = rd.next("section")
        except MeshFormatError:
            break
        if section == "$PhysicalNames":
            count = _int(rd.next("physical name count"), rd)
            for _ in range(count):
                parts = rd.next("physical name").split(maxsplit=2)
                if len(parts) < 3:
                    raise MeshFormatError("malformed physical name", line=rd.lineno)
                phys_names[int(parts[1])] = parts[2].strip().strip('"')
            _expect_end(rd, "$EndPhysicalNames")
        elif section == "$Nodes":
            count = _int(rd.next("node count"), rd)
            for _ in range(count):
                parts = rd.next("node").split()
                if len(parts) != 4:
                    raise MeshFormatError("node line must be 'id x y z'", line=rd.lineno)
                node_ids.append(int(parts[0]))
                coords.append([float(parts[1]), float(parts[2]), float(parts[3])])
            _expect_end(rd, "$EndNodes")
        elif section == "$Elements":
            count = _int(rd.next("element count"), rd)
            for _ in range(count):
                parts = rd.next("element").split()
                try:
                    etype = int(parts[1])
                    ntags = int(parts[2])
                    tags = [int(t) for t in parts[3:3 + ntags]]
                    nodes = [int(t) for t in parts[3 + ntags:]]
                except (IndexError, ValueError) as exc:
                    raise MeshFormatError(f"malformed element line: {exc}",
                                          line=rd.lineno) from exc
                if etype in _SKIP_TYPES:
                    continue
                if etype not in _VOLUME_TYPES and etype not in _SURFACE_TYPES:
                    raise UnsupportedElementError(
                        f"unsupported element type {etype}", line=rd.lineno)
                expected = _TYPE_NUM_NODES[etype]
                if len(nodes) != expected:
                    raise MeshFormatError(
                        f"element type {etype} needs {expected} nodes, got {len(nodes)}",
                        line=rd.lineno)
                elements.append((etype, tags[0] if tags else 0, nodes))
            _expect_end(rd, "$EndElements")
        elif section.startswith("$End"):
            continue
        elif section.startswith("$"):
            # Unknown section: skip to its end marker.
            end = "$End" + section[1:]
            while rd.next(f"section {section}") != end:
                pass
        else:
            raise MeshFormatError(f"unexpected content {section!r}", line=rd.lineno)

    if not coords:
        raise MeshFormatError("no $Nodes section found")

    id_map = {nid: i for i, nid in enumerate(node_ids)}
    verts = np.asarray(coords, dtype=float)

    cells = []
    boundary_tags = {}
    for etype, tag, nodes in elements:
        try:
            local = [id_map[n] for n in nodes]
        except KeyError as exc:
            raise MeshFormatError(f"element references unknown node {exc}") from exc
        if etype in _VOLUME_TYPES:
            cells.append((_VOLUME_TYPES[etype], local))
        else:
            name = phys_names.get(tag, str(tag))
            boundary_tags[tuple(sorted(local))] = name

    if not cells:
        raise MeshFormatError("no volume elements found")
    kinds, cell_verts = pack_cells(cells)
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    return RawMesh(verts=verts, cell_kinds=kinds, cell_verts=cell_verts,
                   boundary_tags=boundary_tags, box=(lo, hi), source="gmsh")


def _int(text, rd):
    try:
        return int(text.split()[0])
    except ValueError as exc:
        raise MeshFormatError(f"expected an integer, got {text!r}", line=rd.lineno) from exc


def _expect_end(rd, marker):
    got = rd.next(marker)
    if got != marker:
        raise MeshFormatError(f"expected {marker}, got {got!r}", line=rd.lineno)
