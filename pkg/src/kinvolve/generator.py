"""Structured box-mesh generator for hex / tet / prism / mixed / hybrid patterns.

All patterns tile an axis-aligned box cube by cube:

* ``hex``     one hexahedron per cube;
* ``tet6``    Kuhn subdivision, six tetrahedra per cube (conforming);
* ``prism2``  two prisms per cube (extruded along z);
* ``pyr6``    six pyramids per cube sharing a center vertex;
* ``mixed4``  slabs of hex / pyramid-transition / tet / x-prism / transition,
              all four element kinds, conforming and periodic-capable in x
              when nx is a multiple of 5;
* ``hybrid``  hex slab + pyramid/tet transition + tet slab along x (the
              Riemann-problem style mixed mesh).

An optional smooth vertex warp produces non-planar faces; ``warp_mode``
'periodic' keeps periodic sides identical, 'interior' keeps boundary
vertices fixed.
"""

from itertools import permutations

import numpy as np

from . import geometry as geo
from .errors import ConfigError, MeshFormatError
from .rawmesh import RawMesh, pack_cells

SIDE_NAMES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")

# Vertex permutations that flip a cell's orientation without changing its kind.
_FLIP = {
    geo.TET: (0, 2, 1, 3),
    geo.PYRAMID: (0, 3, 2, 1, 4),
    geo.PRISM: (0, 2, 1, 3, 5, 4),
    geo.HEX: (4, 5, 6, 7, 0, 1, 2, 3),
}

# Cube faces as (axis, side, cyclic corner offsets); offsets are (di,dj,dk).
_CUBE_FACES = (
    (0, 0, ((0, 0, 0), (0, 1, 0), (0, 1, 1), (0, 0, 1))),
    (0, 1, ((1, 0, 0), (1, 0, 1), (1, 1, 1), (1, 1, 0))),
    (1, 0, ((0, 0, 0), (0, 0, 1), (1, 0, 1), (1, 0, 0))),
    (1, 1, ((0, 1, 0), (1, 1, 0), (1, 1, 1), (0, 1, 1))),
    (2, 0, ((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0))),
    (2, 1, ((0, 0, 1), (0, 1, 1), (1, 1, 1), (1, 0, 1))),
)


def _axis_coords(n, lo, hi, grading):
    xi = np.linspace(0.0, 1.0, n + 1)
    if grading == "uniform":
        s = xi
    elif grading == "cosine":
        s = 0.5 * (1.0 - np.cos(np.pi * xi))
    else:
        raise ConfigError(f"unknown grading {grading!r}")
    return lo + (hi - lo) * s


def _orient(kind, vids, verts):
    """Return vids reordered so the trilinear map has positive volume."""
    hexv = verts[np.asarray(vids)[list(geo.DEGENERATE_HEX_LABELS[kind])]]
    _, jac = geo.trilinear_map(hexv, 0.0, 0.0, 0.0)
    if np.linalg.det(jac) < 0.0:
        return [vids[p] for p in _FLIP[kind]]
    return list(vids)


def _kuhn_tets(corner):
    """Six tetrahedra sharing the (0,0,0)-(1,1,1) diagonal of one cube."""
    tets = []
    for perm in permutations(range(3)):
        v = [0, 0, 0]
        path = [tuple(v)]
        for ax in perm[:2]:
            v[ax] = 1
            path.append(tuple(v))
        path.append((1, 1, 1))
        tets.append([corner[p] for p in path])
    return tets


def _split_pyramid(base, apex, first_corner):
    """Two tets from a pyramid, splitting the base along the diagonal at
    ``first_corner`` (an index into the cyclic base list)."""
    b = base[first_corner:] + base[:first_corner]
    return [b[0], b[1], b[2], apex], [b[0], b[2], b[3], apex]


class _Builder:
    def __init__(self, nx, ny, nz, xs, ys, zs):
        self.n = (nx, ny, nz)
        grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1)
        self.verts = grid.reshape(-1, 3)
        self.lattice = np.stack(np.meshgrid(np.arange(nx + 1), np.arange(ny + 1),
                                            np.arange(nz + 1), indexing="ij"),
                                axis=-1).reshape(-1, 3)
        self._extra = []
        self.cells = []

    def vid(self, i, j, k):
        _, ny, nz = self.n
        return (i * (ny + 1) + j) * (nz + 1) + k

    def corner_map(self, i, j, k):
        return {(a, b, c): self.vid(i + a, j + b, k + c)
                for a in (0, 1) for b in (0, 1) for c in (0, 1)}

    def add_center(self, i, j, k):
        lo = self.verts[self.vid(i, j, k)]
        hi = self.verts[self.vid(i + 1, j + 1, k + 1)]
        self._extra.append(0.5 * (lo + hi))
        return len(self.verts) + len(self._extra) - 1

    def add(self, kind, vids):
        self.cells.append((kind, vids))

    def finish(self):
        if self._extra:
            self.verts = np.vstack([self.verts, np.asarray(self._extra)])
            pad = np.full((len(self._extra), 3), -1, dtype=np.int64)
            self.lattice = np.vstack([self.lattice, pad])
        self.cells = [( k, _orient(k, v, self.verts)) for k, v in self.cells]
        return self


def _emit_hex(b, i, j, k):
    c = b.corner_map(i, j, k)
    b.add(geo.HEX, [c[0, 0, 0], c[1, 0, 0], c[1, 1, 0], c[0, 1, 0],
                    c[0, 0, 1], c[1, 0, 1], c[1, 1, 1], c[0, 1, 1]])


def _emit_tet6(b, i, j, k):
    c = b.corner_map(i, j, k)
    for t in _kuhn_tets(c):
        b.add(geo.TET, t)


def _emit_prism2(b, i, j, k, axis):
    c = b.corner_map(i, j, k)
    if axis == 2:
        tri_a = [(0, 0), (1, 0), (1, 1)]
        tri_b = [(0, 0), (1, 1), (0, 1)]
        mk = lambda xy, s: c[xy[0], xy[1], s]
    else:  # axis == 0, cross-section in (y, z)
        tri_a = [(0, 0), (1, 0), (1, 1)]
        tri_b = [(0, 0), (1, 1), (0, 1)]
        mk = lambda yz, s: c[s, yz[0], yz[1]]
    for tri in (tri_a, tri_b):
        b.add(geo.PRISM, [mk(p, 0) for p in tri] + [mk(p, 1) for p in tri])


def _emit_pyr6(b, i, j, k, split_side=None):
    """Six pyramids with a center apex; optionally split the pyramid on
    ``split_side`` ('xmin'/'xmax') into two tets along the Kuhn diagonal."""
    c = b.corner_map(i, j, k)
    m = b.add_center(i, j, k)
    for axis, side, offsets in _CUBE_FACES:
        base = [c[o] for o in offsets]
        name = SIDE_NAMES[2 * axis + side]
        if split_side is not None and name == split_side:
            # Diagonal must join the (low,low) and (high,high) corners of the
            # face's transverse axes to match the Kuhn face triangulation.
            lows = [o for o in offsets]
            tr = [ax for ax in range(3) if ax != axis]
            want_lo = min(range(4), key=lambda q: lows[q][tr[0]] + 2 * lows[q][tr[1]])
            t1, t2 = _split_pyramid(base, m, want_lo)
            b.add(geo.TET, t1)
            b.add(geo.TET, t2)
        else:
            b.add(geo.PYRAMID, base + [m])


_PATTERNS = ("hex", "tet6", "prism2", "pyr6", "mixed4", "hybrid")


def generate_box(pattern, n, bounds=((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),
                 grading=("uniform", "uniform", "uniform"),
                 warp=0.0, warp_mode="periodic", seed=0, hex_fraction=0.5):
    """Generate a box RawMesh; see the module docstring for patterns."""
    if pattern not in _PATTERNS:
        raise ConfigError(f"unknown mesh pattern {pattern!r}")
    nx, ny, nz = (int(v) for v in n)
    if min(nx, ny, nz) < 1:
        raise ConfigError("cell counts must be positive")
    if pattern == "mixed4" and nx % 5 != 0:
        raise ConfigError("mixed4 pattern needs nx divisible by 5")
    (x0, y0, z0), (x1, y1, z1) = bounds
    xs = _axis_coords(nx, x0, x1, grading[0])
    ys = _axis_coords(ny, y0, y1, grading[1])
    zs = _axis_coords(nz, z0, z1, grading[2])
    b = _Builder(nx, ny, nz, xs, ys, zs)

    split_i = max(1, int(round(hex_fraction * nx)))
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if pattern == "hex":
                    _emit_hex(b, i, j, k)
                elif pattern == "tet6":
                    _emit_tet6(b, i, j, k)
                elif pattern == "prism2":
                    _emit_prism2(b, i, j, k, axis=2)
                elif pattern == "pyr6":
                    _emit_pyr6(b, i, j, k)
                elif pattern == "mixed4":
                    kind = i % 5
                    if kind == 0:
                        _emit_hex(b, i, j, k)
                    elif kind == 1:
                        _emit_pyr6(b, i, j, k, split_side="xmax")
                    elif kind == 2:
                        _emit_tet6(b, i, j, k)
                    elif kind == 3:
                        _emit_prism2(b, i, j, k, axis=0)
                    else:
                        _emit_pyr6(b, i, j, k, split_side="xmin")
                elif pattern == "hybrid":
                    if i < split_i:
                        _emit_hex(b, i, j, k)
                    elif i == split_i:
                        _emit_pyr6(b, i, j, k, split_side="xmax")
                    else:
                        _emit_tet6(b, i, j, k)
    b.finish()

    verts = b.verts
    if warp > 0.0:
        verts = _warp_vertices(verts, (x0, y0, z0), (x1, y1, z1),
                               (nx, ny, nz), warp, warp_mode, seed)

    boundary_tags = _tag_boundaries(b)
    kinds, cell_verts = pack_cells(b.cells)
    return RawMesh(verts=verts, cell_kinds=kinds, cell_verts=cell_verts,
                   boundary_tags=boundary_tags,
                   box=(np.array([x0, y0, z0]), np.array([x1, y1, z1])),
                   source=f"generate:{pattern}")


def _warp_vertices(verts, lo, hi, n, warp, warp_mode, seed):
    rng = np.random.default_rng(seed)
    lo = np.asarray(lo, dtype=float)
    span = np.asarray(hi, dtype=float) - lo
    h = np.min(span / np.asarray(n, dtype=float))
    xi = (verts - lo) / span  # normalized [0,1]^3 coordinates
    out = verts.copy()
    for d in range(3):
        if warp_mode == "periodic":
            phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
            fac = np.sin(2.0 * np.pi * xi + phase)
            # Keep the field periodic: a phase-shifted sine of the full period
            # takes identical values on opposite box sides.
            bump = fac[:, 0] * fac[:, 1] * fac[:, 2]
        elif warp_mode == "interior":
            bump = np.sin(np.pi * xi[:, 0]) * np.sin(np.pi * xi[:, 1]) * np.sin(np.pi * xi[:, 2])
            bump *= np.cos(2.0 * np.pi * xi[:, (d + 1) % 3])
        else:
            raise ConfigError(f"unknown warp mode {warp_mode!r}")
        out[:, d] += warp * h * bump
    return out


def _tag_boundaries(b):
    incidence = {}
    for kind, vids in b.cells:
        varr = list(vids)
        for face in geo.CANONICAL_FACES[kind]:
            key = tuple(sorted(varr[m] for m in face))
            incidence[key] = incidence.get(key, 0) + 1
    nx, ny, nz = b.n
    limits = (0, nx, 0, ny, 0, nz)
    tags = {}
    for key, count in incidence.items():
        if count != 1:
            continue
        lat = b.lattice[list(key)]
        if np.any(lat < 0):
            raise MeshFormatError("generator produced a boundary face with a center vertex")
        for s, name in enumerate(SIDE_NAMES):
            axis, side = divmod(s, 2)[0], s % 2
            if np.all(lat[:, axis] == limits[2 * axis + side]):
                tags[key] = name
                break
        else:
            raise MeshFormatError("boundary face not on any box side")
    return tags


_RECIPE_KEYS = {"pattern", "nx", "ny", "nz", "x0", "x1", "y0", "y1", "z0", "z1",
                "grading", "warp", "warp_mode", "seed", "hex_fraction"}


def parse_recipe(text):
    """Parse the native 'boxmesh' recipe format into a RawMesh.

    Line 1 is the literal ``boxmesh``; remaining non-blank lines are
    ``key = value`` pairs using the generate_box parameters.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0].split()[0] != "boxmesh":
        raise MeshFormatError("native mesh recipe must start with 'boxmesh'", line=1)
    kv = {}
    for idx, ln in enumerate(lines[1:], start=2):
        if "=" not in ln:
            raise MeshFormatError(f"expected key = value, got {ln!r}", line=idx)
        key, val = (part.strip() for part in ln.split("=", 1))
        if key not in _RECIPE_KEYS:
            raise MeshFormatError(f"unknown recipe key {key!r}", line=idx)
        kv[key] = val
    pattern = kv.get("pattern", "hex")
    n = (int(kv.get("nx", 1)), int(kv.get("ny", 1)), int(kv.get("nz", 1)))
    bounds = ((float(kv.get("x0", 0.0)), float(kv.get("y0", 0.0)), float(kv.get("z0", 0.0))),
              (float(kv.get("x1", 1.0)), float(kv.get("y1", 1.0)), float(kv.get("z1", 1.0))))
    grading = tuple((kv.get("grading", "uniform") + ",,").split(",")[:3])
    grading = tuple(g if g else "uniform" for g in grading)
    return generate_box(pattern, n, bounds=bounds, grading=grading,
                        warp=float(kv.get("warp", 0.0)),
                        warp_mode=kv.get("warp_mode", "periodic"),
                        seed=int(kv.get("seed", 0)),
                        hex_fraction=float(kv.get("hex_fraction", 0.5)))
