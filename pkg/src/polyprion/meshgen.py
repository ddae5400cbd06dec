"""Synthetic parent meshes: squares, strips and a brain-like sagittal slice.

The slice stands in for the segmented MRI mesh, which is not distributed
with this package.  It is a gyrified ellipse with a cortical grey band, a deep
grey nucleus, white matter in between and radially fanning fibre directions.
"""

import numpy as np
from scipy import ndimage

from .mesh import MaterialLabel, TriMesh, partition_to_polymesh, validate_trimesh


def _grid_triangles(nx, ny, keep=None, alternate=False):
    """Split kept grid cells into two counterclockwise triangles each."""
    if keep is None:
        keep = np.ones((nx, ny), dtype=bool)
    node = lambda i, j: i * (ny + 1) + j  # noqa: E731
    tris, cells = [], []
    for i, j in zip(*np.nonzero(keep)):
        a, b, c, d = node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)
        if alternate and (i + j) % 2:
            tris += [(a, b, d), (b, c, d)]
        else:
            tris += [(a, b, c), (a, c, d)]
        cells += [(i, j), (i, j)]
    return np.array(tris, dtype=np.int64), np.array(cells, dtype=np.int64)


def rectangle_trimesh(x0, x1, y0, y1, nx, ny, *, label=MaterialLabel.WHITE, axon=(0.0, 0.0), alternate=False):
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    tris, _ = _grid_triangles(nx, ny, alternate=alternate)
    n = len(tris)
    return validate_trimesh(nodes, tris, np.full(n, int(label)), np.tile(axon, (n, 1)))


def unit_square_trimesh(n, **kw):
    """n x n cells on the unit square, two triangles per cell."""
    return rectangle_trimesh(0.0, 1.0, 0.0, 1.0, n, n, **kw)


def two_triangle_square():
    return unit_square_trimesh(1)


def cell_partition(tri: TriMesh):
    """Element ids pairing the two triangles of each grid cell."""
    return np.arange(tri.n_triangles) // 2


def square_polymesh(n, **kw):
    """Unit square split into n x n quadrilateral elements (two triangles each)."""
    tri = unit_square_trimesh(n, **kw)
    return partition_to_polymesh(tri, cell_partition(tri))


def block_partition(nx, ny, bx, by):
    """Element ids grouping bx x by blocks of grid cells (rectangle meshes)."""
    i, j = np.divmod(np.arange(nx * ny), ny)
    cell = (i // bx) * (-(-ny // by)) + j // by
    return np.repeat(cell, 2)


def strip_trimesh(length, width, nx, ny, **kw):
    return rectangle_trimesh(0.0, length, 0.0, width, nx, ny, **kw)


def strip_polymesh(length, width, n_elements, refine=5, ny=2, **kw):
    """Strip of `n_elements` rectangular elements, each `refine` x `ny` parent cells."""
    nx = n_elements * refine
    tri = strip_trimesh(length, width, nx, ny, **kw)
    return partition_to_polymesh(tri, block_partition(nx, ny, refine, ny))


def _slice_level(X, Y, a, b):
    theta = np.arctan2(Y / b, X / a)
    r = np.hypot(X / a, Y / b)
    wiggle = 1.0 + 0.035 * np.sin(13 * theta) + 0.02 * np.sin(21 * theta + 1.0)
    # flattened base where the temporal lobe and brainstem would sit
    base = np.where(Y < -0.7 * b, 1.0 + 0.6 * ((-Y / b - 0.7) / 0.3) ** 2, 1.0)
    return r * base / wiggle - 1.0


def _removable(mask, i, j):
    """True if deleting cell (i, j) keeps its 4-neighbours 4-connected."""
    nx, ny = mask.shape

    def on(p, q):
        return 0 <= p < nx and 0 <= q < ny and mask[p, q]

    ring4 = [(i, j + 1), (i + 1, j), (i, j - 1), (i - 1, j)]
    corners = [(i + 1, j + 1), (i + 1, j - 1), (i - 1, j - 1), (i - 1, j + 1)]
    present = [on(*c) for c in ring4]
    if sum(present) == 0:
        return False
    links = sum(present[k] and present[(k + 1) % 4] and on(*corners[k]) for k in range(4))
    return sum(present) - links == 1


def brain_slice_trimesh(n_triangles=43402, semi_axes=(0.075, 0.055), cortex=0.0035,
                        nucleus=(0.0, -0.005, 0.012, 0.008)):
    """Brain-like sagittal slice (metres) with exactly `n_triangles` triangles.

    `nucleus` is (cx, cy, rx, ry) of a deep grey region.  White-matter axon
    directions fan out radially from the nucleus centre; grey matter carries
    a zero axon vector.
    """
    if n_triangles % 2:
        raise ValueError("structured slice meshes have an even triangle count")
    a, b = semi_axes
    n_cells = n_triangles // 2

    def mask_for(h):
        nx = int(np.ceil(2.3 * a / h))
        ny = int(np.ceil(2.3 * b / h))
        xs = (np.arange(nx) + 0.5 - nx / 2) * h
        ys = (np.arange(ny) + 0.5 - ny / 2) * h
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        level = _slice_level(X, Y, a, b)
        mask = level < 0
        lab, n = ndimage.label(mask)
        if n > 1:
            sizes = ndimage.sum(mask, lab, range(1, n + 1))
            mask = lab == 1 + int(np.argmax(sizes))
        return mask, level, X, Y

    area = np.pi * a * b
    lo, hi = 0.5 * np.sqrt(area / n_cells), 2.0 * np.sqrt(area / n_cells)
    for _ in range(60):
        h = 0.5 * (lo + hi)
        if mask_for(h)[0].sum() >= n_cells:
            lo = h
        else:
            hi = h
    h = lo
    mask, level, X, Y = mask_for(h)
    excess = int(mask.sum()) - n_cells
    order = np.argsort(-np.where(mask, level, -np.inf), axis=None, kind="stable")
    removed = 0
    while removed < excess:
        progress = False
        for flat in order:
            if removed >= excess:
                break
            i, j = np.unravel_index(flat, mask.shape)
            if mask[i, j] and _removable(mask, i, j):
                mask[i, j] = False
                removed += 1
                progress = True
        if not progress:
            raise RuntimeError("could not trim slice mesh to the requested size")

    nx, ny = mask.shape
    depth = ndimage.distance_transform_edt(np.pad(mask, 1))[1:-1, 1:-1] * h
    cx, cy, rx, ry = nucleus
    in_nucleus = ((X - cx) / rx) ** 2 + ((Y - cy) / ry) ** 2 < 1.0
    grey_cell = (depth < cortex + 0.5 * h) | in_nucleus

    tris, cells = _grid_triangles(nx, ny, keep=mask, alternate=True)
    x0 = X[0, 0] - 0.5 * h
    y0 = Y[0, 0] - 0.5 * h
    ii, jj = np.divmod(np.arange((nx + 1) * (ny + 1)), ny + 1)
    all_nodes = np.column_stack([x0 + ii * h, y0 + jj * h])
    used, tris = np.unique(tris, return_inverse=True)
    tris = tris.reshape(-1, 3)
    nodes = all_nodes[used]
    grey = grey_cell[cells[:, 0], cells[:, 1]]
    labels = np.where(grey, MaterialLabel.GREY, MaterialLabel.WHITE).astype(np.int8)
    cent = nodes[tris].mean(axis=1)
    d = cent - np.array([cx, cy])
    axon = d / np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
    axon[grey] = 0.0
    return validate_trimesh(nodes, tris, labels, axon, source="brain-slice")


def entorhinal_seed(semi_axes=(0.075, 0.055)):
    """A default seed centre on the medial temporal side of the slice."""
    a, b = semi_axes
    return (0.25 * a, -0.55 * b)
