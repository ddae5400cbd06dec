"""Triangular parent meshes and their agglomeration into polygonal elements.

Polygonal elements are stored as unions of parent triangles; faces are
maximal straight pieces of the boundary between two elements (or between an
element and the outside), each remembering the parent edges it covers.
"""

from __future__ import annotations

import dataclasses
import logging
import warnings
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

log = logging.getLogger(__name__)

TRI_HEADER = "polyprion-tri v1"
PART_HEADER = "polyprion-part v1"


class MaterialLabel(IntEnum):
    GREY = 0
    WHITE = 1


class MeshError(ValueError):
    pass


class MeshFormatError(MeshError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class TriMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    tri_label: np.ndarray
    tri_axon: np.ndarray

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def vertices(self):
        """Triangle vertex coordinates, shape (n_triangles, 3, 2)."""
        return self.nodes[self.triangles]

    @cached_property
    def signed_areas(self):
        v = self.vertices
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self):
        return np.abs(self.signed_areas)

    @cached_property
    def centroids(self):
        return self.vertices.mean(axis=1)

    @cached_property
    def _edge_tables(self):
        local = np.array([[0, 1], [1, 2], [2, 0]])
        directed = self.triangles[:, local].reshape(-1, 2)
        key = np.sort(directed, axis=1)
        edges, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.ravel()
        tri_edges = inverse.reshape(-1, 3)
        edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
        owner = np.repeat(np.arange(self.n_triangles), 3)
        order = np.argsort(inverse, kind="stable")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        first = order[starts]
        edge_tris[:, 0] = owner[first]
        two = counts >= 2
        edge_tris[two, 1] = owner[order[starts[two] + 1]]
        return edges, tri_edges, edge_tris, counts

    @property
    def edges(self):
        """Unique undirected edges as sorted node pairs."""
        return self._edge_tables[0]

    @property
    def tri_edges(self):
        return self._edge_tables[1]

    @property
    def edge_tris(self):
        """Triangles adjacent to each edge; second column is -1 on the boundary."""
        return self._edge_tables[2]

    @cached_property
    def adjacency(self):
        """Edge-sharing triangle graph, weighted by centroid distance."""
        et = self.edge_tris
        inner = et[:, 1] >= 0
        a, b = et[inner, 0], et[inner, 1]
        d = np.linalg.norm(self.centroids[a] - self.centroids[b], axis=1)
        d = np.maximum(d, 1e-300)
        n = self.n_triangles
        g = sparse.coo_matrix((np.concatenate([d, d]), (np.concatenate([a, b]), np.concatenate([b, a]))), shape=(n, n))
        return g.tocsr()

    @property
    def measure(self):
        return float(self.areas.sum())


def validate_trimesh(nodes, triangles, tri_label, tri_axon, *, source="<mesh>"):
    """Check the TriMesh invariants and return a validated mesh.

    Clockwise triangles are repaired by swapping two indices (with a warning).
    """
    nodes = np.ascontiguousarray(nodes, dtype=float).reshape(-1, 2)
    triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    tri_label = np.asarray(tri_label, dtype=np.int8).ravel()
    tri_axon = np.array(tri_axon, dtype=float).reshape(-1, 2)
    n_tri = len(triangles)
    if len(tri_label) != n_tri or len(tri_axon) != n_tri:
        raise MeshError(f"{source}: per-triangle data length mismatch")
    if n_tri == 0:
        raise MeshError(f"{source}: mesh has no triangles")
    bad = np.flatnonzero((triangles < 0) | (triangles >= len(nodes)))
    if len(bad):
        t = bad[0] // 3
        raise MeshError(f"{source}: triangle {t} references node {triangles.flat[bad[0]]} out of range")
    bad = np.flatnonzero(~np.isin(tri_label, [MaterialLabel.GREY, MaterialLabel.WHITE]))
    if len(bad):
        raise MeshError(f"{source}: triangle {bad[0]} has invalid label {tri_label[bad[0]]}")
    v = nodes[triangles]
    e1, e2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
    sa = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = np.maximum(np.sum(e1**2, axis=1), np.sum(e2**2, axis=1))
    degenerate = np.flatnonzero(np.abs(sa) <= 1e-14 * scale)
    if len(degenerate):
        raise MeshError(f"{source}: triangle {degenerate[0]} is degenerate")
    cw = np.flatnonzero(sa < 0)
    if len(cw):
        warnings.warn(f"{source}: {len(cw)} clockwise triangle(s) reoriented (first: {cw[0]})", stacklevel=2)
        triangles[cw] = triangles[cw][:, [0, 2, 1]]
    norms = np.linalg.norm(tri_axon, axis=1)
    nonzero = norms > 1e-12
    off = np.flatnonzero(nonzero & (np.abs(norms - 1.0) > 1e-3))
    if len(off):
        raise MeshError(f"{source}: triangle {off[0]} axon direction is not unit length (|a|={norms[off[0]]:.6g})")
    tri_axon[nonzero] /= norms[nonzero, None]
    tri_axon[~nonzero] = 0.0
    mesh = TriMesh(nodes, triangles, tri_label, tri_axon)
    counts = mesh._edge_tables[3]
    if np.any(counts > 2):
        e = np.flatnonzero(counts > 2)[0]
        raise MeshError(f"{source}: non-conforming mesh, edge {tuple(mesh.edges[e])} shared by {counts[e]} triangles")
    # the same directed edge twice means a flipped neighbour
    local = np.array([[0, 1], [1, 2], [2, 0]])
    directed = mesh.triangles[:, local].reshape(-1, 2)
    if len(np.unique(directed, axis=0)) != len(directed):
        raise MeshError(f"{source}: overlapping triangles (a directed edge appears twice)")
    return mesh


def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def load_trimesh(path) -> TriMesh:
    lines = _data_lines(path)

    def take(what):
        try:
            return next(lines)
        except StopIteration:
            raise MeshFormatError(path, "EOF", f"unexpected end of file, expected {what}") from None

    lineno, header = take("header")
    if header != TRI_HEADER:
        raise MeshFormatError(path, lineno, f"expected header {TRI_HEADER!r}, got {header!r}")

    def count(what):
        lineno, line = take(what)
        try:
            n = int(line)
        except ValueError:
            raise MeshFormatError(path, lineno, f"expected {what}, got {line!r}") from None
        if n < 0:
            raise MeshFormatError(path, lineno, f"negative {what}")
        return n

    n_nodes = count("node count")
    nodes = np.empty((n_nodes, 2))
    for i in range(n_nodes):
        lineno, line = take("node coordinates")
        parts = line.split()
        if len(parts) != 2:
            raise MeshFormatError(path, lineno, f"expected 'x y', got {line!r}")
        try:
            nodes[i] = [float(p) for p in parts]
        except ValueError:
            raise MeshFormatError(path, lineno, f"bad coordinate in {line!r}") from None
    n_tri = count("triangle count")
    tris = np.empty((n_tri, 3), dtype=np.int64)
    labels = np.empty(n_tri, dtype=np.int8)
    axons = np.empty((n_tri, 2))
    for t in range(n_tri):
        lineno, line = take("triangle record")
        parts = line.split()
        if len(parts) != 6:
            raise MeshFormatError(path, lineno, f"expected 'i j k label ax ay', got {line!r}")
        try:
            tris[t] = [int(p) for p in parts[:3]]
            labels[t] = int(parts[3])
            axons[t] = [float(p) for p in parts[4:]]
        except ValueError:
            raise MeshFormatError(path, lineno, f"bad triangle record {line!r}") from None
    extra = next(lines, None)
    if extra is not None:
        raise MeshFormatError(path, extra[0], "trailing data after last triangle")
    return validate_trimesh(nodes, tris, labels, axons, source=str(path))


def write_trimesh(tri: TriMesh, path):
    with open(path, "w") as fh:
        fh.write(f"{TRI_HEADER}\n{tri.n_nodes}\n")
        for x, y in tri.nodes.tolist():
            fh.write(f"{x!r} {y!r}\n")
        fh.write(f"{tri.n_triangles}\n")
        for (i, j, k), lab, (ax, ay) in zip(tri.triangles, tri.tri_label, tri.tri_axon):
            fh.write(f"{i} {j} {k} {int(lab)} {float(ax)!r} {float(ay)!r}\n")


@dataclass(frozen=True, eq=False)
class Face:
    """A straight interface piece; `minus` is -1 on the domain boundary."""

    endpoints: np.ndarray
    normal: np.ndarray
    plus: int
    minus: int
    length: float
    segments: np.ndarray

    @property
    def is_boundary(self):
        return self.minus < 0


@dataclass(frozen=True, eq=False)
class PolyMesh:
    tri: TriMesh
    elem_of_tri: np.ndarray
    elements: tuple
    elem_label: np.ndarray
    elem_diameter: np.ndarray
    elem_measure: np.ndarray
    interior_faces: tuple = ()
    boundary_faces: tuple = ()
    advisories: tuple = field(default=())

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def measure(self):
        return float(self.elem_measure.sum())

    def element_vertices(self, k):
        return self.tri.vertices[self.elements[k]]

    @cached_property
    def interior_edges(self):
        """Flattened parent edges of all interior faces.

        Returns (segments (E,2,2), plus (E,), minus (E,), normal (E,2)).
        """
        return _flatten_faces(self.interior_faces)

    @cached_property
    def boundary_edges(self):
        return _flatten_faces(self.boundary_faces)

    @cached_property
    def neighbours(self):
        pairs = {(f.plus, f.minus) for f in self.interior_faces}
        out = [set() for _ in range(self.n_elements)]
        for a, b in pairs:
            out[a].add(b)
            out[b].add(a)
        return [sorted(s) for s in out]

    def canonical_bytes(self):
        """Stable serialization used for determinism checks."""
        parts = [self.elem_of_tri.astype("<i8").tobytes(), self.elem_label.astype("<i1").tobytes(),
                 self.elem_diameter.astype("<f8").tobytes(), self.elem_measure.astype("<f8").tobytes()]
        for f in self.interior_faces + self.boundary_faces:
            parts.append(np.asarray([f.plus, f.minus], dtype="<i8").tobytes())
            parts.append(f.segments.astype("<f8").tobytes())
        return b"".join(parts)


def _flatten_faces(faces):
    if not faces:
        return np.zeros((0, 2, 2)), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 2))
    segs = np.concatenate([f.segments for f in faces])
    counts = [len(f.segments) for f in faces]
    plus = np.repeat([f.plus for f in faces], counts)
    minus = np.repeat([f.minus for f in faces], counts)
    normal = np.repeat(np.array([f.normal for f in faces]), counts, axis=0)
    return segs, plus, minus, normal


def _diameter(points):
    if len(points) > 64:
        try:
            points = points[ConvexHull(points).vertices]
        except Exception:  # collinear or too few points
            pass
    if len(points) < 2:
        return 0.0
    return float(pdist(points).max())


def _split_disconnected(tri: TriMesh, assignment):
    """Relabel so every part is edge-connected; ids ordered canonically."""
    et = tri.edge_tris
    inner = et[:, 1] >= 0
    a, b = et[inner, 0], et[inner, 1]
    same = assignment[a] == assignment[b]
    n = tri.n_triangles
    g = sparse.coo_matrix((np.ones(same.sum()), (a[same], b[same])), shape=(n, n))
    n_comp, comp = csgraph.connected_components(g, directed=False)
    # canonical order: by smallest triangle index in each part
    first = np.full(n_comp, n, dtype=np.int64)
    np.minimum.at(first, comp, np.arange(n))
    rank = np.empty(n_comp, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(n_comp)
    return rank[comp], n_comp


def _build_polymesh(tri: TriMesh, elem_of_tri, advisories=()):
    elem_of_tri = np.asarray(elem_of_tri, dtype=np.int64)
    n_elem = int(elem_of_tri.max()) + 1
    order = np.argsort(elem_of_tri, kind="stable")
    bounds = np.searchsorted(elem_of_tri[order], np.arange(n_elem + 1))
    elements = tuple(order[bounds[k]:bounds[k + 1]] for k in range(n_elem))
    areas = tri.areas
    measure = np.array([areas[e].sum() for e in elements])
    labels = np.empty(n_elem, dtype=np.int8)
    advisories = list(advisories)
    for k, e in enumerate(elements):
        lab = tri.tri_label[e]
        white = areas[e][lab == MaterialLabel.WHITE].sum()
        labels[k] = MaterialLabel.WHITE if white > 0.5 * measure[k] else MaterialLabel.GREY
        if np.any(lab != lab[0]):
            advisories.append(f"element {k} mixes grey and white triangles")
    diam = np.array([_diameter(tri.nodes[np.unique(tri.triangles[e])]) for e in elements])
    poly = PolyMesh(tri, elem_of_tri, elements, labels, diam, measure, advisories=tuple(advisories))
    return build_faces(poly)


def build_faces(poly: PolyMesh) -> PolyMesh:
    """Populate interior and boundary faces from the parent-mesh edges."""
    tri = poly.tri
    et = tri.edge_tris
    eot = poly.elem_of_tri
    boundary = et[:, 1] < 0
    ea = eot[et[:, 0]]
    eb = np.where(boundary, -1, eot[np.maximum(et[:, 1], 0)])
    keep = boundary | (ea != eb)
    edges_idx = np.flatnonzero(keep)

    # direct each kept edge counterclockwise with respect to the "plus" side
    plus = np.where(boundary, ea, np.minimum(ea, eb))
    minus = np.where(boundary, -1, np.maximum(ea, eb))
    plus_tri = np.where(boundary | (ea <= eb), et[:, 0], et[:, 1])
    faces_int, faces_bnd = [], []
    tris = tri.triangles
    groups = {}
    for e in edges_idx:
        groups.setdefault((int(plus[e]), int(minus[e])), []).append(e)

    for (kp, km) in sorted(groups, key=lambda pm: (pm[1] < 0, pm)):
        elist = groups[(kp, km)]
        dir_edges = []
        for e in elist:
            t = tris[plus_tri[e]]
            i, j = tri.edges[e]
            # find ccw orientation of (i, j) inside the plus triangle
            pos = {int(n): s for s, n in enumerate(t)}
            if (pos[int(i)] + 1) % 3 == pos[int(j)]:
                dir_edges.append((int(i), int(j)))
            else:
                dir_edges.append((int(j), int(i)))
        for chain in _collinear_chains(tri.nodes, dir_edges):
            segs = tri.nodes[np.array(chain)]
            d = segs[0, 1] - segs[0, 0]
            length_each = np.hypot(*(segs[:, 1] - segs[:, 0]).T)
            n = np.array([d[1], -d[0]]) / np.hypot(*d)
            face = Face(np.array([segs[0, 0], segs[-1, 1]]), n, kp, km, float(length_each.sum()), segs)
            (faces_bnd if km < 0 else faces_int).append(face)
    return dataclasses.replace(poly, interior_faces=tuple(faces_int), boundary_faces=tuple(faces_bnd))


def _collinear_chains(nodes, dir_edges):
    """Group directed edges into maximal straight chains, ordered head to tail."""
    starts = {}
    ends = {}
    for idx, (i, j) in enumerate(dir_edges):
        starts.setdefault(i, []).append(idx)
        ends.setdefault(j, []).append(idx)

    def direction(idx):
        i, j = dir_edges[idx]
        d = nodes[j] - nodes[i]
        return d / np.hypot(*d)

    def successor(idx):
        j = dir_edges[idx][1]
        nxt = starts.get(j, [])
        if len(nxt) != 1 or len(ends.get(j, [])) != 1:
            return None
        d0, d1 = direction(idx), direction(nxt[0])
        if abs(d0[0] * d1[1] - d0[1] * d1[0]) < 1e-12 and d0 @ d1 > 0:
            return nxt[0]
        return None

    succ = {idx: successor(idx) for idx in range(len(dir_edges))}
    has_pred = {s for s in succ.values() if s is not None}
    used = set()
    chains = []
    for idx in range(len(dir_edges)):
        if idx in has_pred or idx in used:
            continue
        chain = []
        cur = idx
        while cur is not None and cur not in used:
            used.add(cur)
            chain.append(dir_edges[cur])
            cur = succ[cur]
        chains.append(chain)
    # closed collinear loops cannot happen; any leftovers are isolated cycles
    for idx in range(len(dir_edges)):
        if idx not in used:
            used.add(idx)
            chains.append([dir_edges[idx]])
    return chains


def identity_polymesh(tri: TriMesh) -> PolyMesh:
    return _build_polymesh(tri, np.arange(tri.n_triangles))


def load_partition(tri: TriMesh, path) -> PolyMesh:
    """Build a PolyMesh from a partition file (one element id per triangle)."""
    lines = _data_lines(path)
    first = next(lines, None)
    if first is None or first[1] != PART_HEADER:
        raise MeshFormatError(path, first[0] if first else 1, f"expected header {PART_HEADER!r}")
    ids = []
    for lineno, line in lines:
        for tok in line.split():
            try:
                ids.append(int(tok))
            except ValueError:
                raise MeshFormatError(path, lineno, f"bad element id {tok!r}") from None
    return partition_to_polymesh(tri, np.array(ids, dtype=np.int64), source=str(path))


def partition_to_polymesh(tri: TriMesh, ids, source="<partition>") -> PolyMesh:
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids) != tri.n_triangles:
        raise MeshError(f"{source}: partition has {len(ids)} entries for {tri.n_triangles} triangles")
    if np.any(ids < 0):
        raise MeshError(f"{source}: negative element id")
    _, dense = np.unique(ids, return_inverse=True)
    n_given = int(dense.max()) + 1
    assignment, n_parts = _split_disconnected(tri, dense.ravel())
    advisories = []
    if n_parts != n_given:
        msg = f"{source}: {n_parts - n_given} disconnected part(s) split into separate elements"
        warnings.warn(msg, stacklevel=2)
        advisories.append(msg)
    return _build_polymesh(tri, assignment, advisories)


def write_partition(poly: PolyMesh, path):
    with open(path, "w") as fh:
        fh.write(f"{PART_HEADER}\n")
        fh.write("\n".join(str(int(i)) for i in poly.elem_of_tri))
        fh.write("\n")


def _farthest_points(points, weights_first, k):
    chosen = [weights_first]
    d = np.linalg.norm(points - points[weights_first], axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        d = np.minimum(d, np.linalg.norm(points - points[nxt], axis=1))
    return np.array(chosen, dtype=np.int64)


def _allocate(sizes, weights, n_target):
    """Largest-remainder split of n_target over components (>= 1, <= size each)."""
    weights = np.asarray(weights, dtype=float)
    raw = n_target * weights / weights.sum()
    alloc = np.maximum(np.floor(raw).astype(np.int64), 1)
    alloc = np.minimum(alloc, sizes)
    rem = raw - np.floor(raw)
    while alloc.sum() < n_target:
        room = alloc < sizes
        if not room.any():
            break
        cand = np.flatnonzero(room)
        pick = cand[np.argmax(rem[cand] - (alloc[cand] - np.floor(raw[cand])))]
        alloc[pick] += 1
        rem[pick] -= 1.0
    while alloc.sum() > n_target:
        cand = np.flatnonzero(alloc > 1)
        if not len(cand):
            break
        pick = cand[np.argmin(rem[cand] + (np.floor(raw[cand]) - alloc[cand]))]
        alloc[pick] -= 1
        rem[pick] += 1.0
    return alloc


def agglomerate(tri: TriMesh, n_target: int, preserve_labels: bool = True, seed: int = 0,
                lloyd_iterations: int = 6) -> PolyMesh:
    """Agglomerate triangles into about `n_target` connected polygonal elements.

    Seeds are placed by farthest-point sampling of triangle centroids and
    grown by multi-source Dijkstra on the triangle adjacency graph, followed
    by a few Lloyd-style reseeding passes.  With `preserve_labels` each
    material region is partitioned on its own.
    """
    n_tri = tri.n_triangles
    if not 1 <= n_target <= n_tri:
        raise MeshError(f"n_target={n_target} outside [1, {n_tri}]")
    if n_target == n_tri:
        return identity_polymesh(tri)

    graph = tri.adjacency
    if preserve_labels:
        g = graph.tocoo()
        same = tri.tri_label[g.row] == tri.tri_label[g.col]
        region_graph = sparse.coo_matrix((g.data[same], (g.row[same], g.col[same])), shape=graph.shape).tocsr()
    else:
        region_graph = graph
    n_comp, comp = csgraph.connected_components(region_graph, directed=False)
    areas = tri.areas
    comp_area = np.bincount(comp, weights=areas, minlength=n_comp)
    comp_size = np.bincount(comp, minlength=n_comp)
    alloc = _allocate(comp_size, comp_area, n_target)

    rng = np.random.default_rng(seed)
    assignment = np.empty(n_tri, dtype=np.int64)
    next_id = 0
    centroids = tri.centroids
    for c in range(n_comp):
        idx = np.flatnonzero(comp == c)
        k = int(alloc[c])
        if k == 1:
            assignment[idx] = next_id
            next_id += 1
            continue
        sub = region_graph[idx][:, idx]
        pts = centroids[idx]
        seeds = _farthest_points(pts, int(rng.integers(len(idx))), k)
        for it in range(lloyd_iterations + 1):
            _, _, sources = csgraph.dijkstra(sub, directed=False, indices=seeds, min_only=True,
                                             return_predecessors=True)
            slot = np.full(len(idx), -1, dtype=np.int64)
            slot[seeds] = np.arange(k)
            owner = slot[sources]
            if it == lloyd_iterations:
                break
            w = areas[idx]
            cx = np.bincount(owner, weights=w * pts[:, 0], minlength=k)
            cy = np.bincount(owner, weights=w * pts[:, 1], minlength=k)
            wt = np.bincount(owner, weights=w, minlength=k)
            centre = np.column_stack([cx, cy]) / wt[:, None]
            dist = np.linalg.norm(pts - centre[owner], axis=1)
            new_seeds = seeds.copy()
            for r in range(k):
                members = np.flatnonzero(owner == r)
                new_seeds[r] = members[np.argmin(dist[members])]
            if np.array_equal(new_seeds, seeds):
                break
            seeds = new_seeds
        assignment[idx] = next_id + owner
        next_id += k

    final, n_parts = _split_disconnected(tri, assignment)
    advisories = []
    if n_parts > 1.2 * n_target:
        msg = (f"label-preserving agglomeration produced {n_parts} elements for n_target={n_target} "
               f"({n_comp} disconnected material regions)")
        warnings.warn(msg, stacklevel=2)
        advisories.append(msg)
    log.info("agglomerated %d triangles into %d elements", n_tri, n_parts)
    return _build_polymesh(tri, final, advisories)


def closure_defect(poly: PolyMesh):
    """Per-element |sum_F n |F|| divided by the element perimeter."""
    acc = np.zeros((poly.n_elements, 2))
    perim = np.zeros(poly.n_elements)
    for f in poly.interior_faces:
        acc[f.plus] += f.normal * f.length
        acc[f.minus] -= f.normal * f.length
        perim[f.plus] += f.length
        perim[f.minus] += f.length
    for f in poly.boundary_faces:
        acc[f.plus] += f.normal * f.length
        perim[f.plus] += f.length
    return np.linalg.norm(acc, axis=1) / perim


def summary(poly: PolyMesh) -> dict:
    labels_pure = all(np.all(poly.tri.tri_label[e] == poly.tri.tri_label[e][0]) for e in poly.elements)
    return {
        "n_triangles": poly.tri.n_triangles,
        "n_elements": poly.n_elements,
        "n_white": int(np.sum(poly.elem_label == MaterialLabel.WHITE)),
        "n_grey": int(np.sum(poly.elem_label == MaterialLabel.GREY)),
        "labels_pure": bool(labels_pure),
        "h_min": float(poly.elem_diameter.min()),
        "h_max": float(poly.elem_diameter.max()),
        "n_interior_faces": len(poly.interior_faces),
        "n_boundary_faces": len(poly.boundary_faces),
        "measure": poly.measure,
        "advisories": list(poly.advisories),
    }


__all__ = [
    "MaterialLabel", "MeshError", "MeshFormatError", "TriMesh", "PolyMesh", "Face",
    "validate_trimesh", "load_trimesh", "write_trimesh", "agglomerate", "load_partition",
    "partition_to_polymesh", "write_partition", "identity_polymesh", "build_faces",
    "closure_defect", "summary",
]
