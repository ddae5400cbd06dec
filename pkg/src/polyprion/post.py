"""Post-processing: point samples, activation times, observables and exports."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .femspace import DGSpace


@dataclass(frozen=True, eq=False)
class SampleSeries:
    """Values of one scalar field at fixed points over time.

    `values` has shape (n_times, n_points).  Points are parent-triangle
    barycenters; `weights` are the parent areas and `labels` their matter.
    """

    times: np.ndarray
    values: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape != (len(self.times), len(self.points)):
            raise ValueError("sample values must have shape (n_times, n_points)")

    def scaled(self, factor):
        return SampleSeries(self.times, self.values * factor, self.points, self.weights, self.labels)


def barycenter_samples(space: DGSpace, times, states) -> SampleSeries:
    """Sample a list of coefficient vectors at all parent barycenters."""
    tri = space.poly.tri
    values = np.array([space.sample_barycenters(u) for u in states]).reshape(len(states), tri.n_triangles)
    return SampleSeries(np.asarray(times, dtype=float), values, tri.centroids, tri.areas, tri.tri_label.copy())


@dataclass(frozen=True, eq=False)
class ActivationField:
    """First time each sample point exceeds `v_crit`; inf where it never does."""

    times: np.ndarray
    v_crit: float
    weights: np.ndarray
    labels: np.ndarray

    def activated(self):
        return np.isfinite(self.times)

    def fraction(self, mask=None):
        """Area fraction of activated points within `mask`."""
        mask = np.ones(len(self.times), dtype=bool) if mask is None else mask
        w = self.weights[mask]
        return float(w[np.isfinite(self.times[mask])].sum() / w.sum()) if w.sum() > 0 else 0.0

    def mean(self, mask=None):
        """Area-weighted mean over activated points within `mask` (nan if none)."""
        mask = np.ones(len(self.times), dtype=bool) if mask is None else mask
        ok = mask & np.isfinite(self.times)
        if not ok.any():
            return float("nan")
        return float(np.average(self.times[ok], weights=self.weights[ok]))


def activation_time(series: SampleSeries, v_crit: float) -> ActivationField:
    """First sampled time at which the value strictly exceeds v_crit."""
    if len(series.times) == 0:
        raise ValueError("activation time needs at least one sample")
    above = series.values > v_crit
    hit = above.any(axis=0)
    first = np.argmax(above, axis=0)
    t = np.where(hit, series.times[first], np.inf)
    return ActivationField(t, float(v_crit), series.weights, series.labels)


def rescale_and_diff(c, q, q_max):
    """c - q / q_max for matching sample (or coefficient) arrays."""
    c = np.asarray(c, dtype=float)
    q = np.asarray(q, dtype=float)
    if c.shape != q.shape:
        raise ValueError(f"mismatched fields: {c.shape} vs {q.shape}")
    qm = np.asarray(q_max, dtype=float)
    if np.any(qm <= 0):
        raise ValueError("q_max must be positive")
    return c - q / qm


def front_position(coords, values, threshold):
    """Furthest position along `coords` where the field exceeds threshold.

    Values sharing a coordinate are averaged; the crossing is linearly
    interpolated between the last bin above and the next one.  Returns nan
    when nothing is above threshold and inf when the whole range is.
    """
    xs, inv = np.unique(np.round(coords, 12), return_inverse=True)
    prof = np.bincount(inv, weights=values, minlength=len(xs)) / np.bincount(inv, minlength=len(xs))
    above = np.flatnonzero(prof > threshold)
    if not len(above):
        return np.nan
    j = above[-1]
    if j == len(xs) - 1:
        return np.inf
    return xs[j] + (prof[j] - threshold) / (prof[j] - prof[j + 1]) * (xs[j + 1] - xs[j])


def front_speed_estimate(series: SampleSeries, threshold, axis=0, window=None):
    """Least-squares speed of the threshold front along a coordinate axis.

    `window` = (t_start, t_end) restricts the fit; positions where the front
    is absent or has left the domain are dropped.
    """
    coords = series.points[:, axis]
    pos = np.array([front_position(coords, v, threshold) for v in series.values])
    t = series.times
    ok = np.isfinite(pos)
    if window is not None:
        ok &= (t >= window[0]) & (t <= window[1])
    if ok.sum() < 3:
        raise ValueError("front not observed at enough times to estimate a speed")
    slope, _ = np.polyfit(t[ok], pos[ok], 1)
    return float(slope)


@dataclass
class ObservableLog:
    """Column-oriented table of scalar observables, one row per sample time."""

    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def append(self, row: dict):
        if not self.columns:
            self.columns = list(row)
        elif list(row) != self.columns:
            raise ValueError("row keys differ from log columns")
        self.rows.append([float(row[c]) for c in self.columns])

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self):
        return len(self.rows)


def observables(space: DGSpace, M, t, fields: dict, thresholds: dict | None = None):
    """Row of observables: L2 norm, mass, barycenter min/max, activated area fraction."""
    row = {"time": t}
    one = space.constant_one
    tri = space.poly.tri
    for name, u in fields.items():
        Mu = M @ u
        row[f"{name}_l2"] = float(np.sqrt(max(u @ Mu, 0.0)))
        row[f"{name}_mass"] = float(one @ Mu)
        s = space.sample_barycenters(u)
        row[f"{name}_min"] = float(s.min())
        row[f"{name}_max"] = float(s.max())
        if thresholds and name in thresholds:
            row[f"{name}_active"] = float(tri.areas[s > thresholds[name]].sum() / tri.areas.sum())
    return row


def export_csv(log: ObservableLog, path):
    """Comma-separated table with a header; floats written with repr (round-trip exact)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(log.columns)
        for r in log.rows:
            w.writerow([repr(v) for v in r])


def read_csv(path) -> ObservableLog:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [[float(v) for v in r] for r in rd if r]
    return ObservableLog(header, rows)


def export_vtk(path, space: DGSpace, fields: dict, title="polyprion"):
    """Legacy ASCII unstructured grid on the parent triangulation.

    Point data are per-node averages of the element traces; cell data carry
    the element id, matter label and the barycenter value of each field.
    """
    poly = space.poly
    tri = poly.tri
    nodes = tri.nodes
    n_nodes, n_tri = len(nodes), tri.n_triangles
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n_nodes} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in nodes.tolist()]
    lines.append(f"CELLS {n_tri} {4 * n_tri}")
    lines += [f"3 {i} {j} {k}" for i, j, k in tri.triangles.tolist()]
    lines.append(f"CELL_TYPES {n_tri}")
    lines += ["5"] * n_tri
    lines.append(f"CELL_DATA {n_tri}")
    lines += ["SCALARS element_id int 1", "LOOKUP_TABLE default"]
    lines += [str(int(v)) for v in poly.elem_of_tri]
    lines += ["SCALARS material_label int 1", "LOOKUP_TABLE default"]
    lines += [str(int(v)) for v in tri.tri_label]
    for name, u in fields.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(v)) for v in space.sample_barycenters(u)]
    if fields:
        lines.append(f"POINT_DATA {n_nodes}")
        count = np.bincount(tri.triangles.ravel(), minlength=n_nodes)
        for name, u in fields.items():
            vals = np.bincount(tri.triangles.ravel(), weights=space.sample_nodes(u).ravel(), minlength=n_nodes)
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [repr(float(v)) for v in vals / np.maximum(count, 1)]
    Path(path).write_text("\n".join(lines) + "\n")


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def export_svg_lineplot(path, x, series: dict, *, xlabel="time", ylabel="", title="", size=(640, 400)):
    """Plain SVG 1.1 line plot of one or more series against x."""
    W, H = size
    ml, mr, mt, mb = 70, 20, 30, 50
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    for k, v in ys.items():
        if v.shape != x.shape:
            raise ValueError(f"series {k!r} has a different length than x")
    allv = np.concatenate([v[np.isfinite(v)] for v in ys.values()]) if ys else np.zeros(1)
    x0, x1 = (float(x.min()), float(x.max())) if len(x) else (0.0, 1.0)
    y0, y1 = (float(allv.min()), float(allv.max())) if len(allv) else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return ml + (v - x0) / (x1 - x0) * (W - ml - mr)

    def py(v):
        return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{ml}" y1="{H - mb}" x2="{W - mr}" y2="{H - mb}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{H - mb}" stroke="black"/>']
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{px(v):.1f}" y="{H - mb + 16}" font-size="11" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<text x="{ml - 6}" y="{py(v) + 4:.1f}" font-size="11" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{(ml + W - mr) / 2}" y="{H - 10}" font-size="12" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{(mt + H - mb) / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {(mt + H - mb) / 2})">{_esc(ylabel)}</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="18" font-size="13" text-anchor="middle">{_esc(title)}</text>')
    for i, (name, v) in enumerate(ys.items()):
        color = _PALETTE[i % len(_PALETTE)]
        ok = np.isfinite(v)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], v[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 * (i + 1)
        out.append(f'<line x1="{W - mr - 110}" y1="{ly - 4}" x2="{W - mr - 90}" y2="{ly - 4}" stroke="{color}"/>')
        out.append(f'<text x="{W - mr - 85}" y="{ly}" font-size="11">{_esc(name)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
