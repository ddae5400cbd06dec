import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from polyprion import post
from polyprion.femspace import build_space
from polyprion.meshgen import square_polymesh


def series(times, values, points=None):
    values = np.asarray(values, dtype=float)
    n = values.shape[1]
    pts = np.zeros((n, 2)) if points is None else np.asarray(points, dtype=float)
    return post.SampleSeries(np.asarray(times, dtype=float), values, pts, np.ones(n), np.zeros(n, dtype=int))


def test_activation_edge_cases():
    s = series([0.0, 1.0, 2.0], [[0.0, 2.0, 0.5], [0.0, 2.0, 0.5], [0.0, 2.0, 1.5]])
    a = post.activation_time(s, 1.0)
    assert a.times[0] == np.inf          # never reached
    assert a.times[1] == 0.0             # above from the start
    assert a.times[2] == 2.0
    assert a.fraction() == pytest.approx(2 / 3)
    assert a.mean() == pytest.approx(1.0)
    assert np.isnan(a.mean(np.array([True, False, False])))
    # equality is not activation
    assert post.activation_time(series([0.0], [[1.0]]), 1.0).times[0] == np.inf
    with pytest.raises(ValueError):
        post.activation_time(series(np.zeros(0), np.zeros((0, 3))), 1.0)


@given(hnp.arrays(float, (6, 5), elements=st.floats(-2, 2)), st.floats(-1, 1), st.floats(0, 1))
def test_activation_monotone_in_threshold(vals, v, dv):
    s = series(np.arange(6.0), vals)
    lo, hi = post.activation_time(s, v), post.activation_time(s, v + dv)
    assert np.all(lo.times <= hi.times)


@given(hnp.arrays(float, (9, 4), elements=st.floats(-2, 2)), st.floats(-1, 1))
def test_subsampling_never_activates_earlier(vals, v):
    times = np.arange(9.0)
    fine = post.activation_time(series(times, vals), v)
    coarse = post.activation_time(series(times[::2], vals[::2]), v)
    assert np.all(fine.times <= coarse.times)


def test_rescale_and_diff():
    c = np.array([0.5, 1.0])
    q = np.array([0.75, 1.5])
    assert np.array_equal(post.rescale_and_diff(c, q, 1.5), [0.0, 0.0])
    assert np.array_equal(post.rescale_and_diff(c, q, np.array([1.5, 3.0])), [0.0, 0.5])
    with pytest.raises(ValueError):
        post.rescale_and_diff(c, q[:1], 1.5)
    with pytest.raises(ValueError):
        post.rescale_and_diff(c, q, 0.0)


def test_front_position():
    x = np.linspace(0, 1, 11)
    assert post.front_position(x, 1 - x, 0.45) == pytest.approx(0.55)
    assert np.isnan(post.front_position(x, 0 * x, 0.5))
    assert post.front_position(x, 1 + 0 * x, 0.5) == np.inf


def test_stationary_front_has_zero_speed():
    x = np.linspace(0, 1, 201)
    prof = 0.5 * (1 - np.tanh((x - 0.4) / 0.03))
    s = series(np.linspace(0, 5, 11), np.tile(prof, (11, 1)), np.c_[x, 0 * x])
    assert abs(post.front_speed_estimate(s, 0.5)) < 1e-12


def test_moving_front_speed():
    x = np.linspace(0, 1, 401)
    t = np.linspace(0, 10, 41)
    v = 0.06
    vals = 0.5 * (1 - np.tanh((x[None, :] - 0.1 - v * t[:, None]) / 0.02))
    s = series(t, vals, np.c_[x, np.zeros_like(x)])
    assert post.front_speed_estimate(s, 0.5) == pytest.approx(v, rel=0.02)
    assert post.front_speed_estimate(s, 0.5, window=(2, 8)) == pytest.approx(v, rel=0.02)
    with pytest.raises(ValueError):
        post.front_speed_estimate(s, 0.5, window=(0, 0.3))


def test_csv_round_trip_is_exact(tmp_path, rng):
    log = post.ObservableLog()
    for r in rng.standard_normal((7, 3)) * np.array([1e-300, 1.0, 1e300]):
        log.append({"time": r[0], "a": r[1], "b": r[2]})
    post.export_csv(log, tmp_path / "log.csv")
    assert (tmp_path / "log.csv").read_text().splitlines()[0] == "time,a,b"
    back = post.read_csv(tmp_path / "log.csv")
    assert back.columns == log.columns
    assert np.array_equal(np.array(back.rows), np.array(log.rows))
    with pytest.raises(ValueError):
        log.append({"time": 0.0, "b": 1.0, "a": 2.0})


@pytest.fixture(scope="module")
def space():
    return build_space(square_polymesh(3), 2)


def test_observables_constant_field(space):
    from polyprion.assembly import assemble_mass
    M = assemble_mass(space)
    row = post.observables(space, M, 0.5, {"c": 0.7 * space.constant_one}, {"c": 0.5})
    assert row["time"] == 0.5
    assert row["c_mass"] == pytest.approx(0.7)
    assert row["c_l2"] == pytest.approx(0.7)
    assert row["c_min"] == pytest.approx(0.7) and row["c_max"] == pytest.approx(0.7)
    assert row["c_active"] == 1.0


def test_vtk_counts_and_constant_field(tmp_path, space):
    path = tmp_path / "s.vtk"
    post.export_vtk(path, space, {"c": 0.25 * space.constant_one})
    lines = path.read_text().splitlines()
    tri = space.poly.tri
    assert lines[0].startswith("# vtk DataFile Version")
    assert lines[2] == "ASCII"
    assert f"POINTS {len(tri.nodes)} double" in lines
    assert f"CELLS {tri.n_triangles} {4 * tri.n_triangles}" in lines
    i = lines.index(f"POINT_DATA {len(tri.nodes)}")
    pvals = np.array(lines[i + 3:i + 3 + len(tri.nodes)], dtype=float)
    assert np.allclose(pvals, 0.25, atol=1e-13)
    j = lines.index("SCALARS c double 1")
    cvals = np.array(lines[j + 2:j + 2 + tri.n_triangles], dtype=float)
    assert np.allclose(cvals, 0.25, atol=1e-13)


def test_svg_is_well_formed(tmp_path):
    path = tmp_path / "p.svg"
    x = np.linspace(0, 1, 20)
    post.export_svg_lineplot(path, x, {"a<b": x**2, "gap": np.where(x > 0.5, np.nan, x)}, title="t & u")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg") and root.get("version") == "1.1"
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2
    with pytest.raises(ValueError):
        post.export_svg_lineplot(path, x, {"bad": x[:3]})
