import numpy as np
import pytest

from conftest import random_model
from splinecrit import io
from splinecrit.exceptions import FormatError
from splinecrit.extraction import extract_all
from splinecrit.fitting import GridScalarField, fit_fixed
from splinecrit.pl import pl_critical_points, sample_grid
from splinecrit.synthetic import analytic_field


def test_model_round_trip_bytes(tmp_path):
    model = random_model(np.random.default_rng(0), d=3, degrees=(3, 2, 4))
    text = io.dumps_model(model)
    again = io.loads_model(text)
    np.testing.assert_array_equal(again.controls, model.controls)
    for a, b in zip(again.knot_vectors, model.knot_vectors):
        np.testing.assert_array_equal(a.knots, b.knots)
    assert io.dumps_model(again) == text
    io.write_model(model, tmp_path / "m.model")
    assert (tmp_path / "m.model").read_text() == text


def test_model_keeps_extents_and_samples():
    model, _ = fit_fixed(analytic_field("bump", samples=21, bounds=(-3, 5)), 3, 8)
    again = io.loads_model(io.dumps_model(model))
    np.testing.assert_array_equal(again.extents, model.extents)
    assert tuple(again.source_samples) == (21, 21)
    assert io.model_hash(again) == io.model_hash(model)


def test_model_control_order_last_axis_fastest():
    model = random_model(np.random.default_rng(1), d=2, degree=2, n=(4, 5))
    lines = io.dumps_model(model).splitlines()
    first = lines.index("controls 20") + 1
    assert float(lines[first + 1]) == model.controls[0, 1]


@pytest.mark.parametrize("mutate", [
    lambda s: s.replace("splinecrit-model 1", "splinecrit-model 9"),
    lambda s: s.replace("dim 2", "dims 2"),
    lambda s: s.rsplit("end", 1)[0],
    lambda s: s.replace("controls 20", "controls 21"),
    lambda s: "",
])
def test_model_format_errors(mutate):
    model = random_model(np.random.default_rng(1), d=2, degree=2, n=(4, 5))
    with pytest.raises(FormatError):
        io.loads_model(mutate(io.dumps_model(model)))


def test_grid_round_trip(tmp_path):
    values = np.random.default_rng(2).normal(size=(7, 5))
    field = GridScalarField(values, [(-1, 2), (0.5, 0.75)])
    io.write_grid(field, tmp_path / "f.grid")
    again = io.read_grid(tmp_path / "f.grid")
    np.testing.assert_array_equal(again.values, values)
    np.testing.assert_array_equal(again.extents, field.extents)


def test_grid_errors():
    data = io.dumps_grid(GridScalarField(np.zeros((3, 3)), [(0, 1), (0, 1)]))
    with pytest.raises(FormatError):
        io.loads_grid(b"junk")
    with pytest.raises(FormatError):
        io.loads_grid(data[:-8])
    with pytest.raises(FormatError):
        io.loads_grid(data.replace(b"f64le", b"f32le"))


def test_csv_grid_any_row_order(tmp_path):
    values = np.arange(12.0).reshape(4, 3)
    axes = [np.linspace(0, 3, 4), np.linspace(10, 12, 3)]
    io.write_csv_grid(values, axes, tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "x,y,value"
    shuffled = [lines[0]] + [lines[i] for i in np.random.default_rng(0).permutation(range(1, 13)) + 0]
    (tmp_path / "s.csv").write_text("\n".join(shuffled) + "\n")
    field = io.read_grid(tmp_path / "s.csv")
    np.testing.assert_array_equal(field.values, values)
    np.testing.assert_array_equal(field.extents, [[0, 3], [10, 12]])


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(FormatError):
        io.read_csv_grid(p)
    p.write_text("x,value\n0,1\n1,2\n1,3\n")
    with pytest.raises(FormatError):
        io.read_csv_grid(p)
    with pytest.raises(FormatError):
        io.write_csv_grid(np.zeros((2, 2, 2)), [[0, 1]] * 3, p)


def test_points_round_trip():
    model, _ = fit_fixed(analytic_field("saddle", samples=31), 3, 10)
    pts, _, _ = extract_all(model)
    text = io.dumps_points(pts, "cpe", model, {"eps": 1e-7})
    header, back = io.loads_points(text)
    assert header["method"] == "cpe" and header["config.eps"] == "1e-07"
    assert header["cell"] == pytest.approx((2 / 30, 2 / 30))
    assert [p.location for p in back] == [p.location for p in pts]
    assert [p.kind for p in back] == [p.kind for p in pts]


def test_pl_points_round_trip():
    model, _ = fit_fixed(analytic_field("bump", samples=31), 3, 10)
    pts = pl_critical_points(sample_grid(model, 31))
    header, back = io.loads_points(io.dumps_points(pts, "pl", model))
    assert header["method"] == "pl"
    assert [(p.physical, p.kind) for p in back] == [(p.physical, p.kind) for p in pts]


def test_points_format_errors():
    with pytest.raises(FormatError):
        io.loads_points("hello\n")
    with pytest.raises(FormatError):
        io.loads_points("# splinecrit-cpts 1\n# dim=2\n1 2 3\n")
