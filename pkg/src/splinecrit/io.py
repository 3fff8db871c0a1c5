"""Text and binary file formats: models, grid fields, critical-point lists.

All reals in text formats are written with 17 significant digits, which
round-trips every double exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path

import numpy as np

from .exceptions import FormatError
from .extraction import CriticalPoint
from .fitting import GridScalarField
from .pl import PLCriticalPoint
from .spline import KnotVector, TensorSplineModel

MODEL_MAGIC = "splinecrit-model"
GRID_MAGIC = "SPLINECRIT-GRID"
CPTS_MAGIC = "splinecrit-cpts"
FORMAT_VERSION = 1


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _join(values) -> str:
    return " ".join(fmt(v) for v in values)


# -- models -----------------------------------------------------------------

def dumps_model(model: TensorSplineModel) -> str:
    lines = [f"{MODEL_MAGIC} {FORMAT_VERSION}", f"dim {model.dim}",
             "degree " + " ".join(str(p) for p in model.degrees)]
    for lo, hi in model.extents:
        lines.append(f"extent {fmt(lo)} {fmt(hi)}")
    if model.source_samples is not None:
        lines.append("samples " + " ".join(str(m) for m in model.source_samples))
    for a, kv in enumerate(model.knot_vectors):
        lines.append(f"knots {a} {kv.knots.size}")
        lines.append(_join(kv.knots))
    lines.append("shape " + " ".join(str(n) for n in model.shape))
    lines.append(f"controls {model.controls.size}")
    lines.extend(fmt(v) for v in model.controls.ravel(order="C"))
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> TensorSplineModel:
    lines = iter(text.splitlines())

    def expect(key):
        try:
            parts = next(lines).split()
        except StopIteration:
            raise FormatError(f"model file ended before '{key}'") from None
        if not parts or parts[0] != key:
            raise FormatError(f"expected '{key}', got {' '.join(parts)!r}")
        return parts[1:]

    try:
        head = expect(MODEL_MAGIC)
        if int(head[0]) != FORMAT_VERSION:
            raise FormatError(f"unsupported model version {head[0]}")
        d = int(expect("dim")[0])
        degrees = [int(v) for v in expect("degree")]
        extents = [[float(v) for v in expect("extent")] for _ in range(d)]
        parts = next(lines).split()
        samples = None
        if parts[0] == "samples":
            samples = [int(v) for v in parts[1:]]
            parts = next(lines).split()
        kvs = []
        for a in range(d):
            if parts[:2] != ["knots", str(a)]:
                raise FormatError(f"expected knots for axis {a}")
            knots = np.array([float(v) for v in next(lines).split()])
            if knots.size != int(parts[2]):
                raise FormatError(f"axis {a}: knot count mismatch")
            kvs.append(KnotVector(degrees[a], knots))
            parts = next(lines).split() if a + 1 < d else None
        shape = tuple(int(v) for v in expect("shape"))
        count = int(expect("controls")[0])
        values = np.array([float(next(lines)) for _ in range(count)])
        expect("end")
    except (ValueError, IndexError, StopIteration) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed model file: {exc}") from exc
    if int(np.prod(shape)) != count:
        raise FormatError("control count does not match shape")
    return TensorSplineModel(kvs, values.reshape(shape), extents, samples)


def write_model(model: TensorSplineModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def read_model(path) -> TensorSplineModel:
    return loads_model(Path(path).read_text())


def model_hash(model: TensorSplineModel) -> str:
    return hashlib.sha256(dumps_model(model).encode()).hexdigest()[:16]


# -- grid fields --------------------------------------------------------------

def dumps_grid(field: GridScalarField) -> bytes:
    header = [GRID_MAGIC, f"version {FORMAT_VERSION}", f"dim {field.dim}",
              "counts " + " ".join(str(m) for m in field.shape)]
    header += [f"extent {fmt(lo)} {fmt(hi)}" for lo, hi in field.extents]
    header += ["encoding f64le", "end"]
    body = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    return ("\n".join(header) + "\n").encode("ascii") + body


def loads_grid(data: bytes) -> GridScalarField:
    marker = b"\nend\n"
    cut = data.find(marker)
    if not data.startswith(GRID_MAGIC.encode()) or cut < 0:
        raise FormatError("not a grid file (missing magic or header terminator)")
    header = data[:cut].decode("ascii").splitlines()
    body = data[cut + len(marker):]
    fields = {}
    extents = []
    for line in header[1:]:
        key, *rest = line.split()
        if key == "extent":
            extents.append([float(v) for v in rest])
        else:
            fields[key] = rest
    try:
        if int(fields["version"][0]) != FORMAT_VERSION:
            raise FormatError(f"unsupported grid version {fields['version'][0]}")
        if fields["encoding"] != ["f64le"]:
            raise FormatError(f"unsupported encoding {fields['encoding']}")
        d = int(fields["dim"][0])
        counts = tuple(int(v) for v in fields["counts"])
    except KeyError as exc:
        raise FormatError(f"grid header lacks {exc}") from None
    if len(counts) != d or len(extents) != d:
        raise FormatError("grid header dimension mismatch")
    n = int(np.prod(counts))
    if len(body) != 8 * n:
        raise FormatError(f"expected {8 * n} bytes of samples, found {len(body)}")
    values = np.frombuffer(body, dtype="<f8").astype(float).reshape(counts)
    return GridScalarField(values, extents)


def _axis_from_column(col, name):
    axis = np.unique(col)
    if axis.size < 2:
        raise FormatError(f"column {name!r} needs at least 2 distinct coordinates")
    step = np.diff(axis)
    if not np.allclose(step, step[0], rtol=1e-6, atol=0):
        raise FormatError(f"column {name!r} is not uniformly spaced")
    return axis


def read_csv_grid(path) -> GridScalarField:
    """Read ``x,value`` or ``x,y,value`` rows covering a full uniform grid.

    Row order is free; the first column is grid axis 0.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("empty CSV file")
    head = [h.strip() for h in rows[0]]
    if head not in (["x", "value"], ["x", "y", "value"]):
        raise FormatError("CSV header must be 'x,value' or 'x,y,value'")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric CSV entry: {exc}") from exc
    d = len(head) - 1
    axes = [_axis_from_column(data[:, a], head[a]) for a in range(d)]
    shape = tuple(a.size for a in axes)
    if data.shape[0] != int(np.prod(shape)):
        raise FormatError("CSV rows do not cover a full grid exactly once")
    idx = tuple(np.searchsorted(axes[a], data[:, a]) for a in range(d))
    values = np.full(shape, np.nan)
    values[idx] = data[:, d]
    if np.isnan(values).any():
        raise FormatError("CSV grid has missing or duplicate cells")
    return GridScalarField(values, [(a[0], a[-1]) for a in axes])


def write_csv_grid(values, axes, path) -> None:
    values = np.asarray(values)
    d = values.ndim
    if d > 2:
        raise FormatError("CSV grids are limited to d <= 2")
    names = ["x", "y"][:d] + ["value"]
    mesh = np.meshgrid(*axes, indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(m.ravel() for m in mesh), values.ravel()):
            w.writerow([fmt(v) for v in row])


def read_grid(path) -> GridScalarField:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv_grid(path)
    return loads_grid(path.read_bytes())


def write_grid(field: GridScalarField, path) -> None:
    Path(path).write_bytes(dumps_grid(field))


# -- critical points ----------------------------------------------------------

COLUMNS = "physical[d] parameter[d] value grad_norm det_hessian index type"


def dumps_points(points, method: str, model: TensorSplineModel, config: dict | None = None) -> str:
    """Critical-point file text: ``#`` header block, then one record per line."""
    out = io.StringIO()
    out.write(f"# {CPTS_MAGIC} {FORMAT_VERSION}\n")
    out.write(f"# method={method}\n")
    out.write(f"# model_hash={model_hash(model)}\n")
    out.write(f"# dim={model.dim}\n")
    cell = model.source_cell()
    if cell is not None:
        out.write("# cell=" + ",".join(fmt(c) for c in cell) + "\n")
    for k, v in (config or {}).items():
        out.write(f"# config.{k}={v}\n")
    out.write(f"# count={len(points)}\n")
    out.write(f"# columns: {COLUMNS}\n")
    for p in points:
        grad = getattr(p, "grad_norm", math.nan)
        det = getattr(p, "det_hessian", math.nan)
        fields = [*p.physical, *p.location, p.value, grad, det]
        out.write(" ".join(fmt(v) for v in fields) + f" {p.index} {p.kind}\n")
    return out.getvalue()


def write_points(points, path, method: str, model: TensorSplineModel, config=None) -> None:
    Path(path).write_text(dumps_points(points, method, model, config))


def loads_points(text: str):
    """Parse a critical-point file into ``(header, points)``."""
    header = {}
    points = []
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {CPTS_MAGIC}"):
        raise FormatError("not a critical-point file")
    for line in lines[1:]:
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not body.startswith("columns"):
                k, v = body.split("=", 1)
                header[k.strip()] = v.strip()
            continue
        if not line.strip():
            continue
        if "dim" not in header:
            raise FormatError("record before 'dim' header")
        d = int(header["dim"])
        parts = line.split()
        if len(parts) != 2 * d + 5:
            raise FormatError(f"expected {2 * d + 5} columns, got {len(parts)}")
        nums = [float(v) for v in parts[:2 * d + 3]]
        phys, loc = tuple(nums[:d]), tuple(nums[d:2 * d])
        value, grad, det = nums[2 * d:2 * d + 3]
        index, kind = int(parts[-2]), parts[-1]
        if header.get("method") == "pl":
            points.append(PLCriticalPoint((), loc, phys, value, index, kind))
        else:
            points.append(CriticalPoint(loc, phys, value, grad, det, index, kind, 0))
    if "cell" in header:
        header["cell"] = tuple(float(v) for v in header["cell"].split(","))
    return header, points


def read_points(path):
    return loads_points(Path(path).read_text())
