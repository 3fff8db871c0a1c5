"""Newton-based extraction of isolated, non-degenerate critical points.

The pipeline has three stages: prune spans whose derivative control windows
exclude zero, run Newton's method from a small lattice of starting points in
every surviving span, then remove duplicates globally with a spatial hash.

Newton runs are vectorized: all starting points of a chunk of spans iterate
together, each with its own stopping state. Chunks are pulled from a shared
queue by worker threads, and results are reassembled in chunk order so the
output never depends on the thread count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dedup import dedup
from .exceptions import ClassificationError
from .filtration import FiltrationResult, filter_spans
from .spline import DerivativeSet, KnotSpan, SpanTable, TensorSplineModel, span_table

RUNNING, CONVERGED, DEGENERATE, ESCAPED, EXHAUSTED = range(5)
CHUNK_SPANS = 128
THREADS_ENV = "SPLINECRIT_THREADS"


@dataclass(frozen=True)
class NewtonConfig:
    """Parameters of the per-span Newton search.

    ``tau`` is in parameter units; the default is ``1e-4`` of the unit domain
    width. ``init_per_axis`` defaults to ``degree + 1``.
    """

    eps: float = 1e-7
    max_iter: int = 20
    delta: float = 1e-13
    xi_factor: float = 5.0
    tau: float = 1e-4
    init_per_axis: int | None = None

    def __post_init__(self):
        for name in ("eps", "delta", "xi_factor", "tau"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init_per_axis is not None and int(self.init_per_axis) < 1:
            raise ValueError("init_per_axis must be >= 1")

    def starts_per_axis(self, model: TensorSplineModel) -> tuple:
        if self.init_per_axis is not None:
            return (int(self.init_per_axis),) * model.dim
        return tuple(p + 1 for p in model.degrees)


@dataclass(frozen=True)
class CriticalPoint:
    location: tuple
    physical: tuple
    value: float
    grad_norm: float
    det_hessian: float
    index: int
    kind: str
    iterations: int
    span: tuple = ()


@dataclass
class ExtractionStats:
    spans_total: int = 0
    spans_processed: int = 0
    initial_points: int = 0
    total_iterations: int = 0
    converged: int = 0
    degenerate: int = 0
    escaped: int = 0
    exhausted: int = 0
    rejected_outside: int = 0
    rejected_duplicate: int = 0
    removed_by_dedup: int = 0
    accepted: int = 0
    mean_iterations: float = float("nan")
    mean_grad_norm: float = float("nan")
    stage_seconds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            if k == "stage_seconds":
                for stage, sec in v.items():
                    lines.append(f"time_{stage}={sec:.6f}")
            else:
                lines.append(f"{k}={v}")
        total = sum(self.stage_seconds.values())
        if total > 0:
            lines.append(f"newton_fraction={self.stage_seconds.get('newton', 0.0) / total:.4f}")
        return "\n".join(lines)


def classify(H, delta: float = 0.0):
    """Morse index and type of a symmetric Hessian.

    Returns ``(index, kind)`` where ``index`` counts negative eigenvalues and
    ``kind`` is ``"minimum"`` (index 0), ``"maximum"`` (index d) or
    ``"saddle"``. Raises ClassificationError when ``|det H| < delta`` or an
    eigenvalue is exactly zero.
    """
    H = np.asarray(H, dtype=float)
    d = H.shape[0]
    if abs(np.linalg.det(H)) < delta:
        raise ClassificationError(f"|det H| below {delta:g}")
    eig = np.linalg.eigvalsh(H)
    if np.any(eig == 0.0):
        raise ClassificationError("Hessian is singular")
    lam = int(np.sum(eig < 0))
    return lam, _kind(lam, d)


def _kind(lam, d):
    if lam == 0:
        return "minimum"
    if lam == d:
        return "maximum"
    return "saddle"


def initial_points(table: SpanTable, per_axis) -> np.ndarray:
    """Offset-half lattice of starting points for every span, ``(S*q, d)``.

    Points of span ``s`` occupy rows ``s*q .. (s+1)*q - 1`` in lexicographic
    lattice order.
    """
    per_axis = tuple(per_axis)
    offs = [(np.arange(q) + 0.5) / q for q in per_axis]
    grid = np.stack([g.ravel() for g in np.meshgrid(*offs, indexing="ij")], axis=1)
    width = table.upper - table.lower
    X = table.lower[:, None, :] + grid[None, :, :] * width[:, None, :]
    return X.reshape(-1, X.shape[-1])


def _solve_steps(H, G):
    try:
        return np.linalg.solve(H, G[..., None])[..., 0], np.ones(len(H), bool)
    except np.linalg.LinAlgError:
        steps = np.zeros_like(G)
        ok = np.ones(len(H), bool)
        for i in range(len(H)):
            try:
                steps[i] = np.linalg.solve(H[i], G[i])
            except np.linalg.LinAlgError:
                ok[i] = False
        return steps, ok


def newton_batch(dset: DerivativeSet, X0, centers, radius, cfg: NewtonConfig):
    """Run the Newton search from every row of ``X0`` independently.

    Returns a dict of per-run arrays: final ``x``, ``status``, ``iterations``,
    ``grad_norm`` and ``hessian`` (the latter two valid where converged).
    """
    X0 = np.asarray(X0, dtype=float)
    n, d = X0.shape
    x = X0.copy()
    status = np.full(n, RUNNING, dtype=np.int8)
    iters = np.zeros(n, dtype=np.int64)
    gnorm = np.full(n, np.nan)
    Hfin = np.full((n, d, d), np.nan)
    act = np.arange(n)
    G, H = dset.gradient_hessian(x)
    for _ in range(cfg.max_iter):
        if act.size == 0:
            break
        det = np.linalg.det(H)
        good = np.abs(det) >= cfg.delta
        status[act[~good]] = DEGENERATE
        act, G, H = act[good], G[good], H[good]
        step, ok = _solve_steps(H, G)
        status[act[~ok]] = DEGENERATE
        act, step = act[ok], step[ok]
        xn = x[act] - step
        iters[act] += 1
        x[act] = xn
        near = np.linalg.norm(xn - centers[act], axis=1) <= radius[act]
        status[act[~near]] = ESCAPED
        act, xn = act[near], xn[near]
        G, H = dset.gradient_hessian(xn)
        gn = np.linalg.norm(G, axis=1)
        conv = gn < cfg.eps
        status[act[conv]] = CONVERGED
        gnorm[act[conv]] = gn[conv]
        Hfin[act[conv]] = H[conv]
        act, G, H = act[~conv], G[~conv], H[~conv]
    status[act] = EXHAUSTED
    return {"x": x, "status": status, "iterations": iters, "grad_norm": gnorm, "hessian": Hfin}


def _inside(X, lower, upper):
    upper_ok = np.where(upper >= 1.0, X <= upper, X < upper)
    interior = np.all((X > 0.0) & (X < 1.0), axis=1)
    return np.all((X >= lower) & upper_ok, axis=1) & interior


def _extract_chunk(dset: DerivativeSet, table: SpanTable, cfg: NewtonConfig, per_axis):
    """Newton search plus per-span acceptance for a block of spans."""
    q = int(np.prod(per_axis))
    S = len(table)
    X0 = initial_points(table, per_axis)
    centers = np.repeat(0.5 * (table.lower + table.upper), q, axis=0)
    diag = np.linalg.norm(table.upper - table.lower, axis=1)
    radius = np.repeat(cfg.xi_factor * diag, q)
    res = newton_batch(dset, X0, centers, radius, cfg)
    status = res["status"]
    lower = np.repeat(table.lower, q, axis=0)
    upper = np.repeat(table.upper, q, axis=0)
    conv = status == CONVERGED
    inside = conv & _inside(res["x"], lower, upper)
    counts = {
        "initial_points": S * q,
        "total_iterations": int(res["iterations"].sum()),
        "converged": int(conv.sum()),
        "degenerate": int(np.sum(status == DEGENERATE)),
        "escaped": int(np.sum(status == ESCAPED)),
        "exhausted": int(np.sum(status == EXHAUSTED)),
        "rejected_outside": int(np.sum(conv & ~inside)),
        "rejected_duplicate": 0,
    }
    accepted = []
    tau = cfg.tau
    for s in range(S):
        rows = np.flatnonzero(inside[s * q:(s + 1) * q]) + s * q
        kept = []
        for r in rows:
            xr = res["x"][r]
            if any(math.dist(xr, res["x"][k]) < tau for k in kept):
                counts["rejected_duplicate"] += 1
                continue
            kept.append(r)
        accepted.extend((r, s) for r in kept)
    idx = np.array([r for r, _ in accepted], dtype=int)
    spans = [tuple(int(v) for v in table.start[s]) for _, s in accepted]
    return {
        "x": res["x"][idx], "grad_norm": res["grad_norm"][idx], "hessian": res["hessian"][idx],
        "iterations": res["iterations"][idx], "spans": spans, "counts": counts,
    }


def resolve_threads(n_threads=None) -> int:
    if n_threads is None:
        env = os.environ.get(THREADS_ENV)
        n_threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(n_threads))


def extract_spans(dset: DerivativeSet, table: SpanTable, cfg: NewtonConfig,
                  n_threads=None, chunk_spans: int = CHUNK_SPANS):
    """Run the per-span search over ``table`` and merge chunk results in order.

    Returns the raw accepted arrays (not yet deduplicated or classified) and
    the summed counters.
    """
    per_axis = cfg.starts_per_axis(dset.model)
    chunks = [table.subset(np.arange(i, min(i + chunk_spans, len(table))))
              for i in range(0, len(table), chunk_spans)]
    n_threads = resolve_threads(n_threads)

    def work(chunk):
        return _extract_chunk(dset, chunk, cfg, per_axis)

    if n_threads == 1 or len(chunks) <= 1:
        results = [work(c) for c in chunks]
    else:
        # map() hands chunks to whichever worker is free; output stays in order
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(work, chunks))
    d = dset.model.dim
    merged = {
        "x": np.concatenate([r["x"] for r in results]) if results else np.zeros((0, d)),
        "grad_norm": np.concatenate([r["grad_norm"] for r in results]) if results else np.zeros(0),
        "hessian": np.concatenate([r["hessian"] for r in results]) if results else np.zeros((0, d, d)),
        "iterations": np.concatenate([r["iterations"] for r in results]) if results else np.zeros(0, int),
        "spans": [s for r in results for s in r["spans"]],
    }
    counts: dict = {}
    for r in results:
        for k, v in r["counts"].items():
            counts[k] = counts.get(k, 0) + v
    return merged, counts


def _build_points(model, raw):
    X = raw["x"]
    if X.shape[0] == 0:
        return []
    values = model._evaluate_unchecked(X)
    H = raw["hessian"]
    det = np.linalg.det(H)
    eig = np.linalg.eigvalsh(H)
    lam = np.sum(eig < 0, axis=1)
    phys = model.to_physical(X)
    d = model.dim
    return [
        CriticalPoint(
            location=tuple(X[i].tolist()), physical=tuple(phys[i].tolist()),
            value=float(values[i]), grad_norm=float(raw["grad_norm"][i]),
            det_hessian=float(det[i]), index=int(lam[i]), kind=_kind(int(lam[i]), d),
            iterations=int(raw["iterations"][i]), span=raw["spans"][i])
        for i in range(X.shape[0])
    ]


def extract_in_span(span: KnotSpan, model: TensorSplineModel, cfg: NewtonConfig | None = None,
                    derivs: DerivativeSet | None = None) -> list:
    """Critical points found by Newton's method inside a single span."""
    cfg = cfg or NewtonConfig()
    derivs = derivs or DerivativeSet.build(model)
    table = SpanTable(np.array([span.start]), np.array([span.lower], float),
                      np.array([span.upper], float), span.degrees)
    raw = _extract_chunk(derivs, table, cfg, cfg.starts_per_axis(model))
    return _build_points(model, raw)


def extract_all(model: TensorSplineModel, cfg: NewtonConfig | None = None, n_threads=None):
    """Filter spans, search each survivor, deduplicate and classify.

    Returns
    -------
    points : list of CriticalPoint
        Sorted lexicographically by parameter location.
    filtration : FiltrationResult
    stats : ExtractionStats
    """
    cfg = cfg or NewtonConfig()
    times = {}
    t0 = time.perf_counter()
    derivs = DerivativeSet.build(model)
    table = span_table(model)
    times["derivatives"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    filt = filter_spans(model, derivs.first, table)
    times["filtration"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    raw, counts = extract_spans(derivs, table.subset(filt.retained), cfg, n_threads)
    times["newton"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    order = np.lexsort(raw["x"].T[::-1]) if raw["x"].shape[0] else np.zeros(0, int)
    raw = {k: (v[order] if isinstance(v, np.ndarray) else [v[i] for i in order])
           for k, v in raw.items()}
    # points carry their row in `raw` through dedup via location identity
    candidates = [_Row(i, raw["x"][i]) for i in range(raw["x"].shape[0])]
    kept = [c.row for c in dedup(candidates, cfg.tau)]
    times["dedup"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    kept_raw = {k: (v[kept] if isinstance(v, np.ndarray) else [v[i] for i in kept])
                for k, v in raw.items()}
    points = _build_points(model, kept_raw)
    times["classify"] = time.perf_counter() - t0

    stats = ExtractionStats(spans_total=filt.total, spans_processed=filt.evaluated, **counts)
    stats.removed_by_dedup = len(candidates) - len(kept)
    stats.accepted = len(points)
    if points:
        stats.mean_iterations = float(np.mean([p.iterations for p in points]))
        stats.mean_grad_norm = float(np.mean([p.grad_norm for p in points]))
    stats.stage_seconds = times
    return points, filt, stats


@dataclass(frozen=True)
class _Row:
    row: int
    location: np.ndarray
