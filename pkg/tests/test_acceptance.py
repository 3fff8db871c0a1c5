"""Acceptance criteria, one test and one PASS/FAIL summary line each."""

import time

import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view

from conftest import ACCEPTANCE_LINES, random_knots
from oracles import greedy_dedup
from splinecrit import io
from splinecrit.cli import main
from splinecrit.dedup import candidate_indices, dedup_indices
from splinecrit.extraction import NewtonConfig, extract_all, extract_spans
from splinecrit.filtration import filter_spans
from splinecrit.metrics import align
from splinecrit.pl import pl_critical_points, sample_grid, upsampled_resolution
from splinecrit.spline import (
    DerivativeSet,
    TensorSplineModel,
    evaluate,
    span_table,
)


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] AC{number} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def schwefel_cli_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("schwefel")
    grid, model = root / "schwefel.grid", root / "schwefel.model"
    t0 = time.perf_counter()
    assert main(["gen-schwefel", "--k", "15", "--domain", "-2400", "2400", "--samples", "200",
                 "-o", str(grid)]) == 0
    assert main(["fit", str(grid), "--degree", "3", "--controls", "100", "100", "-o", str(model)]) == 0
    assert main(["extract", str(model), "-o", str(root / "schwefel.cpts")]) == 0
    elapsed = time.perf_counter() - t0
    return root, elapsed


def test_ac1_schwefel_census(schwefel_cli_files):
    root, elapsed = schwefel_cli_files
    _, pts = io.read_points(root / "schwefel.cpts")
    kinds = {k: sum(p.kind == k for p in pts) for k in ("minimum", "maximum", "saddle")}
    ok = (len(pts) == 900 and kinds == {"minimum": 225, "maximum": 225, "saddle": 450}
          and elapsed < 30.0)
    record(1, "Schwefel census", ok,
           f"{len(pts)} points ({kinds['minimum']} min / {kinds['maximum']} max / "
           f"{kinds['saddle']} saddle), pipeline {elapsed:.1f} s (limit 30 s)")
    assert ok


def test_ac2_span_filtration(schwefel_model):
    derivs = DerivativeSet.build(schwefel_model)
    table = span_table(schwefel_model)
    result = filter_spans(schwefel_model, derivs.first, table)
    rate_ok = result.total == 9409 and abs(result.evaluated - 2809) <= 0.10 * 2809
    skipped = np.setdiff1d(np.arange(len(table)), result.retained)
    raw, counts = extract_spans(derivs, table.subset(skipped), NewtonConfig(init_per_axis=8), 1)
    sound = raw["x"].shape[0] == 0
    ok = rate_ok and sound
    record(2, "span filtration", ok,
           f"retained {result.evaluated} of {result.total} (target 2809 +-10%, total 9409 exact); "
           f"{counts['initial_points']} dense restarts on {skipped.size} skipped spans "
           f"found {raw['x'].shape[0]} points")
    assert ok


def test_ac3_eps_sweep(schwefel_model):
    rows = []
    for eps in (1e-3, 1e-5, 1e-7, 1e-9):
        _, _, stats = extract_all(schwefel_model, NewtonConfig(eps=eps))
        rows.append((eps, stats.mean_iterations, stats.mean_grad_norm))
    iters = [r[1] for r in rows]
    trend = all(b >= a for a, b in zip(iters, iters[1:]))
    below = all(g < eps for eps, _, g in rows)
    _, _, tight = extract_all(schwefel_model, NewtonConfig(eps=1e-11))
    ok = trend and below and tight.exhausted >= 1
    table = ", ".join(f"eps={e:g}: it={i:.2f} |g|={g:.2e}" for e, i, g in rows)
    record(3, "eps sweep", ok, f"{table}; eps=1e-11 exhausted={tight.exhausted}")
    assert ok


def _random_model_avoiding(rng):
    d = int(rng.integers(2, 4))
    degrees = tuple(int(p) for p in rng.integers(2, 5, d))
    shape = tuple(int(rng.integers(p + 2, p + 6)) for p in degrees)
    kvs = [random_knots(rng, m, p) for m, p in zip(shape, degrees)]
    return TensorSplineModel(kvs, rng.uniform(-1, 1, shape))


def _points_away_from_knots(rng, model, n, gap):
    out = np.empty((n, model.dim))
    for a, kv in enumerate(model.knot_vectors):
        knots = np.unique(kv.knots)
        col = []
        while len(col) < n:
            u = rng.uniform(gap, 1 - gap)
            if np.min(np.abs(knots - u)) > gap:
                col.append(u)
        out[:, a] = col
    return out


def test_ac4_derivative_correctness():
    rng = np.random.default_rng(2024)
    h, h2 = 1e-6, 1e-4
    worst_g = worst_h = worst_sym = 0.0
    t0 = time.perf_counter()
    for _ in range(20):
        model = _random_model_avoiding(rng)
        d = model.dim
        derivs = DerivativeSet.build(model)
        U = _points_away_from_knots(rng, model, 100, 5 * h2)
        G, H = derivs.gradient_hessian(U)
        worst_sym = max(worst_sym, float(np.max(np.abs(H - np.swapaxes(H, 1, 2)))))
        E = np.eye(d)
        f0 = evaluate(model, U)
        Gfd = np.stack([(evaluate(model, U + h * E[a]) - evaluate(model, U - h * E[a])) / (2 * h)
                        for a in range(d)], 1)
        Hfd = np.empty_like(H)
        for a in range(d):
            for b in range(d):
                if a == b:
                    Hfd[:, a, a] = (evaluate(model, U + h2 * E[a]) - 2 * f0
                                    + evaluate(model, U - h2 * E[a])) / h2 ** 2
                else:
                    Hfd[:, a, b] = (evaluate(model, U + h2 * (E[a] + E[b]))
                                    - evaluate(model, U + h2 * (E[a] - E[b]))
                                    - evaluate(model, U - h2 * (E[a] - E[b]))
                                    + evaluate(model, U - h2 * (E[a] + E[b]))) / (4 * h2 ** 2)
        gscale = np.maximum(np.abs(Gfd).max(axis=1), 1e-6)
        hscale = np.maximum(np.abs(Hfd).max(axis=(1, 2)), 1e-6)
        worst_g = max(worst_g, float(np.max(np.abs(G - Gfd).max(axis=1) / gscale)))
        worst_h = max(worst_h, float(np.max(np.abs(H - Hfd).max(axis=(1, 2)) / hscale)))
    elapsed = time.perf_counter() - t0
    ok = worst_g <= 1e-5 and worst_h <= 1e-4 and worst_sym <= 1e-12 and elapsed < 5.0
    record(4, "derivative correctness", ok,
           f"max rel gradient err {worst_g:.1e} (<=1e-5), Hessian {worst_h:.1e} (<=1e-4), "
           f"asymmetry {worst_sym:.1e} (<=1e-12), {elapsed:.2f} s")
    assert ok


def test_ac5_convex_hull_probes():
    rng = np.random.default_rng(5)
    probes, worst = 0, -np.inf
    while probes < 100_000:
        model = _random_model_avoiding(rng)
        table = span_table(model)
        n = 10_000
        pick = rng.integers(0, len(table), n)
        lo, hi = table.lower[pick], table.upper[pick]
        U = lo + rng.uniform(0, 1, lo.shape) * (hi - lo)
        vals = evaluate(model, U)
        win = sliding_window_view(model.controls, tuple(p + 1 for p in model.degrees))
        inner = tuple(range(model.dim, 2 * model.dim))
        idx = tuple(table.start[pick].T)
        wmin, wmax = win.min(axis=inner)[idx], win.max(axis=inner)[idx]
        worst = max(worst, float(np.max(np.maximum(wmin - vals, vals - wmax))))
        probes += n
    ok = worst <= 1e-12
    record(5, "convex hull", ok, f"{probes} probes, largest signed excursion past the window bounds {worst:.1e} (<=1e-12)")
    assert ok


def test_ac6_dedup_equivalence():
    rng = np.random.default_rng(6)
    tau = 1e-3
    sizes = np.rint(np.geomspace(2, 10_000, 200)).astype(int)
    mismatches = 0
    for n in sizes:
        d = int(rng.integers(1, 4))
        centers = rng.uniform(0, 1, (max(1, n // 3), d))
        X = np.clip(centers[rng.integers(0, len(centers), n)]
                    + rng.normal(scale=tau, size=(n, d)), 0, 1)
        if dedup_indices(X, tau) != greedy_dedup(X, tau):
            mismatches += 1
    pairs = 100_000
    A = rng.uniform(0, 1, (pairs, 3))
    step = rng.normal(size=A.shape)
    step *= rng.uniform(0, tau, (pairs, 1)) / np.linalg.norm(step, axis=1, keepdims=True)
    ca, cb = candidate_indices(A, tau), candidate_indices(A + step, tau)
    share = np.all(ca[:, :, None, :] == cb[:, None, :, :], axis=-1).any(axis=(1, 2))
    ok = mismatches == 0 and bool(share.all())
    record(6, "dedup equivalence", ok,
           f"{len(sizes)} inputs up to {sizes.max()} points, {mismatches} mismatches; "
           f"{int(share.sum())}/{pairs} near pairs share a bucket")
    assert ok


def test_ac7_cross_method_alignment(schwefel_model):
    cpe, _, _ = extract_all(schwefel_model)
    cell = schwefel_model.source_cell()
    scores = {}
    for ratio in (1, 100):
        res = upsampled_resolution(schwefel_model.source_samples, ratio)
        pl = pl_critical_points(sample_grid(schwefel_model, res))
        scores[ratio] = (align(cpe, pl, 1.0, scale=cell), len(pl))
    j1, j100 = scores[1][0].jaccard, scores[100][0].jaccard
    ok = j1 >= 0.95 and j100 >= j1
    record(7, "cross-method alignment", ok,
           f"CPE {len(cpe)} vs PL {scores[1][1]} at 1x: Jaccard {j1:.4f} (>=0.95); "
           f"PL {scores[100][1]} at 100x: Jaccard {j100:.4f} (>= 1x)")
    assert ok


def test_ac8_thread_determinism(schwefel_cli_files):
    root, _ = schwefel_cli_files
    outputs = {}
    for n in (1, 2, 8):
        out = root / f"threads{n}.cpts"
        assert main(["extract", str(root / "schwefel.model"), "--threads", str(n),
                     "-o", str(out)]) == 0
        outputs[n] = out.read_bytes()
    ok = outputs[1] == outputs[2] == outputs[8]
    record(8, "determinism", ok,
           f"threads 1/2/8 outputs {'byte-identical' if ok else 'differ'} "
           f"({len(outputs[1])} bytes)")
    assert ok


def test_ac9_newton_dominates(schwefel_model):
    _, _, stats = extract_all(schwefel_model)
    total = sum(stats.stage_seconds.values())
    frac = stats.stage_seconds["newton"] / total
    ok = frac > 0.8
    stages = " ".join(f"{k}={v * 1e3:.1f}ms" for k, v in stats.stage_seconds.items())
    record(9, "timing profile", ok, f"Newton fraction {frac:.3f} (>0.8); {stages}")
    assert ok
