import numpy as np
import pytest

from conftest import random_model
from splinecrit.extraction import NewtonConfig, extract_spans
from splinecrit.filtration import filter_spans
from splinecrit.fitting import fit_fixed
from splinecrit.spline import (
    DerivativeSet,
    TensorSplineModel,
    derivative_model,
    span_table,
)
from splinecrit.synthetic import analytic_field


def test_ramp_skips_everything():
    model, _ = fit_fixed(analytic_field("ramp", samples=30), 3, 10)
    result = filter_spans(model)
    assert result.total == 49 and result.evaluated == 0 and result.skipped == 49


def test_constant_keeps_everything():
    model = TensorSplineModel.uniform(np.full((8, 8), 3.0), 3)
    result = filter_spans(model)
    assert result.evaluated == result.total == 25


def test_counts_add_up():
    rng = np.random.default_rng(0)
    for _ in range(10):
        model = random_model(rng, d=2, degree=3)
        r = filter_spans(model)
        assert r.evaluated + r.skipped == r.total
        assert len(set(r.retained.tolist())) == r.evaluated
        assert sum(r.eliminated_by_axis) == r.skipped


def test_zero_tie_is_retained():
    # derivative controls along axis 0 are (0, 1, 1, ...): window minimum 0 exactly
    c = np.add.outer(np.array([0.0, 0.0, 1.0, 2.0, 3.0]), np.zeros(5))
    model = TensorSplineModel.uniform(c, 2)
    r = filter_spans(model)
    d0 = derivative_model(model, 0).controls
    assert d0[0, 0] == 0.0
    table = span_table(model)
    first_row = np.flatnonzero(table.start[:, 0] == 0)
    assert set(first_row).issubset(set(r.retained.tolist()))


def test_window_matches_explicit_indices():
    rng = np.random.default_rng(4)
    model = random_model(rng, d=2, degrees=(3, 2))
    table = span_table(model)
    firsts = [derivative_model(model, a) for a in range(2)]
    r = filter_spans(model, firsts, table)
    expected = []
    for i in range(len(table)):
        j = table.start[i]
        keep = True
        for a, dm in enumerate(firsts):
            win = tuple(slice(j[b], j[b] + dm.degrees[b] + 1) for b in range(2))
            w = dm.controls[win]
            assert w.size == model.degrees[a] * np.prod([model.degrees[b] + 1 for b in range(2) if b != a])
            if w.min() > 0 or w.max() < 0:
                keep = False
        expected.append(keep)
    np.testing.assert_array_equal(np.flatnonzero(expected), r.retained)


def test_dense_brute_force_soundness():
    rng = np.random.default_rng(8)
    model = random_model(rng, d=2, degree=3, n=(7, 7))
    derivs = DerivativeSet.build(model)
    table = span_table(model)
    retained = set(filter_spans(model, derivs.first, table).retained.tolist())
    s = (np.arange(50) + 0.5) / 50
    for i in range(len(table)):
        lo, hi = table.lower[i], table.upper[i]
        U = np.stack(np.meshgrid(lo[0] + s * (hi[0] - lo[0]), lo[1] + s * (hi[1] - lo[1]),
                                 indexing="ij"), -1).reshape(-1, 2)
        G, _ = derivs.gradient_hessian(U)
        # a sign change of both partials inside the span is necessary for a zero
        has_cross = all(G[:, a].min() <= 0 <= G[:, a].max() for a in range(2))
        if has_cross:
            assert i in retained


@pytest.mark.parametrize("seed", range(20))
def test_skipped_spans_yield_nothing(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_model(rng, d=2, degree=3)
    derivs = DerivativeSet.build(model)
    table = span_table(model)
    r = filter_spans(model, derivs.first, table)
    skipped = np.setdiff1d(np.arange(len(table)), r.retained)
    raw, _ = extract_spans(derivs, table.subset(skipped), NewtonConfig(init_per_axis=10), 1)
    assert raw["x"].shape[0] == 0


def test_summary_line_format():
    model = TensorSplineModel.uniform(np.full((8, 8), 3.0), 3)
    line = filter_spans(model).summary_line()
    assert line == "spans total=25 evaluated=25 (100.00%) skipped=0 (0.00%)"
