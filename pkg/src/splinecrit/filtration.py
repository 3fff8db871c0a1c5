"""Span pruning via the convex hull property of derivative splines.

Within a span, each partial-derivative spline is bounded by the min and max
of its active control window. If that interval excludes zero for any axis,
the gradient cannot vanish in the span and it is skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .spline import SpanTable, TensorSplineModel, derivative_model, span_table


@dataclass(frozen=True, eq=False)
class FiltrationResult:
    total: int
    retained: np.ndarray
    skipped: int
    eliminated_by_axis: tuple

    @property
    def evaluated(self) -> int:
        return int(self.retained.size)

    def summary(self) -> dict:
        total = max(self.total, 1)
        return {
            "total": self.total,
            "evaluated": self.evaluated,
            "evaluated_pct": 100.0 * self.evaluated / total,
            "skipped": self.skipped,
            "skipped_pct": 100.0 * self.skipped / total,
        }

    def summary_line(self) -> str:
        s = self.summary()
        return (f"spans total={s['total']} evaluated={s['evaluated']} ({s['evaluated_pct']:.2f}%) "
                f"skipped={s['skipped']} ({s['skipped_pct']:.2f}%)")


def window_bounds(dmodel: TensorSplineModel, start: np.ndarray):
    """Min and max of ``dmodel``'s control window at each span start.

    ``start`` holds first-control indices in the parent model's indexing,
    which coincide with the derivative model's window origins.
    """
    d = dmodel.dim
    win = tuple(kv.degree + 1 for kv in dmodel.knot_vectors)
    view = sliding_window_view(dmodel.controls, win)
    inner = tuple(range(d, 2 * d))
    idx = tuple(start.T)
    return view.min(axis=inner)[idx], view.max(axis=inner)[idx]


def filter_spans(model: TensorSplineModel, first_derivatives=None,
                 table: SpanTable | None = None) -> FiltrationResult:
    """Classify every span as retained (may hold a critical point) or skipped.

    A span is skipped iff some axis has a derivative control window lying
    strictly above or strictly below zero. A control value of exactly zero
    keeps the span.
    """
    if table is None:
        table = span_table(model)
    if first_derivatives is None:
        first_derivatives = [derivative_model(model, a) for a in range(model.dim)]
    alive = np.ones(len(table), dtype=bool)
    tallies = []
    for dm in first_derivatives:
        lo, hi = window_bounds(dm, table.start)
        excluded = alive & ((lo > 0) | (hi < 0))
        tallies.append(int(excluded.sum()))
        alive &= ~excluded
    retained = np.flatnonzero(alive)
    return FiltrationResult(len(table), retained, len(table) - retained.size, tuple(tallies))
