"""Agreement between two critical-point sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    size_a: int
    size_b: int
    pairs: tuple
    aligned: int
    aligned_same_type: int
    jaccard: float
    threshold: float

    def as_dict(self) -> dict:
        return {
            "A": self.size_a, "B": self.size_b, "aligned": self.aligned,
            "aligned_same_type": self.aligned_same_type, "jaccard": self.jaccard,
            "threshold": self.threshold,
        }

    def to_text(self) -> str:
        return (f"|A|={self.size_a} |B|={self.size_b} aligned={self.aligned} "
                f"aligned_same_type={self.aligned_same_type} jaccard={self.jaccard:.4f}")


def _coords(points, attr):
    if isinstance(points, np.ndarray):
        return np.atleast_2d(points).astype(float), None
    pts = list(points)
    if not pts:
        return np.zeros((0, 0)), []
    return np.array([getattr(p, attr) for p in pts], dtype=float), [p.index for p in pts]


def jaccard(aligned: int, size_a: int, size_b: int) -> float:
    denom = size_a + size_b - aligned
    return 1.0 if denom == 0 else aligned / denom


def align(A, B, threshold: float, scale=None, coords: str = "physical") -> AlignmentReport:
    """Greedy one-to-one matching of closest pairs under ``threshold``.

    Parameters
    ----------
    A, B : sequences of critical points, or ``(n, d)`` arrays
        Points expose ``physical`` (or ``coords``) and ``index``.
    threshold : float
        Pairs must be strictly closer than this after scaling.
    scale : array_like, optional
        Per-axis divisor applied before measuring distance, e.g. the source
        grid cell so that ``threshold`` counts cells.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    XA, ta = _coords(A, coords)
    XB, tb = _coords(B, coords)
    na, nb = XA.shape[0], XB.shape[0]
    pairs = []
    if na and nb:
        if scale is not None:
            s = np.asarray(scale, dtype=float)
            XA, XB = XA / s, XB / s
        dist = cKDTree(XA).sparse_distance_matrix(cKDTree(XB), threshold, output_type="ndarray")
        dist = dist[dist["v"] < threshold]
        order = np.lexsort((dist["j"], dist["i"], dist["v"]))
        used_a, used_b = set(), set()
        for i, j, v in dist[order].tolist():
            if i in used_a or j in used_b:
                continue
            used_a.add(i)
            used_b.add(j)
            pairs.append((int(i), int(j), float(v)))
    same = 0
    if ta is not None and tb is not None:
        same = sum(1 for i, j, _ in pairs if ta[i] == tb[j])
    k = len(pairs)
    return AlignmentReport(na, nb, tuple(pairs), k, same, jaccard(k, na, nb), float(threshold))
