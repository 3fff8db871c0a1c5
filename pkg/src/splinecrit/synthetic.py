"""Analytic test fields with known critical points."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fitting import GridScalarField

SCHWEFEL_CONSTANT = 418.9829


def schwefel(x) -> float | np.ndarray:
    """Scaled Schwefel function ``(418.9829 d - sum x_i sin(sqrt|x_i|)) / 2``.

    Accepts a single point of shape ``(d,)`` or a batch ``(n, d)``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    s = np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=-1)
    out = 0.5 * (SCHWEFEL_CONSTANT * d - s)
    return float(out) if np.ndim(out) == 0 else out


def schwefel_partial(x) -> np.ndarray:
    """Analytic partial derivative of the scaled Schwefel function per coordinate."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.abs(x))
    return -0.5 * (np.sin(r) + 0.5 * r * np.cos(r))


@dataclass(frozen=True)
class SchwefelSpec:
    """Sampling setup for a Schwefel field.

    The domain is ``[-((k+1/2) pi)^2, ((k+1/2) pi)^2]^d`` unless ``domain``
    overrides it with an explicit ``(lo, hi)``.
    """

    dim: int = 2
    k: int = 15
    samples: int = 200
    domain: tuple | None = None

    @property
    def bounds(self) -> tuple:
        if self.domain is not None:
            return tuple(float(v) for v in self.domain)
        r = ((self.k + 0.5) * math.pi) ** 2
        return (-r, r)

    @property
    def expected_total(self) -> int:
        return (2 * self.k - 2) ** self.dim


def _grid(dim, samples, bounds):
    lo, hi = bounds
    axes = [np.linspace(lo, hi, samples)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1), np.array([bounds] * dim, dtype=float)


def generate_field(spec: SchwefelSpec) -> GridScalarField:
    if spec.samples < 2:
        raise ValueError("need at least 2 samples per axis")
    pts, extents = _grid(spec.dim, spec.samples, spec.bounds)
    return GridScalarField(schwefel(pts), extents)


def _bump(p):
    return np.exp(-np.sum(p ** 2, axis=-1) / (2 * 0.6 ** 2))


def _bowl(p):
    return np.sum(p ** 2, axis=-1)


def _saddle(p):
    return p[..., 0] ** 2 - np.sum(p[..., 1:] ** 2, axis=-1)


def _ramp(p):
    return np.sum(p * np.arange(1, p.shape[-1] + 1), axis=-1)


def _const(p):
    return np.full(p.shape[:-1], 3.5)


FIELDS = {"bump": _bump, "bowl": _bowl, "saddle": _saddle, "ramp": _ramp, "const": _const}


def analytic_field(kind: str, dim: int = 2, samples: int = 41, bounds=(-1.0, 1.0)) -> GridScalarField:
    """Sample one of the closed-form fields on a uniform grid.

    ``bump`` is a Gaussian centred at the origin (one maximum), ``bowl`` is
    ``sum x_i^2`` (one minimum), ``saddle`` is ``x_0^2 - sum_{i>0} x_i^2``,
    ``ramp`` is linear with no critical point and ``const`` is constant.
    """
    try:
        f = FIELDS[kind]
    except KeyError:
        raise ValueError(f"unknown field kind {kind!r}; choose from {sorted(FIELDS)}") from None
    pts, extents = _grid(dim, samples, tuple(bounds))
    return GridScalarField(f(pts), extents)
