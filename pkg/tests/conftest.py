import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from splinecrit.fitting import fit_fixed
from splinecrit.spline import KnotVector, TensorSplineModel
from splinecrit.synthetic import SchwefelSpec, generate_field

ACCEPTANCE_LINES = []


def random_knots(rng, n, p, repeat_interior=False):
    interior = np.sort(rng.uniform(0.05, 0.95, n - p - 1))
    if repeat_interior and interior.size >= 2:
        interior[1] = interior[0]
    return KnotVector(p, np.r_[np.zeros(p + 1), interior, np.ones(p + 1)])


def random_model(rng, d=2, degree=3, n=None, uniform=False, degrees=None):
    degrees = degrees or (degree,) * d
    shape = n or tuple(int(rng.integers(p + 2, p + 8)) for p in degrees)
    if isinstance(shape, int):
        shape = (shape,) * d
    if uniform:
        kvs = [KnotVector.uniform(m, p) for m, p in zip(shape, degrees)]
    else:
        kvs = [random_knots(rng, m, p) for m, p in zip(shape, degrees)]
    return TensorSplineModel(kvs, rng.uniform(-1, 1, shape))


@pytest.fixture(scope="session")
def schwefel_field():
    return generate_field(SchwefelSpec(dim=2, k=15, samples=200, domain=(-2400.0, 2400.0)))


@pytest.fixture(scope="session")
def schwefel_model(schwefel_field):
    model, _ = fit_fixed(schwefel_field, 3, 100)
    return model


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
