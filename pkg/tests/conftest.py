"""Shared oracles and fixtures."""

import math

import numpy as np
import pytest

from tacreorient.tactile import LEFT, MarkerField


def brute_force_metrics(ref, disp, normals):
    """Loop-by-loop evaluation of the two slip tendencies, no vectorisation."""
    n_pts = len(ref)
    s1 = [0.0, 0.0, 0.0]
    for d in disp:
        for k in range(3):
            s1[k] += d[k]
    s1 = [v / n_pts for v in s1]
    nsum = [0.0, 0.0, 0.0]
    for nv in normals:
        for k in range(3):
            nsum[k] += nv[k]
    nn = math.sqrt(sum(v * v for v in nsum))
    n = [v / nn for v in nsum]
    c = [sum(p[k] for p in ref) / n_pts for k in range(3)]
    total, count = 0.0, 0
    for p, d in zip(ref, disp):
        r = [c[k] - p[k] for k in range(3)]
        rn = math.sqrt(sum(v * v for v in r))
        if rn < 1e-9:
            continue
        r = [v / rn for v in r]
        cross = [r[1] * d[2] - r[2] * d[1], r[2] * d[0] - r[0] * d[2], r[0] * d[1] - r[1] * d[0]]
        total += sum(cross[k] * n[k] for k in range(3))
        count += 1
    return s1, (total / count if count else 0.0)


def random_field(rng, n=None, finger=LEFT):
    n = int(rng.integers(3, 401)) if n is None else n
    ref = rng.normal(scale=5.0, size=(n, 3))
    disp = rng.normal(scale=0.3, size=(n, 3))
    normals = rng.normal(size=(n, 3)) * 0.2 + [0.0, 0.0, 1.0]
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return MarkerField(finger, ref, disp, normals)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
