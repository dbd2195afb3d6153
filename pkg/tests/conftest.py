import math

import numpy as np
import pytest


def naive_output(q, r, c, p):
    """Scalar product over capabilities, written independently of the library."""
    return math.prod(1.0 - q[p][k] * (1.0 - r[c][k]) for k in range(len(q[p])))


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def mixed_central_diff(f, h):
    """Second-order mixed difference of ``f(dx, dy)`` at the origin."""
    return (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)


def grid_argmax(fn, n=100_001):
    r = np.linspace(0.0, 1.0, n)
    return float(r[np.argmax(fn(r))])


def rel_err(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def random_instance(rng, max_p=8, max_b=8, min_b=1, q_range=(0.1, 1.0), r_range=(0.0, 0.9), n_c=2):
    P = int(rng.integers(1, max_p + 1))
    B = int(rng.integers(min_b, max_b + 1))
    q = rng.uniform(*q_range, size=(P, B))
    r = rng.uniform(*r_range, size=(n_c, B))
    return q, r


@pytest.fixture
def rng():
    return np.random.default_rng(20251019)
