import numpy as np
import pytest

from protoshot import ClassHierarchy, Episode, derive_rng, make_benchmark


@pytest.fixture(scope="session")
def benchmark():
    """Tuned synthetic dataset shared by the slower integration tests."""
    return make_benchmark()


@pytest.fixture
def tree3():
    """Three-level tree: root -> {A, B} -> {a1, a2, b1, b2}."""
    return ClassHierarchy.from_edges(
        [("root", "A"), ("root", "B"), ("A", "a1"), ("A", "a2"), ("B", "b1"), ("B", "b2")]
    )


def random_episode(seed=0, dim=4, k=3, n_shot=2, n_query=2, scale=0.6, labels=None):
    rng = derive_rng(seed, 4242)
    labels = labels if labels is not None else [f"cls{i}" for i in range(k)]
    sy = np.repeat(labels, n_shot)
    qy = np.tile(labels, n_query)
    return Episode(
        classes=tuple(labels),
        support_X=scale * rng.standard_normal((k * n_shot, dim)),
        support_y=sy,
        query_X=scale * rng.standard_normal((k * n_query, dim)),
        query_y=qy,
    )


def ball_points(rng, n, dim, c, max_radius=0.85):
    """Uniform-ish interior samples of the radius-1/sqrt(c) ball."""
    raw = rng.standard_normal((n, dim))
    radii = max_radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / dim)
    return radii * raw / np.linalg.norm(raw, axis=1, keepdims=True) / np.sqrt(c)
