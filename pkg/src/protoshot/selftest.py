"""Built-in sanity suite: fast, data-free checks runnable from the CLI."""

from __future__ import annotations

import numpy as np

from .episodes import Episode, derive_rng, run_evaluation
from .geometry import PoincareBall
from .heads import (
    HeadConfig,
    build_prototypes,
    episode_loss_flat,
    episode_loss_hierarchical,
)
from .hierarchy import ClassHierarchy, level_weights
from .synthetic import make_benchmark
from .trainer import ProjectionModel, finite_difference_check


def _ball_points(rng, n, dim, c, max_radius=0.85):
    raw = rng.standard_normal((n, dim))
    radii = max_radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / dim)
    return radii * raw / np.linalg.norm(raw, axis=1, keepdims=True) / np.sqrt(c)


def _check_geometry(rng) -> list[dict]:
    checks = []
    for c in (0.01, 1.0):
        ball = PoincareBall(c)
        x = _ball_points(rng, 1000, 4, c)
        y = _ball_points(rng, 1000, 4, c)
        z = _ball_points(rng, 1000, 4, c)
        ident = np.abs(ball.mobius_add(np.zeros_like(x), x) - x).max()
        inverse = np.linalg.norm(ball.mobius_add(-x, x), axis=1).max()
        dxy = ball.distance(x, y)
        sym = np.abs(dxy - ball.distance(y, x)).max()
        tri = (ball.distance(x, z) - dxy - ball.distance(y, z)).max()
        rt = np.abs(ball.from_klein(ball.to_klein(x)) - x).max()
        checks.append(
            {
                "name": f"geometry identities (c={c})",
                "passed": bool(
                    ident == 0.0
                    and inverse < 1e-12
                    and sym == 0.0
                    and tri < 1e-9
                    and rt < 1e-12
                ),
                "detail": f"identity={ident:.2e} inverse={inverse:.2e} "
                f"symmetry={sym:.2e} triangle_slack={tri:.2e} roundtrip={rt:.2e}",
            }
        )
    ball = PoincareBall(1e-8)
    x = _ball_points(rng, 200, 4, 1.0, max_radius=0.5)
    y = _ball_points(rng, 200, 4, 1.0, max_radius=0.5)
    rel = np.abs(
        ball.distance(x, y) - 2.0 * np.linalg.norm(x - y, axis=1)
    ) / np.linalg.norm(x - y, axis=1)
    checks.append(
        {
            "name": "small-curvature limit",
            "passed": bool(rel.max() < 1e-3),
            "detail": f"max relative deviation {rel.max():.2e}",
        }
    )
    ball1 = PoincareBall(1.0)
    mid = ball1.einstein_midpoint(np.array([[0.8, 0.0], [0.0, 0.0]]))
    sym_mid = ball1.einstein_midpoint(np.array([[0.8, 0.0], [-0.8, 0.0]]))
    single = ball1.einstein_midpoint(np.array([[0.3, 0.1]]))
    ok = (
        np.abs(mid - [0.5, 0.0]).max() < 1e-12
        and np.abs(sym_mid).max() < 1e-12
        and np.abs(single - [0.3, 0.1]).max() < 1e-12
    )
    checks.append(
        {
            "name": "einstein midpoint hand values",
            "passed": bool(ok),
            "detail": f"midpoint([0.8,0],[0,0]) = {mid.tolist()}",
        }
    )
    return checks


def _check_reductions() -> list[dict]:
    checks = []
    w = level_weights(2.0, 3)
    ok_w = abs(w[2] - 1.0 / 3.0) < 1e-15 and abs(w[3] - 2.0 / 3.0) < 1e-15
    checks.append(
        {
            "name": "level weights gamma=2",
            "passed": bool(ok_w),
            "detail": f"weights={w.weights}",
        }
    )
    h2 = ClassHierarchy.from_edges([("root", "a"), ("root", "b"), ("root", "c")])
    rng = derive_rng(11, 1)
    X = rng.standard_normal((9, 5))
    y = np.asarray(["a", "a", "a", "b", "b", "b", "c", "c", "c"])
    Q = rng.standard_normal((6, 5))
    qy = np.asarray(["a", "b", "c", "a", "b", "c"])
    ep = Episode(classes=("a", "b", "c"), support_X=X, support_y=y, query_X=Q, query_y=qy)
    flat_cfg = HeadConfig(metric="euclidean", tau=0.7)
    hier_cfg = HeadConfig(metric="hierarchical", tau=0.7, gamma=3.0)
    flat = episode_loss_flat(ep, build_prototypes(X, y, flat_cfg), flat_cfg)
    hier = episode_loss_hierarchical(
        ep, build_prototypes(X, y, hier_cfg, h2), h2, hier_cfg
    )
    checks.append(
        {
            "name": "two-level hierarchy reduces to flat loss",
            "passed": bool(abs(flat - hier) < 1e-12),
            "detail": f"|flat - hierarchical| = {abs(flat - hier):.2e}",
        }
    )
    return checks


def _check_gradients() -> list[dict]:
    checks = []
    rng = derive_rng(23, 2)
    X = 0.6 * rng.standard_normal((6, 4))
    y = np.asarray(["a", "a", "b", "b", "c", "c"])
    Q = 0.6 * rng.standard_normal((6, 4))
    qy = np.asarray(["a", "b", "c", "a", "b", "c"])
    ep = Episode(classes=("a", "b", "c"), support_X=X, support_y=y, query_X=Q, query_y=qy)
    model = ProjectionModel.initialize(4, 4, derive_rng(23, 3))
    for metric in ("euclidean", "hyperbolic"):
        cfg = HeadConfig(metric=metric, tau=1.0, c=0.01, r=1.0)
        rep = finite_difference_check(model, ep, cfg)
        checks.append(
            {
                "name": f"gradient check ({metric})",
                "passed": bool(rep.passed),
                "detail": f"max relative error {rep.max_rel_error:.2e} "
                f"(threshold {rep.threshold:g})",
            }
        )
    return checks


def _check_synthetic_eval() -> list[dict]:
    data, h, split = make_benchmark()
    cfg = HeadConfig(metric="euclidean")
    report = run_evaluation(
        data, split.novel, h, cfg, k=5, n_shot=5, n_query=15, episodes=50, seed=3
    )
    again = run_evaluation(
        data, split.novel, h, cfg, k=5, n_shot=5, n_query=15, episodes=50, seed=3
    )
    return [
        {
            "name": "synthetic separable evaluation",
            "passed": bool(report.overall.mean >= 90.0),
            "detail": f"overall accuracy {report.overall.mean:.2f}%",
        },
        {
            "name": "evaluation determinism",
            "passed": report.to_dict() == again.to_dict(),
            "detail": "two identical runs produced identical reports",
        },
    ]


def run_selftest(seed: int = 0) -> dict:
    rng = derive_rng(seed, 9001)
    checks = (
        _check_geometry(rng)
        + _check_reductions()
        + _check_gradients()
        + _check_synthetic_eval()
    )
    return {
        "report_type": "selftest",
        "format_version": 1,
        "seed": seed,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
