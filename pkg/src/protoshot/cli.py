"""Command-line entry points: eval, train, gradcheck, selftest.

Exit codes: 0 success, 1 usage error, 2 data validation error, 3 numeric
failure. All reports are single-line JSON documents on standard output.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import THREADS_ENV_VAR, RunConfig, load_config
from .data import EmbeddingSet, load_embeddings, load_splits
from .episodes import Episode, derive_rng, run_evaluation, sample_episode
from .exceptions import ProtoshotError, UsageError
from .heads import METRICS, HeadConfig
from .hierarchy import ClassHierarchy, load_hierarchy
from .report import emit_report
from .selftest import run_selftest
from .trainer import (
    TrainConfig,
    ProjectionModel,
    finite_difference_check,
    load_checkpoint,
    meta_train,
    save_checkpoint,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); keep our codes
        raise UsageError(message)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", help="embedding CSV path")
    p.add_argument("--hierarchy", help="hierarchy edge-list path")
    p.add_argument("--splits", help="base/val/novel split JSON path")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--metric", choices=METRICS, help="prototype head")
    p.add_argument("--k", type=int, help="classes per episode (default 5)")
    p.add_argument("--n", type=int, dest="n_shot", help="support shots per class (default 5)")
    p.add_argument("--n-query", type=int, dest="n_query", help="queries per class (default 15)")
    p.add_argument("--episodes", type=int, help="evaluation episodes (default 1000)")
    p.add_argument("--tau", type=float, help="softmax temperature (default 1)")
    p.add_argument("--c", type=float, help="ball curvature magnitude (default 0.01)")
    p.add_argument("--r", type=float, help="feature clip radius (default 1)")
    p.add_argument("--gamma", type=float, help="level-weight parameter (default 2)")
    p.add_argument(
        "--threads",
        type=int,
        help=f"worker threads for evaluation (default ${THREADS_ENV_VAR} or 1)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="protoshot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="episodic evaluation on the novel split")
    _add_common_flags(p_eval)
    p_eval.add_argument("--checkpoint", help="apply this trained projection first")

    p_train = sub.add_parser("train", help="meta-train the linear projection")
    _add_common_flags(p_train)
    p_train.add_argument("--epochs", type=int, help="training epochs (default 5)")
    p_train.add_argument("--lr", type=float, help="learning rate (default 1e-3, hyperbolic 1e-4)")
    p_train.add_argument("--out-dim", type=int, dest="out_dim", help="projection output dim")
    p_train.add_argument("--checkpoint", help="write the best checkpoint here")

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient validation")
    _add_common_flags(p_grad)

    p_self = sub.add_parser("selftest", help="run the built-in sanity suite")
    p_self.add_argument("--seed", type=int, help="master seed (default 0)")
    return parser


_OVERRIDE_KEYS = (
    "embeddings", "hierarchy", "splits", "checkpoint", "seed", "metric",
    "k", "n_shot", "n_query", "episodes", "tau", "c", "r", "gamma",
    "threads", "epochs", "lr", "out_dim",
)


def _resolve_config(args) -> RunConfig:
    overrides = {
        key: getattr(args, key)
        for key in _OVERRIDE_KEYS
        if getattr(args, key, None) is not None
    }
    return load_config(getattr(args, "config", None), overrides)


def _load_inputs(cfg: RunConfig):
    for key in ("embeddings", "hierarchy", "splits"):
        if getattr(cfg, key) is None:
            raise UsageError(f"missing --{key}")
    data = load_embeddings(cfg.embeddings)
    hierarchy = load_hierarchy(cfg.hierarchy)
    split = load_splits(cfg.splits, data)
    return data, hierarchy, split


def _cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    data, hierarchy, split = _load_inputs(cfg)
    if cfg.checkpoint:
        model, _, _ = load_checkpoint(cfg.checkpoint)
        data = EmbeddingSet.from_arrays(
            data.ids, data.labels, model.project(data.vectors)
        )
    report = run_evaluation(
        data,
        split.novel,
        hierarchy,
        cfg.head_config(),
        k=cfg.k,
        n_shot=cfg.n_shot,
        n_query=cfg.n_query,
        episodes=cfg.episodes,
        seed=cfg.seed,
        threads=cfg.threads,
        config_echo=cfg.echo(),
    )
    doc = report.to_dict()
    doc["splits"] = {
        "base": len(split.base), "val": len(split.val), "novel": len(split.novel)
    }
    emit_report(doc)
    return 0


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    data, hierarchy, split = _load_inputs(cfg)
    tcfg = TrainConfig(
        head=cfg.head_config(),
        k=cfg.k,
        n_shot=cfg.n_shot,
        n_query=cfg.n_query,
        lr=cfg.lr,
        momentum=cfg.momentum,
        weight_decay=cfg.weight_decay,
        epochs=cfg.epochs,
        episodes_per_epoch=cfg.episodes_per_epoch,
        batch_episodes=cfg.batch_episodes,
        val_episodes=cfg.val_episodes,
        out_dim=cfg.out_dim,
        seed=cfg.seed,
    )
    result = meta_train(data, split.base, split.val, hierarchy, tcfg)
    if cfg.checkpoint:
        save_checkpoint(cfg.checkpoint, result.best_model, cfg.echo())
    emit_report(
        {
            "report_type": "training",
            "format_version": 1,
            "config": cfg.echo(),
            "seed": cfg.seed,
            "curve": result.curve,
            "best_epoch": result.best_epoch,
            "best_val_acc": result.best_val_acc,
            "checkpoint": cfg.checkpoint,
        }
    )
    return 0


def _gradcheck_instance(cfg: RunConfig):
    """A small seeded episode, model and hierarchy for exhaustive checking."""
    if cfg.embeddings is not None:
        data = load_embeddings(cfg.embeddings)
        hierarchy = load_hierarchy(cfg.hierarchy) if cfg.hierarchy else None
        classes = sorted(data.label_set)
        if cfg.splits:
            classes = load_splits(cfg.splits, data).base
        dims = min(data.dim, 8)
        k = min(cfg.k, len(classes))
        ep = sample_episode(
            data, classes, k, min(cfg.n_shot, 3), min(cfg.n_query, 3),
            derive_rng(cfg.seed, 301), index=0,
        )
        ep = Episode(
            classes=ep.classes,
            support_X=ep.support_X[:, :dims],
            support_y=ep.support_y,
            query_X=ep.query_X[:, :dims],
            query_y=ep.query_y,
        )
        return ep, dims, hierarchy
    rng = derive_rng(cfg.seed, 302)
    dims = 6
    labels = np.asarray(["a0", "a0", "a1", "a1", "b0", "b0"])
    X = 0.6 * rng.standard_normal((6, dims))
    Q = 0.6 * rng.standard_normal((6, dims))
    qy = np.asarray(["a0", "a1", "b0", "a0", "a1", "b0"])
    ep = Episode(
        classes=("a0", "a1", "b0"), support_X=X, support_y=labels,
        query_X=Q, query_y=qy,
    )
    hierarchy = ClassHierarchy.from_edges(
        [("root", "A"), ("root", "B"), ("A", "a0"), ("A", "a1"), ("B", "b0")]
    )
    return ep, dims, hierarchy


def _cmd_gradcheck(args) -> int:
    cfg = _resolve_config(args)
    metrics = [cfg.metric] if args.metric is not None else list(METRICS)
    ep, dims, hierarchy = _gradcheck_instance(cfg)
    model = ProjectionModel.initialize(dims, dims, derive_rng(cfg.seed, 303))
    checks = []
    for metric in metrics:
        head = HeadConfig(metric=metric, tau=cfg.tau, c=cfg.c, r=cfg.r, gamma=cfg.gamma)
        if metric == "hierarchical" and hierarchy is None:
            raise UsageError("gradcheck with metric=hierarchical needs --hierarchy")
        checks.append(finite_difference_check(model, ep, head, hierarchy).to_dict())
    passed = all(c["passed"] for c in checks)
    emit_report(
        {
            "report_type": "gradcheck",
            "format_version": 1,
            "seed": cfg.seed,
            "dims": dims,
            "checks": checks,
            "passed": passed,
        }
    )
    return 0 if passed else 3


def _cmd_selftest(args) -> int:
    report = run_selftest(seed=args.seed if args.seed is not None else 0)
    emit_report(report)
    return 0 if report["passed"] else 3


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "eval": _cmd_eval,
            "train": _cmd_train,
            "gradcheck": _cmd_gradcheck,
            "selftest": _cmd_selftest,
        }[args.command]
        return handler(args)
    except ProtoshotError as exc:
        print(f"protoshot: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
