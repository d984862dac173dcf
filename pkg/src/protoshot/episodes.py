"""Episode sampling, per-episode evaluation and report aggregation.

Determinism contract: every episode draws from its own generator seeded by a
splitmix-style mix of the master seed and the episode index, so reports do
not depend on evaluation order or thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import EmbeddingSet
from .exceptions import DataValidationError, SamplingError
from .heads import HeadConfig, PrototypeClassifier
from .hierarchy import ClassHierarchy

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_rng(master_seed: int, *parts: int) -> np.random.Generator:
    """Independent generator for (master_seed, *parts); avalanche-mixed."""
    state = _splitmix64(int(master_seed) & _MASK64)
    for p in parts:
        state = _splitmix64(state ^ _splitmix64(int(p) & _MASK64))
    return np.random.Generator(np.random.PCG64(state))


def episode_rng(master_seed: int, episode_index: int) -> np.random.Generator:
    return derive_rng(master_seed, 0, episode_index)


@dataclass(frozen=True)
class Episode:
    """One K-way N-shot task with disjoint support and query samples."""

    classes: tuple[str, ...]
    support_X: np.ndarray
    support_y: np.ndarray
    query_X: np.ndarray
    query_y: np.ndarray
    index: int = 0

    @property
    def k(self) -> int:
        return len(self.classes)


def sample_episode(
    data: EmbeddingSet,
    classes,
    k: int,
    n_shot: int,
    n_query: int,
    rng: np.random.Generator,
    index: int = 0,
) -> Episode:
    """Draw K classes then N + N' distinct samples per class, support first."""
    pool = sorted(set(str(c) for c in classes))
    if len(pool) < k:
        raise SamplingError(
            f"need {k} classes but the split provides {len(pool)}"
        )
    chosen = sorted(rng.choice(len(pool), size=k, replace=False).tolist())
    picked = [pool[i] for i in chosen]
    s_rows, q_rows = [], []
    need = n_shot + n_query
    for lab in picked:
        idx = data.by_label.get(lab)
        if idx is None:
            raise SamplingError(f"class {lab!r} has no samples in the data")
        if len(idx) < need:
            raise SamplingError(
                f"class {lab!r} has {len(idx)} samples but {need} are required"
            )
        take = idx[rng.choice(len(idx), size=need, replace=False)]
        s_rows.append(take[:n_shot])
        q_rows.append(take[n_shot:])
    s_idx = np.concatenate(s_rows)
    q_idx = np.concatenate(q_rows)
    labels = np.asarray(data.labels)
    return Episode(
        classes=tuple(picked),
        support_X=data.vectors[s_idx],
        support_y=labels[s_idx],
        query_X=data.vectors[q_idx],
        query_y=labels[q_idx],
        index=index,
    )


def hierarchical_precision(pred: str, true: str, h: ClassHierarchy) -> float:
    """Overlap of non-root ancestor sets (leaf included) over the predicted set."""
    pa = set(h.ancestors(pred))
    ta = set(h.ancestors(true))
    return len(pa & ta) / len(pa)


def confidence_interval(values) -> tuple[float, float]:
    """Mean and 1.96 * std / sqrt(M) half-width; zero half-width for M = 1."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DataValidationError("confidence interval of an empty list")
    mean = float(values.mean())
    if values.size == 1 or np.all(values == values[0]):
        return mean, 0.0
    std = float(values.std(ddof=1))
    return mean, float(1.96 * std / np.sqrt(values.size))


@dataclass
class EpisodeResult:
    overall: float
    p_h: float
    level_acc: dict[int, float]
    level_acc_leaf_mapped: dict[int, float] | None = None


def evaluate_episode(
    ep: Episode, cfg: HeadConfig, h: ClassHierarchy
) -> EpisodeResult:
    """Accuracy, per-level accuracy and hierarchical precision for one episode.

    Flat heads derive level accuracy by mapping the predicted leaf to its
    ancestor; the hierarchical head additionally predicts each level from its
    own prototypes and reports both readings.
    """
    clf = PrototypeClassifier(
        metric=cfg.metric, tau=cfg.tau, c=cfg.c, r=cfg.r, gamma=cfg.gamma, hierarchy=h
    ).fit(ep.support_X, ep.support_y)
    pred = clf.predict(ep.query_X)
    true = np.asarray(ep.query_y)
    overall = float((pred == true).mean())
    p_h = float(
        np.mean([hierarchical_precision(p, t, h) for p, t in zip(pred, true)])
    )
    mapped = {}
    for lv in range(2, h.height + 1):
        anc_pred = np.asarray([h.ancestor_at_level(p, lv) for p in pred.tolist()])
        anc_true = np.asarray([h.ancestor_at_level(t, lv) for t in true.tolist()])
        mapped[lv] = float((anc_pred == anc_true).mean())
    if cfg.metric != "hierarchical":
        return EpisodeResult(overall=overall, p_h=p_h, level_acc=mapped)
    own = {}
    for lv in range(2, h.height + 1):
        lv_pred = clf.predict_at_level(ep.query_X, lv)
        anc_true = np.asarray([h.ancestor_at_level(t, lv) for t in true.tolist()])
        own[lv] = float((lv_pred == anc_true).mean())
    return EpisodeResult(
        overall=overall, p_h=p_h, level_acc=own, level_acc_leaf_mapped=mapped
    )


@dataclass
class MetricSummary:
    mean: float
    ci95: float

    def formatted(self) -> str:
        return f"{self.mean:.2f} ± {self.ci95:.2f}"

    def to_dict(self) -> dict:
        return {"mean": self.mean, "ci95": self.ci95, "formatted": self.formatted()}


CI_DEFINITION = "mean +/- 1.96*std/sqrt(episodes), std with ddof=1 over per-episode values; half-width 0 when episodes == 1"
P_H_DEFINITION = (
    "per query: |ancestors(pred) & ancestors(true)| / |ancestors(pred)| "
    "over levels 2..height, leaf included"
)


@dataclass
class EvalReport:
    """Aggregated evaluation metrics, all on a 0..100 percent scale."""

    episodes: int
    seed: int
    config: dict
    overall: MetricSummary
    p_h: MetricSummary
    level_acc: dict[int, MetricSummary]
    level_acc_leaf_mapped: dict[int, MetricSummary] | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        metrics: dict = {"overall_acc": self.overall.to_dict()}
        metrics["level_acc"] = {
            str(lv): s.to_dict() for lv, s in sorted(self.level_acc.items())
        }
        if self.level_acc_leaf_mapped is not None:
            metrics["level_acc_leaf_mapped"] = {
                str(lv): s.to_dict()
                for lv, s in sorted(self.level_acc_leaf_mapped.items())
            }
        metrics["hierarchical_precision"] = self.p_h.to_dict()
        doc = {
            "report_type": "evaluation",
            "format_version": 1,
            "config": self.config,
            "seed": self.seed,
            "episodes": self.episodes,
            "metrics": metrics,
            "definitions": {
                "ci": CI_DEFINITION,
                "hierarchical_precision": P_H_DEFINITION,
            },
        }
        doc.update(self.extras)
        return doc


def _summary(values) -> MetricSummary:
    mean, hw = confidence_interval(np.asarray(values) * 100.0)
    return MetricSummary(mean=mean, ci95=hw)


def run_evaluation(
    data: EmbeddingSet,
    classes,
    h: ClassHierarchy,
    cfg: HeadConfig,
    *,
    k: int = 5,
    n_shot: int = 5,
    n_query: int = 15,
    episodes: int = 1000,
    seed: int = 0,
    threads: int = 1,
    config_echo: dict | None = None,
) -> EvalReport:
    """Evaluate ``episodes`` independently sampled episodes and aggregate.

    The report is a pure function of (data, classes, cfg, protocol, seed);
    thread count only affects wall-clock time.
    """
    if episodes < 1:
        raise DataValidationError(f"episodes must be >= 1, got {episodes}")
    pool = sorted(set(str(c) for c in classes))
    not_leaves = sorted(set(pool) - set(h.leaves))
    if not_leaves:
        raise DataValidationError(
            f"classes not present as hierarchy leaves: {not_leaves}"
        )

    def one(i: int) -> EpisodeResult:
        try:
            ep = sample_episode(
                data, pool, k, n_shot, n_query, episode_rng(seed, i), index=i
            )
            return evaluate_episode(ep, cfg, h)
        except Exception as exc:
            exc.args = (f"episode {i}: {exc}",)
            raise

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_ex:
            results = list(pool_ex.map(one, range(episodes)))
    else:
        results = [one(i) for i in range(episodes)]

    echo = dict(config_echo) if config_echo else {}
    echo.setdefault("metric", cfg.metric)
    echo.setdefault("tau", cfg.tau)
    echo.setdefault("c", cfg.c)
    echo.setdefault("r", cfg.r)
    echo.setdefault("gamma", cfg.gamma)
    echo.setdefault("k", k)
    echo.setdefault("n_shot", n_shot)
    echo.setdefault("n_query", n_query)
    echo.setdefault("episodes", episodes)
    echo.setdefault("seed", seed)

    levels = sorted(results[0].level_acc)
    report = EvalReport(
        episodes=episodes,
        seed=seed,
        config=echo,
        overall=_summary([r.overall for r in results]),
        p_h=_summary([r.p_h for r in results]),
        level_acc={lv: _summary([r.level_acc[lv] for r in results]) for lv in levels},
        level_acc_leaf_mapped=(
            {
                lv: _summary([r.level_acc_leaf_mapped[lv] for r in results])
                for lv in levels
            }
            if results[0].level_acc_leaf_mapped is not None
            else None
        ),
        extras={"queries_per_episode": k * n_query},
    )
    return report
