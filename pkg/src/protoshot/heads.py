"""Prototype heads: prototype computation, class probabilities and losses.

Four metrics are supported. ``euclidean`` compares queries to per-class mean
vectors by Euclidean distance, ``cosine`` to renormalized mean vectors by
cosine similarity, ``hierarchical`` adds per-level super-class prototypes on
top of the Euclidean head, and ``hyperbolic`` lifts clipped embeddings onto a
Poincare ball and compares geodesic distances to Einstein-midpoint
prototypes. Probabilities are the softmax of (negated) distances divided by
the temperature ``tau``; ties in an argmax resolve to the lexicographically
smallest label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, DataValidationError
from .geometry import PoincareBall, clip_features
from .hierarchy import ClassHierarchy, level_weights

METRICS = ("euclidean", "cosine", "hierarchical", "hyperbolic")


@dataclass(frozen=True)
class HeadConfig:
    """Head hyper-parameters. Only the fields relevant to ``metric`` are used."""

    metric: str = "euclidean"
    tau: float = 1.0
    c: float = 0.01
    r: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ConfigError(f"tau must be positive, got {self.tau!r}")
        if self.metric == "hyperbolic":
            if not (np.isfinite(self.c) and self.c > 0):
                raise ConfigError(f"c must be positive for hyperbolic, got {self.c!r}")
            if not (np.isfinite(self.r) and self.r > 0):
                raise ConfigError(f"r must be positive for hyperbolic, got {self.r!r}")
        if self.metric == "hierarchical":
            if not (np.isfinite(self.gamma) and self.gamma > 0):
                raise ConfigError(
                    f"gamma must be positive for hierarchical, got {self.gamma!r}"
                )

    def ball(self) -> PoincareBall:
        return PoincareBall(self.c)


@dataclass
class PrototypeSet:
    """Per-class prototypes; ``levels`` is populated by the hierarchical head.

    ``leaf`` maps each episode class to its prototype (the level-``height``
    entry when a hierarchy is in play). Hyperbolic prototypes are Poincare
    points; all others are plain embedding-space vectors.
    """

    leaf: dict[str, np.ndarray]
    metric: str
    levels: dict[int, dict[str, np.ndarray]] = field(default_factory=dict)

    def at_level(self, level: int | None) -> dict[str, np.ndarray]:
        if level is None:
            return self.leaf
        if level not in self.levels:
            raise DataValidationError(f"no prototypes at level {level}")
        return self.levels[level]


def _check_X_y(X, y):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataValidationError(f"expected 2-D embeddings, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise DataValidationError("embeddings contain non-finite values")
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise DataValidationError(
            f"labels shape {y.shape} does not match {X.shape[0]} rows"
        )
    return X, y


def _check_X(X, dim: int | None = None):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2:
        raise DataValidationError(f"expected 1-D or 2-D embeddings, got {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise DataValidationError(
            f"embedding dimension {X.shape[1]} does not match prototypes ({dim})"
        )
    if not np.isfinite(X).all():
        raise DataValidationError("embeddings contain non-finite values")
    return X, single


def _group_means(X: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
    means = {}
    for lab in sorted(set(y.tolist())):
        means[lab] = X[y == lab].mean(axis=0)
    return means


def _unit(v: np.ndarray) -> np.ndarray:
    """Normalize rows to unit norm; zero rows stay zero."""
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0.0, n, 1.0)


def compute_prototypes(X, y, cfg: HeadConfig) -> PrototypeSet:
    """Per-class mean prototypes; cosine renormalizes the mean to unit norm."""
    X, y = _check_X_y(X, y)
    if X.shape[0] == 0:
        raise DataValidationError("support set is empty")
    means = _group_means(X, y)
    if cfg.metric == "cosine":
        means = {lab: _unit(m) for lab, m in means.items()}
    return PrototypeSet(leaf=means, metric=cfg.metric)


def compute_hierarchical_prototypes(X, y, h: ClassHierarchy) -> PrototypeSet:
    """Pooled-support means for every ancestor node at levels 2..height.

    The level-``height`` entries coincide with the flat per-class means; a
    super-class prototype averages every support sample whose class descends
    from it.
    """
    X, y = _check_X_y(X, y)
    unknown = sorted(set(y.tolist()) - set(h.leaves))
    if unknown:
        raise DataValidationError(f"labels not in hierarchy: {unknown}")
    levels: dict[int, dict[str, np.ndarray]] = {}
    for lv in range(2, h.height + 1):
        anc = np.asarray([h.ancestor_at_level(lab, lv) for lab in y.tolist()])
        levels[lv] = _group_means(X, anc)
    return PrototypeSet(leaf=levels[h.height], metric="hierarchical", levels=levels)


def lift_to_ball(X, cfg: HeadConfig) -> np.ndarray:
    """Support/query pipeline of the hyperbolic head: clip then exponential map."""
    return cfg.ball().exp_map0(clip_features(X, cfg.r))


def compute_hyperbolic_prototypes(X, y, cfg: HeadConfig) -> PrototypeSet:
    """Einstein-midpoint prototypes computed in the Klein model.

    Each support embedding is clipped, lifted onto the ball and mapped to
    Klein coordinates; per-class midpoints are mapped back to the Poincare
    model, where query distances are evaluated.
    """
    X, y = _check_X_y(X, y)
    if cfg.metric != "hyperbolic":
        raise ConfigError("compute_hyperbolic_prototypes requires metric='hyperbolic'")
    ball = cfg.ball()
    klein = ball.to_klein(lift_to_ball(X, cfg))
    protos = {}
    for lab in sorted(set(y.tolist())):
        protos[lab] = ball.from_klein(ball.einstein_midpoint(klein[y == lab]))
    return PrototypeSet(leaf=protos, metric="hyperbolic")


def build_prototypes(
    X, y, cfg: HeadConfig, hierarchy: ClassHierarchy | None = None
) -> PrototypeSet:
    """Metric-appropriate prototype construction used by the classifier."""
    if cfg.metric == "hyperbolic":
        return compute_hyperbolic_prototypes(X, y, cfg)
    if cfg.metric == "hierarchical":
        if hierarchy is None:
            raise ConfigError("the hierarchical head requires a class hierarchy")
        return compute_hierarchical_prototypes(X, y, hierarchy)
    return compute_prototypes(X, y, cfg)


def _proto_matrix(protos: dict[str, np.ndarray]):
    labels = tuple(sorted(protos))
    return labels, np.stack([protos[lab] for lab in labels])


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    peak = logits.max(axis=-1, keepdims=True)
    shifted = logits - peak
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _logits(Q: np.ndarray, P: np.ndarray, cfg: HeadConfig) -> np.ndarray:
    """Distance/similarity logits between query rows and prototype rows.

    Queries arrive in raw embedding space; the hyperbolic branch lifts them
    onto the ball here so all heads share one calling convention.
    """
    if cfg.metric == "cosine":
        return _unit(Q) @ _unit(P).T / cfg.tau
    if cfg.metric == "hyperbolic":
        zq = lift_to_ball(Q, cfg)
        d = cfg.ball().distance(zq[:, None, :], P[None, :, :])
    else:
        d = np.linalg.norm(Q[:, None, :] - P[None, :, :], axis=-1)
    return -d / cfg.tau


def class_probabilities(
    Q, prototypes: PrototypeSet, cfg: HeadConfig, level: int | None = None
):
    """Probability rows over the level's nodes, sorted by node label.

    Returns ``(labels, probs)`` where ``probs[i, j]`` is the probability of
    node ``labels[j]`` for query row ``i``. A 1-D query yields a 1-D row.
    """
    protos = prototypes.at_level(level)
    if not protos:
        raise DataValidationError("no prototypes at the requested level")
    labels, P = _proto_matrix(protos)
    Q, single = _check_X(Q, dim=P.shape[1] if cfg.metric != "hyperbolic" else None)
    if cfg.metric == "hyperbolic" and Q.shape[1] != P.shape[1]:
        raise DataValidationError(
            f"embedding dimension {Q.shape[1]} does not match prototypes ({P.shape[1]})"
        )
    probs = np.exp(_log_softmax(_logits(Q, P, cfg)))
    return labels, (probs[0] if single else probs)


def episode_loss_flat(episode, prototypes: PrototypeSet, cfg: HeadConfig) -> float:
    """Mean negative log-probability of the true class over all queries."""
    labels, P = _proto_matrix(prototypes.leaf)
    index = {lab: j for j, lab in enumerate(labels)}
    y = [index.get(lab) for lab in np.asarray(episode.query_y).tolist()]
    if any(j is None for j in y):
        raise DataValidationError("query label not among episode classes")
    Q, _ = _check_X(episode.query_X)
    log_p = _log_softmax(_logits(Q, P, cfg))
    return float(-log_p[np.arange(len(y)), y].mean())


def episode_loss_hierarchical(
    episode, prototypes: PrototypeSet, h: ClassHierarchy, cfg: HeadConfig
) -> float:
    """Level-weighted sum of per-level losses against ancestor targets."""
    if not prototypes.levels:
        raise DataValidationError("hierarchical loss needs per-level prototypes")
    weights = level_weights(cfg.gamma, h.height)
    Q, _ = _check_X(episode.query_X)
    qy = np.asarray(episode.query_y).tolist()
    total = 0.0
    for lv in range(2, h.height + 1):
        labels, P = _proto_matrix(prototypes.levels[lv])
        index = {lab: j for j, lab in enumerate(labels)}
        ancestors = [h.ancestor_at_level(lab, lv) for lab in qy]
        missing = sorted(set(ancestors) - set(labels))
        if missing:
            raise DataValidationError(
                f"query ancestor {missing[0]!r} not among episode nodes"
            )
        targets = [index[a] for a in ancestors]
        log_p = _log_softmax(_logits(Q, P, cfg))
        total += weights[lv] * float(
            -log_p[np.arange(len(targets)), targets].mean()
        )
    return total


class PrototypeClassifier(BaseEstimator, ClassifierMixin):
    """Nearest-prototype classifier over precomputed embedding vectors.

    Fitting computes class prototypes from the (support) rows of ``X``;
    prediction softmax-scores new rows against them. With
    ``metric='hierarchical'`` a :class:`ClassHierarchy` is required and
    per-level prototypes become available through the ``*_at_level`` methods.

    Parameters
    ----------
    metric : str
        One of ``euclidean``, ``cosine``, ``hierarchical``, ``hyperbolic``.
    tau : float
        Softmax temperature.
    c : float
        Ball curvature magnitude (hyperbolic only).
    r : float
        Feature clip radius applied before the ball lift (hyperbolic only).
    gamma : float
        Level-weight parameter (hierarchical only).
    hierarchy : ClassHierarchy, optional
        Class taxonomy; required for the hierarchical metric and for
        ancestor-mapped level predictions of the flat metrics.
    """

    def __init__(
        self,
        metric: str = "euclidean",
        tau: float = 1.0,
        c: float = 0.01,
        r: float = 1.0,
        gamma: float = 2.0,
        hierarchy: ClassHierarchy | None = None,
    ):
        self.metric = metric
        self.tau = tau
        self.c = c
        self.r = r
        self.gamma = gamma
        self.hierarchy = hierarchy

    def _config(self) -> HeadConfig:
        return HeadConfig(
            metric=self.metric, tau=self.tau, c=self.c, r=self.r, gamma=self.gamma
        )

    def fit(self, X, y):
        X, y = _check_X_y(X, np.asarray(y, dtype=object))
        y = np.asarray([str(v) for v in y.tolist()])
        cfg = self._config()
        self.prototypes_ = build_prototypes(X, y, cfg, self.hierarchy)
        self.classes_ = np.asarray(sorted(set(y.tolist())))
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "prototypes_")
        _, probs = class_probabilities(X, self.prototypes_, self._config())
        return np.atleast_2d(probs)

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]

    def level_classes(self, level: int) -> tuple[str, ...]:
        check_is_fitted(self, "prototypes_")
        if self.prototypes_.levels:
            return tuple(sorted(self.prototypes_.at_level(level)))
        if self.hierarchy is None:
            raise ConfigError("level predictions for a flat head need a hierarchy")
        return tuple(
            sorted(
                {
                    self.hierarchy.ancestor_at_level(lab, level)
                    for lab in self.classes_.tolist()
                }
            )
        )

    def predict_proba_at_level(self, X, level: int) -> np.ndarray:
        """Level softmax for the hierarchical head (columns: sorted nodes)."""
        check_is_fitted(self, "prototypes_")
        if not self.prototypes_.levels:
            raise ConfigError(
                "per-level probabilities require metric='hierarchical'"
            )
        _, probs = class_probabilities(X, self.prototypes_, self._config(), level)
        return np.atleast_2d(probs)

    def predict_at_level(self, X, level: int) -> np.ndarray:
        """Node predictions at a hierarchy level.

        The hierarchical head predicts from its own level prototypes; flat
        heads predict a leaf and map it to its ancestor at the level.
        """
        check_is_fitted(self, "prototypes_")
        if self.prototypes_.levels:
            nodes = np.asarray(self.level_classes(level))
            probs = self.predict_proba_at_level(X, level)
            return nodes[np.argmax(probs, axis=1)]
        if self.hierarchy is None:
            raise ConfigError("level predictions for a flat head need a hierarchy")
        return np.asarray(
            [
                self.hierarchy.ancestor_at_level(lab, level)
                for lab in self.predict(X).tolist()
            ]
        )
