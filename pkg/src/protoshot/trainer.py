"""Episodic meta-training of a linear projection with analytic gradients.

The trainable model is ``f(x) = W x + b`` applied to precomputed embeddings.
For each head the episodic loss is differentiated in closed form through the
projection, the prototype construction and the distance/similarity softmax;
for the hyperbolic head this includes the clip, the exponential map, the
Klein conversion and the Einstein midpoint. A finite-difference checker
validates every path.

Convention at non-differentiable points: coincident query/prototype pairs
and zero vectors in the cosine head contribute a zero subgradient through
the distance branch, so the all-collapsed model (W = 0, b = 0) has uniform
probabilities, loss ln K and finite (zero) gradients.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .data import EmbeddingSet
from .episodes import Episode, derive_rng, sample_episode
from .exceptions import ConfigError, DataValidationError, GradientError
from .geometry import clip_features
from .heads import (
    HeadConfig,
    PrototypeClassifier,
    _log_softmax,
    _unit,
)
from .hierarchy import ClassHierarchy, level_weights

_STREAM_INIT = 101
_STREAM_TRAIN = 102
_STREAM_VAL = 103


@dataclass
class ProjectionModel:
    """Linear projection ``x -> W x + b`` over embedding vectors."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise GradientError(
                f"incompatible shapes W{self.W.shape} b{self.b.shape}"
            )
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise GradientError("model parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def initialize(
        cls, in_dim: int, out_dim: int, rng: np.random.Generator
    ) -> "ProjectionModel":
        """Uniform +-sqrt(6/(in+out)) weights, zero bias."""
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        W = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        return cls(W=W, b=np.zeros(out_dim))

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.in_dim:
            raise DataValidationError(
                f"embedding dimension {X.shape[-1]} does not match W ({self.in_dim})"
            )
        return X @ self.W.T + self.b

    def copy(self) -> "ProjectionModel":
        return ProjectionModel(W=self.W.copy(), b=self.b.copy())


@dataclass
class SgdState:
    """Momentum buffers for one model."""

    vel_W: np.ndarray
    vel_b: np.ndarray

    @classmethod
    def zeros_like(cls, model: ProjectionModel) -> "SgdState":
        return cls(vel_W=np.zeros_like(model.W), vel_b=np.zeros_like(model.b))


def sgd_step(
    model: ProjectionModel,
    grad_W: np.ndarray,
    grad_b: np.ndarray,
    state: SgdState,
    *,
    lr: float,
    momentum: float = 0.9,
    weight_decay: float = 0.0,
) -> None:
    """In-place SGD with momentum; weight decay enters the velocity:
    ``v = momentum*v + g + wd*p; p -= lr*v``."""
    if grad_W.shape != model.W.shape or grad_b.shape != model.b.shape:
        raise GradientError("gradient shapes do not match the model")
    state.vel_W = momentum * state.vel_W + grad_W + weight_decay * model.W
    state.vel_b = momentum * state.vel_b + grad_b + weight_decay * model.b
    model.W -= lr * state.vel_W
    model.b -= lr * state.vel_b


# -- per-head loss/gradient passes -------------------------------------------
#
# Each pass takes projected supports S with integer group labels gs, projected
# queries Q with integer targets tq, and returns (loss, dL/dS, dL/dQ).


def _group_prototypes(S: np.ndarray, gs: np.ndarray, n_groups: int) -> np.ndarray:
    return np.stack([S[gs == g].mean(axis=0) for g in range(n_groups)])


def _softmax_pull(logits: np.ndarray, tq: np.ndarray):
    """Loss and dL/dlogits of the mean cross-entropy over query rows."""
    nq = logits.shape[0]
    logp = _log_softmax(logits)
    loss = float(-logp[np.arange(nq), tq].mean())
    g = np.exp(logp) / nq
    g[np.arange(nq), tq] -= 1.0 / nq
    return loss, g


def _euclidean_pass(W, S_raw, gs, Q_raw, tq, tau: float, n_groups: int):
    # Distances come from raw-space differences mapped through W, so the bias
    # cancels symbolically: the Euclidean loss is exactly constant in b.
    counts = np.bincount(gs, minlength=n_groups).astype(np.float64)
    M = _group_prototypes(S_raw, gs, n_groups)
    diff = (Q_raw[:, None, :] - M[None, :, :]) @ W.T
    D = np.linalg.norm(diff, axis=-1)
    loss, glogit = _softmax_pull(-D / tau, tq)
    gD = -glogit / tau
    unit = diff / np.where(D > 0.0, D, 1.0)[..., None]
    unit = np.where((D == 0.0)[..., None], 0.0, unit)
    dQ = (gD[..., None] * unit).sum(axis=1)
    dP = -(gD[..., None] * unit).sum(axis=0)
    dS = dP[gs] / counts[gs][:, None]
    return loss, dS, dQ


def _cosine_pass(S, gs, Q, tq, tau: float, n_groups: int):
    counts = np.bincount(gs, minlength=n_groups).astype(np.float64)
    M = _group_prototypes(S, gs, n_groups)
    P = _unit(M)
    Qn = np.linalg.norm(Q, axis=-1)
    Mn = np.linalg.norm(M, axis=-1)
    Qh = _unit(Q)
    sim = _unit(Qh) @ _unit(P).T
    loss, glogit = _softmax_pull(sim / tau, tq)
    gsim = glogit / tau
    q_scale = np.where(Qn > 0.0, Qn, 1.0)[:, None]
    dQ = (gsim @ P - (gsim * sim).sum(axis=1, keepdims=True) * Qh) / q_scale
    dQ[Qn == 0.0] = 0.0
    m_scale = np.where(Mn > 0.0, Mn, 1.0)[:, None]
    dM = (gsim.T @ Qh - (gsim * sim).sum(axis=0)[:, None] * P) / m_scale
    dM[Mn == 0.0] = 0.0
    dS = dM[gs] / counts[gs][:, None]
    return loss, dS, dQ


def _tanh_ratio_slope(u: np.ndarray) -> np.ndarray:
    """(u*sech^2(u) - tanh(u)) / u^3, series-stabilized near zero."""
    small = u < 1e-2
    u_safe = np.where(small, 1.0, u)
    exact = (u_safe / np.cosh(u_safe) ** 2 - np.tanh(u_safe)) / u_safe**3
    series = -2.0 / 3.0 + (8.0 / 15.0) * u * u
    return np.where(small, series, exact)


def _vjp_exp0(v: np.ndarray, g: np.ndarray, c: float) -> np.ndarray:
    s = np.sqrt(c)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    u = s * n
    a = np.where(u > 0.0, np.tanh(u) / np.where(u > 0.0, u, 1.0), 1.0)
    beta = c * _tanh_ratio_slope(u)
    return a * g + beta * (v * g).sum(axis=-1, keepdims=True) * v


def _vjp_clip(x: np.ndarray, g: np.ndarray, r: float) -> np.ndarray:
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    over = n[..., 0] > r
    if not np.any(over):
        return g
    out = np.array(g)
    coef = r / n[over]
    xs, gs = x[over], g[over]
    out[over] = coef * (gs - (xs * gs).sum(axis=-1, keepdims=True) * xs / n[over] ** 2)
    return out


def _vjp_to_klein(z: np.ndarray, g: np.ndarray, c: float) -> np.ndarray:
    D = 1.0 + c * (z * z).sum(axis=-1, keepdims=True)
    return 2.0 * g / D - (4.0 * c / D**2) * (z * g).sum(axis=-1, keepdims=True) * z


def _vjp_from_klein(k: np.ndarray, g: np.ndarray, c: float) -> np.ndarray:
    w = np.sqrt(np.maximum(1.0 - c * (k * k).sum(axis=-1, keepdims=True), 1e-300))
    D = 1.0 + w
    return g / D + (c * (k * g).sum(axis=-1, keepdims=True) / (D * D * w)) * k


def _hyperbolic_pass(S, gs, Q, tq, cfg: HeadConfig, n_groups: int):
    ball = cfg.ball()
    c, r, tau = cfg.c, cfg.r, cfg.tau
    Sc = clip_features(S, r)
    Zs = ball.exp_map0(Sc)
    Ks = ball.to_klein(Zs)
    mids = np.stack(
        [ball.einstein_midpoint(Ks[gs == g]) for g in range(n_groups)]
    )
    P = ball.from_klein(mids)
    Qc = clip_features(Q, r)
    Zq = ball.exp_map0(Qc)
    D = ball.distance(Zq[:, None, :], P[None, :, :])
    loss, glogit = _softmax_pull(-D / tau, tq)
    gD = -glogit / tau

    bq = np.broadcast_to(Zq[:, None, :], (Zq.shape[0], n_groups, Zq.shape[1]))
    bp = np.broadcast_to(P[None, :, :], bq.shape)
    grad_q, grad_p = ball._distance_grad_unchecked(bq, bp)
    dZq = (gD[..., None] * grad_q).sum(axis=1)
    dP = (gD[..., None] * grad_p).sum(axis=0)

    dMid = _vjp_from_klein(mids, dP, c)
    dKs = np.zeros_like(Ks)
    for g in range(n_groups):
        mask = gs == g
        Kg = Ks[mask]
        gamma = (1.0 - c * (Kg * Kg).sum(axis=-1)) ** -0.5
        total = gamma.sum()
        inner = (Kg - mids[g]) @ dMid[g]
        dKs[mask] = (gamma / total)[:, None] * dMid[g] + (
            c * gamma**3 * inner / total
        )[:, None] * Kg

    dZs = _vjp_to_klein(Zs, dKs, c)
    dS = _vjp_clip(S, _vjp_exp0(Sc, dZs, c), r)
    dQ = _vjp_clip(Q, _vjp_exp0(Qc, dZq, c), r)
    return loss, dS, dQ


def _indexed(labels) -> tuple[list[str], dict[str, int]]:
    ordered = sorted(set(labels))
    return ordered, {lab: i for i, lab in enumerate(ordered)}


def loss_and_gradients(
    model: ProjectionModel,
    episode: Episode,
    cfg: HeadConfig,
    hierarchy: ClassHierarchy | None = None,
):
    """Episodic loss on projected embeddings plus dloss/dW and dloss/db.

    The loss value matches the heads-module evaluation of the projected
    episode; gradients flow through both the query and the support branch.
    """
    S_raw = np.asarray(episode.support_X, dtype=np.float64)
    Q_raw = np.asarray(episode.query_X, dtype=np.float64)
    sy = [str(v) for v in np.asarray(episode.support_y).tolist()]
    qy = [str(v) for v in np.asarray(episode.query_y).tolist()]
    S = model.project(S_raw)
    Q = model.project(Q_raw)

    if cfg.metric == "hierarchical":
        if hierarchy is None:
            raise ConfigError("the hierarchical head requires a class hierarchy")
        weights = level_weights(cfg.gamma, hierarchy.height)
        loss = 0.0
        dS = np.zeros_like(S)
        dQ = np.zeros_like(Q)
        for lv in range(2, hierarchy.height + 1):
            s_anc = [hierarchy.ancestor_at_level(lab, lv) for lab in sy]
            q_anc = [hierarchy.ancestor_at_level(lab, lv) for lab in qy]
            nodes, node_ix = _indexed(s_anc)
            missing = sorted(set(q_anc) - set(nodes))
            if missing:
                raise DataValidationError(
                    f"query ancestor {missing[0]!r} not among episode nodes"
                )
            gs = np.asarray([node_ix[a] for a in s_anc])
            tq = np.asarray([node_ix[a] for a in q_anc])
            lv_loss, lv_dS, lv_dQ = _euclidean_pass(
                model.W, S_raw, gs, Q_raw, tq, cfg.tau, len(nodes)
            )
            loss += weights[lv] * lv_loss
            dS += weights[lv] * lv_dS
            dQ += weights[lv] * lv_dQ
    else:
        labels, label_ix = _indexed(sy)
        missing = sorted(set(qy) - set(labels))
        if missing:
            raise DataValidationError(
                f"query label {missing[0]!r} not among episode classes"
            )
        gs = np.asarray([label_ix[lab] for lab in sy])
        tq = np.asarray([label_ix[lab] for lab in qy])
        if cfg.metric == "euclidean":
            loss, dS, dQ = _euclidean_pass(
                model.W, S_raw, gs, Q_raw, tq, cfg.tau, len(labels)
            )
        elif cfg.metric == "cosine":
            loss, dS, dQ = _cosine_pass(S, gs, Q, tq, cfg.tau, len(labels))
        else:
            loss, dS, dQ = _hyperbolic_pass(S, gs, Q, tq, cfg, len(labels))

    grad_W = dS.T @ S_raw + dQ.T @ Q_raw
    grad_b = dS.sum(axis=0) + dQ.sum(axis=0)
    return float(loss), grad_W, grad_b


_CHECK_THRESHOLDS = {
    "euclidean": 1e-5,
    "cosine": 1e-5,
    "hierarchical": 1e-4,
    "hyperbolic": 1e-4,
}


@dataclass
class GradCheckReport:
    """Analytic-versus-central-difference comparison for one instance."""

    metric: str
    loss: float
    max_rel_error_W: float
    max_rel_error_b: float
    threshold: float
    passed: bool
    h_step: float

    @property
    def max_rel_error(self) -> float:
        return max(self.max_rel_error_W, self.max_rel_error_b)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "loss": self.loss,
            "max_rel_error_W": self.max_rel_error_W,
            "max_rel_error_b": self.max_rel_error_b,
            "threshold": self.threshold,
            "h_step": self.h_step,
            "passed": self.passed,
        }


def finite_difference_check(
    model: ProjectionModel,
    episode: Episode,
    cfg: HeadConfig,
    hierarchy: ClassHierarchy | None = None,
    h_step: float = 1e-6,
    threshold: float | None = None,
    max_params: int = 4096,
) -> GradCheckReport:
    """Exhaustive central-difference validation of ``loss_and_gradients``.

    Relative error per parameter is ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    if not (np.isfinite(h_step) and h_step > 0):
        raise GradientError(f"h_step must be positive, got {h_step!r}")
    n_params = model.W.size + model.b.size
    if n_params > max_params:
        raise GradientError(
            f"{n_params} parameters exceed the exhaustive-check limit {max_params}"
        )
    if threshold is None:
        threshold = _CHECK_THRESHOLDS[cfg.metric]

    loss, grad_W, grad_b = loss_and_gradients(model, episode, cfg, hierarchy)

    def loss_at(W, b) -> float:
        probe = ProjectionModel(W=W, b=b)
        value, _, _ = loss_and_gradients(probe, episode, cfg, hierarchy)
        return value

    def rel_errors(param: np.ndarray, analytic: np.ndarray) -> float:
        worst = 0.0
        flat = param.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h_step
            up = loss_at(model.W, model.b)
            flat[i] = orig - h_step
            down = loss_at(model.W, model.b)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h_step)
            a = analytic.ravel()[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
        return worst

    err_W = float(rel_errors(model.W, grad_W))
    err_b = float(rel_errors(model.b, grad_b))
    return GradCheckReport(
        metric=cfg.metric,
        loss=loss,
        max_rel_error_W=err_W,
        max_rel_error_b=err_b,
        threshold=threshold,
        passed=bool(max(err_W, err_b) < threshold),
        h_step=h_step,
    )


@dataclass
class TrainConfig:
    """Meta-training hyper-parameters; ``lr=None`` resolves per metric."""

    head: HeadConfig = field(default_factory=HeadConfig)
    k: int = 5
    n_shot: int = 5
    n_query: int = 15
    lr: float | None = None
    momentum: float = 0.9
    weight_decay: float = 0.0005
    epochs: int = 5
    episodes_per_epoch: int = 500
    batch_episodes: int = 2
    val_episodes: int = 500
    out_dim: int | None = None
    seed: int = 0

    def resolved_lr(self) -> float:
        if self.lr is not None:
            return self.lr
        return 1e-4 if self.head.metric == "hyperbolic" else 1e-3

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.episodes_per_epoch < 1 or self.batch_episodes < 1:
            raise ConfigError("episodes_per_epoch and batch_episodes must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0.0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.lr is not None and self.lr <= 0.0:
            raise ConfigError(f"lr must be positive, got {self.lr}")


@dataclass
class TrainResult:
    model: ProjectionModel
    best_model: ProjectionModel
    best_epoch: int
    best_val_acc: float | None
    curve: list[dict]
    config: TrainConfig


def _episode_accuracy(
    model: ProjectionModel,
    ep: Episode,
    cfg: HeadConfig,
    hierarchy: ClassHierarchy | None,
) -> float:
    clf = PrototypeClassifier(
        metric=cfg.metric,
        tau=cfg.tau,
        c=cfg.c,
        r=cfg.r,
        gamma=cfg.gamma,
        hierarchy=hierarchy,
    ).fit(model.project(ep.support_X), ep.support_y)
    return float((clf.predict(model.project(ep.query_X)) == ep.query_y).mean())


def evaluate_accuracy(
    model: ProjectionModel,
    data: EmbeddingSet,
    classes,
    cfg: HeadConfig,
    *,
    k: int,
    n_shot: int,
    n_query: int,
    episodes: int,
    seed: int,
    stream: int = _STREAM_VAL,
    hierarchy: ClassHierarchy | None = None,
) -> float:
    """Mean overall accuracy of the projected model over sampled episodes."""
    accs = []
    for i in range(episodes):
        rng = derive_rng(seed, stream, i)
        ep = sample_episode(data, classes, k, n_shot, n_query, rng, index=i)
        accs.append(_episode_accuracy(model, ep, cfg, hierarchy))
    return float(np.mean(accs))


def meta_train(
    data: EmbeddingSet,
    base_classes,
    val_classes,
    hierarchy: ClassHierarchy | None,
    cfg: TrainConfig,
) -> TrainResult:
    """Episodic SGD over base-split episodes, tracking the best-on-val model.

    Loss is averaged over ``batch_episodes`` episodes before each parameter
    step; after every epoch the model is scored on ``val_episodes`` episodes
    from the validation classes and the highest-accuracy weights are kept.
    Fully deterministic given the seed.
    """
    base = sorted(set(str(c) for c in base_classes))
    val = sorted(set(str(c) for c in val_classes))
    if not base or not val:
        raise DataValidationError("base and val class lists must be nonempty")
    in_dim = data.dim
    out_dim = cfg.out_dim or in_dim
    model = ProjectionModel.initialize(in_dim, out_dim, derive_rng(cfg.seed, _STREAM_INIT))
    state = SgdState.zeros_like(model)
    lr = cfg.resolved_lr()

    best_model = model.copy()
    best_epoch = 0
    best_val: float | None = None
    curve: list[dict] = []
    global_index = 0

    for epoch in range(1, cfg.epochs + 1):
        epoch_losses = []
        batch_W = np.zeros_like(model.W)
        batch_b = np.zeros_like(model.b)
        in_batch = 0
        for _ in range(cfg.episodes_per_epoch):
            rng = derive_rng(cfg.seed, _STREAM_TRAIN, global_index)
            ep = sample_episode(
                data, base, cfg.k, cfg.n_shot, cfg.n_query, rng, index=global_index
            )
            loss, gW, gb = loss_and_gradients(model, ep, cfg.head, hierarchy)
            epoch_losses.append(loss)
            batch_W += gW
            batch_b += gb
            in_batch += 1
            global_index += 1
            if in_batch == cfg.batch_episodes:
                sgd_step(
                    model,
                    batch_W / in_batch,
                    batch_b / in_batch,
                    state,
                    lr=lr,
                    momentum=cfg.momentum,
                    weight_decay=cfg.weight_decay,
                )
                batch_W[:] = 0.0
                batch_b[:] = 0.0
                in_batch = 0
        if in_batch:
            sgd_step(
                model,
                batch_W / in_batch,
                batch_b / in_batch,
                state,
                lr=lr,
                momentum=cfg.momentum,
                weight_decay=cfg.weight_decay,
            )
        val_acc = evaluate_accuracy(
            model,
            data,
            val,
            cfg.head,
            k=min(cfg.k, len(val)),
            n_shot=cfg.n_shot,
            n_query=cfg.n_query,
            episodes=cfg.val_episodes,
            seed=cfg.seed,
            stream=_STREAM_VAL + epoch,
            hierarchy=hierarchy,
        )
        curve.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(epoch_losses)),
                "val_acc": val_acc,
            }
        )
        if best_val is None or val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_model = model.copy()

    return TrainResult(
        model=model,
        best_model=best_model,
        best_epoch=best_epoch,
        best_val_acc=best_val,
        curve=curve,
        config=cfg,
    )


# -- checkpoints --------------------------------------------------------------

CHECKPOINT_FORMAT = "protoshot-checkpoint"
CHECKPOINT_VERSION = 1


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def save_checkpoint(
    path,
    model: ProjectionModel,
    config: dict,
    state: SgdState | None = None,
) -> None:
    """Versioned JSON dump of W, b, optimizer state and a config hash."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config_hash": config_hash(config),
        "config": config,
        "in_dim": model.in_dim,
        "out_dim": model.out_dim,
        "W": model.W.tolist(),
        "b": model.b.tolist(),
        "vel_W": state.vel_W.tolist() if state is not None else None,
        "vel_b": state.vel_b.tolist() if state is not None else None,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path):
    """Returns (model, optimizer state or None, config dict)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataValidationError(f"cannot read checkpoint: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataValidationError(
            f"{path}:{exc.lineno}: invalid JSON: {exc.msg}"
        ) from None
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise DataValidationError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise DataValidationError(
            f"{path}: unsupported checkpoint version {payload.get('version')!r}"
        )
    config = payload.get("config", {})
    if config and payload.get("config_hash") != config_hash(config):
        raise DataValidationError(f"{path}: config hash mismatch")
    model = ProjectionModel(W=np.asarray(payload["W"]), b=np.asarray(payload["b"]))
    state = None
    if payload.get("vel_W") is not None:
        state = SgdState(
            vel_W=np.asarray(payload["vel_W"], dtype=np.float64),
            vel_b=np.asarray(payload["vel_b"], dtype=np.float64),
        )
    return model, state, config


class EpisodicProjectionTrainer(BaseEstimator, TransformerMixin):
    """sklearn-style wrapper around :func:`meta_train`.

    ``fit(X, y)`` meta-trains the projection on episodes drawn from
    ``base_classes`` (default: every label in ``y``) and keeps the weights
    with the best validation accuracy; ``transform(X)`` applies them.
    """

    def __init__(
        self,
        metric: str = "euclidean",
        tau: float = 1.0,
        c: float = 0.01,
        r: float = 1.0,
        gamma: float = 2.0,
        hierarchy: ClassHierarchy | None = None,
        base_classes=None,
        val_classes=None,
        k: int = 5,
        n_shot: int = 5,
        n_query: int = 15,
        lr: float | None = None,
        momentum: float = 0.9,
        weight_decay: float = 0.0005,
        epochs: int = 5,
        episodes_per_epoch: int = 500,
        batch_episodes: int = 2,
        val_episodes: int = 500,
        out_dim: int | None = None,
        seed: int = 0,
    ):
        self.metric = metric
        self.tau = tau
        self.c = c
        self.r = r
        self.gamma = gamma
        self.hierarchy = hierarchy
        self.base_classes = base_classes
        self.val_classes = val_classes
        self.k = k
        self.n_shot = n_shot
        self.n_query = n_query
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.episodes_per_epoch = episodes_per_epoch
        self.batch_episodes = batch_episodes
        self.val_episodes = val_episodes
        self.out_dim = out_dim
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        labels = [str(v) for v in np.asarray(y).tolist()]
        data = EmbeddingSet.from_arrays(
            ids=[f"r{i}" for i in range(len(labels))], labels=labels, vectors=X
        )
        base = self.base_classes if self.base_classes is not None else sorted(set(labels))
        val = self.val_classes if self.val_classes is not None else base
        head = HeadConfig(
            metric=self.metric, tau=self.tau, c=self.c, r=self.r, gamma=self.gamma
        )
        cfg = TrainConfig(
            head=head,
            k=self.k,
            n_shot=self.n_shot,
            n_query=self.n_query,
            lr=self.lr,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            epochs=self.epochs,
            episodes_per_epoch=self.episodes_per_epoch,
            batch_episodes=self.batch_episodes,
            val_episodes=self.val_episodes,
            out_dim=self.out_dim,
            seed=self.seed,
        )
        self.result_ = meta_train(data, base, val, self.hierarchy, cfg)
        self.model_ = self.result_.best_model
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.project(np.asarray(X, dtype=np.float64))
