"""Poincare-ball and Klein-model arithmetic.

All operations work on float64 numpy arrays whose last axis is the point
dimension; leading axes broadcast. Curvature is carried by a
:class:`PoincareBall` instance, so every point entering an operation lives on
the same ball by construction. The ball of curvature -c is the open set
``{x : c * ||x||^2 < 1}`` (radius ``1/sqrt(c)``); the isometric Klein model
uses the same radius.

Numeric guards: results of ball-valued operations are rescaled to norm
``(1 - 1e-12)/sqrt(c)`` if rounding pushes them onto or past the boundary,
and artanh arguments are clamped to ``1 - 1e-15``.
"""

from __future__ import annotations

import numpy as np

from .exceptions import CoincidentPointsError, GeometryError

# Rescale target for points that numerically escape the open ball.
BOUNDARY_EPS = 1e-12
# Largest argument fed to artanh.
ATANH_MAX = 1.0 - 1e-15


def _as_points(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise GeometryError(f"{name} must have at least one dimension")
    if not np.isfinite(x).all():
        raise GeometryError(f"{name} contains non-finite values")
    return x


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise GeometryError(
            f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}"
        )


def _sq_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def _lex_less(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise lexicographic a < b over the last axis."""
    diff = a != b
    any_diff = diff.any(axis=-1)
    first = np.argmax(diff, axis=-1)
    av = np.take_along_axis(a, first[..., None], axis=-1)[..., 0]
    bv = np.take_along_axis(b, first[..., None], axis=-1)[..., 0]
    return any_diff & (av < bv)


def clip_features(x, r: float) -> np.ndarray:
    """Rescale each row of ``x`` to norm at most ``r``, preserving direction.

    Rows with norm <= r are returned unchanged; the zero vector maps to
    itself (no division is attempted).
    """
    if not (np.isfinite(r) and r > 0):
        raise GeometryError(f"clip radius must be positive and finite, got {r!r}")
    x = _as_points(x, "x")
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.ones_like(norms)
    over = norms > r
    np.divide(r, norms, out=scale, where=over)
    return x * scale


class PoincareBall:
    """Poincare ball of curvature ``-c`` with its Klein-model companion.

    Parameters
    ----------
    c : float
        Positive, finite curvature magnitude. The ball radius is 1/sqrt(c).
    """

    def __init__(self, c: float):
        c = float(c)
        if not (np.isfinite(c) and c > 0):
            raise GeometryError(f"curvature must be positive and finite, got {c!r}")
        self.c = c
        self._sqrt_c = np.sqrt(c)

    def __repr__(self) -> str:
        return f"PoincareBall(c={self.c!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PoincareBall) and other.c == self.c

    def __hash__(self) -> int:
        return hash((PoincareBall, self.c))

    # -- membership ---------------------------------------------------------

    def check_point(self, x, name: str = "x") -> np.ndarray:
        """Validate that every row of ``x`` lies strictly inside the ball."""
        x = _as_points(x, name)
        if np.any(self.c * _sq_norm(x) >= 1.0):
            raise GeometryError(
                f"{name} is not inside the ball of radius 1/sqrt({self.c})"
            )
        return x

    def project(self, x) -> np.ndarray:
        """Pull boundary-escaped rows back to norm ``(1 - 1e-12)/sqrt(c)``."""
        x = np.asarray(x, dtype=np.float64)
        escaped = self.c * _sq_norm(x) >= 1.0
        if np.any(escaped):
            norms = np.linalg.norm(x, axis=-1, keepdims=True)
            target = (1.0 - BOUNDARY_EPS) / self._sqrt_c
            scale = np.ones_like(norms)
            np.divide(target, norms, out=scale, where=escaped[..., None])
            x = x * scale
        return x

    # -- Poincare-model operations ------------------------------------------

    def conformal_factor(self, x):
        """Metric scaling 2 / (1 - c * ||x||^2); grows without bound at the rim."""
        x = _as_points(x, "x")
        denom = 1.0 - self.c * _sq_norm(x)
        if np.any(denom <= 0.0):
            raise GeometryError("point is on or outside the ball boundary")
        return 2.0 / denom

    def mobius_add(self, x, y) -> np.ndarray:
        """Gyrovector addition of ``y`` to ``x``. Non-commutative."""
        x = self.check_point(x, "x")
        y = self.check_point(y, "y")
        _check_same_dim(x, y)
        c = self.c
        x2 = _sq_norm(x)[..., None]
        y2 = _sq_norm(y)[..., None]
        xy = np.sum(x * y, axis=-1)[..., None]
        num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
        denom = 1.0 + 2.0 * c * xy + c * c * x2 * y2
        return self.project(num / denom)

    def distance(self, x, y):
        """Geodesic distance ``(2/sqrt(c)) * artanh(sqrt(c) * ||(-x) + y||)``.

        Arguments are ordered canonically before evaluation so that
        ``distance(x, y)`` and ``distance(y, x)`` are bitwise equal.
        """
        x = _as_points(x, "x")
        y = _as_points(y, "y")
        _check_same_dim(x, y)
        x, y = np.broadcast_arrays(x, y)
        swap = _lex_less(y, x)[..., None]
        lo = np.where(swap, y, x)
        hi = np.where(swap, x, y)
        m = self.mobius_add(-lo, hi)
        arg = np.minimum(self._sqrt_c * np.linalg.norm(m, axis=-1), ATANH_MAX)
        return 2.0 / self._sqrt_c * np.arctanh(arg)

    def exp_map(self, z, v) -> np.ndarray:
        """Map tangent vector ``v`` at base point ``z`` onto the ball.

        Reduces to ``tanh(sqrt(c)*||v||) * v / (sqrt(c)*||v||)`` at the origin
        and to ``z`` for ``v = 0``.
        """
        z = self.check_point(z, "z")
        v = _as_points(v, "v")
        _check_same_dim(z, v)
        vn = np.linalg.norm(v, axis=-1, keepdims=True)
        lam = self.conformal_factor(z)[..., None]
        t = np.tanh(self._sqrt_c * lam * vn / 2.0)
        safe = np.where(vn > 0.0, vn, 1.0)
        # tanh saturates to exactly 1 for huge tangents; pull inside first
        step = self.project(t * v / (self._sqrt_c * safe))
        return self.mobius_add(z, step)

    def exp_map0(self, v) -> np.ndarray:
        """Exponential map at the origin (the hot path for feature lifting)."""
        v = _as_points(v, "v")
        vn = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(vn > 0.0, vn, 1.0)
        out = np.tanh(self._sqrt_c * vn) * v / (self._sqrt_c * safe)
        return self.project(out)

    # -- Klein-model operations ---------------------------------------------

    def to_klein(self, x) -> np.ndarray:
        """Poincare -> Klein: ``2x / (1 + c * ||x||^2)``."""
        x = self.check_point(x, "x")
        out = 2.0 * x / (1.0 + self.c * _sq_norm(x)[..., None])
        return self.project(out)

    def from_klein(self, k) -> np.ndarray:
        """Klein -> Poincare: ``k / (1 + sqrt(1 - c * ||k||^2))``."""
        k = self.check_point(k, "k")
        sq = np.maximum(1.0 - self.c * _sq_norm(k)[..., None], 0.0)
        out = k / (1.0 + np.sqrt(sq))
        return self.project(out)

    def einstein_midpoint(self, ks) -> np.ndarray:
        """Lorentz-factor weighted mean of Klein points ``ks`` of shape (n, d).

        Weights are ``(1 - c * ||k||^2) ** -0.5``; the result stays inside the
        Klein ball.
        """
        ks = _as_points(ks, "ks")
        if ks.ndim == 1:
            ks = ks[None, :]
        if ks.shape[0] == 0:
            raise GeometryError("einstein_midpoint needs at least one point")
        denom = 1.0 - self.c * _sq_norm(ks)
        if np.any(denom <= 0.0):
            raise GeometryError("Klein point on or outside the ball boundary")
        gamma = denom ** -0.5
        mid = (gamma[:, None] * ks).sum(axis=0) / gamma.sum()
        return self.project(mid)

    # -- derivatives ----------------------------------------------------------

    def distance_grad(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of :meth:`distance` with respect to both arguments.

        Uses the arcosh form of the same metric,
        ``d = arcosh(1 + 2c*||x-y||^2 / ((1-c||x||^2)(1-c||y||^2))) / sqrt(c)``,
        whose derivative is closed-form. Undefined at coincident points.
        """
        x = _as_points(x, "x")
        y = _as_points(y, "y")
        _check_same_dim(x, y)
        x, y = np.broadcast_arrays(x, y)
        diff = x - y
        a = _sq_norm(diff)
        if np.any(a == 0.0):
            raise CoincidentPointsError("distance gradient undefined at x == y")
        gx, gy = self._distance_grad_unchecked(x, y)
        return gx, gy

    def _distance_grad_unchecked(self, x, y):
        """Gradient pair without the coincidence check; 0 rows where x == y."""
        c = self.c
        diff = x - y
        a = _sq_norm(diff)
        bx = 1.0 - c * _sq_norm(x)
        by = 1.0 - c * _sq_norm(y)
        e = 2.0 * c * a / (bx * by)
        root = np.sqrt(e * (e + 2.0))
        safe = np.where(root > 0.0, root, 1.0)
        coef = (4.0 * c / (self._sqrt_c * bx * by * safe))[..., None]
        gx = coef * (diff + (c * a / bx)[..., None] * x)
        gy = coef * (-diff + (c * a / by)[..., None] * y)
        zero = (a == 0.0)[..., None]
        if np.any(zero):
            gx = np.where(zero, 0.0, gx)
            gy = np.where(zero, 0.0, gy)
        return gx, gy
