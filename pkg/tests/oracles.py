"""Independent brute-force oracles used by the tests.

Everything here is computed scalar-wise with plain Python/math, and the
hyperbolic distance deliberately uses the arcosh closed form rather than the
library's artanh/Mobius route, so the two sides of every comparison are
independent implementations of the same definitions.
"""

import math


def softmax(scores):
    peak = max(scores)
    exps = [math.exp(s - peak) for s in scores]
    total = sum(exps)
    return [e / total for e in exps]


def nll(probs, target_index):
    return -math.log(probs[target_index])


def euclidean_distance(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def cosine_similarity(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def mean_vector(rows):
    n = len(rows)
    return [sum(col) / n for col in zip(*rows)]


def unit_vector(v):
    n = math.sqrt(sum(x * x for x in v))
    return v if n == 0.0 else [x / n for x in v]


def clip_vector(v, r):
    n = math.sqrt(sum(x * x for x in v))
    if n <= r:
        return list(v)
    return [r * x / n for x in v]


def exp_map_origin(v, c):
    n = math.sqrt(sum(x * x for x in v))
    if n == 0.0:
        return list(v)
    coef = math.tanh(math.sqrt(c) * n) / (math.sqrt(c) * n)
    return [coef * x for x in v]


def to_klein(x, c):
    denom = 1.0 + c * sum(v * v for v in x)
    return [2.0 * v / denom for v in x]


def from_klein(k, c):
    denom = 1.0 + math.sqrt(1.0 - c * sum(v * v for v in k))
    return [v / denom for v in k]


def einstein_midpoint(points, c):
    gammas = [(1.0 - c * sum(v * v for v in p)) ** -0.5 for p in points]
    total = sum(gammas)
    dim = len(points[0])
    return [sum(g * p[j] for g, p in zip(gammas, points)) / total for j in range(dim)]


def hyperbolic_distance(x, y, c):
    """arcosh form of the ball metric (independent of the Mobius route)."""
    dxy = sum((a - b) ** 2 for a, b in zip(x, y))
    bx = 1.0 - c * sum(a * a for a in x)
    by = 1.0 - c * sum(b * b for b in y)
    return math.acosh(1.0 + 2.0 * c * dxy / (bx * by)) / math.sqrt(c)


def level_weight_table(gamma, height):
    raw = {lv: gamma ** (lv - 1) for lv in range(2, height + 1)}
    total = sum(raw.values())
    return {lv: v / total for lv, v in raw.items()}


def flat_probabilities(query, prototypes, metric, tau, c=None):
    """Probability row over sorted prototype labels, computed by enumeration."""
    labels = sorted(prototypes)
    if metric == "cosine":
        scores = [
            cosine_similarity(query, unit_vector(prototypes[lab])) / tau
            for lab in labels
        ]
    elif metric == "hyperbolic":
        scores = [
            -hyperbolic_distance(query, prototypes[lab], c) / tau for lab in labels
        ]
    else:
        scores = [-euclidean_distance(query, prototypes[lab]) / tau for lab in labels]
    return labels, softmax(scores)


def flat_loss(queries, query_labels, prototypes, metric, tau, c=None):
    total = 0.0
    for q, lab in zip(queries, query_labels):
        labels, probs = flat_probabilities(q, prototypes, metric, tau, c=c)
        total += nll(probs, labels.index(lab))
    return total / len(queries)


def hyperbolic_prototypes(support, support_labels, c, r):
    """Full clip -> lift -> Klein -> midpoint -> Poincare pipeline, scalar-wise."""
    lifted = {}
    for vec, lab in zip(support, support_labels):
        k = to_klein(exp_map_origin(clip_vector(vec, r), c), c)
        lifted.setdefault(lab, []).append(k)
    return {
        lab: from_klein(einstein_midpoint(pts, c), c) for lab, pts in lifted.items()
    }


def lift_query(q, c, r):
    return exp_map_origin(clip_vector(q, r), c)
