"""Seeded synthetic benchmark: Gaussian leaf clusters under a 3-level taxonomy.

Super-class centers are drawn at roughly unit norm; leaf centers are small
offsets from their super-class center, and samples add isotropic noise. The
resulting geometry separates super-classes strongly and sibling leaves only
moderately, which is what the hierarchical and hyperbolic heads care about.
"""

from __future__ import annotations

import numpy as np

from .data import DatasetSplit, EmbeddingSet
from .episodes import derive_rng
from .exceptions import DataValidationError
from .hierarchy import ClassHierarchy


def make_benchmark(
    n_super: int = 4,
    leaves_per_super: int = 3,
    dim: int = 32,
    samples_per_leaf: int = 40,
    super_scale: float = 1.0,
    leaf_scale: float = 0.6,
    noise_scale: float = 0.45,
    nuisance_scale: float = 1.1,
    signal_dim: int | None = None,
    seed: int = 7,
) -> tuple[EmbeddingSet, ClassHierarchy, DatasetSplit]:
    """Build (embeddings, hierarchy, splits) for a ``n_super x leaves`` tree.

    Class means live in the leading ``signal_dim`` coordinates (default half
    of ``dim``); the remaining coordinates carry class-independent noise at
    ``nuisance_scale``, which a learned linear projection can suppress but a
    random one cannot. Splits follow a fixed round-robin: the first leaf of
    each super-class is base, the second of the first three supers is val,
    and the remaining leaves are novel; novel therefore spans every
    super-class and contains a sibling pair.
    """
    if n_super < 2 or leaves_per_super < 2:
        raise DataValidationError("need at least 2 super-classes and 2 leaves each")
    signal_dim = signal_dim if signal_dim is not None else dim // 2
    if not 1 <= signal_dim <= dim:
        raise DataValidationError(f"signal_dim must be in [1, {dim}]")
    rng = derive_rng(seed, 7001)

    def _signal(scale: float) -> np.ndarray:
        vec = np.zeros(dim)
        vec[:signal_dim] = scale * rng.standard_normal(signal_dim) / np.sqrt(signal_dim)
        return vec

    edges = []
    leaves: list[str] = []
    centers: dict[str, np.ndarray] = {}
    for s in range(n_super):
        sup = f"g{s}"
        edges.append(("root", sup))
        mu = _signal(super_scale)
        for j in range(leaves_per_super):
            leaf = f"{sup}c{j}"
            edges.append((sup, leaf))
            leaves.append(leaf)
            centers[leaf] = mu + _signal(leaf_scale)
    hierarchy = ClassHierarchy.from_edges(edges)

    per_dim_std = np.full(dim, noise_scale / np.sqrt(dim))
    per_dim_std[signal_dim:] = nuisance_scale / np.sqrt(dim)
    ids, labels, rows = [], [], []
    for leaf in leaves:
        noise = per_dim_std * rng.standard_normal((samples_per_leaf, dim))
        for t, vec in enumerate(centers[leaf] + noise):
            ids.append(f"{leaf}_{t:03d}")
            labels.append(leaf)
            rows.append(vec)
    data = EmbeddingSet.from_arrays(ids, labels, np.asarray(rows))

    base = [f"g{s}c0" for s in range(n_super)]
    val = [f"g{s}c1" for s in range(min(3, n_super))]
    novel = [leaf for leaf in leaves if leaf not in set(base) | set(val)]
    split = DatasetSplit.from_mapping(
        {"base": base, "val": val, "novel": sorted(novel)}, source="<synthetic>"
    )
    split.validate_against(data.label_set, source="<synthetic>")
    return data, hierarchy, split
