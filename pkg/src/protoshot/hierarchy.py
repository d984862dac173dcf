"""Rooted equal-depth class taxonomy and the level-weight schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .exceptions import HierarchyError


@dataclass(frozen=True)
class ClassHierarchy:
    """Immutable rooted tree over class labels.

    The root sits at level 1 and every leaf at level ``height``; trees with
    leaves at mixed depths are rejected at construction because per-level
    prototypes and losses index levels uniformly.
    """

    root: str
    parent: dict[str, str] = field(repr=False)
    children: dict[str, tuple[str, ...]] = field(repr=False)
    depth: dict[str, int] = field(repr=False)
    height: int = 0
    leaves: tuple[str, ...] = ()

    @classmethod
    def from_edges(cls, edges) -> "ClassHierarchy":
        """Build and validate a hierarchy from (parent, child) pairs."""
        edges = list(edges)
        if not edges:
            raise HierarchyError("hierarchy needs at least one edge")
        parent: dict[str, str] = {}
        children: dict[str, list[str]] = {}
        nodes: set[str] = set()
        for p, ch in edges:
            p, ch = str(p), str(ch)
            if ch in parent:
                raise HierarchyError(
                    f"duplicate parent for node {ch!r}: {parent[ch]!r} and {p!r}"
                )
            if p == ch:
                raise HierarchyError(f"cycle detected: self-edge on {ch!r}")
            parent[ch] = p
            children.setdefault(p, []).append(ch)
            nodes.update((p, ch))

        roots = sorted(nodes - parent.keys())
        if len(roots) > 1:
            raise HierarchyError(f"multiple roots: {roots}")
        if not roots:
            raise HierarchyError("cycle detected: no root node")
        root = roots[0]

        depth: dict[str, int] = {}
        for node in nodes:
            chain = []
            cur = node
            while cur not in depth and cur != root:
                chain.append(cur)
                cur = parent[cur]
                if len(chain) > len(nodes):
                    raise HierarchyError(f"cycle detected near node {node!r}")
            base = 1 if cur == root else depth[cur]
            for offset, n in enumerate(reversed(chain), start=1):
                depth[n] = base + offset
        depth[root] = 1

        leaves = sorted(n for n in nodes if n not in children)
        leaf_depths = {depth[n] for n in leaves}
        if len(leaf_depths) > 1:
            detail = ", ".join(f"{n}@{depth[n]}" for n in leaves)
            raise HierarchyError(f"unequal leaf depth: {detail}")
        height = leaf_depths.pop()
        return cls(
            root=root,
            parent=parent,
            children={p: tuple(sorted(c)) for p, c in children.items()},
            depth=depth,
            height=height,
            leaves=tuple(leaves),
        )

    @property
    def leaf_set(self) -> frozenset:
        return frozenset(self.leaves)

    def ancestor_at_level(self, label: str, level: int) -> str:
        """The unique node at ``level`` on the root-to-``label`` path."""
        if label not in self.leaf_set:
            raise HierarchyError(f"unknown class (not a leaf): {label!r}")
        if not 1 <= level <= self.height:
            raise HierarchyError(
                f"level {level} out of range [1, {self.height}]"
            )
        node = label
        for _ in range(self.height - level):
            node = self.parent[node]
        return node

    def ancestors(self, label: str) -> tuple[str, ...]:
        """Nodes on the path at levels 2..height, leaf included, root excluded."""
        return tuple(
            self.ancestor_at_level(label, lv) for lv in range(2, self.height + 1)
        )

    def nodes_at_level(self, level: int) -> tuple[str, ...]:
        return tuple(sorted(n for n, d in self.depth.items() if d == level))

    def to_edges(self) -> list[tuple[str, str]]:
        """Deterministic edge list; feeding it back reproduces the same tree."""
        return sorted((p, ch) for ch, p in self.parent.items())


@dataclass(frozen=True)
class LevelWeights:
    """Convex weights over hierarchy levels 2..height controlled by gamma."""

    gamma: float
    weights: dict[int, float]

    def __getitem__(self, level: int) -> float:
        return self.weights[level]


def level_weights(gamma: float, height: int) -> LevelWeights:
    """Weights proportional to ``gamma ** (level - 1)`` over levels 2..height.

    gamma > 1 emphasises deep levels, gamma < 1 shallow ones, gamma = 1 is
    uniform. Computed in log space so adversarially large gamma/height do not
    overflow.
    """
    if not (math.isfinite(gamma) and gamma > 0):
        raise HierarchyError(f"gamma must be positive and finite, got {gamma!r}")
    if height < 2:
        raise HierarchyError(f"height must be at least 2, got {height}")
    log_g = math.log(gamma)
    exponents = [(lv - 1) * log_g for lv in range(2, height + 1)]
    peak = max(exponents)
    scaled = [math.exp(e - peak) for e in exponents]
    total = sum(scaled)
    return LevelWeights(
        gamma=gamma,
        weights={lv: s / total for lv, s in zip(range(2, height + 1), scaled)},
    )


def parse_hierarchy(text: str, source: str = "<hierarchy>") -> ClassHierarchy:
    """Parse tab-separated ``parent<TAB>child`` lines; ``#`` starts a comment."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise HierarchyError(
                f"{source}:{lineno}: expected 'parent<TAB>child', got {raw!r}"
            )
        p, ch = parts[0].strip(), parts[1].strip()
        if any(c.isspace() for c in p + ch):
            raise HierarchyError(
                f"{source}:{lineno}: labels must be whitespace-free tokens"
            )
        edges.append((p, ch))
    if not edges:
        raise HierarchyError(f"{source}: no edges found")
    return ClassHierarchy.from_edges(edges)


def load_hierarchy(path) -> ClassHierarchy:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise HierarchyError(f"cannot read hierarchy file: {exc}") from None
    return parse_hierarchy(text, source=str(path))


def save_hierarchy(h: ClassHierarchy, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p, ch in h.to_edges():
            fh.write(f"{p}\t{ch}\n")
