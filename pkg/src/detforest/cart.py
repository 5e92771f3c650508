"""Single CART classification trees with pinned determinism rules.

Everything that an implementation could plausibly do differently is fixed
here and documented, because each unpinned choice is a reproducibility
hazard:

* impurity is the Gini index, with the class-square sum accumulated in
  class-index order;
* the weighted child impurity is ``(nL*gL + nR*gR) / n``, left term first;
* candidate thresholds are midpoints of adjacent distinct sorted values;
* routing is ``x[feature] <= threshold`` goes left;
* a split is adopted only if it strictly reduces the weighted impurity
  (by more than ``TIE_TOL``);
* ties within ``TIE_TOL`` are broken by an explicit policy, either the
  candidate draw order (what the popular packages effectively do) or the
  lowest feature index then lowest threshold (fully deterministic).

Two node-size semantics coexist because real packages disagree on what
their "node size" parameter does: MIN_SPLIT refuses to split nodes smaller
than the limit (children may be arbitrarily small), MIN_LEAF rejects any
split that would produce a child below the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import zip_longest

import numpy as np

from .dataset import Dataset
from .prng import RngState, shuffle

# Impurity comparisons treat values within this tolerance as tied.
TIE_TOL = 1e-12


class NodeSizeSemantics(Enum):
    MIN_SPLIT = "min-split"
    MIN_LEAF = "min-leaf"


class TieBreak(Enum):
    FIRST_IN_DRAW_ORDER = "first-in-draw-order"
    LOWEST_FEATURE_INDEX = "lowest-feature-index"


@dataclass(frozen=True)
class ClassCounts:
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


def class_counts_of(labels: np.ndarray, c: int) -> ClassCounts:
    return ClassCounts(tuple(int(v) for v in np.bincount(labels, minlength=c)))


def gini(counts: ClassCounts) -> float:
    """Gini impurity 1 - sum(p_i^2); an empty node has impurity 0."""
    total = counts.total
    if total == 0:
        return 0.0
    acc = 0.0
    for count in counts.counts:
        p = count / total
        acc += p * p
    return 1.0 - acc


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left_counts: ClassCounts
    right_counts: ClassCounts
    weighted_child_impurity: float
    impurity_decrease: float


@dataclass(frozen=True)
class Leaf:
    n_samples: int
    class_counts: tuple[int, ...]
    gini: float
    class_distribution: tuple[float, ...]


@dataclass(frozen=True)
class Internal:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    n_samples: int
    gini: float
    class_counts: tuple[int, ...]


TreeNode = Leaf | Internal


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    n_features: int
    n_classes: int


@dataclass(frozen=True)
class GrowConfig:
    """Tree-growth parameters (the per-tree slice of the forest config)."""

    mtry: int
    min_node_size: int = 1
    node_size_semantics: NodeSizeSemantics = NodeSizeSemantics.MIN_SPLIT
    max_depth: int | None = None
    tie_break: TieBreak = TieBreak.LOWEST_FEATURE_INDEX

    def validate(self, p: int) -> None:
        if not 1 <= self.mtry <= p:
            raise ValueError(f"mtry must be in [1, {p}], got {self.mtry}")
        if self.min_node_size < 1:
            raise ValueError(f"min_node_size must be >= 1, got {self.min_node_size}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1 or None, got {self.max_depth}")


def draw_candidates(rng: RngState, p: int, mtry: int) -> tuple[list[int], RngState]:
    """First mtry entries of a fresh permutation of [0, p), in draw order.

    The order is preserved (never sorted) because it feeds the
    FIRST_IN_DRAW_ORDER tie-break.  The draw happens even when mtry = p:
    all features are candidates then, but still in random order.
    """
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must be in [1, {p}], got {mtry}")
    perm, rng = shuffle(rng, p)
    return perm[:mtry], rng


def _midpoints(xs: np.ndarray) -> np.ndarray:
    # (a + b) / 2 everywhere it is finite; a/2 + b/2 where the sum would
    # overflow (values are non-negative, so halves cannot cancel badly).
    with np.errstate(over="ignore"):
        mid = (xs[:-1] + xs[1:]) / 2.0
    over = np.isinf(mid)
    if over.any():
        mid = np.where(over, xs[:-1] / 2.0 + xs[1:] / 2.0, mid)
    # Midpoint may round up onto the right value; push it back so that
    # `x <= threshold` routes exactly the left block left.
    return np.where(mid == xs[1:], xs[:-1], mid)


def best_split(
    ds: Dataset,
    row_indices: np.ndarray,
    candidates: list[int],
    parent: ClassCounts,
    cfg: GrowConfig,
) -> Split | None:
    """Best admissible split of the node, or None if nothing qualifies.

    Candidates are scanned in the given order; within a feature, every
    boundary between adjacent distinct sorted values is evaluated.  The
    minimum weighted child impurity defines a tie window of width TIE_TOL;
    the returned split is the window member selected by cfg.tie_break
    (FIRST_IN_DRAW_ORDER: first encountered; LOWEST_FEATURE_INDEX: smallest
    feature index, then smallest threshold).
    """
    idx = np.asarray(row_indices, dtype=np.intp)
    n = idx.size
    if n == 0:
        raise ValueError("row_indices must be non-empty")
    parent_gini = gini(parent)
    y = ds.labels[idx]
    min_leaf = cfg.min_node_size if cfg.node_size_semantics is NodeSizeSemantics.MIN_LEAF else 1

    scans: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]] = []
    best_weighted = math.inf
    for f in candidates:
        x = ds.features[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        ys = y[order]
        cuttable = xs[:-1] != xs[1:]
        if not cuttable.any():
            continue
        nl = np.arange(1, n, dtype=np.int64)
        nr = n - nl
        gl_acc = np.zeros(n - 1)
        gr_acc = np.zeros(n - 1)
        for k in range(ds.c):
            cl = np.cumsum(ys == k)[:-1]
            pl = cl / nl
            pr = (parent.counts[k] - cl) / nr
            gl_acc = gl_acc + pl * pl
            gr_acc = gr_acc + pr * pr
        weighted = (nl * (1.0 - gl_acc) + nr * (1.0 - gr_acc)) / n
        admissible = cuttable & (weighted < parent_gini - TIE_TOL)
        if min_leaf > 1:
            admissible &= (nl >= min_leaf) & (nr >= min_leaf)
        if not admissible.any():
            continue
        scans.append((f, _midpoints(xs), weighted, admissible))
        f_best = float(weighted[admissible].min())
        if f_best < best_weighted:
            best_weighted = f_best

    if not scans:
        return None

    window = best_weighted + TIE_TOL
    chosen: tuple[int, int, float, float] | None = None
    for f, thresholds, weighted, admissible in scans:
        qualify = admissible & (weighted <= window)
        if not qualify.any():
            continue
        j = int(np.argmax(qualify))
        if chosen is None:
            chosen = (f, j, float(thresholds[j]), float(weighted[j]))
            if cfg.tie_break is TieBreak.FIRST_IN_DRAW_ORDER:
                break
        elif cfg.tie_break is TieBreak.LOWEST_FEATURE_INDEX and f < chosen[0]:
            chosen = (f, j, float(thresholds[j]), float(weighted[j]))
    assert chosen is not None

    f, j, threshold, weighted_value = chosen
    x = ds.features[idx, f]
    order = np.argsort(x, kind="stable")
    ys = y[order]
    left = tuple(int(v) for v in np.bincount(ys[: j + 1], minlength=ds.c))
    right = tuple(total_k - left_k for total_k, left_k in zip(parent.counts, left))
    return Split(
        feature=f,
        threshold=threshold,
        left_counts=ClassCounts(left),
        right_counts=ClassCounts(right),
        weighted_child_impurity=weighted_value,
        impurity_decrease=parent_gini - weighted_value,
    )


def _make_leaf(counts: ClassCounts, g: float) -> Leaf:
    total = counts.total
    return Leaf(
        n_samples=total,
        class_counts=counts.counts,
        gini=g,
        class_distribution=tuple(count / total for count in counts.counts),
    )


def grow_tree(ds: Dataset, row_indices: np.ndarray, cfg: GrowConfig, rng: RngState) -> DecisionTree:
    """Grow a tree on the given rows, threading the PRNG state in preorder.

    A node becomes a leaf when it is pure, when it sits at max_depth, when
    MIN_SPLIT semantics finds it smaller than min_node_size, or when no
    admissible split exists.  Fresh candidate features are drawn at every
    node that attempts a split; the left child is grown first and continues
    the stream where the node's draw left off.

    Uses explicit stacks rather than recursion: a fully grown tree can be
    deeper than the interpreter stack allows.  Nodes are visited in
    preorder (left child first), which makes the PRNG consumption order
    identical to the textbook recursive formulation.
    """
    cfg.validate(ds.p)
    idx = np.asarray(row_indices, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("row_indices must be non-empty")

    VISIT, ASSEMBLE = 0, 1
    work: list[tuple] = [(VISIT, idx, 0)]
    done: list[TreeNode] = []
    while work:
        item = work.pop()
        if item[0] == ASSEMBLE:
            _, sp, counts, g = item
            right_node = done.pop()
            left_node = done.pop()
            done.append(
                Internal(
                    feature=sp.feature,
                    threshold=sp.threshold,
                    left=left_node,
                    right=right_node,
                    n_samples=counts.total,
                    gini=g,
                    class_counts=counts.counts,
                )
            )
            continue

        _, node_idx, depth = item
        counts = class_counts_of(ds.labels[node_idx], ds.c)
        g = gini(counts)
        total = counts.total
        if (
            max(counts.counts) == total
            or (cfg.max_depth is not None and depth >= cfg.max_depth)
            or (cfg.node_size_semantics is NodeSizeSemantics.MIN_SPLIT and total < cfg.min_node_size)
        ):
            done.append(_make_leaf(counts, g))
            continue

        candidates, rng = draw_candidates(rng, ds.p, cfg.mtry)
        sp = best_split(ds, node_idx, candidates, counts, cfg)
        if sp is None:
            done.append(_make_leaf(counts, g))
            continue

        mask = ds.features[node_idx, sp.feature] <= sp.threshold
        # LIFO: the left visit lands on top so it is grown first; the
        # assemble record fires once both children sit on `done`.
        work.append((ASSEMBLE, sp, counts, g))
        work.append((VISIT, node_idx[~mask], depth + 1))
        work.append((VISIT, node_idx[mask], depth + 1))

    return DecisionTree(root=done[0], n_features=ds.p, n_classes=ds.c)


def iter_nodes(tree: DecisionTree):
    """Yield (node, depth) in preorder: parent, left subtree, right subtree."""
    stack: list[tuple[TreeNode, int]] = [(tree.root, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        if isinstance(node, Internal):
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))


def trees_equal_exact(a: DecisionTree, b: DecisionTree) -> bool:
    """True iff the trees have identical structure and bit-identical fields.

    Thresholds and impurities are compared as exact floats; this is the
    strong notion of equality (the canonical one lives in `canonical`).
    Iterative on purpose -- the generated dataclass __eq__ would recurse.
    """
    if a.n_features != b.n_features or a.n_classes != b.n_classes:
        return False
    for (na, da), (nb, db) in zip_longest(iter_nodes(a), iter_nodes(b), fillvalue=(None, -1)):
        if da != db or type(na) is not type(nb):
            return False
        if isinstance(na, Leaf):
            if (na.n_samples, na.class_counts, na.gini) != (nb.n_samples, nb.class_counts, nb.gini):
                return False
        else:
            assert isinstance(na, Internal) and isinstance(nb, Internal)
            if (na.feature, na.threshold, na.n_samples, na.class_counts, na.gini) != (
                nb.feature,
                nb.threshold,
                nb.n_samples,
                nb.class_counts,
                nb.gini,
            ):
                return False
    return True


def predict_leaf(tree: DecisionTree, x: np.ndarray) -> Leaf:
    """Route a sample to its leaf (`<= threshold` goes left)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.n_features,):
        raise ValueError(f"expected {tree.n_features} features, got shape {x.shape}")
    node = tree.root
    while isinstance(node, Internal):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def exhaustive_split_oracle(
    ds: Dataset, row_indices: np.ndarray, parent: ClassCounts
) -> list[Split]:
    """Brute-force reference for best_split, deliberately kept naive.

    Enumerates every boundary of every feature in plain Python and returns
    ALL splits whose weighted child impurity lies within TIE_TOL of the
    global minimum (subject to strict improvement), with no tie-breaking
    and no node-size constraints.  Pure nodes yield an empty list.
    """
    idx = [int(i) for i in np.asarray(row_indices, dtype=np.intp)]
    n = len(idx)
    if n == 0:
        raise ValueError("row_indices must be non-empty")
    c = ds.c
    parent_gini = gini(parent)

    found: list[tuple[float, Split]] = []
    for f in range(ds.p):
        pairs = sorted((float(ds.features[i, f]), int(ds.labels[i])) for i in idx)
        left = [0] * c
        for j in range(n - 1):
            left[pairs[j][1]] += 1
            if pairs[j][0] == pairs[j + 1][0]:
                continue
            nl = j + 1
            nr = n - nl
            gl_acc = 0.0
            gr_acc = 0.0
            for k in range(c):
                pl = left[k] / nl
                pr = (parent.counts[k] - left[k]) / nr
                gl_acc += pl * pl
                gr_acc += pr * pr
            weighted = (nl * (1.0 - gl_acc) + nr * (1.0 - gr_acc)) / n
            if weighted >= parent_gini - TIE_TOL:
                continue
            threshold = (pairs[j][0] + pairs[j + 1][0]) / 2.0
            if math.isinf(threshold):
                threshold = pairs[j][0] / 2.0 + pairs[j + 1][0] / 2.0
            if threshold == pairs[j + 1][0]:
                threshold = pairs[j][0]
            lc = ClassCounts(tuple(left))
            rc = ClassCounts(tuple(p - l for p, l in zip(parent.counts, left)))
            found.append(
                (
                    weighted,
                    Split(f, threshold, lc, rc, weighted, parent_gini - weighted),
                )
            )

    if not found:
        return []
    best = min(w for w, _ in found)
    return [s for w, s in found if w <= best + TIE_TOL]
