"""Bagged forests of deterministic CART trees.

Tree k always consumes the PRNG stream derived from (seed, k): first the
bootstrap draw, then node-level candidate draws in preorder.  Because no
tree ever touches another tree's stream, the forest is bit-identical no
matter how many workers build it or in what order they finish.

Two aggregation modes exist because real packages disagree: majority vote
(each tree votes the argmax of its leaf distribution) and mean probability
(average the leaf distributions, then argmax).  With impure leaves the two
can legitimately classify a sample differently; with fully grown pure
leaves they coincide.

Forests serialize to a versioned JSON document with a flat preorder node
list per tree, so round-tripping never recurses and the bytes are a stable
function of the forest alone.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .cart import (
    DecisionTree,
    GrowConfig,
    Internal,
    Leaf,
    NodeSizeSemantics,
    TieBreak,
    TreeNode,
    grow_tree,
    predict_leaf,
)
from .dataset import Dataset, SplitIndices
from .prng import RngState, bounded_uint, derive_stream, shuffle

FOREST_SCHEMA = "detforest.forest.v1"

# mtry sentinel: every candidate feature at every node.
MTRY_ALL = "all"


class Aggregation(Enum):
    MAJORITY_VOTE = "majority-vote"
    MEAN_PROBABILITY = "mean-probability"


@dataclass(frozen=True)
class ForestConfig:
    """Everything that determines a forest, including the seed.

    mtry may be an explicit count, the string "all" (use every feature at
    every node), or None (the usual default: floor(sqrt(p)), resolved once
    the feature count is known).
    """

    n_trees: int = 50
    mtry: int | str | None = None
    min_node_size: int = 1
    node_size_semantics: NodeSizeSemantics = NodeSizeSemantics.MIN_SPLIT
    max_depth: int | None = None
    tie_break: TieBreak = TieBreak.LOWEST_FEATURE_INDEX
    bootstrap: bool = True
    sample_fraction: float = 1.0
    aggregation: Aggregation = Aggregation.MEAN_PROBABILITY
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError(
                f"sample_fraction must be in (0, 1], got {self.sample_fraction}"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if isinstance(self.mtry, str) and self.mtry != MTRY_ALL:
            raise ValueError(f"mtry must be an integer, {MTRY_ALL!r} or None, got {self.mtry!r}")
        if isinstance(self.mtry, int) and self.mtry < 1:
            raise ValueError(f"mtry must be >= 1, got {self.mtry}")

    def resolved_mtry(self, p: int) -> int:
        """Concrete candidate count for a dataset with p features."""
        if self.mtry is None:
            return max(1, math.isqrt(p))
        if self.mtry == MTRY_ALL:
            return p
        return self.mtry

    def to_grow_config(self, p: int) -> GrowConfig:
        cfg = GrowConfig(
            mtry=self.resolved_mtry(p),
            min_node_size=self.min_node_size,
            node_size_semantics=self.node_size_semantics,
            max_depth=self.max_depth,
            tie_break=self.tie_break,
        )
        cfg.validate(p)
        return cfg


@dataclass(frozen=True)
class Forest:
    trees: tuple[DecisionTree, ...]
    config: ForestConfig
    n_features: int
    n_classes: int


@dataclass(frozen=True)
class BootstrapSample:
    """Row indices for one tree, in draw order (a multiset when replace=True)."""

    indices: tuple[int, ...]


def bootstrap_sample(
    rng: RngState, n: int, replace: bool, fraction: float
) -> tuple[BootstrapSample, RngState]:
    """Draw round(fraction * n) indices from [0, n).

    With replacement: independent bounded draws, kept in draw order.
    Without replacement: the first k entries of a full shuffle of [0, n).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    k = round(fraction * n)
    if k < 1:
        raise ValueError(f"sample size round({fraction} * {n}) is zero")
    if replace:
        out = []
        for _ in range(k):
            v, rng = bounded_uint(rng, n)
            out.append(v)
        return BootstrapSample(indices=tuple(out)), rng
    perm, rng = shuffle(rng, n)
    return BootstrapSample(indices=tuple(perm[:k])), rng


def fit(ds: Dataset, split: SplitIndices, cfg: ForestConfig, n_workers: int = 1) -> Forest:
    """Train cfg.n_trees trees on the training rows of the split.

    Tree k derives its own stream from (cfg.seed, k) and uses it for the
    bootstrap draw and then for growth, so the result is independent of
    worker count and completion order.  When bootstrap is off and the
    fraction is 1 no sampling happens at all and every tree sees the full
    training set (then only tie-breaking can distinguish the trees).
    """
    if n_workers < 1:
        raise ValueError(f"n_workers must be >= 1, got {n_workers}")
    grow_cfg = cfg.to_grow_config(ds.p)
    train = np.asarray(split.train, dtype=np.intp)
    if train.size == 0:
        raise ValueError("split has no training rows")
    if train.min() < 0 or train.max() >= ds.n:
        raise ValueError("split training indices fall outside the dataset")
    skip_sampling = not cfg.bootstrap and cfg.sample_fraction == 1.0

    def build(k: int) -> DecisionTree:
        rng = derive_stream(cfg.seed, k)
        if skip_sampling:
            rows = train
        else:
            sample, rng = bootstrap_sample(rng, train.size, cfg.bootstrap, cfg.sample_fraction)
            rows = train[np.asarray(sample.indices, dtype=np.intp)]
        return grow_tree(ds, rows, grow_cfg, rng)

    if n_workers == 1:
        trees = [build(k) for k in range(cfg.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            trees = list(pool.map(build, range(cfg.n_trees)))
    return Forest(trees=tuple(trees), config=cfg, n_features=ds.p, n_classes=ds.c)


def _check_sample(f: Forest, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (f.n_features,):
        raise ValueError(f"expected {f.n_features} features, got shape {x.shape}")
    return x


def _argmax_lowest(values) -> int:
    """Index of the maximum; exact ties resolve to the lowest index."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def predict_majority(f: Forest, x: np.ndarray) -> int:
    """Each tree votes the argmax of its leaf distribution; plurality wins.

    Both the per-leaf argmax and the final vote break exact ties toward
    the lowest class id.
    """
    x = _check_sample(f, x)
    votes = [0] * f.n_classes
    for tree in f.trees:
        leaf = predict_leaf(tree, x)
        votes[_argmax_lowest(leaf.class_distribution)] += 1
    return _argmax_lowest(votes)


def predict_proba(f: Forest, x: np.ndarray) -> np.ndarray:
    """Mean of the leaf class distributions, accumulated in tree order."""
    x = _check_sample(f, x)
    acc = np.zeros(f.n_classes)
    for tree in f.trees:
        acc = acc + np.asarray(predict_leaf(tree, x).class_distribution)
    return acc / len(f.trees)


def predict_argmax_proba(f: Forest, x: np.ndarray) -> int:
    """Argmax of the mean probabilities; exact ties go to the lowest class id."""
    return _argmax_lowest(predict_proba(f, x))


def predict_class(f: Forest, x: np.ndarray, aggregation: Aggregation | None = None) -> int:
    """Predict one class id using the given (or the configured) aggregation."""
    agg = aggregation if aggregation is not None else f.config.aggregation
    if agg is Aggregation.MAJORITY_VOTE:
        return predict_majority(f, x)
    return predict_argmax_proba(f, x)


def predict_classes(
    f: Forest, features: np.ndarray, aggregation: Aggregation | None = None
) -> list[int]:
    """Predict a class id per row of a 2-D feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != f.n_features:
        raise ValueError(
            f"expected a 2-D matrix with {f.n_features} columns, got shape {features.shape}"
        )
    return [predict_class(f, features[i], aggregation) for i in range(features.shape[0])]


def accuracy(
    f: Forest,
    ds: Dataset,
    rows,
    aggregation: Aggregation | None = None,
) -> float:
    """Fraction of the given dataset rows classified correctly."""
    idx = np.asarray(rows, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("rows must be non-empty")
    predicted = predict_classes(f, ds.features[idx], aggregation)
    return float(np.mean(np.asarray(predicted) == ds.labels[idx]))


# --------------------------------------------------------------------------
# Serialization.  Trees are stored as flat preorder node lists (children by
# index) so that neither dumping nor loading recurses; json round-trips
# floats through repr, which is exact.


def _tree_to_doc(tree: DecisionTree) -> dict:
    nodes: list[dict] = []
    stack: list[tuple[TreeNode, int, str]] = [(tree.root, -1, "")]
    while stack:
        node, parent, side = stack.pop()
        pos = len(nodes)
        if parent >= 0:
            nodes[parent][side] = pos
        if isinstance(node, Leaf):
            nodes.append(
                {
                    "n_samples": node.n_samples,
                    "gini": node.gini,
                    "class_counts": list(node.class_counts),
                }
            )
        else:
            nodes.append(
                {
                    "feature": node.feature,
                    "threshold": node.threshold,
                    "n_samples": node.n_samples,
                    "gini": node.gini,
                    "class_counts": list(node.class_counts),
                    "left": -1,
                    "right": -1,
                }
            )
            stack.append((node.right, pos, "right"))
            stack.append((node.left, pos, "left"))
    return {"nodes": nodes}


def _tree_from_doc(doc: dict, n_features: int, n_classes: int) -> DecisionTree:
    raw = doc["nodes"]
    if not isinstance(raw, list) or not raw:
        raise ValueError("tree document has no nodes")
    built: list[TreeNode | None] = [None] * len(raw)
    for i in range(len(raw) - 1, -1, -1):
        nd = raw[i]
        counts = tuple(int(v) for v in nd["class_counts"])
        if len(counts) != n_classes:
            raise ValueError(f"node {i} has {len(counts)} class counts, expected {n_classes}")
        total = int(nd["n_samples"])
        if "feature" in nd:
            li, ri = int(nd["left"]), int(nd["right"])
            # Preorder guarantees children come after their parent.
            if not (i < li < len(raw) and i < ri < len(raw)):
                raise ValueError(f"node {i} has out-of-order child indices {li}, {ri}")
            built[i] = Internal(
                feature=int(nd["feature"]),
                threshold=float(nd["threshold"]),
                left=built[li],
                right=built[ri],
                n_samples=total,
                gini=float(nd["gini"]),
                class_counts=counts,
            )
        else:
            if total != sum(counts):
                raise ValueError(f"leaf {i} n_samples does not match its class counts")
            built[i] = Leaf(
                n_samples=total,
                class_counts=counts,
                gini=float(nd["gini"]),
                class_distribution=tuple(count / total for count in counts),
            )
    root = built[0]
    assert root is not None
    return DecisionTree(root=root, n_features=n_features, n_classes=n_classes)


def _config_to_doc(cfg: ForestConfig) -> dict:
    return {
        "n_trees": cfg.n_trees,
        "mtry": cfg.mtry,
        "min_node_size": cfg.min_node_size,
        "node_size_semantics": cfg.node_size_semantics.value,
        "max_depth": cfg.max_depth,
        "tie_break": cfg.tie_break.value,
        "bootstrap": cfg.bootstrap,
        "sample_fraction": cfg.sample_fraction,
        "aggregation": cfg.aggregation.value,
        "seed": cfg.seed,
    }


def _config_from_doc(doc: dict) -> ForestConfig:
    mtry = doc["mtry"]
    if mtry is not None and not isinstance(mtry, (int, str)):
        raise ValueError(f"invalid mtry in forest document: {mtry!r}")
    return ForestConfig(
        n_trees=int(doc["n_trees"]),
        mtry=mtry,
        min_node_size=int(doc["min_node_size"]),
        node_size_semantics=NodeSizeSemantics(doc["node_size_semantics"]),
        max_depth=None if doc["max_depth"] is None else int(doc["max_depth"]),
        tie_break=TieBreak(doc["tie_break"]),
        bootstrap=bool(doc["bootstrap"]),
        sample_fraction=float(doc["sample_fraction"]),
        aggregation=Aggregation(doc["aggregation"]),
        seed=int(doc["seed"]),
    )


def forest_to_doc(f: Forest) -> dict:
    return {
        "schema": FOREST_SCHEMA,
        "n_features": f.n_features,
        "n_classes": f.n_classes,
        "config": _config_to_doc(f.config),
        "trees": [_tree_to_doc(tree) for tree in f.trees],
    }


def forest_from_doc(doc: dict) -> Forest:
    if not isinstance(doc, dict) or doc.get("schema") != FOREST_SCHEMA:
        raise ValueError(
            f"not a {FOREST_SCHEMA} document (schema={doc.get('schema')!r})"
            if isinstance(doc, dict)
            else "forest document must be a JSON object"
        )
    n_features = int(doc["n_features"])
    n_classes = int(doc["n_classes"])
    config = _config_from_doc(doc["config"])
    trees = tuple(_tree_from_doc(td, n_features, n_classes) for td in doc["trees"])
    if len(trees) != config.n_trees:
        raise ValueError(f"document has {len(trees)} trees but config says {config.n_trees}")
    return Forest(trees=trees, config=config, n_features=n_features, n_classes=n_classes)


def forest_to_json(f: Forest) -> str:
    """Deterministic bytes: sorted keys, no whitespace, repr-exact floats."""
    return json.dumps(forest_to_doc(f), sort_keys=True, separators=(",", ":"))


def forest_from_json(text: str) -> Forest:
    return forest_from_doc(json.loads(text))


def save_forest(f: Forest, path) -> None:
    Path(path).write_text(forest_to_json(f) + "\n", encoding="utf-8")


def load_forest(path) -> Forest:
    return forest_from_json(Path(path).read_text(encoding="utf-8"))
