"""detforest: a random-forest classifier where every source of randomness
is explicit, seeded, and replayable — plus the tooling to prove it
(canonical tree fingerprints, forest diffing, experiment presets).
"""

from .canonical import (
    CanonicalNode,
    CanonicalTree,
    DivergenceReport,
    PairDivergence,
    canonicalize,
    forest_divergence,
    trees_equal_canonical,
)
from .cart import (
    TIE_TOL,
    ClassCounts,
    DecisionTree,
    GrowConfig,
    Internal,
    Leaf,
    NodeSizeSemantics,
    Split,
    TieBreak,
    TreeNode,
    best_split,
    class_counts_of,
    draw_candidates,
    exhaustive_split_oracle,
    gini,
    grow_tree,
    iter_nodes,
    predict_leaf,
    trees_equal_exact,
)
from .dataset import (
    Dataset,
    SplitIndices,
    generate_synthetic_formulas,
    load_csv,
    save_csv,
    train_test_split,
)
from .forest import (
    MTRY_ALL,
    Aggregation,
    BootstrapSample,
    Forest,
    ForestConfig,
    accuracy,
    bootstrap_sample,
    fit,
    forest_from_json,
    forest_to_json,
    load_forest,
    predict_argmax_proba,
    predict_class,
    predict_classes,
    predict_majority,
    predict_proba,
    save_forest,
)
from .prng import (
    SPLIT_STREAM,
    SYNTH_STREAM,
    TRIAL_STREAM,
    RngState,
    bounded_uint,
    derive_stream,
    next_u64,
    next_u64_block,
    shuffle,
)

__version__ = "0.1.0"

__all__ = [
    "Aggregation",
    "BootstrapSample",
    "CanonicalNode",
    "CanonicalTree",
    "ClassCounts",
    "Dataset",
    "DecisionTree",
    "DivergenceReport",
    "Forest",
    "ForestConfig",
    "GrowConfig",
    "Internal",
    "Leaf",
    "MTRY_ALL",
    "NodeSizeSemantics",
    "PairDivergence",
    "RngState",
    "SPLIT_STREAM",
    "SYNTH_STREAM",
    "Split",
    "SplitIndices",
    "TIE_TOL",
    "TRIAL_STREAM",
    "TieBreak",
    "TreeNode",
    "accuracy",
    "best_split",
    "bootstrap_sample",
    "bounded_uint",
    "canonicalize",
    "class_counts_of",
    "derive_stream",
    "draw_candidates",
    "exhaustive_split_oracle",
    "fit",
    "forest_divergence",
    "forest_from_json",
    "forest_to_json",
    "generate_synthetic_formulas",
    "gini",
    "grow_tree",
    "iter_nodes",
    "load_csv",
    "load_forest",
    "next_u64",
    "next_u64_block",
    "predict_argmax_proba",
    "predict_class",
    "predict_classes",
    "predict_leaf",
    "predict_majority",
    "predict_proba",
    "save_csv",
    "save_forest",
    "shuffle",
    "train_test_split",
    "trees_equal_canonical",
    "trees_equal_exact",
    "__version__",
]
