"""Command-line front end.

Verbs:

* ``gen``          synthesize a composition-style dataset to CSV
* ``split``        write a deterministic train/test split file
* ``run``          train one or more forests under a named experiment
                   preset (or a config file), write forests, reports and a
                   tree rendering, and verify the preset's expectations
* ``export-tree``  render one tree of a saved forest as DOT or JSON
* ``diff``         count divergent classifications between two saved forests
* ``audit-config`` flag reproducibility hazards in a config file

Every command is deterministic: the same invocation produces byte-identical
output files.  Wall-clock timings go to stderr only.

Exit codes: 0 success (and, for ``diff``, zero divergence; for ``run``, all
expectations hold), 1 divergence/expectation failure, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .canonical import canonicalize, forest_divergence
from .cart import DecisionTree, Internal, Leaf, NodeSizeSemantics, TieBreak, TreeNode, iter_nodes, trees_equal_exact
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
    Forest,
    ForestConfig,
    _tree_to_doc,
    accuracy,
    fit,
    load_forest,
    save_forest,
)
from .prng import TRIAL_STREAM, derive_stream, next_u64

SPLIT_SCHEMA = "detforest.split.v1"
TREE_SCHEMA = "detforest.tree.v1"

DEFAULT_ROWS = 4598
DEFAULT_FEATURES = 87
DEFAULT_TRAIN_FRACTION = 0.8


class ConfigError(ValueError):
    """A config file (or DETFOREST_SEED) could not be parsed."""


# --------------------------------------------------------------------------
# Experiment presets


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    deltas: dict

    def config(self) -> ForestConfig:
        return dataclasses.replace(ForestConfig(), **self.deltas)


PRESETS: dict[str, ExperimentPreset] = {
    p.name: p
    for p in [
        ExperimentPreset(
            name="table2",
            description="bagged forest, package-default parameters, desk-scale tree count",
            deltas={"n_trees": 50},
        ),
        ExperimentPreset(
            name="table3",
            description="randomness eliminated: one tree, every feature a candidate, no bootstrap",
            deltas={"n_trees": 1, "mtry": MTRY_ALL, "bootstrap": False, "sample_fraction": 1.0},
        ),
        ExperimentPreset(
            name="fig1",
            description="shallow single tree, node size 1000 as a split threshold (children may be smaller)",
            deltas={
                "n_trees": 1,
                "mtry": MTRY_ALL,
                "bootstrap": False,
                "sample_fraction": 1.0,
                "min_node_size": 1000,
                "node_size_semantics": NodeSizeSemantics.MIN_SPLIT,
                "max_depth": 5,
            },
        ),
        ExperimentPreset(
            name="fig2",
            description="shallow single tree, node size 1000 as a leaf floor (no child may be smaller)",
            deltas={
                "n_trees": 1,
                "mtry": MTRY_ALL,
                "bootstrap": False,
                "sample_fraction": 1.0,
                "min_node_size": 1000,
                "node_size_semantics": NodeSizeSemantics.MIN_LEAF,
                "max_depth": 5,
            },
        ),
    ]
}


# --------------------------------------------------------------------------
# Config files: flat key=value with a comment block mapping each unified
# name onto its equivalents in the four packages people actually run.

_CONFIG_HEADER = """\
# detforest forest configuration (key = value, '#' starts a comment).
#
# Equivalents of each unified name in the common packages:
#
#   unified          Scikit-Learn        SKRanger         Ranger           randomForest
#   n_trees          n_estimators        n_estimators     num.trees        ntree
#   mtry             max_features        mtry             mtry             mtry
#   min_node_size    min_samples_split   min_node_size    min.node.size    nodesize
#   max_depth        max_depth           max_depth        max.depth        (none)
#   bootstrap        bootstrap           replace          replace          replace
#   sample_fraction  max_samples         sample_fraction  sample.fraction  sampsize
#   seed             random_state        seed             seed             set.seed()
#
# min_node_size follows node_size_semantics: 'min-split' refuses to split
# nodes below the limit (children may be smaller; what nodesize and
# min_samples_split do), 'min-leaf' rejects splits that would produce a
# child below the limit (what min_samples_leaf documents).
# tie_break and aggregation have no package switches: packages break
# impurity ties by candidate draw order, and differ in whether prediction
# majority-votes the trees or averages their leaf probabilities.
"""

_CONFIG_KEYS = (
    "n_trees",
    "mtry",
    "min_node_size",
    "node_size_semantics",
    "max_depth",
    "tie_break",
    "bootstrap",
    "sample_fraction",
    "aggregation",
    "seed",
)


def render_config(cfg: ForestConfig) -> str:
    """Config-file text for cfg; parse_config_text inverts this exactly."""
    if cfg.mtry is None:
        mtry = "sqrt"
    else:
        mtry = str(cfg.mtry)
    lines = [
        _CONFIG_HEADER,
        f"n_trees = {cfg.n_trees}",
        f"mtry = {mtry}",
        f"min_node_size = {cfg.min_node_size}",
        f"node_size_semantics = {cfg.node_size_semantics.value}",
        f"max_depth = {'none' if cfg.max_depth is None else cfg.max_depth}",
        f"tie_break = {cfg.tie_break.value}",
        f"bootstrap = {'true' if cfg.bootstrap else 'false'}",
        f"sample_fraction = {cfg.sample_fraction!r}",
        f"aggregation = {cfg.aggregation.value}",
        f"seed = {cfg.seed}",
    ]
    return "\n".join(lines) + "\n"


def _parse_int(key: str, value: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} must be an integer, got {value!r}") from None


def _parse_enum(enum_cls, key: str, value: str, lineno: int):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"line {lineno}: {key} must be one of {allowed}, got {value!r}") from None


def parse_config_text(text: str) -> tuple[ForestConfig, frozenset[str]]:
    """Parse key=value config text.

    Returns the config and the set of keys the file actually set (the audit
    distinguishes an explicit default from an omitted key).  Unknown or
    duplicate keys are errors: a silently ignored typo is itself a
    reproducibility hazard.
    """
    values: dict = {}
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if not value:
            raise ConfigError(f"line {lineno}: {key} has no value")

        if key in ("n_trees", "min_node_size", "seed"):
            values[key] = _parse_int(key, value, lineno)
        elif key == "mtry":
            if value == "sqrt":
                values[key] = None
            elif value == MTRY_ALL:
                values[key] = MTRY_ALL
            else:
                values[key] = _parse_int(key, value, lineno)
        elif key == "max_depth":
            values[key] = None if value == "none" else _parse_int(key, value, lineno)
        elif key == "node_size_semantics":
            values[key] = _parse_enum(NodeSizeSemantics, key, value, lineno)
        elif key == "tie_break":
            values[key] = _parse_enum(TieBreak, key, value, lineno)
        elif key == "aggregation":
            values[key] = _parse_enum(Aggregation, key, value, lineno)
        elif key == "bootstrap":
            if value not in ("true", "false"):
                raise ConfigError(f"line {lineno}: bootstrap must be true or false, got {value!r}")
            values[key] = value == "true"
        elif key == "sample_fraction":
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: sample_fraction must be a number, got {value!r}"
                ) from None

    try:
        cfg = ForestConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, frozenset(seen)


def audit_config_text(text: str) -> list[str]:
    """Reproducibility warnings for a config file (empty = fully pinned)."""
    cfg, present = parse_config_text(text)
    warnings = []
    if "min_node_size" not in present:
        warnings.append(
            "min_node_size is unset: package defaults disagree (SKRanger uses 10, the "
            "others use 1), so the same pipeline run through different front ends "
            "grows different trees; set it explicitly"
        )
    if cfg.tie_break is TieBreak.FIRST_IN_DRAW_ORDER:
        warnings.append(
            "tie_break = first-in-draw-order: splits tied on impurity follow the "
            "candidate draw order, so tree structure depends on the PRNG stream even "
            "with bootstrap off; use lowest-feature-index for run-to-run stability"
        )
    if cfg.bootstrap and "seed" not in present:
        warnings.append(
            "bootstrap = true without a recorded seed: resampling cannot be replayed; "
            "record seed in this file"
        )
    if "aggregation" not in present:
        warnings.append(
            "aggregation is unspecified: majority voting and mean-probability argmax "
            "can classify the same sample differently when leaves are impure; pin one"
        )
    return warnings


# --------------------------------------------------------------------------
# Tree rendering


def tree_to_dot(tree: DecisionTree) -> str:
    """DOT digraph of the tree; node ids follow preorder."""
    entries: list[str] = []
    edges: list[str] = []
    stack: list[tuple[TreeNode, int]] = [(tree.root, -1)]
    count = 0
    while stack:
        node, parent = stack.pop()
        nid = count
        count += 1
        if parent >= 0:
            edges.append(f"  n{parent} -> n{nid};")
        counts = list(node.class_counts)
        if isinstance(node, Internal):
            label = (
                f"f{node.feature} ≤ {node.threshold!r} | n={node.n_samples} "
                f"| gini={node.gini:.6g} | counts={counts}"
            )
            stack.append((node.right, nid))
            stack.append((node.left, nid))
        else:
            label = f"n={node.n_samples} | gini={node.gini:.6g} | counts={counts}"
        entries.append(f'  n{nid} [label="{label}"];')
    return "\n".join(["digraph tree {", "  node [shape=box];", *entries, *edges, "}"]) + "\n"


def tree_to_structured(tree: DecisionTree) -> str:
    """The tree as a standalone versioned JSON document (deterministic bytes)."""
    doc = {
        "schema": TREE_SCHEMA,
        "n_features": tree.n_features,
        "n_classes": tree.n_classes,
        "tree": _tree_to_doc(tree),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


# --------------------------------------------------------------------------
# Shared plumbing


def _resolve_seed(cli_seed: int | None, file_seed: int | None = None) -> int:
    """--seed beats DETFOREST_SEED beats the config file beats 0."""
    if cli_seed is not None:
        seed = cli_seed
    else:
        env = os.environ.get("DETFOREST_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigError(f"DETFOREST_SEED must be an integer, got {env!r}") from None
        elif file_seed is not None:
            seed = file_seed
        else:
            seed = 0
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _write_split_file(split: SplitIndices, path) -> None:
    doc = {"schema": SPLIT_SCHEMA, "train": list(split.train), "test": list(split.test)}
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def _read_split_file(path, n: int) -> SplitIndices:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or doc.get("schema") != SPLIT_SCHEMA:
        raise ValueError(f"{path} is not a {SPLIT_SCHEMA} document")
    train = tuple(int(i) for i in doc["train"])
    test = tuple(int(i) for i in doc["test"])
    if sorted(train + test) != list(range(n)):
        raise ValueError(f"split in {path} does not partition the {n} dataset rows")
    return SplitIndices(train=train, test=test)


def _load_data(args, seed: int) -> tuple[Dataset, SplitIndices, str]:
    """Dataset + split from --data/--split, or synthesized when --data absent."""
    if args.data is not None:
        ds = load_csv(args.data, args.label_column, composition=args.composition)
        origin = args.data
        if args.split is not None:
            split = _read_split_file(args.split, ds.n)
        else:
            split = train_test_split(ds, args.train_fraction, seed)
    else:
        if args.split is not None:
            raise ValueError("--split requires --data")
        ds = generate_synthetic_formulas(args.rows, args.features, seed)
        origin = f"synthetic n={args.rows} p={args.features}"
        split = train_test_split(ds, args.train_fraction, seed)
    return ds, split, origin


def _trial_seeds(base_seed: int, trials: int) -> list[int]:
    """Independent forest seeds for repeated trials, from the trial stream."""
    rng = derive_stream(base_seed, TRIAL_STREAM)
    seeds = []
    for _ in range(trials):
        s, rng = next_u64(rng)
        seeds.append(s)
    return seeds


def _leaf_sizes(tree: DecisionTree) -> list[int]:
    return [node.n_samples for node, _ in iter_nodes(tree) if isinstance(node, Leaf)]


def _internal_sizes(tree: DecisionTree) -> list[int]:
    return [node.n_samples for node, _ in iter_nodes(tree) if isinstance(node, Internal)]


def _describe_config(cfg: ForestConfig) -> str:
    mtry = "sqrt" if cfg.mtry is None else cfg.mtry
    return (
        f"n_trees={cfg.n_trees} mtry={mtry} bootstrap={'true' if cfg.bootstrap else 'false'} "
        f"sample_fraction={cfg.sample_fraction!r} min_node_size={cfg.min_node_size} "
        f"({cfg.node_size_semantics.value}) max_depth={cfg.max_depth} "
        f"tie_break={cfg.tie_break.value} aggregation={cfg.aggregation.value}"
    )


# --------------------------------------------------------------------------
# Commands


def cmd_gen(args) -> int:
    seed = _resolve_seed(args.seed)
    ds = generate_synthetic_formulas(args.rows, args.features, seed)
    save_csv(ds, args.out)
    counts = [int((ds.labels == k).sum()) for k in range(ds.c)]
    print(f"wrote {args.out}: {ds.n} rows, {ds.p} features, class counts {counts}")
    return 0


def cmd_split(args) -> int:
    seed = _resolve_seed(args.seed)
    ds = load_csv(args.data, args.label_column, composition=args.composition)
    split = train_test_split(ds, args.train_fraction, seed)
    _write_split_file(split, args.out)
    print(f"wrote {args.out}: {len(split.train)} train / {len(split.test)} test rows")
    return 0


def _preset_expectations(
    preset: ExperimentPreset | None,
    cfg: ForestConfig,
    forests: list[Forest],
    canonical_equal: tuple[int, int],
) -> list[tuple[str, bool]]:
    """The verifiable claims each preset makes about its own output."""
    if preset is None:
        return []
    if preset.name == "table2":
        first = forests[0].trees
        distinct = len(first) >= 2 and not all(
            trees_equal_exact(first[0], t) for t in first[1:]
        )
        return [("bootstrap produces at least two bit-distinct trees", distinct)]
    if preset.name == "table3":
        equal, total = canonical_equal
        return [("all trees canonically equal", equal == total)]
    if preset.name == "fig1":
        tree = forests[0].trees[0]
        leaves = _leaf_sizes(tree)
        internals = _internal_sizes(tree)
        return [
            (
                f"some leaf smaller than min_node_size={cfg.min_node_size}",
                any(v < cfg.min_node_size for v in leaves),
            ),
            (
                f"every split node at least min_node_size={cfg.min_node_size}",
                all(v >= cfg.min_node_size for v in internals),
            ),
        ]
    if preset.name == "fig2":
        tree = forests[0].trees[0]
        leaves = _leaf_sizes(tree)
        return [
            (
                f"every leaf at least min_node_size={cfg.min_node_size}",
                all(v >= cfg.min_node_size for v in leaves),
            )
        ]
    return []


def cmd_run(args) -> int:
    t0 = time.monotonic()
    if args.trials < 1:
        raise ValueError(f"--trials must be >= 1, got {args.trials}")
    preset: ExperimentPreset | None = None
    if args.preset is not None:
        try:
            preset = PRESETS[args.preset]
        except KeyError:
            known = ", ".join(sorted(PRESETS))
            raise ValueError(f"unknown preset {args.preset!r} (known: {known})") from None
        cfg = preset.config()
        seed = _resolve_seed(args.seed)
    else:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg, present = parse_config_text(text)
        seed = _resolve_seed(args.seed, file_seed=cfg.seed if "seed" in present else None)

    overrides: dict = {"seed": seed}
    if args.trees is not None:
        overrides["n_trees"] = args.trees
    if args.tie_break is not None:
        overrides["tie_break"] = TieBreak(args.tie_break)
    if args.aggregation is not None:
        overrides["aggregation"] = Aggregation(args.aggregation)
    cfg = dataclasses.replace(cfg, **overrides)

    ds, split, origin = _load_data(args, seed)
    cfg.to_grow_config(ds.p)  # fail fast on invalid mtry before any training

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = _trial_seeds(seed, args.trials)
    forests: list[Forest] = []
    for t, trial_seed in enumerate(seeds):
        forest = fit(ds, split, dataclasses.replace(cfg, seed=trial_seed), n_workers=args.workers)
        save_forest(forest, out_dir / f"forest-{t}.json")
        forests.append(forest)

    (out_dir / "config.txt").write_text(render_config(cfg), encoding="utf-8")
    (out_dir / "tree0.dot").write_text(tree_to_dot(forests[0].trees[0]), encoding="utf-8")

    all_trees = [tree for forest in forests for tree in forest.trees]
    reference = canonicalize(all_trees[0])
    n_canonical = sum(1 for t in all_trees if canonicalize(t) == reference)
    n_bit = sum(1 for t in all_trees if trees_equal_exact(all_trees[0], t))
    canonical_equal = (n_canonical, len(all_trees))

    divergence_doc = None
    max_divergent = 0
    if args.trials >= 2:
        report = forest_divergence(
            [(f"trial-{t}", f) for t, f in enumerate(forests)], ds, rows=split.test
        )
        (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
        divergence_doc = report.to_doc()
        (out_dir / "report.json").write_text(
            json.dumps(divergence_doc, sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )
        max_divergent = max((p.n_divergent for p in report.pairs), default=0)

    acc = accuracy(forests[0], ds, split.test)
    expectations = _preset_expectations(preset, cfg, forests, canonical_equal)

    summary = {
        "preset": None if preset is None else preset.name,
        "seed": seed,
        "trial_seeds": seeds,
        "data": origin,
        "n_train": len(split.train),
        "n_test": len(split.test),
        "canonical_equal": list(canonical_equal),
        "bit_equal": [n_bit, len(all_trees)],
        "max_pairwise_divergent": max_divergent,
        "accuracy": acc,
        "expectations": [{"name": name, "holds": ok} for name, ok in expectations],
    }
    if divergence_doc is not None:
        summary["divergence"] = divergence_doc
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )

    print(f"preset: {preset.name if preset else f'config file {args.config}'}")
    print(f"seed: {seed}  trials: {args.trials}")
    print(f"data: {origin} (train {len(split.train)} / test {len(split.test)})")
    print(f"forest: {_describe_config(cfg)}")
    print(f"canonical-equal: {n_canonical}/{len(all_trees)}")
    print(f"bit-equal: {n_bit}/{len(all_trees)}")
    if args.trials >= 2:
        print(f"divergence: max pairwise {max_divergent} of {len(split.test)} (report.txt)")
    print(f"accuracy[{cfg.aggregation.value}]: {acc:.4f}")
    ok = True
    for name, holds in expectations:
        print(f"expectation[{name}]: {'PASS' if holds else 'FAIL'}")
        ok = ok and holds
    print(f"wrote: {out_dir}")
    print(f"elapsed: {time.monotonic() - t0:.2f}s", file=sys.stderr)
    return 0 if ok else 1


def cmd_export_tree(args) -> int:
    forest = load_forest(args.forest)
    if not 0 <= args.tree < len(forest.trees):
        raise ValueError(
            f"tree index {args.tree} out of range (forest has "
            f"{len(forest.trees)} tree{'s' if len(forest.trees) != 1 else ''})"
        )
    tree = forest.trees[args.tree]
    text = tree_to_dot(tree) if args.format == "dot" else tree_to_structured(tree)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def cmd_diff(args) -> int:
    fa = load_forest(args.forest_a)
    fb = load_forest(args.forest_b)
    test = load_csv(args.data, args.label_column, composition=args.composition)
    label_a, label_b = str(args.forest_a), str(args.forest_b)
    if label_a == label_b:
        label_a, label_b = f"a:{label_a}", f"b:{label_b}"
    aggregation = None if args.aggregation is None else Aggregation(args.aggregation)
    report = forest_divergence([(label_a, fa), (label_b, fb)], test, aggregation=aggregation)
    sys.stdout.write(report.to_text())
    return 0 if report.pairs[0].n_divergent == 0 else 1


def cmd_audit_config(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    warnings = audit_config_text(text)
    for w in warnings:
        print(f"warning: {w}")
    if not warnings:
        print("no reproducibility hazards found")
    return 0


# --------------------------------------------------------------------------
# Argument parsing


def _add_seed(sub) -> None:
    sub.add_argument(
        "--seed",
        type=int,
        default=None,
        help="64-bit unsigned seed (default: $DETFOREST_SEED, else 0)",
    )


def _add_csv_flags(sub) -> None:
    sub.add_argument("--label-column", default="label", help="label column name (default: label)")
    sub.add_argument(
        "--composition",
        action="store_true",
        help="require every feature row to sum to 100",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detforest",
        description="Deterministic random-forest trainer and reproducibility harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a composition-style dataset to CSV")
    p.add_argument("--rows", type=int, default=DEFAULT_ROWS)
    p.add_argument("--features", type=int, default=DEFAULT_FEATURES)
    p.add_argument("--out", required=True, help="output CSV path")
    _add_seed(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("split", help="write a deterministic train/test split file")
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--train-fraction", type=float, default=DEFAULT_TRAIN_FRACTION)
    p.add_argument("--out", required=True, help="output split JSON path")
    _add_csv_flags(p)
    _add_seed(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("run", help="train forests under a preset or config file")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(PRESETS), help="experiment preset")
    source.add_argument("--config", help="config file (key = value)")
    p.add_argument("--data", default=None, help="CSV path (default: synthesize)")
    p.add_argument("--split", default=None, help="split JSON from the split command")
    p.add_argument("--train-fraction", type=float, default=DEFAULT_TRAIN_FRACTION)
    p.add_argument("--rows", type=int, default=DEFAULT_ROWS, help="synthetic row count")
    p.add_argument("--features", type=int, default=DEFAULT_FEATURES, help="synthetic feature count")
    p.add_argument("--trials", type=int, default=1, help="forests to train on derived seeds")
    p.add_argument("--trees", type=int, default=None, help="override the preset tree count")
    p.add_argument("--tie-break", choices=[e.value for e in TieBreak], default=None)
    p.add_argument("--aggregation", choices=[e.value for e in Aggregation], default=None)
    p.add_argument("--workers", type=int, default=1, help="tree-building threads")
    p.add_argument("--out-dir", default="detforest-out", help="output directory")
    _add_csv_flags(p)
    _add_seed(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export-tree", help="render one tree of a saved forest")
    p.add_argument("--forest", required=True, help="forest JSON path")
    p.add_argument("--tree", type=int, default=0, help="tree index (default 0)")
    p.add_argument("--format", choices=["dot", "structured"], default="dot")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.set_defaults(func=cmd_export_tree)

    p = sub.add_parser("diff", help="count divergent classifications between two forests")
    p.add_argument("forest_a", help="first forest JSON path")
    p.add_argument("forest_b", help="second forest JSON path")
    p.add_argument("--data", required=True, help="test CSV path")
    p.add_argument(
        "--aggregation",
        choices=[e.value for e in Aggregation],
        default=None,
        help="override both forests' aggregation",
    )
    _add_csv_flags(p)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("audit-config", help="flag reproducibility hazards in a config file")
    p.add_argument("--config", required=True, help="config file to audit")
    p.set_defaults(func=cmd_audit_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
