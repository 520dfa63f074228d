"""Recursive multi-way discriminant trees: growth, stopping, pruning, predict.

Every node fits a discriminant model on its own rows; the model's predicted
classes define the child branches (one per distinct predicted class). Split
strength is measured by a one-sided two-sample z-test on training errors
before vs after the split, which drives both pre-stopping and the weakest-link
sequence used for cost-complexity pruning.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import norm

from .dataset import Column, DataError, Dataset, make_folds
from .forward import (
    DEFAULT_ALPHA,
    SelectionTrace,
    forward_ulda,
    trace_from_json,
    trace_to_json,
)
from .impute import (
    ImputationRecord,
    encode,
    fit_imputation,
    record_from_json,
    record_to_json,
)
from .ulda import UldaModel, fit_ulda, posterior, predict, with_priors

MODEL_FORMAT = "foldtree-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file has the wrong format or version."""


def worker_count() -> int:
    """Concurrency cap from FOLDTREE_THREADS (default 1 = sequential)."""
    try:
        return max(1, int(os.environ.get("FOLDTREE_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items):
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Split-strength statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitStrength:
    n_total: int
    n_before: int
    n_after: int
    z: float
    p_value: float


def split_strength(n_total: int, n_before: int, n_after: int) -> SplitStrength:
    """One-sided z-test comparing training errors before vs after a split."""
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    if not (0 <= n_before <= n_total and 0 <= n_after <= n_total):
        raise ValueError(
            f"error counts must lie in [0, n_total]: got "
            f"({n_total}, {n_before}, {n_after})"
        )
    variance = (
        n_before * (n_total - n_before) + n_after * (n_total - n_after)
    ) / n_total
    if variance == 0.0:
        if n_before == n_after:
            z = 0.0
        else:
            z = math.inf if n_before > n_after else -math.inf
    else:
        z = (n_before - n_after) / math.sqrt(variance)
    return SplitStrength(n_total, n_before, n_after, z, float(norm.sf(z)))


def cart_alpha(r_node: int, r_subtree: int, n_terminals: int) -> float:
    """Error reduction per added terminal node; diagnostic only."""
    if n_terminals < 2:
        raise ValueError("subtree must have at least 2 terminal nodes")
    return (r_node - r_subtree) / (n_terminals - 1)


def gini_index(proportions) -> float:
    """1 - sum(p^2) of a class-proportion vector."""
    p = np.asarray(proportions, dtype=np.float64)
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("proportions must be nonnegative and sum to 1")
    return float(1.0 - (p * p).sum())


# ---------------------------------------------------------------------------
# Configuration and model structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthConfig:
    method: str = "ldatree"  # "ldatree" | "foldtree"
    stopping: str = "cv_prune"  # "prestop" | "cv_prune"
    prestop_p: float = 0.01
    growth_p: float = 0.6
    forward_alpha: float = DEFAULT_ALPHA
    imputation: str = "node_wise"  # "node_wise" | "root_node"
    min_node_size: int | None = None  # default: max(2 * n_classes, 10)
    max_depth: int = 30
    cv_folds: int = 10
    seed: int = 0

    def validate(self) -> None:
        if self.method not in ("ldatree", "foldtree"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.stopping not in ("prestop", "cv_prune"):
            raise ValueError(f"unknown stopping mode {self.stopping!r}")
        if self.imputation not in ("node_wise", "root_node"):
            raise ValueError(f"unknown imputation policy {self.imputation!r}")
        for name in ("prestop_p", "growth_p", "forward_alpha"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0,1), got {value}")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    @property
    def accept_threshold(self) -> float:
        return self.prestop_p if self.stopping == "prestop" else self.growth_p

    def resolve_min_node_size(self, n_classes: int) -> int:
        if self.min_node_size is not None:
            return self.min_node_size
        return max(2 * n_classes, 10)


@dataclass(frozen=True)
class NodeModel:
    """Leaf-time classifier: a discriminant model or the plurality rule."""

    kind: str  # "ulda" | "plurality"
    model: UldaModel | None
    plurality_class: int
    proportions: np.ndarray  # training class proportions over all classes


@dataclass
class NodeDiagnostics:
    n_total: int
    n_before: int
    n_after: int | None = None
    z: float | None = None
    p_value: float | None = None
    gini_predicted: float | None = None
    prior_mode: str | None = None
    trigger: str | None = None  # equal-prior path: "none"|"gini_low"|"gini_zero"
    accepted: bool = False


@dataclass
class SplitInfo:
    model: UldaModel
    children: dict[int, int]  # predicted class -> child node id
    selection: SelectionTrace | None = None


@dataclass
class TreeNode:
    node_id: int
    depth: int
    n_rows: int
    class_counts: np.ndarray
    record: ImputationRecord
    node_model: NodeModel
    diagnostics: NodeDiagnostics
    split: SplitInfo | None = None
    row_ids: np.ndarray | None = None  # training rows; not serialized

    @property
    def is_leaf(self) -> bool:
        return self.split is None


@dataclass
class PruningReport:
    chosen_threshold: float
    chosen_leaf_count: int
    folds: int
    seed: int
    curve: list[dict] = field(default_factory=list)


@dataclass
class TreeModel:
    root_id: int
    nodes: dict[int, TreeNode]
    class_labels: tuple[str, ...]
    schema: tuple[tuple[str, str], ...]  # (column name, "numeric"|"categorical")
    target_name: str
    config: GrowthConfig
    pruning: PruningReport | None = None
    training_accuracy: float | None = None

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def leaf_count(self) -> int:
        return sum(1 for node in self.nodes.values() if node.is_leaf)

    def depth(self) -> int:
        return max(node.depth for node in self.nodes.values())

    def internal_nodes(self) -> list[TreeNode]:
        return [node for node in self.nodes.values() if not node.is_leaf]


def _schema_of(ds: Dataset) -> tuple[tuple[str, str], ...]:
    return tuple(
        (col.name, "numeric" if col.is_numeric else "categorical")
        for col in ds.columns
    )


# ---------------------------------------------------------------------------
# Node fitting and split search
# ---------------------------------------------------------------------------


@dataclass
class SplitCandidate:
    model: UldaModel  # prior mode reflects any equal-prior switch
    predictions: np.ndarray
    gini_predicted: float
    trigger: str
    selection: SelectionTrace | None


_UNFIT = object()  # sentinel: "caller did not pre-fit a candidate"


def _fit_discriminant(X, y, method: str, forward_alpha: float):
    """Estimated-prior candidate for a node: (model_or_None, selection_trace)."""
    if method == "foldtree":
        return forward_ulda(X, y, priors="estimated", alpha=forward_alpha)
    return fit_ulda(X, y, priors="estimated"), None


def find_split(
    X: np.ndarray,
    y: np.ndarray,
    method: str = "ldatree",
    forward_alpha: float = DEFAULT_ALPHA,
    candidate=_UNFIT,
    selection: SelectionTrace | None = None,
) -> SplitCandidate | None:
    """Propose a multi-way split of an encoded node: None when unsplittable.

    Fits with estimated priors, switches to equal priors when the predicted
    classes are heavily dominated (Gini in (0, 0.1], or exactly 0 on an impure
    node), and gives up when only one class is predicted either way. For the
    foldtree method an empty forward selection falls back to a full
    discriminant fit, which then acts as a quasi-random split.
    """
    y = np.asarray(y)
    if np.unique(y).size < 2:
        return None
    if candidate is _UNFIT:
        candidate, selection = _fit_discriminant(X, y, method, forward_alpha)
    split_model = candidate
    if split_model is None:
        if method != "foldtree":
            return None
        split_model = fit_ulda(X, y, priors="estimated")
        if split_model is None:
            return None

    preds = predict(split_model, X)
    counts = np.bincount(preds, minlength=int(np.max(preds)) + 1)
    gini_pred = gini_index(counts[counts > 0] / len(preds)) if len(preds) else 0.0
    trigger = "none"
    if 0.0 < gini_pred <= 0.1:
        split_model = with_priors(split_model, "equal")
        preds = predict(split_model, X)
        trigger = "gini_low"
    elif gini_pred == 0.0:
        # Estimated priors predict a single class on an impure node: attempt
        # the equal-prior refit before declaring the node unsplittable.
        equal_model = with_priors(split_model, "equal")
        equal_preds = predict(equal_model, X)
        split_model, preds = equal_model, equal_preds
        trigger = "gini_zero"
    if np.unique(preds).size < 2:
        return None
    return SplitCandidate(
        model=split_model,
        predictions=preds,
        gini_predicted=gini_pred,
        trigger=trigger,
        selection=selection,
    )


@dataclass
class _NodeFit:
    """Everything grow() needs about a node before deciding to split it."""

    record: ImputationRecord
    X: np.ndarray
    counts: np.ndarray
    node_model: NodeModel
    candidate: UldaModel | None
    selection: SelectionTrace | None
    correct: int


def _fit_node(
    ds: Dataset,
    rows: np.ndarray,
    config: GrowthConfig,
    root_record: ImputationRecord | None,
    root_X: np.ndarray | None,
) -> _NodeFit:
    y = ds.target[rows]
    counts = np.bincount(y, minlength=ds.n_classes)
    if root_X is not None:
        record, X = root_record, root_X[rows]
    else:
        ds_slice = ds.take(rows)
        if root_record is None:
            record = fit_imputation(ds_slice, policy="node_wise")
        else:
            record = fit_imputation(ds_slice, policy=config.imputation, root_record=root_record)
        X = encode(ds_slice, record).values

    plurality_class = int(np.argmax(counts))
    plurality_correct = int(counts[plurality_class])
    proportions = counts / max(len(rows), 1)

    candidate, selection = None, None
    if len(rows) >= 2 and np.count_nonzero(counts) >= 2:
        candidate, selection = _fit_discriminant(X, y, config.method, config.forward_alpha)
    candidate_correct = -1
    if candidate is not None:
        candidate_correct = int((predict(candidate, X) == y).sum())

    if candidate is not None and candidate_correct > plurality_correct:
        node_model = NodeModel("ulda", candidate, plurality_class, proportions)
        correct = candidate_correct
    else:
        node_model = NodeModel("plurality", None, plurality_class, proportions)
        correct = plurality_correct
    return _NodeFit(record, X, counts, node_model, candidate, selection, correct)


# ---------------------------------------------------------------------------
# Growth
# ---------------------------------------------------------------------------


def grow(ds: Dataset, config: GrowthConfig) -> TreeModel:
    """Grow a tree depth-first; split acceptance is gated by the z-test."""
    config.validate()
    if np.unique(ds.target).size < 2:
        raise DataError("training data must contain at least 2 classes")
    min_node = config.resolve_min_node_size(ds.n_classes)
    threshold = config.accept_threshold

    all_rows = np.arange(ds.n_rows, dtype=np.int64)
    root_record = fit_imputation(ds, policy="node_wise")
    # Complete data makes every node's record identical to the root's, so the
    # root encoding can be sliced instead of re-encoded per node.
    root_X = encode(ds, root_record).values if not ds.has_missing else None

    nodes: dict[int, TreeNode] = {}
    counter = iter(range(10**9))

    def build(rows: np.ndarray, depth: int, fit: _NodeFit) -> int:
        node_id = next(counter)
        n = len(rows)
        y = ds.target[rows]
        n_before = n - fit.correct
        diag = NodeDiagnostics(n_total=n, n_before=n_before)
        split_info = None

        splittable = (
            depth < config.max_depth
            and n >= min_node
            and np.count_nonzero(fit.counts) >= 2
        )
        if splittable:
            cand = find_split(
                fit.X,
                y,
                method=config.method,
                forward_alpha=config.forward_alpha,
                candidate=fit.candidate,
                selection=fit.selection,
            )
            if cand is not None:
                diag.gini_predicted = cand.gini_predicted
                diag.prior_mode = cand.model.prior_mode
                diag.trigger = cand.trigger
                classes = np.unique(cand.predictions)
                groups = {int(c): rows[cand.predictions == c] for c in classes}
                child_fits = {
                    c: _fit_node(ds, group, config, root_record, root_X)
                    for c, group in groups.items()
                }
                n_after = sum(
                    len(groups[c]) - child_fits[c].correct for c in groups
                )
                strength = split_strength(n, n_before, n_after)
                diag.n_after = n_after
                diag.z = strength.z
                diag.p_value = strength.p_value
                if strength.p_value <= threshold:
                    diag.accepted = True
                    children = {}
                    for c in sorted(groups):
                        children[c] = build(groups[c], depth + 1, child_fits[c])
                    split_info = SplitInfo(
                        model=cand.model,
                        children=children,
                        selection=cand.selection,
                    )

        nodes[node_id] = TreeNode(
            node_id=node_id,
            depth=depth,
            n_rows=n,
            class_counts=fit.counts,
            record=fit.record,
            node_model=fit.node_model,
            diagnostics=diag,
            split=split_info,
            row_ids=rows,
        )
        return node_id

    root_fit = _fit_node(ds, all_rows, config, root_record, root_X)
    root_id = build(all_rows, 0, root_fit)
    tree = TreeModel(
        root_id=root_id,
        nodes=nodes,
        class_labels=ds.class_labels,
        schema=_schema_of(ds),
        target_name=ds.target_name,
        config=config,
    )
    tree.training_accuracy = float(
        (predict_tree(tree, ds) == ds.target).mean()
    )
    return tree


def train(ds: Dataset, config: GrowthConfig) -> TreeModel:
    """grow() plus cost-complexity pruning when the config asks for it."""
    tree = grow(ds, config)
    if config.stopping == "cv_prune":
        tree = prune(tree, ds, k=config.cv_folds, seed=config.seed)
    return tree


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def _feature_columns(data) -> tuple[Column, ...]:
    return data.columns if isinstance(data, Dataset) else tuple(data)


def _take_columns(columns, rows: np.ndarray):
    return tuple(col.take(rows) for col in columns)


def _check_schema(tree: TreeModel, columns) -> None:
    names = [col.name for col in columns]
    expected = [name for name, _ in tree.schema]
    if names != expected:
        raise DataError(f"schema mismatch: expected columns {expected}, got {names}")
    for col, (name, kind) in zip(columns, tree.schema):
        actual = "numeric" if col.is_numeric else "categorical"
        if actual != kind:
            raise DataError(f"schema mismatch in column {name!r}: expected {kind}, got {actual}")


def _iter_routed(tree: TreeModel, columns, n_rows: int):
    """Route all rows down the tree; yield (node, rows, encoded) per visit.

    `encoded` is None when the node needs no design matrix (plurality leaf).
    Internal nodes route with the split model restricted to classes that have
    a child branch (hidden classes are never predicted into).
    """
    stack = [(tree.root_id, np.arange(n_rows, dtype=np.int64))]
    while stack:
        node_id, rows = stack.pop()
        node = tree.nodes[node_id]
        needs_encode = node.split is not None or node.node_model.kind == "ulda"
        X = None
        if needs_encode and rows.size:
            X = encode(_take_columns(columns, rows), node.record).values
        yield node, rows, X
        if node.split is not None and rows.size:
            allowed = node.split.children.keys()
            preds = predict(node.split.model, X, allowed_classes=allowed)
            for cls, child_id in sorted(node.split.children.items()):
                group = rows[preds == cls]
                if group.size:
                    stack.append((child_id, group))


def predict_tree(tree: TreeModel, data, output: str = "labels"):
    """Predict class labels or an (n, n_classes) posterior matrix."""
    if output not in ("labels", "posteriors"):
        raise ValueError(f"unknown output mode {output!r}")
    columns = _feature_columns(data)
    _check_schema(tree, columns)
    n_rows = len(columns[0].values if columns[0].is_numeric else columns[0].codes)
    n_classes = tree.n_classes

    labels = np.empty(n_rows, dtype=np.int64)
    probs = np.zeros((n_rows, n_classes)) if output == "posteriors" else None
    for node, rows, X in _iter_routed(tree, columns, n_rows):
        if node.split is not None or not rows.size:
            continue
        nm = node.node_model
        if output == "labels":
            if nm.kind == "ulda":
                labels[rows] = predict(nm.model, X)
            else:
                labels[rows] = nm.plurality_class
        else:
            if nm.kind == "ulda":
                local = posterior(nm.model, X)
                probs[np.ix_(rows, np.asarray(nm.model.class_ids))] = local
            else:
                probs[rows] = nm.proportions
    if output == "labels":
        return labels
    return probs


# ---------------------------------------------------------------------------
# Cost-complexity pruning
# ---------------------------------------------------------------------------


def _collapse_events(tree: TreeModel) -> list[tuple[int, float]]:
    """Weakest-link order: repeatedly collapse the internal node with the
    largest stored split p-value (ties: deeper first, then lowest id)."""
    parents: dict[int, int] = {}
    for node in tree.nodes.values():
        if node.split is not None:
            for child in node.split.children.values():
                parents[child] = node.node_id

    alive = {node.node_id for node in tree.internal_nodes()}
    events: list[tuple[int, float]] = []
    while alive:
        best = max(
            alive,
            key=lambda nid: (
                tree.nodes[nid].diagnostics.p_value,
                tree.nodes[nid].depth,
                -nid,
            ),
        )
        events.append((best, float(tree.nodes[best].diagnostics.p_value)))
        alive.discard(best)
        # Remove internal descendants of the collapsed node.
        doomed = [best]
        while doomed:
            current = doomed.pop()
            node = tree.nodes[current]
            if node.split is None:
                continue
            for child in node.split.children.values():
                alive.discard(child)
                doomed.append(child)
    return events


def _candidate_thresholds(events: list[tuple[int, float]]) -> list[float]:
    """One threshold per distinct subtree in the nested sequence, starting at
    the full tree. Collapsing applies to every event with p >= threshold."""
    criticals = [p for _, p in events]
    thresholds = [(1.0 + criticals[0]) / 2.0]
    for prev, nxt in zip(criticals, criticals[1:]):
        if nxt < prev:
            thresholds.append((prev + nxt) / 2.0)
    thresholds.append(criticals[-1] / 2.0)
    return thresholds


def _collapsed_set(events: list[tuple[int, float]], threshold: float) -> frozenset[int]:
    ids = []
    for node_id, p in events:
        if p < threshold:
            break
        ids.append(node_id)
    return frozenset(ids)


def _effective_leaf_count(tree: TreeModel, collapsed: frozenset[int]) -> int:
    count = 0
    stack = [tree.root_id]
    while stack:
        node = tree.nodes[stack.pop()]
        if node.split is None or node.node_id in collapsed:
            count += 1
        else:
            stack.extend(node.split.children.values())
    return count


def _route_correct(tree: TreeModel, ds: Dataset) -> dict[int, int]:
    """Node-model correct counts for the rows routed to each node under full
    routing; lets any collapse of the tree be scored without re-routing."""
    columns = _feature_columns(ds)
    correct: dict[int, int] = {}
    for node, rows, X in _iter_routed(tree, columns, ds.n_rows):
        if not rows.size:
            correct[node.node_id] = 0
            continue
        y = ds.target[rows]
        nm = node.node_model
        if nm.kind == "ulda":
            if X is None:
                X = encode(_take_columns(columns, rows), node.record).values
            preds = predict(nm.model, X)
        else:
            preds = np.full(rows.size, nm.plurality_class)
        correct[node.node_id] = int((preds == y).sum())
    return correct


def _collapsed_accuracy(
    tree: TreeModel, collapsed: frozenset[int], correct: dict[int, int], n_rows: int
) -> float:
    total = 0
    stack = [tree.root_id]
    while stack:
        node = tree.nodes[stack.pop()]
        if node.split is None or node.node_id in collapsed:
            total += correct.get(node.node_id, 0)
        else:
            stack.extend(node.split.children.values())
    return total / n_rows


def _materialize(tree: TreeModel, collapsed: frozenset[int]) -> TreeModel:
    """Copy of the tree with the collapsed nodes turned into leaves."""
    kept: dict[int, TreeNode] = {}
    stack = [tree.root_id]
    while stack:
        node = tree.nodes[stack.pop()]
        if node.node_id in collapsed and node.split is not None:
            node = TreeNode(
                node_id=node.node_id,
                depth=node.depth,
                n_rows=node.n_rows,
                class_counts=node.class_counts,
                record=node.record,
                node_model=node.node_model,
                diagnostics=node.diagnostics,
                split=None,
                row_ids=node.row_ids,
            )
        kept[node.node_id] = node
        if node.split is not None:
            stack.extend(node.split.children.values())
    return TreeModel(
        root_id=tree.root_id,
        nodes=kept,
        class_labels=tree.class_labels,
        schema=tree.schema,
        target_name=tree.target_name,
        config=tree.config,
        pruning=tree.pruning,
        training_accuracy=tree.training_accuracy,
    )


def prune(tree: TreeModel, ds: Dataset, k: int = 10, seed: int = 0) -> TreeModel:
    """Select a nested subtree by k-fold cross-validated accuracy (1-SE rule).

    Nothing is refit: collapsing a node just promotes its stored node model.
    """
    if tree.config.stopping != "cv_prune":
        raise ValueError("prune() expects a tree grown with the cv_prune threshold")
    events = _collapse_events(tree)
    if not events:
        return tree  # already a single leaf

    thresholds = _candidate_thresholds(events)
    plan = make_folds(ds, k, seed)

    def fold_accuracies(fold: int) -> list[float]:
        train_ds = ds.take(plan.rest_rows(fold))
        test_ds = ds.take(plan.fold_rows(fold))
        fold_tree = grow(train_ds, tree.config)
        fold_events = _collapse_events(fold_tree)
        correct = _route_correct(fold_tree, test_ds)
        out = []
        for theta in thresholds:
            collapsed = _collapsed_set(fold_events, theta)
            out.append(_collapsed_accuracy(fold_tree, collapsed, correct, test_ds.n_rows))
        return out

    acc = np.array(_parallel_map(fold_accuracies, list(range(k))))  # (k, T)
    means = acc.mean(axis=0)
    ses = acc.std(axis=0, ddof=1) / math.sqrt(k)

    best = int(np.argmax(means))
    floor = means[best] - ses[best]
    chosen = best
    for i in range(len(thresholds)):
        # Candidates are ordered largest-tree first; the last one within the
        # 1-SE band is the smallest admissible subtree.
        if means[i] >= floor:
            chosen = i
    theta = thresholds[chosen]

    curve = []
    for i, t in enumerate(thresholds):
        curve.append(
            {
                "threshold": float(t),
                "leaf_count": _effective_leaf_count(tree, _collapsed_set(events, t)),
                "cv_accuracy": float(means[i]),
                "cv_se": float(ses[i]),
            }
        )
    collapsed = _collapsed_set(events, theta)
    pruned = _materialize(tree, collapsed)
    pruned.pruning = PruningReport(
        chosen_threshold=float(theta),
        chosen_leaf_count=pruned.leaf_count(),
        folds=k,
        seed=seed,
        curve=curve,
    )
    pruned.training_accuracy = float((predict_tree(pruned, ds) == ds.target).mean())
    return pruned


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _ulda_to_json(model: UldaModel) -> dict:
    return {
        "scaling": model.scaling.tolist(),
        "center": model.center.tolist(),
        "centroids": model.centroids.tolist(),
        "priors": model.priors.tolist(),
        "prior_mode": model.prior_mode,
        "trace_value": model.trace_value,
        "feature_subset": list(model.feature_subset),
        "class_ids": list(model.class_ids),
        "n_features": model.n_features,
    }


def _ulda_from_json(data: dict) -> UldaModel:
    return UldaModel(
        scaling=np.array(data["scaling"], dtype=np.float64),
        center=np.array(data["center"], dtype=np.float64),
        centroids=np.array(data["centroids"], dtype=np.float64),
        priors=np.array(data["priors"], dtype=np.float64),
        prior_mode=data["prior_mode"],
        trace_value=data["trace_value"],
        feature_subset=tuple(data["feature_subset"]),
        class_ids=tuple(data["class_ids"]),
        n_features=data["n_features"],
    )


def _float_or_none(value):
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def _node_to_json(node: TreeNode) -> dict:
    diag = node.diagnostics
    out = {
        "id": node.node_id,
        "depth": node.depth,
        "n_rows": node.n_rows,
        "class_counts": [int(c) for c in node.class_counts],
        "imputation": record_to_json(node.record),
        "node_model": {
            "kind": node.node_model.kind,
            "plurality_class": node.node_model.plurality_class,
            "proportions": node.node_model.proportions.tolist(),
            "model": _ulda_to_json(node.node_model.model)
            if node.node_model.model is not None
            else None,
        },
        "diagnostics": {
            "n_total": diag.n_total,
            "n_before": diag.n_before,
            "n_after": diag.n_after,
            "z": _float_or_none(diag.z),
            "p_value": _float_or_none(diag.p_value),
            "gini_predicted": _float_or_none(diag.gini_predicted),
            "prior_mode": diag.prior_mode,
            "trigger": diag.trigger,
            "accepted": diag.accepted,
        },
        "split": None,
    }
    if node.split is not None:
        out["split"] = {
            "model": _ulda_to_json(node.split.model),
            "children": {str(cls): child for cls, child in node.split.children.items()},
            "selection": trace_to_json(node.split.selection)
            if node.split.selection is not None
            else None,
        }
    return out


def _node_from_json(data: dict) -> TreeNode:
    diag_data = data["diagnostics"]
    nm_data = data["node_model"]
    node_model = NodeModel(
        kind=nm_data["kind"],
        model=_ulda_from_json(nm_data["model"]) if nm_data["model"] else None,
        plurality_class=nm_data["plurality_class"],
        proportions=np.array(nm_data["proportions"], dtype=np.float64),
    )
    split = None
    if data["split"] is not None:
        split = SplitInfo(
            model=_ulda_from_json(data["split"]["model"]),
            children={int(cls): child for cls, child in data["split"]["children"].items()},
            selection=trace_from_json(data["split"]["selection"])
            if data["split"]["selection"]
            else None,
        )
    return TreeNode(
        node_id=data["id"],
        depth=data["depth"],
        n_rows=data["n_rows"],
        class_counts=np.array(data["class_counts"], dtype=np.int64),
        record=record_from_json(data["imputation"]),
        node_model=node_model,
        diagnostics=NodeDiagnostics(**diag_data),
        split=split,
        row_ids=None,
    )


def model_to_json(tree: TreeModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "schema": {
            "columns": [{"name": name, "kind": kind} for name, kind in tree.schema],
            "target": tree.target_name,
            "classes": list(tree.class_labels),
        },
        "config": asdict(tree.config),
        "root": tree.root_id,
        "nodes": [_node_to_json(tree.nodes[nid]) for nid in sorted(tree.nodes)],
        "pruning": asdict(tree.pruning) if tree.pruning is not None else None,
        "training_accuracy": tree.training_accuracy,
    }


def model_from_json(data: dict) -> TreeModel:
    if data.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not a {MODEL_FORMAT} file")
    if data.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {data.get('version')}, expected {MODEL_VERSION}"
        )
    nodes = {n["id"]: _node_from_json(n) for n in data["nodes"]}
    pruning = PruningReport(**data["pruning"]) if data["pruning"] else None
    return TreeModel(
        root_id=data["root"],
        nodes=nodes,
        class_labels=tuple(data["schema"]["classes"]),
        schema=tuple((c["name"], c["kind"]) for c in data["schema"]["columns"]),
        target_name=data["schema"]["target"],
        config=GrowthConfig(**data["config"]),
        pruning=pruning,
        training_accuracy=data["training_accuracy"],
    )


def save_model(tree: TreeModel, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_to_json(tree), handle, indent=1)
        handle.write("\n")


def load_model(path) -> TreeModel:
    with open(path, encoding="utf-8") as handle:
        return model_from_json(json.load(handle))
