"""Synthetic dataset generators, baselines, and the benchmark runner."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import (
    CategoricalColumn,
    DataError,
    Dataset,
    NumericColumn,
    make_folds,
    split_train_test,
)
from .impute import encode, fit_imputation
from .tree import (
    GrowthConfig,
    TreeModel,
    _parallel_map,
    predict_tree,
    split_strength,
    train,
)

# Balanced 3-class tiling of the 3x3 board, indexed [row][col]. Chosen so the
# class means are well separated (a Latin-square tiling would make them
# coincide exactly and leave no per-variable signal at the root) while only
# one pair of edge-adjacent squares shares a class.
CHESSBOARD_TILING = ((0, 1, 0), (2, 0, 1), (2, 1, 2))

ROTATION_DEGREES = 45.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Pure description of a generated dataset."""

    kind: str
    seed: int
    params: tuple[tuple[str, float], ...] = ()

    def with_defaults(self, **defaults) -> dict:
        merged = dict(defaults)
        merged.update(dict(self.params))
        return merged


def spec(kind: str, seed: int, **params) -> SyntheticSpec:
    return SyntheticSpec(kind=kind, seed=seed, params=tuple(sorted(params.items())))


KNOWN_SPECS = (
    "chessboard3x3",
    "rotated_chessboard",
    "chessboard_noise",
    "xor6d",
    "dominant_class",
    "split_strength_demo",
)


def _numeric_dataset(features: dict[str, np.ndarray], labels: list[str], target: np.ndarray) -> Dataset:
    columns = tuple(NumericColumn(name, values) for name, values in features.items())
    return Dataset(columns, target.astype(np.int64), tuple(labels), target_name="class")


def gen_chessboard(
    per_square: int = 2000,
    rotated: bool = False,
    noise_dims: int = 0,
    seed: int = 0,
) -> Dataset:
    """3x3 board of unit squares, three classes tiled per CHESSBOARD_TILING."""
    if per_square < 1:
        raise ValueError("per_square must be >= 1")
    rng = np.random.default_rng(seed)
    xs, ys, cls = [], [], []
    for row in range(3):
        for col in range(3):
            pts = rng.uniform(0.0, 1.0, size=(per_square, 2))
            xs.append(col + pts[:, 0])
            ys.append(row + pts[:, 1])
            cls.append(np.full(per_square, CHESSBOARD_TILING[row][col]))
    x1 = np.concatenate(xs)
    x2 = np.concatenate(ys)
    target = np.concatenate(cls)
    if rotated:
        angle = np.deg2rad(ROTATION_DEGREES)
        cx, cy = 1.5, 1.5
        dx, dy = x1 - cx, x2 - cy
        x1 = cx + np.cos(angle) * dx - np.sin(angle) * dy
        x2 = cy + np.sin(angle) * dx + np.cos(angle) * dy
    features = {"x1": x1, "x2": x2}
    for j in range(noise_dims):
        features[f"n{j + 1:03d}"] = rng.standard_normal(x1.size)
    return _numeric_dataset(features, ["a", "b", "c"], target)


def gen_xor6d(per_center: int = 100, sd: float = 0.2, seed: int = 0) -> Dataset:
    """Gaussian blobs at the 64 binary 6-vectors, labeled by coordinate parity."""
    if per_center < 1:
        raise ValueError("per_center must be >= 1")
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for center in itertools.product((0.0, 1.0), repeat=6):
        center = np.array(center)
        pts = center + sd * rng.standard_normal((per_center, 6))
        blocks.append(pts)
        labels.append(np.full(per_center, int(center.sum()) % 2))
    X = np.vstack(blocks)
    target = np.concatenate(labels)
    features = {f"x{j + 1}": X[:, j] for j in range(6)}
    return _numeric_dataset(features, ["even", "odd"], target)


def xor6d_bayes_accuracy(sd: float = 0.2) -> float:
    """Nearest-center decoding accuracy: even number of coordinate slips."""
    from scipy.stats import norm

    p_slip = 2.0 * norm.cdf(-0.5 / sd)
    return 0.5 * (1.0 + (1.0 - 2.0 * p_slip) ** 6)


def gen_dominant_class(n_dominant: int = 1214, n_minor: int = 286, seed: int = 0) -> Dataset:
    """Two overlapping 2-D Gaussians with a heavily dominant class.

    The overlap (0.4 sd mean separation) is large enough that estimated
    priors predict everything as the dominant class, which is the regime the
    equal-prior switch exists for.
    """
    if n_dominant < 1 or n_minor < 1:
        raise ValueError("both class sizes must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_dominant, 2))
    b = rng.standard_normal((n_minor, 2)) + np.array([0.4, 0.0])
    X = np.vstack([a, b])
    target = np.concatenate([np.zeros(n_dominant), np.ones(n_minor)])
    return _numeric_dataset({"x1": X[:, 0], "x2": X[:, 1]}, ["a", "b"], target)


def gen_split_demo(extra_noise: int = 0, seed: int = 0) -> Dataset:
    """Half-space of 50/50 label noise next to a cleanly separable half-space.

    Geometry puts the class-mean difference along x1 with the midpoint at
    x1 = 0, so the root discriminant cut lands on the noise/signal boundary:
    the resulting split leaves ~100 errors before and ~50 after at the base
    size, the regime the split-strength statistic is illustrated with. Extra
    noise points dilute the same split toward the weak regime.
    """
    rng = np.random.default_rng(seed)
    n_left = 100 + extra_noise
    n_left_a = n_left // 2
    left_x1 = rng.uniform(-1.0, 0.0, n_left)
    left_y = np.concatenate([np.zeros(n_left_a), np.ones(n_left - n_left_a)])
    # Right half separates along x1 itself: class a in (0, 0.5), b in (0.5, 1).
    right_x1 = np.concatenate(
        [rng.uniform(0.0, 0.5, 50), rng.uniform(0.5, 1.0, 50)]
    )
    right_y = np.concatenate([np.zeros(50), np.ones(50)])
    x1 = np.concatenate([left_x1, right_x1])
    x2 = rng.uniform(-1.0, 1.0, x1.size)
    target = np.concatenate([left_y, right_y])
    return _numeric_dataset({"x1": x1, "x2": x2}, ["a", "b"], target)


def make_dataset(dataset_spec: SyntheticSpec) -> Dataset:
    kind, seed = dataset_spec.kind, dataset_spec.seed
    if kind == "chessboard3x3":
        p = dataset_spec.with_defaults(per_square=2000, noise_dims=0)
        return gen_chessboard(int(p["per_square"]), False, int(p["noise_dims"]), seed)
    if kind == "rotated_chessboard":
        p = dataset_spec.with_defaults(per_square=2000, noise_dims=0)
        return gen_chessboard(int(p["per_square"]), True, int(p["noise_dims"]), seed)
    if kind == "chessboard_noise":
        p = dataset_spec.with_defaults(per_square=2000, noise_dims=100)
        return gen_chessboard(int(p["per_square"]), False, int(p["noise_dims"]), seed)
    if kind == "xor6d":
        p = dataset_spec.with_defaults(per_center=100, sd=0.2)
        return gen_xor6d(int(p["per_center"]), float(p["sd"]), seed)
    if kind == "dominant_class":
        p = dataset_spec.with_defaults(n_dominant=1214, n_minor=286)
        return gen_dominant_class(int(p["n_dominant"]), int(p["n_minor"]), seed)
    if kind == "split_strength_demo":
        p = dataset_spec.with_defaults(extra_noise=0)
        return gen_split_demo(int(p["extra_noise"]), seed)
    raise DataError(f"unknown synthetic spec {kind!r} (known: {', '.join(KNOWN_SPECS)})")


def inject_mcar(ds: Dataset, rate: float, seed: int, columns=None) -> Dataset:
    """Blank out feature cells completely at random at the given rate."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("rate must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    wanted = set(columns) if columns is not None else None
    new_cols = []
    for col in ds.columns:
        if wanted is not None and col.name not in wanted:
            new_cols.append(col)
            continue
        mask = rng.random(ds.n_rows) < rate
        if col.is_numeric:
            values = col.values.copy()
            values[mask] = np.nan
            new_cols.append(NumericColumn(col.name, values))
        else:
            codes = col.codes.copy()
            codes[mask] = -1
            new_cols.append(CategoricalColumn(col.name, codes, col.levels))
    return Dataset(tuple(new_cols), ds.target, ds.class_labels, ds.target_name)


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


class PluralityBaseline:
    """Predicts the most frequent training class everywhere."""

    def fit(self, ds: Dataset) -> "PluralityBaseline":
        self.cls = int(np.argmax(ds.class_counts()))
        return self

    def predict(self, ds: Dataset) -> np.ndarray:
        return np.full(ds.n_rows, self.cls, dtype=np.int64)

    def leaf_count(self) -> int:
        return 1


@dataclass
class _AxisNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_AxisNode | None" = None
    right: "_AxisNode | None" = None
    cls: int = 0


class AxisGiniBaseline:
    """Greedy univariate Gini tree with the same z-test pre-stopping.

    Deliberately minimal: binary splits, plurality node models, no pruning.
    Serves as a directional axis-orthogonal comparison, not a CART clone.
    """

    def __init__(self, prestop_p: float = 0.01, min_node_size: int = 10, max_depth: int = 30):
        self.prestop_p = prestop_p
        self.min_node_size = min_node_size
        self.max_depth = max_depth

    def fit(self, ds: Dataset) -> "AxisGiniBaseline":
        self.record = fit_imputation(ds, policy="node_wise")
        X = encode(ds, self.record).values
        y = ds.target
        self.n_classes = ds.n_classes
        self.min_size = max(self.min_node_size, 2 * ds.n_classes)
        self.n_leaves = 0
        self.root = self._build(X, y, 0)
        return self

    def _leaf(self, y: np.ndarray) -> _AxisNode:
        counts = np.bincount(y, minlength=self.n_classes)
        self.n_leaves += 1
        return _AxisNode(cls=int(np.argmax(counts)))

    def _best_split(self, X: np.ndarray, y: np.ndarray):
        n = len(y)
        counts = np.bincount(y, minlength=self.n_classes).astype(np.float64)
        parent_gini = 1.0 - ((counts / n) ** 2).sum()
        best = (0.0, None, None)
        onehot = np.zeros((n, self.n_classes))
        onehot[np.arange(n), y] = 1.0
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            v = X[order, j]
            cum = np.cumsum(onehot[order], axis=0)
            sizes = np.arange(1, n + 1, dtype=np.float64)
            cut = np.flatnonzero(np.diff(v) > 0)  # split between distinct values
            if cut.size == 0:
                continue
            nl = sizes[cut]
            nr = n - nl
            gl = 1.0 - ((cum[cut] / nl[:, None]) ** 2).sum(axis=1)
            gr_counts = counts[None, :] - cum[cut]
            gr = 1.0 - ((gr_counts / nr[:, None]) ** 2).sum(axis=1)
            decrease = parent_gini - (nl * gl + nr * gr) / n
            pos = int(np.argmax(decrease))
            if decrease[pos] > best[0] + 1e-12:
                threshold = 0.5 * (v[cut[pos]] + v[cut[pos] + 1])
                best = (float(decrease[pos]), j, threshold)
        return best

    def _build(self, X: np.ndarray, y: np.ndarray, depth: int) -> _AxisNode:
        n = len(y)
        counts = np.bincount(y, minlength=self.n_classes)
        if depth >= self.max_depth or n < self.min_size or np.count_nonzero(counts) < 2:
            return self._leaf(y)
        gain, feature, threshold = self._best_split(X, y)
        if feature is None or gain <= 0.0:
            return self._leaf(y)
        mask = X[:, feature] <= threshold
        n_before = n - int(counts.max())
        n_after = 0
        for part in (y[mask], y[~mask]):
            part_counts = np.bincount(part, minlength=self.n_classes)
            n_after += len(part) - int(part_counts.max())
        if split_strength(n, n_before, n_after).p_value > self.prestop_p:
            return self._leaf(y)
        node = _AxisNode(feature=feature, threshold=threshold)
        node.left = self._build(X[mask], y[mask], depth + 1)
        node.right = self._build(X[~mask], y[~mask], depth + 1)
        return node

    def predict(self, ds: Dataset) -> np.ndarray:
        X = encode(ds.columns, self.record).values
        out = np.empty(ds.n_rows, dtype=np.int64)
        stack = [(self.root, np.arange(ds.n_rows))]
        while stack:
            node, rows = stack.pop()
            if node.left is None:
                out[rows] = node.cls
                continue
            mask = X[rows, node.feature] <= node.threshold
            stack.append((node.left, rows[mask]))
            stack.append((node.right, rows[~mask]))
        return out

    def leaf_count(self) -> int:
        return self.n_leaves


# ---------------------------------------------------------------------------
# Benchmark runner
# ---------------------------------------------------------------------------

BUILTIN_METHODS = ("ldatree", "foldtree", "plurality", "axis_gini")


@dataclass
class MethodResult:
    accuracy: float
    accuracy_sd: float
    leaf_count: float
    fit_seconds: float


@dataclass
class BenchReport:
    spec: SyntheticSpec
    protocol: str
    seed: int
    results: dict[str, MethodResult] = field(default_factory=dict)


def _fit_method(name: str, train_ds: Dataset, seed: int, config: GrowthConfig | None):
    if name in ("ldatree", "foldtree"):
        base = config if config is not None else GrowthConfig()
        cfg = GrowthConfig(
            method=name,
            stopping=base.stopping,
            prestop_p=base.prestop_p,
            growth_p=base.growth_p,
            forward_alpha=base.forward_alpha,
            imputation=base.imputation,
            min_node_size=base.min_node_size,
            max_depth=base.max_depth,
            cv_folds=base.cv_folds,
            seed=seed,
        )
        model = train(train_ds, cfg)
        return model, model.leaf_count()
    if name == "plurality":
        model = PluralityBaseline().fit(train_ds)
        return model, model.leaf_count()
    if name == "axis_gini":
        model = AxisGiniBaseline().fit(train_ds)
        return model, model.leaf_count()
    raise DataError(f"unknown method {name!r} (built in: {', '.join(BUILTIN_METHODS)})")


def _predict_method(model, test_ds: Dataset) -> np.ndarray:
    if isinstance(model, TreeModel):
        return predict_tree(model, test_ds)
    return model.predict(test_ds)


def run_bench(
    dataset_spec: SyntheticSpec,
    methods,
    protocol=("holdout", 0.5),
    seed: int = 0,
    config: GrowthConfig | None = None,
) -> BenchReport:
    """Fit each method under the protocol; deterministic given the seed."""
    methods = list(methods)
    if not methods:
        raise DataError("methods must be non-empty")
    ds = make_dataset(dataset_spec)
    mode, value = protocol
    report = BenchReport(
        spec=dataset_spec,
        protocol=f"{mode}:{value}",
        seed=seed,
    )

    if mode == "holdout":
        train_ds, test_ds = split_train_test(ds, float(value), seed)
        for name in methods:
            start = time.perf_counter()
            model, leaves = _fit_method(name, train_ds, seed, config)
            elapsed = time.perf_counter() - start
            accuracy = float((_predict_method(model, test_ds) == test_ds.target).mean())
            report.results[name] = MethodResult(accuracy, 0.0, float(leaves), elapsed)
        return report

    if mode == "cv":
        k = int(value)
        plan = make_folds(ds, k, seed)
        for name in methods:
            start = time.perf_counter()

            def one_fold(fold: int, method=name):
                fold_train = ds.take(plan.rest_rows(fold))
                fold_test = ds.take(plan.fold_rows(fold))
                model, leaves = _fit_method(method, fold_train, seed, config)
                acc = float((_predict_method(model, fold_test) == fold_test.target).mean())
                return acc, leaves

            outcomes = _parallel_map(one_fold, list(range(k)))
            accs = np.array([a for a, _ in outcomes])
            leaves = np.array([l for _, l in outcomes], dtype=np.float64)
            elapsed = time.perf_counter() - start
            report.results[name] = MethodResult(
                accuracy=float(accs.mean()),
                accuracy_sd=float(accs.std(ddof=1)),
                leaf_count=float(leaves.mean()),
                fit_seconds=elapsed,
            )
        return report

    raise DataError(f"unknown protocol {mode!r}")


def render_text(report: BenchReport) -> str:
    lines = [
        f"spec: {report.spec.kind} seed={report.spec.seed} "
        f"params={dict(report.spec.params)} protocol={report.protocol}",
        f"{'method':<12} {'accuracy':>9} {'sd':>8} {'leaves':>8} {'fit_s':>8}",
    ]
    for name, res in report.results.items():
        lines.append(
            f"{name:<12} {res.accuracy:>9.4f} {res.accuracy_sd:>8.4f} "
            f"{res.leaf_count:>8.1f} {res.fit_seconds:>8.2f}"
        )
    return "\n".join(lines)


def report_to_json(report: BenchReport) -> dict:
    return {
        "spec": {
            "kind": report.spec.kind,
            "seed": report.spec.seed,
            "params": dict(report.spec.params),
        },
        "protocol": report.protocol,
        "seed": report.seed,
        "results": {
            name: {
                "accuracy": res.accuracy,
                "accuracy_sd": res.accuracy_sd,
                "leaf_count": res.leaf_count,
                "fit_seconds": res.fit_seconds,
            }
            for name, res in report.results.items()
        },
    }
