"""Oblique decision trees with multi-way discriminant splits."""

from .dataset import (
    DataError,
    Dataset,
    FoldPlan,
    load_csv,
    make_folds,
    save_csv,
    split_train_test,
)
from .impute import EncodedMatrix, ImputationRecord, encode, fit_imputation
from .ulda import (
    ScatterDecomposition,
    UldaModel,
    compute_scatter,
    criterion_trace,
    fit_ulda,
    posterior,
    predict,
)
from .forward import SelectionTrace, forward_ulda, rank_columns
from .tree import (
    GrowthConfig,
    SplitStrength,
    TreeModel,
    cart_alpha,
    find_split,
    gini_index,
    grow,
    load_model,
    predict_tree,
    prune,
    save_model,
    split_strength,
    train,
)
from .bench import SyntheticSpec, make_dataset, run_bench, spec

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Dataset",
    "EncodedMatrix",
    "FoldPlan",
    "GrowthConfig",
    "ImputationRecord",
    "ScatterDecomposition",
    "SelectionTrace",
    "SplitStrength",
    "SyntheticSpec",
    "TreeModel",
    "UldaModel",
    "cart_alpha",
    "compute_scatter",
    "criterion_trace",
    "encode",
    "find_split",
    "fit_imputation",
    "fit_ulda",
    "forward_ulda",
    "gini_index",
    "grow",
    "load_csv",
    "load_model",
    "make_dataset",
    "make_folds",
    "posterior",
    "predict",
    "predict_tree",
    "prune",
    "rank_columns",
    "run_bench",
    "save_csv",
    "save_model",
    "spec",
    "split_strength",
    "split_train_test",
    "train",
]
