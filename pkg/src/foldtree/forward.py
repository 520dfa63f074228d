"""Greedy forward variable selection wrapped around the discriminant fit.

Each step adds the design-matrix column with the largest gain in the trace
criterion; the gain doubles as Pillai's trace increment, so n * gain is
referred to a chi-square with (J-1) degrees of freedom to decide significance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .ulda import ScatterDecomposition, UldaModel, compute_scatter, fit_ulda

DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class SelectionStep:
    column: int
    gain: float
    p_value: float


@dataclass(frozen=True)
class SelectionTrace:
    """Accepted steps in order, plus the candidate that stopped the loop."""

    steps: tuple[SelectionStep, ...]
    stopped_column: int | None
    stopped_p_value: float | None

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(step.column for step in self.steps)


def step_p_value(n_rows: int, n_classes: int, gain: float, n_candidates: int = 1) -> float:
    """Significance of one forward step; isolated so the statistic can be
    swapped without touching the selection loop.

    The raw chi-square tail of n * gain with (J-1) df is Sidak-adjusted for
    the number of candidates the step maximized over: the step accepts the
    best of `n_candidates` columns, so the honest null is the max statistic.
    """
    statistic = max(n_rows * gain, 0.0)
    p_single = float(chi2.sf(statistic, df=n_classes - 1))
    if n_candidates <= 1:
        return p_single
    if p_single >= 1.0:
        return 1.0
    return float(-np.expm1(n_candidates * np.log1p(-p_single)))


def _candidate_gains(
    scatter: ScatterDecomposition,
    selected: list[int],
    remaining: np.ndarray,
    base_inv_st: np.ndarray | None,
) -> np.ndarray:
    """Trace gain of adding each remaining column to the selected set.

    Uses the bordered-inverse identity: with A = St[S,S], B = Sb[S,S],
    u = A^-1 a and s = alpha - a'u the new trace is
    tr(A^-1 B) + (u'Bu - 2 u'b + beta) / s. Degenerate borders (s ~ 0, the
    candidate is collinear with the selection) get gain 0.
    """
    st, sb = scatter.s_total, scatter.s_between
    diag_st = np.diag(st)[remaining]
    diag_sb = np.diag(sb)[remaining]
    scale = np.diag(st).max() if st.size else 0.0
    floor = max(scale, 1.0) * np.finfo(np.float64).eps * st.shape[0]

    if not selected:
        gains = np.zeros(remaining.size)
        ok = diag_st > floor
        gains[ok] = diag_sb[ok] / diag_st[ok]
        return np.clip(gains, 0.0, None)

    sel = np.asarray(selected)
    a_cols = st[np.ix_(sel, remaining)]  # (k, r)
    b_cols = sb[np.ix_(sel, remaining)]
    u = base_inv_st @ a_cols  # (k, r)
    s = diag_st - np.einsum("kr,kr->r", a_cols, u)
    b_sel = sb[np.ix_(sel, sel)]
    quad = np.einsum("kr,kr->r", u, b_sel @ u)
    cross = np.einsum("kr,kr->r", u, b_cols)
    gains = np.zeros(remaining.size)
    ok = s > floor
    gains[ok] = (quad[ok] - 2.0 * cross[ok] + diag_sb[ok]) / s[ok]
    return np.clip(gains, 0.0, None)


def forward_ulda(
    X: np.ndarray,
    y: np.ndarray,
    priors: str = "estimated",
    alpha: float = DEFAULT_ALPHA,
) -> tuple[UldaModel | None, SelectionTrace]:
    """Forward stepwise fit. Returns (model, trace); the model is None when no
    column is ever accepted (no discriminant direction)."""
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    if m < 1:
        raise ValueError("need at least one candidate column")
    scatter = compute_scatter(X, y)
    n_classes = scatter.class_ids.size

    selected: list[int] = []
    steps: list[SelectionStep] = []
    remaining = np.arange(m)
    inv_st: np.ndarray | None = None
    stopped_column: int | None = None
    stopped_p: float | None = None

    while remaining.size:
        gains = _candidate_gains(scatter, selected, remaining, inv_st)
        best_pos = int(np.argmax(gains))  # first max: lowest column id wins ties
        best_gain = float(gains[best_pos])
        best_col = int(remaining[best_pos])
        if best_gain <= 0.0:
            break
        p = step_p_value(n, n_classes, best_gain, n_candidates=remaining.size)
        if p > alpha:
            stopped_column, stopped_p = best_col, p
            break
        steps.append(SelectionStep(column=best_col, gain=best_gain, p_value=p))
        selected.append(best_col)
        remaining = np.delete(remaining, best_pos)
        sel = np.asarray(selected)
        inv_st = np.linalg.inv(scatter.s_total[np.ix_(sel, sel)])

    trace = SelectionTrace(tuple(steps), stopped_column, stopped_p)
    if not selected:
        return None, trace
    model = fit_ulda(X, y, priors=priors, subset=selected)
    return model, trace


def rank_columns(trace: SelectionTrace) -> list[int]:
    """Columns in acceptance order (a node-level importance proxy)."""
    if not trace.steps:
        raise ValueError("selection trace is empty")
    return [step.column for step in trace.steps]


def trace_to_json(trace: SelectionTrace) -> dict:
    return {
        "steps": [
            {"column": s.column, "gain": s.gain, "p_value": s.p_value}
            for s in trace.steps
        ],
        "stopped_column": trace.stopped_column,
        "stopped_p_value": trace.stopped_p_value,
    }


def trace_from_json(data: dict) -> SelectionTrace:
    return SelectionTrace(
        steps=tuple(
            SelectionStep(s["column"], s["gain"], s["p_value"]) for s in data["steps"]
        ),
        stopped_column=data["stopped_column"],
        stopped_p_value=data["stopped_p_value"],
    )
