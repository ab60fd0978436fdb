"""Causal graph inference over per-template count series.

Problematic templates (non-information golden signal) are counted per
fixed interval; pairwise Granger tests (nested OLS, F statistic) with
Bonferroni correction across lags produce the directed edges.

The F-distribution tail probability is computed here from scratch via
the regularized incomplete beta function, so the statistical core has no
library dependency; tests cross-check it against an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .broadcast import EnrichedRecord

PROBLEMATIC_SIGNALS = frozenset({"latency", "traffic", "error", "saturation", "availability"})


class RankDeficientError(ValueError):
    """Design matrix is collinear; the pair cannot be tested at this lag."""


# ---------------------------------------------------------------------------
# Time series matrix


@dataclass
class TimeSeriesMatrix:
    interval: float
    start: datetime | None
    end: datetime | None
    series: dict[int, np.ndarray]  # template_id -> counts per interval
    n_intervals: int
    excluded: dict[int, np.ndarray] = field(default_factory=dict)  # zero variance

    def total_count(self) -> int:
        return int(
            sum(int(v.sum()) for v in self.series.values())
            + sum(int(v.sum()) for v in self.excluded.values())
        )


def build_matrix(
    enriched: list[EnrichedRecord],
    interval: float = 60.0,
    signal_filter: frozenset[str] | None = None,
    warnings: list[str] | None = None,
) -> TimeSeriesMatrix:
    """Count problematic records per template per interval.

    Buckets are aligned to interval boundaries starting at the earliest
    included timestamp.  Templates whose series never varies carry no
    usable signal and are moved aside (kept for count conservation).
    """
    signal_filter = signal_filter if signal_filter is not None else PROBLEMATIC_SIGNALS
    hits = [
        er for er in enriched
        if er.labels.golden in signal_filter and er.record.effective_ts is not None
    ]
    if not hits:
        return TimeSeriesMatrix(interval, None, None, {}, 0)

    start = min(er.record.effective_ts for er in hits)
    indices = [
        (er.template_id, int((er.record.effective_ts - start).total_seconds() // interval))
        for er in hits
    ]
    n_intervals = max(idx for _, idx in indices) + 1
    series: dict[int, np.ndarray] = {}
    for template_id, idx in indices:
        vec = series.get(template_id)
        if vec is None:
            vec = series[template_id] = np.zeros(n_intervals, dtype=np.int64)
        vec[idx] += 1

    excluded = {}
    for template_id in sorted(series):
        vec = series[template_id]
        if np.all(vec == vec[0]):
            excluded[template_id] = vec
            del series[template_id]
            if warnings is not None:
                warnings.append(
                    f"causal: template {template_id} has a constant series, excluded"
                )

    end = start + timedelta(seconds=interval * n_intervals)
    return TimeSeriesMatrix(interval, start, end, series, n_intervals, excluded)


# ---------------------------------------------------------------------------
# F-distribution tail from scratch

_BETA_EPS = 3e-14
_BETA_FPMIN = 1e-300
_BETA_MAXIT = 300


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz continued fraction for the incomplete beta (Numerical Recipes form)
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, d1: int, d2: int) -> float:
    """P(F_{d1,d2} > f), the upper tail of the F distribution."""
    if math.isinf(f):
        return 0.0
    if f <= 0.0:
        return 1.0
    x = d2 / (d2 + d1 * f)
    return betainc_reg(d2 / 2.0, d1 / 2.0, x)


# ---------------------------------------------------------------------------
# Granger test


def _ols_rss(X: np.ndarray, target: np.ndarray) -> float:
    beta, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank < X.shape[1]:
        raise RankDeficientError(f"design matrix rank {rank} < {X.shape[1]} columns")
    resid = target - X @ beta
    return float(resid @ resid)


def granger_test(x, y, lag: int) -> tuple[float, float]:
    """Does x help predict y beyond y's own history?

    Restricted model regresses y on its own lags; the unrestricted model
    adds x's lags.  Returns (F statistic, p-value) with degrees of freedom
    (lag, n - 3*lag - 1).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length vectors")
    n = len(y)
    if lag < 1:
        raise ValueError("lag must be >= 1")
    df2 = n - 3 * lag - 1
    if df2 < 1:
        raise ValueError(f"series too short: n={n} gives {df2} residual dof at lag {lag}")

    m = n - lag
    target = y[lag:]
    ones = np.ones((m, 1))
    y_lags = np.column_stack([y[lag - i : n - i] for i in range(1, lag + 1)])
    x_lags = np.column_stack([x[lag - i : n - i] for i in range(1, lag + 1)])

    rss_r = _ols_rss(np.hstack([ones, y_lags]), target)
    rss_u = _ols_rss(np.hstack([ones, y_lags, x_lags]), target)

    diff = rss_r - rss_u
    if diff <= 0.0:
        return 0.0, 1.0
    if rss_u <= 0.0:
        return math.inf, 0.0
    f = (diff / lag) / (rss_u / df2)
    return f, f_sf(f, lag, df2)


# ---------------------------------------------------------------------------
# Graph construction


@dataclass(slots=True)
class CausalEdge:
    from_template: int
    to_template: int
    lag: int  # the p-minimizing lag
    f_stat: float
    p_value: float  # Bonferroni-adjusted across lags


@dataclass
class CausalGraph:
    nodes: list[dict]  # {template_id, text, golden}
    edges: list[CausalEdge]
    parameters: dict

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "edges": [
                {"from": e.from_template, "to": e.to_template, "lag": e.lag,
                 "f": e.f_stat, "p": e.p_value}
                for e in self.edges
            ],
            "params": self.parameters,
        }


def build_graph(
    matrix: TimeSeriesMatrix,
    max_lag: int = 3,
    alpha: float = 0.05,
    node_info: dict[int, tuple[str, str]] | None = None,
    difference: bool = False,
    warnings: list[str] | None = None,
) -> CausalGraph:
    """Directed edges where x Granger-causes y at some lag <= max_lag.

    Per ordered pair, the minimum p over lags is Bonferroni-adjusted by
    max_lag; edges below alpha survive.  Nodes cover every template in
    the matrix, edges or not.
    """
    node_info = node_info or {}
    parameters = {
        "interval": matrix.interval, "max_lag": max_lag, "alpha": alpha,
        "difference": difference,
    }
    template_ids = sorted(matrix.series)
    nodes = [
        {
            "template_id": tid,
            "text": node_info.get(tid, ("", "information"))[0],
            "golden": node_info.get(tid, ("", "information"))[1],
        }
        for tid in template_ids
    ]

    series = {tid: matrix.series[tid].astype(np.float64) for tid in template_ids}
    if difference:
        series = {tid: np.diff(vec) for tid, vec in series.items()}

    edges: list[CausalEdge] = []
    for from_id in template_ids:
        for to_id in template_ids:
            if from_id == to_id:
                continue
            x, y = series[from_id], series[to_id]
            best: tuple[float, float, int] | None = None  # (p, f, lag)
            for lag in range(1, max_lag + 1):
                if len(y) - 3 * lag - 1 < 1:
                    break
                try:
                    f, p = granger_test(x, y, lag)
                except RankDeficientError as exc:
                    if warnings is not None:
                        warnings.append(
                            f"causal: pair {from_id}->{to_id} skipped at lag {lag} ({exc})"
                        )
                    continue
                if best is None or p < best[0]:
                    best = (p, f, lag)
            if best is None:
                continue
            p_adj = min(1.0, best[0] * max_lag)
            if p_adj < alpha:
                edges.append(CausalEdge(from_id, to_id, best[2], best[1], p_adj))

    return CausalGraph(nodes=nodes, edges=edges, parameters=parameters)
