"""Turning interaction records into per-interaction group means and t-test rankings.

The sample unit for every test at interaction k is the per-run group mean, so a
series point carries one value per contributing run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .population import GROUP_ORDER, ConsumerGroup

SIGNIFICANCE = 0.05
TOP_RANK = len(GROUP_ORDER)
SERIES_COLUMNS = (
    ['interaction']
    + [f'mean_ug_{g.value}' for g in GROUP_ORDER]
    + [f'rank_{g.value}' for g in GROUP_ORDER]
    + [f'n_runs_{g.value}' for g in GROUP_ORDER]
)
POINT_COLUMNS = ['interaction', 'group', 'mean_ug', 'rank', 'n_runs']
MEANS_COLUMNS = ['run_id', 'group', 'interaction', 'mean_ug']


@dataclass(frozen=True)
class SeriesPoint:
    group: ConsumerGroup
    interaction: int
    per_run_means: Tuple[float, ...]

    @property
    def pooled_mean(self) -> float:
        return float(np.mean(self.per_run_means))

    @property
    def n_runs(self) -> int:
        return len(self.per_run_means)


@dataclass(frozen=True)
class RankedInteraction:
    interaction: int
    means: Dict[ConsumerGroup, float]
    ranks: Dict[ConsumerGroup, int]
    n_runs: Dict[ConsumerGroup, int]


RankedSeries = List[RankedInteraction]


class TTestResult(NamedTuple):
    significant: bool
    t_stat: float
    df: float
    p_value: float


# ----- aggregation -----
def records_frame(records: Iterable) -> pd.DataFrame:
    rows = [(r.run_id, r.group.value, r.interaction_index, r.ug) for r in records]
    return pd.DataFrame(rows, columns=['run_id', 'group', 'interaction', 'ug'])


def run_means(records: Iterable) -> pd.DataFrame:
    """Mean UG per (run, group, interaction index)."""
    frame = records_frame(records)
    if frame.empty:
        return pd.DataFrame(columns=MEANS_COLUMNS)
    means = frame.groupby(['run_id', 'group', 'interaction'], sort=True)['ug'].mean()
    return means.rename('mean_ug').reset_index()[MEANS_COLUMNS]


def aggregate_means(means: pd.DataFrame, nisr: int, min_runs: Optional[int] = None) -> List[SeriesPoint]:
    if min_runs is None:
        min_runs = min(2, nisr)
    if means.empty:
        return []
    ordered = means.sort_values(['interaction', 'group', 'run_id'])
    points: List[SeriesPoint] = []
    for (interaction, group), chunk in ordered.groupby(['interaction', 'group'], sort=False):
        values = tuple(float(v) for v in chunk['mean_ug'])
        if len(values) < min_runs:
            continue
        points.append(SeriesPoint(ConsumerGroup(group), int(interaction), values))
    order = {g: i for i, g in enumerate(GROUP_ORDER)}
    points.sort(key=lambda p: (p.interaction, order[p.group]))
    return points


def aggregate(records: Iterable, nisr: int, min_runs: Optional[int] = None) -> List[SeriesPoint]:
    """Per (group, k): one mean per run over the consumers whose k-th interaction exists.

    Points backed by fewer than ``min_runs`` runs (default 2, or 1 for a single run) are dropped.
    """
    return aggregate_means(run_means(records), nisr, min_runs)


# ----- statistics -----
def welch_t_test(a: Sequence[float], b: Sequence[float], alpha: float = SIGNIFICANCE) -> TTestResult:
    """Two-sided unequal-variance t-test; fewer than two points per side is never significant."""
    x1 = np.asarray(a, dtype=float)
    x2 = np.asarray(b, dtype=float)
    n1, n2 = len(x1), len(x2)
    if n1 < 2 or n2 < 2:
        return TTestResult(False, math.nan, math.nan, math.nan)
    m1, m2 = float(x1.mean()), float(x2.mean())
    v1 = float(x1.var(ddof=1)) / n1
    v2 = float(x2.var(ddof=1)) / n2
    pooled = v1 + v2
    if pooled == 0.0:
        if m1 == m2:
            return TTestResult(False, 0.0, float(n1 + n2 - 2), 1.0)
        return TTestResult(True, math.copysign(math.inf, m1 - m2), float(n1 + n2 - 2), 0.0)
    t_stat = (m1 - m2) / math.sqrt(pooled)
    df = pooled**2 / (v1**2 / (n1 - 1) + v2**2 / (n2 - 1))
    p_value = float(2.0 * stats.t.sf(abs(t_stat), df))
    return TTestResult(p_value < alpha, t_stat, df, p_value)


def rank_groups(
    means: Mapping[ConsumerGroup, float],
    significant: Mapping[frozenset, bool] | Callable[[ConsumerGroup, ConsumerGroup], bool],
    top: Optional[int] = None,
) -> Dict[ConsumerGroup, int]:
    """Rank by mean, best = ``top``; neighbours that do not differ significantly share a rank."""
    if top is None:
        top = len(means)
    if callable(significant):
        differs = significant
    else:
        def differs(x: ConsumerGroup, y: ConsumerGroup) -> bool:
            return bool(significant.get(frozenset((x, y)), False))

    order = {g: i for i, g in enumerate(GROUP_ORDER)}
    ordered = sorted(means, key=lambda g: (-means[g], order.get(g, len(order))))
    ranks: Dict[ConsumerGroup, int] = {}
    cluster_start = 0
    for position, group in enumerate(ordered):
        if position and differs(ordered[position - 1], group):
            cluster_start = position
        ranks[group] = top - cluster_start
    return ranks


def rank_series(points: Iterable[SeriesPoint], alpha: float = SIGNIFICANCE) -> RankedSeries:
    by_interaction: Dict[int, Dict[ConsumerGroup, SeriesPoint]] = {}
    for point in points:
        by_interaction.setdefault(point.interaction, {})[point.group] = point
    ranked: RankedSeries = []
    for interaction in sorted(by_interaction):
        present = by_interaction[interaction]
        pairwise = {
            frozenset((x, y)): welch_t_test(present[x].per_run_means, present[y].per_run_means, alpha).significant
            for x, y in combinations(present, 2)
        }
        means = {g: p.pooled_mean for g, p in present.items()}
        ranked.append(
            RankedInteraction(
                interaction=interaction,
                means=means,
                ranks=rank_groups(means, pairwise, top=TOP_RANK),
                n_runs={g: p.n_runs for g, p in present.items()},
            )
        )
    return ranked


# ----- tables -----
def points_frame(series: RankedSeries) -> pd.DataFrame:
    """Long format: one row per (interaction, group) point."""
    rows = [
        (item.interaction, group.value, item.means[group], item.ranks[group], item.n_runs[group])
        for item in series
        for group in GROUP_ORDER
        if group in item.means
    ]
    frame = pd.DataFrame(rows, columns=POINT_COLUMNS)
    return frame.astype({'interaction': 'int64', 'mean_ug': 'float64', 'rank': 'Int64', 'n_runs': 'Int64'})


def wide_from_points(points: pd.DataFrame) -> pd.DataFrame:
    """Per-interaction table with one mean/rank/run-count column per group; gaps stay empty."""
    if points.empty:
        return pd.DataFrame(columns=SERIES_COLUMNS)
    groups = [g.value for g in GROUP_ORDER]
    index = pd.Index(sorted(points['interaction'].unique()), name='interaction')
    table = pd.DataFrame(index=index)
    for column, dtype in (('mean_ug', 'float64'), ('rank', 'Int64'), ('n_runs', 'Int64')):
        pivot = points.pivot(index='interaction', columns='group', values=column)
        pivot = pivot.reindex(index=index, columns=groups)
        for group in groups:
            table[f'{column}_{group}'] = pivot[group].astype(dtype)
    table = table.reset_index()
    table['interaction'] = table['interaction'].astype('int64')
    return table[SERIES_COLUMNS]


def series_frame(series: RankedSeries) -> pd.DataFrame:
    return wide_from_points(points_frame(series))


def default_windows(n_max: int) -> List[Tuple[str, int, int]]:
    return [
        ('1-50', 1, 50),
        ('51-200', 51, 200),
        (f'201-{n_max}', 201, n_max),
        ('overall', 1, n_max),
    ]


def summarize(points: pd.DataFrame, windows: Sequence[Tuple[str, int, int]]) -> pd.DataFrame:
    """Mean of the per-interaction group means inside each window; empty windows give NaN."""
    rows = []
    for group in GROUP_ORDER:
        mine = points[points['group'] == group.value]
        for label, start, end in windows:
            inside = mine[(mine['interaction'] >= start) & (mine['interaction'] <= end)]
            mean = float(inside['mean_ug'].mean()) if len(inside) else math.nan
            rows.append((group.value, label, start, end, mean, len(inside)))
    return pd.DataFrame(rows, columns=['group', 'window', 'start', 'end', 'mean_ug', 'n_points'])


def steady_state_mean(points: pd.DataFrame, group: ConsumerGroup, start: int, end: int) -> float:
    summary = summarize(points, [('steady', start, end)])
    return float(summary.loc[summary['group'] == group.value, 'mean_ug'].iloc[0])


def smooth(values: Sequence[float], window: int = 5) -> List[float]:
    """Trailing moving average for plot data; significance tests always use the raw means."""
    return [float(v) for v in pd.Series(values, dtype=float).rolling(window, min_periods=1).mean()]


def smoothed_frame(series: pd.DataFrame, window: int = 5) -> pd.DataFrame:
    smoothed = series[['interaction']].copy()
    for group in GROUP_ORDER:
        column = f'mean_ug_{group.value}'
        smoothed[column] = series[column].astype(float).rolling(window, min_periods=1).mean()
    return smoothed
