"""Exact solver of the penalized minimal-partition problem.

The estimator minimizes  sum_{I in P} L(I) + gamma * |P|  over all interval
partitions of {1..n} (boundaries on a configurable stride grid), where L is
the Lasso interval loss from :mod:`varcpd.lasso`.  The Bellman recursion

    F(e) = min_{s < e} F(s) + L((s, e]) + gamma,      F(0) = 0,

is solved exactly with argmin backtracking; ties go to the smallest
boundary.  Estimated change points are the 1-based left endpoints of the
optimal partition's intervals, except 1.

A brute-force enumerator over all partitions doubles as a verification
oracle; sharing one :class:`~varcpd.lasso.LossCache` between the two makes
their objectives comparable exactly, not just to a tolerance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import chain, combinations
from typing import Iterator, NamedTuple

from .lasso import LassoSolution, LossCache, SolverConfig, fit_lasso_var
from .model import ModelError, TimeSeries


def default_lambda(p: int) -> float:
    """0.1 * sqrt(log p), natural logarithm."""
    return 0.1 * math.sqrt(math.log(p)) if p > 1 else 0.0


def default_gamma(n: int, p: int) -> float:
    """15 * log(n) * p, natural logarithm."""
    return 15.0 * math.log(n) * p


def default_min_len(lag: int) -> int:
    return 2 * (lag + 1)


@dataclass
class DetectionConfig:
    """Tuning for the penalized partition estimator.

    ``lambda_`` and ``gamma`` default to None and are resolved from the
    series shape at detection time; ``min_len`` defaults to 2(lag+1).
    """

    lag: int = 1
    lambda_: float | None = None
    gamma: float | None = None
    min_len: int | None = None
    step: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.lag < 1:
            raise ModelError(f"lag must be positive, got {self.lag}")
        if self.step < 1:
            raise ModelError(f"step must be positive, got {self.step}")
        if self.lambda_ is not None and self.lambda_ < 0:
            raise ModelError(f"lambda must be non-negative, got {self.lambda_}")
        if self.gamma is not None and self.gamma < 0:
            raise ModelError(f"gamma must be non-negative, got {self.gamma}")
        if self.min_len is not None and self.min_len < 1:
            raise ModelError(f"min_len must be positive, got {self.min_len}")

    def resolved(self, n: int, p: int) -> "DetectionConfig":
        """Fill in the computed defaults for a concrete series shape."""
        return replace(
            self,
            lambda_=self.lambda_ if self.lambda_ is not None else default_lambda(p),
            gamma=self.gamma if self.gamma is not None else default_gamma(n, p),
            min_len=self.min_len if self.min_len is not None else default_min_len(self.lag),
        )


@dataclass
class Partition:
    """An interval partition of {1..n}.

    ``boundaries`` are the interior left endpoints 1 < i_1 < ... < i_K <= n,
    i.e. the induced change points; the intervals are {1..i_1-1}, ...,
    {i_K..n}.
    """

    n: int
    boundaries: tuple[int, ...]
    objective: float

    def intervals(self) -> list[tuple[int, int]]:
        """Half-open (s, e] boundary pairs covering (0, n]."""
        cuts = [0, *(b - 1 for b in self.boundaries), self.n]
        return list(zip(cuts[:-1], cuts[1:]))


class Detection(NamedTuple):
    change_points: tuple[int, ...]
    partition: Partition


def _grid(n: int, step: int) -> list[int]:
    pts = [0]
    pts.extend(range(step, n, step))
    pts.append(n)
    return pts


def detect(
    series: TimeSeries,
    config: DetectionConfig,
    *,
    cache: LossCache | None = None,
    threads: int = 1,
) -> Detection:
    """Globally minimize the penalized partition objective by dynamic programming.

    Parameters
    ----------
    series : TimeSeries
        Observations, one row per time point.
    config : DetectionConfig
        Tuning parameters; unset ones are resolved from (n, p).
    cache : LossCache, optional
        Shared interval-loss cache.  Pass the same cache to
        :func:`brute_force_detect` or :func:`objective` for exact
        comparability.
    threads : int
        Fits of the intervals ending at a common right endpoint may run in
        parallel; the result is identical for any thread count.

    Returns
    -------
    Detection
        ``change_points`` (1-based) and the optimal ``partition``.
    """
    cfg = config.resolved(series.n, series.p)
    n = series.n
    if n < cfg.lag + 2:
        raise ModelError(f"series of length {n} too short for lag {cfg.lag}")
    if cache is None:
        cache = LossCache(series, cfg.lag)
    grid = _grid(n, cfg.step)
    f = {0: 0.0}
    parent: dict[int, int] = {}
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for idx in range(1, len(grid)):
            e = grid[idx]
            starts = grid[:idx]
            if pool is not None:
                losses = list(
                    pool.map(
                        lambda s, _e=e: cache.loss(s, _e, cfg.lambda_, cfg.min_len, cfg.solver),
                        starts,
                    )
                )
            else:
                losses = [cache.loss(s, e, cfg.lambda_, cfg.min_len, cfg.solver) for s in starts]
            best = math.inf
            best_s = 0
            for s, loss in zip(starts, losses):
                value = f[s] + loss + cfg.gamma
                if value < best:
                    best = value
                    best_s = s
            f[e] = best
            parent[e] = best_s
    finally:
        if pool is not None:
            pool.shutdown()
    cuts = []
    b = n
    while b > 0:
        b = parent[b]
        cuts.append(b)
    boundaries = tuple(sorted(c + 1 for c in cuts if c > 0))
    partition = Partition(n=n, boundaries=boundaries, objective=f[n])
    return Detection(change_points=boundaries, partition=partition)


def objective(
    series: TimeSeries,
    partition: Partition,
    config: DetectionConfig,
    *,
    cache: LossCache | None = None,
) -> float:
    """Evaluate sum_I L(I) + gamma * |P| for a given partition; no optimization."""
    cfg = config.resolved(series.n, series.p)
    if partition.n != series.n:
        raise ModelError(f"partition is over n={partition.n}, series has n={series.n}")
    bnds = partition.boundaries
    if any(y <= x for x, y in zip(bnds, bnds[1:])) or any(
        not 1 < b <= series.n for b in bnds
    ):
        raise ModelError(f"boundaries {bnds} do not define a partition of 1..{series.n}")
    if cache is None:
        cache = LossCache(series, cfg.lag)
    total = 0.0
    for s, e in partition.intervals():
        total = total + cache.loss(s, e, cfg.lambda_, cfg.min_len, cfg.solver)
        total = total + cfg.gamma
    return total


def iter_partitions(n: int, step: int = 1) -> Iterator[tuple[int, ...]]:
    """All interval partitions of {1..n} on the stride grid, as internal cut tuples."""
    interior = _grid(n, step)[1:-1]
    return chain.from_iterable(combinations(interior, k) for k in range(len(interior) + 1))


def brute_force_detect(
    series: TimeSeries,
    config: DetectionConfig,
    *,
    cache: LossCache | None = None,
) -> Detection:
    """Exhaustive minimizer over all 2^(n-1) partitions; verification oracle.

    Uses the same accumulation order and tie-break (lexicographically
    smallest boundary sequence, read from the right) as :func:`detect`, so
    with a shared cache the two agree exactly.
    """
    cfg = config.resolved(series.n, series.p)
    n = series.n
    if n > 20:
        raise ModelError(f"brute force is limited to n <= 20, got n={n}")
    if cache is None:
        cache = LossCache(series, cfg.lag)
    best = math.inf
    best_key: tuple[int, ...] | None = None
    best_cuts: tuple[int, ...] = ()
    for cuts in iter_partitions(n, cfg.step):
        total = 0.0
        prev = 0
        for b in (*cuts, n):
            total = total + cache.loss(prev, b, cfg.lambda_, cfg.min_len, cfg.solver)
            total = total + cfg.gamma
            prev = b
        key = cuts[::-1]
        if total < best or (total == best and key < best_key):
            best = total
            best_key = key
            best_cuts = cuts
    boundaries = tuple(c + 1 for c in best_cuts)
    partition = Partition(n=n, boundaries=boundaries, objective=best)
    return Detection(change_points=boundaries, partition=partition)


def segment_coefficients(
    series: TimeSeries,
    change_points: tuple[int, ...],
    config: DetectionConfig,
    *,
    cache: LossCache | None = None,
) -> list[LassoSolution]:
    """Per-segment Lasso refits on the intervals induced by the change points."""
    cfg = config.resolved(series.n, series.p)
    if cache is None:
        cache = LossCache(series, cfg.lag)
    part = Partition(n=series.n, boundaries=tuple(change_points), objective=math.nan)
    out = []
    for s, e in part.intervals():
        out.append(fit_lasso_var(cache.gram(s, e), cfg.lambda_, cfg.solver))
    return out
