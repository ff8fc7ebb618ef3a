"""Total transportation cost of a configuration and its minimization.

Social cost assigns every consumer to the nearest firm (equal-price
allocation) and integrates distance over each Voronoi cell; the optimum
is searched with multistart coordinate pattern search, since the objective
is piecewise-smooth with kinks wherever the cell topology changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DuplicateSites
from .geometry import COINCIDENCE_TOL, distance_integral, voronoi_cells
from .market import Configuration, MarketParams


@dataclass
class SocialCostResult:
    """Transportation cost M * t * sum_i int_{cell_i} ||x_i - x|| dA."""

    cost: float
    per_firm: np.ndarray
    optimal_flag: bool = False
    local_optima_spread: float = 0.0


def social_cost(config: Configuration, params: MarketParams) -> SocialCostResult:
    """Nearest-firm total transportation cost of a configuration."""
    cells = voronoi_cells(config.locations)
    per_firm = np.array(
        [
            params.M * params.t * distance_integral(cell, loc)
            for cell, loc in zip(cells, config.locations)
        ]
    )
    return SocialCostResult(cost=float(per_firm.sum()), per_firm=per_firm)


def _objective(flat: np.ndarray, n: int, params: MarketParams) -> float:
    pts = flat.reshape(n, 2)
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(pts[i] - pts[j])) < COINCIDENCE_TOL:
                return np.inf
    try:
        return social_cost(Configuration(pts), params).cost
    except DuplicateSites:
        return np.inf


def _pattern_search(
    x0: np.ndarray,
    n: int,
    params: MarketParams,
    step0: float = 1.0 / 8.0,
    step_min: float = 1.0 / 512.0,
) -> tuple[np.ndarray, float]:
    """Coordinate-wise descent with halving steps, clamped to the unit square."""
    x = np.clip(x0.copy(), 0.0, 1.0)
    f = _objective(x, n, params)
    step = step0
    while step >= step_min:
        improved = True
        while improved:
            improved = False
            for k in range(2 * n):
                for delta in (step, -step):
                    trial = x.copy()
                    trial[k] = np.clip(trial[k] + delta, 0.0, 1.0)
                    if trial[k] == x[k]:
                        continue
                    ft = _objective(trial, n, params)
                    if ft < f - 1e-12:
                        x, f = trial, ft
                        improved = True
                        break
        step *= 0.5
    return x, f


def social_optimum(
    n: int,
    params: MarketParams,
    *,
    starts: int = 32,
    seed: int = 0,
    warm_starts: Optional[Sequence[Configuration]] = None,
) -> tuple[Configuration, SocialCostResult]:
    """Best-found transportation-cost minimizer over n locations.

    Runs pattern search from seeded random starts plus any warm starts
    (typically lattice equilibria). The objective is nonconvex (relabeling
    alone creates n! symmetric optima), so the spread of local optima is
    reported in the result rather than treated as an error.
    """
    if not 1 <= n <= 7:
        raise ValueError("firm count must be between 1 and 7")
    rng = np.random.default_rng(seed)
    inits = [rng.uniform(0.0, 1.0, 2 * n) for _ in range(starts)]
    for cfg in warm_starts or []:
        inits.append(cfg.as_array().ravel().copy())

    best_x, best_f, finals = None, np.inf, []
    for x0 in inits:
        x, f = _pattern_search(x0, n, params)
        finals.append(f)
        if f < best_f:
            best_x, best_f = x, f
    config = Configuration(best_x.reshape(n, 2))
    result = social_cost(config, params)
    result.optimal_flag = True
    result.local_optima_spread = float(np.max(finals) - np.min(finals)) if finals else 0.0
    return config, result
