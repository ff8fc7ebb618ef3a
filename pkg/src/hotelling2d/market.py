"""Consumer utility, demand evaluation, and firm profit.

Demand is exact (Voronoi areas) when all firms charge the same price and
grid-based in general; both report consumer mass, so profit applies the
margin and fixed cost literally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, DuplicateSites, OutOfDomain
from .geometry import (
    COINCIDENCE_TOL,
    MAX_SITES,
    SQUARE_SYMMETRIES,
    Point,
    in_unit_square,
    polygon_area,
    voronoi_cells,
)

TIE_TOL = 1e-9
MIN_CONSUMER_RESOLUTION = 16


@dataclass(frozen=True)
class MarketParams:
    """Scalar model parameters.

    M is consumer density (market size), F the fixed cost, t the transport
    cost (normalized to 1), a the reservation value (large enough that the
    market is covered at sane prices), c the marginal cost.
    """

    M: float = 100.0
    F: float = 25.0
    t: float = 1.0
    a: float = 10.0
    c: float = 0.0

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be > 0")
        if self.F < 0:
            raise ValueError("F must be >= 0")
        if self.t <= 0:
            raise ValueError("t must be > 0")
        if self.a <= 0:
            raise ValueError("a must be > 0")
        if self.c < 0:
            raise ValueError("c must be >= 0")


@dataclass(frozen=True)
class Configuration:
    """Entry-ordered firm locations; index 0 entered first."""

    locations: tuple[Point, ...]

    def __init__(self, locations: Sequence):
        pts = tuple(Point(float(p[0]), float(p[1])) for p in locations)
        object.__setattr__(self, "locations", pts)
        n = len(pts)
        if not 1 <= n <= MAX_SITES:
            raise ValueError(f"need between 1 and {MAX_SITES} firms, got {n}")
        arr = self.as_array()
        if not in_unit_square(arr):
            raise OutOfDomain("all firm locations must lie in the unit square")
        for i in range(n):
            for j in range(i + 1, n):
                if np.hypot(arr[i, 0] - arr[j, 0], arr[i, 1] - arr[j, 1]) < COINCIDENCE_TOL:
                    raise DuplicateSites(f"firms {i} and {j} share a location")

    @property
    def n(self) -> int:
        return len(self.locations)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.locations, dtype=float).reshape(-1, 2)


def canonical_configuration(config: Configuration) -> Configuration:
    """Lexicographically least image of the entry-ordered tuple under the 8 square symmetries."""
    arr = config.as_array()
    best = None
    for sym in SQUARE_SYMMETRIES:
        cand = tuple(map(tuple, np.round(sym(arr), 15)))
        if best is None or cand < best:
            best = cand
    return Configuration(best)


@dataclass(frozen=True)
class ConsumerGrid:
    """Uniform lattice of consumer cells; total weight equals M."""

    resolution: int = 128

    def __post_init__(self):
        if self.resolution < MIN_CONSUMER_RESOLUTION:
            raise ValueError(f"consumer resolution must be >= {MIN_CONSUMER_RESOLUTION}")

    @cached_property
    def centers(self) -> np.ndarray:
        u = (np.arange(self.resolution) + 0.5) / self.resolution
        gx, gy = np.meshgrid(u, u, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    @property
    def n_cells(self) -> int:
        return self.resolution**2

    def cell_weight(self, params: MarketParams) -> float:
        return params.M / self.n_cells


@dataclass
class MarketOutcome:
    """Per-firm demand (consumer mass), profit, and fraction of mass served."""

    demand: np.ndarray
    profit: np.ndarray
    coverage: float


def utility(consumer, firm, price: float, params: MarketParams) -> float:
    """Consumer surplus from buying at ``price`` from a firm at ``firm``."""
    d = np.hypot(firm[0] - consumer[0], firm[1] - consumer[1])
    return params.a - params.t * d - price


def firm_distances(config: Configuration, grid: ConsumerGrid) -> np.ndarray:
    """(n, cells) matrix of firm-to-cell-center distances."""
    locs = config.as_array()
    pts = grid.centers
    return np.hypot(locs[:, 0:1] - pts[None, :, 0], locs[:, 1:2] - pts[None, :, 1])


def demand_shares_grid(
    config: Configuration,
    prices: Sequence[float],
    params: MarketParams,
    grid: ConsumerGrid,
    distances: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float]:
    """Unit-mass demand shares by cell assignment, plus coverage.

    Each cell goes to the highest-utility firm provided that utility is
    >= 0; ties within TIE_TOL split the cell equally; cells where every
    firm gives negative utility stay unserved.
    """
    p = np.asarray(prices, dtype=float)
    if len(p) != config.n:
        raise DimensionMismatch(f"{config.n} firms but {len(p)} prices")
    d = firm_distances(config, grid) if distances is None else distances
    u = params.a - params.t * d - p[:, None]
    best = u.max(axis=0)
    served = best >= 0.0
    tied = u >= best[None, :] - TIE_TOL
    counts = tied.sum(axis=0)
    alloc = np.where(served[None, :], tied / counts[None, :], 0.0)
    shares = alloc.sum(axis=1) / grid.n_cells
    coverage = served.mean()
    return shares, float(coverage)


def demand_grid(
    config: Configuration,
    prices: Sequence[float],
    params: MarketParams,
    grid: ConsumerGrid,
    distances: Optional[np.ndarray] = None,
) -> MarketOutcome:
    """Grid demand in consumer mass, with profits left unfilled (zeros)."""
    shares, coverage = demand_shares_grid(config, prices, params, grid, distances)
    demand = shares * params.M
    return MarketOutcome(demand=demand, profit=np.zeros_like(demand), coverage=coverage)


def demand_exact_equal_prices(config: Configuration, params: MarketParams) -> np.ndarray:
    """Exact equal-price demand: Voronoi cell area times density."""
    cells = voronoi_cells(config.locations)
    return np.array([polygon_area(c) * params.M for c in cells])


def profit(
    config: Configuration,
    prices: Sequence[float],
    demand: Sequence[float],
    params: MarketParams,
) -> np.ndarray:
    """Per-firm profit (p_i - c) * demand_i - F."""
    p = np.asarray(prices, dtype=float)
    dem = np.asarray(demand, dtype=float)
    if len(p) != config.n or len(dem) != config.n:
        raise DimensionMismatch(
            f"{config.n} firms but {len(p)} prices and {len(dem)} demands"
        )
    return (p - params.c) * dem - params.F
