"""Price and location equilibria for spatial competition with sequential
entry on the unit square: Voronoi market areas, grid demand, Bertrand
pricing, backward-induction entry, deterrence thresholds, and welfare."""

from .errors import (
    BracketingFailure,
    ConfigValidationError,
    DegeneratePolygon,
    DeterrenceImpossible,
    DimensionMismatch,
    DuplicateSites,
    Hotelling2DError,
    InfeasibleN,
    OutOfDomain,
)
from .geometry import (
    Point,
    Polygon,
    distance_integral,
    polygon_area,
    voronoi_cells,
)
from .market import (
    Configuration,
    ConsumerGrid,
    MarketOutcome,
    MarketParams,
    canonical_configuration,
    demand_exact_equal_prices,
    demand_grid,
    profit,
    utility,
)
from .pricing import PriceSolveReport, best_response_price, price_equilibrium
from .entry import (
    EntrySolver,
    EquilibriumResult,
    LocationGrid,
    deterrence_solve,
    entrant_best_response,
    sequential_equilibrium,
    threshold_sweep,
)
from .welfare import SocialCostResult, social_cost, social_optimum
from .figures import emit_figure
from .scenario import ScenarioConfig, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BracketingFailure",
    "ConfigValidationError",
    "Configuration",
    "ConsumerGrid",
    "DegeneratePolygon",
    "DeterrenceImpossible",
    "DimensionMismatch",
    "DuplicateSites",
    "EntrySolver",
    "EquilibriumResult",
    "Hotelling2DError",
    "InfeasibleN",
    "LocationGrid",
    "MarketOutcome",
    "MarketParams",
    "OutOfDomain",
    "Point",
    "Polygon",
    "PriceSolveReport",
    "ScenarioConfig",
    "SocialCostResult",
    "best_response_price",
    "canonical_configuration",
    "demand_exact_equal_prices",
    "demand_grid",
    "deterrence_solve",
    "distance_integral",
    "emit_figure",
    "entrant_best_response",
    "polygon_area",
    "price_equilibrium",
    "profit",
    "run_scenario",
    "sequential_equilibrium",
    "social_cost",
    "social_optimum",
    "threshold_sweep",
    "utility",
    "voronoi_cells",
]
