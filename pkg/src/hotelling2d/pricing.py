"""Second-stage price equilibrium for a fixed configuration.

Damped simultaneous best-response iteration with multistart diagnostics.
Best responses maximize profit on a smoothed demand surface: each grid
cell's mass splits between firms (and the no-purchase option) by a logistic
weight with width sigma = t / resolution. The hard cell-assignment demand
is discontinuous in prices, which leaves the best-response map without a
fixed point at grid granularity; the smoothed surface is the same model in
the resolution limit and makes the iteration convergent to tight tolerance.
Reported demands elsewhere remain hard-assigned (see market.demand_grid).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .market import Configuration, ConsumerGrid, MarketParams, firm_distances

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
SCAN_POINTS = 64
PRICE_TOL = 1e-7
#: logistic tail cutoff: beyond this many widths a cell is fully won or lost
TAIL_WIDTHS = 16.0


def _expit(x: np.ndarray) -> np.ndarray:
    # logistic without scipy call overhead; inputs are tail-clipped already
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class PriceSolveReport:
    """Result of a price-equilibrium solve with convergence diagnostics."""

    prices: np.ndarray
    iterations: int
    max_update: float
    converged: bool
    multistart_spread: float
    shares: np.ndarray  # smoothed demand shares (unit mass) at the reported prices


class PricingContext:
    """Precomputed geometry for repeated demand evaluations on one configuration."""

    def __init__(
        self,
        config: Configuration,
        params: MarketParams,
        grid: ConsumerGrid,
        sigma: Optional[float] = None,
    ):
        self.config = config
        self.params = params
        self.grid = grid
        self.n = config.n
        self.distances = firm_distances(config, grid)
        self.base = params.a - params.t * self.distances  # utility gross of price
        self.sigma = params.t / grid.resolution if sigma is None else sigma

    def all_taus(self, prices: np.ndarray) -> np.ndarray:
        """Threshold matrix: firm i wins a cell's logistic race at p_i <= tau[i].

        tau_i = base_i - sigma * log(sum_{j != i} exp(u_j / sigma) + 1),
        folding competitors and the no-purchase option into one soft rival.
        """
        sig = self.sigma
        u = (self.base - prices[:, None]) / sig
        out = np.empty_like(u)
        for i in range(self.n):
            rows = np.delete(u, i, axis=0)
            mx = rows.max(axis=0) if len(rows) else np.zeros(u.shape[1])
            mx = np.maximum(mx, 0.0)  # the outside option has utility 0
            s = np.exp(rows - mx[None, :]).sum(axis=0) + np.exp(-mx)
            out[i] = self.base[i] - sig * (mx + np.log(s))
        return out

    def smooth_shares(self, prices: np.ndarray) -> np.ndarray:
        """Per-firm smoothed demand shares (fractions of total consumer mass)."""
        taus = self.all_taus(prices)
        z = np.clip((taus - prices[:, None]) / self.sigma, -50.0, 50.0)
        return _expit(z).mean(axis=1)


def _golden_max(f, lo: float, hi: float, tol: float = PRICE_TOL) -> float:
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def _best_response_from_tau(tau: np.ndarray, params: MarketParams, sigma: float) -> float:
    """Argmax of (p - c) * share(p) on [c, a]: coarse scan, then golden refinement.

    The 64-point scan uses hard threshold counts (one vectorized searchsorted)
    to locate the bracket; the golden stage evaluates the smoothed share on a
    fixed window slice around the bracket, since cells beyond the logistic
    tail contribute exactly 0 or 1.
    """
    c, a = params.c, params.a
    tau_sorted = np.sort(tau)
    m = tau_sorted.size

    ps = np.linspace(c, a, SCAN_POINTS)
    counts = m - np.searchsorted(tau_sorted, ps)
    if counts[0] == 0:
        return c  # no demand at any price; profit -F regardless
    j = int(np.argmax((ps - c) * counts))
    lo = ps[max(j - 2, 0)]
    hi = ps[min(j + 2, SCAN_POINTS - 1)]

    w = TAIL_WIDTHS * sigma
    k0 = int(np.searchsorted(tau_sorted, lo - w))
    k1 = int(np.searchsorted(tau_sorted, hi + w))
    window = tau_sorted[k0:k1]
    above = m - k1

    def prof(p: float) -> float:
        share = (above + _expit((window - p) / sigma).sum()) / m
        return (p - c) * share

    return _golden_max(prof, lo, hi)


def best_response_price(
    i: int,
    config: Configuration,
    prices: Sequence[float],
    params: MarketParams,
    grid: ConsumerGrid,
    context: Optional[PricingContext] = None,
) -> float:
    """Firm i's profit-maximizing price holding all other prices fixed."""
    ctx = context if context is not None else PricingContext(config, params, grid)
    taus = ctx.all_taus(np.asarray(prices, dtype=float))
    return _best_response_from_tau(taus[i], params, ctx.sigma)


def _iterate(
    ctx: PricingContext,
    p0: np.ndarray,
    tol: float,
    damping: float,
    max_iter: int,
) -> tuple[np.ndarray, int, float, bool]:
    """Damped simultaneous best responses with Aitken extrapolation.

    Undercutting wars between close firms make the raw map expansive, so the
    damping halves whenever the residual stalls; on a clean linear tail the
    periodic Aitken step jumps ahead. Convergence is always certified by the
    undamped residual max|BR(p) - p|.
    """
    p = p0.copy()
    resid = np.inf
    lam = damping
    best_resid = np.inf
    stall = 0
    prev: list[np.ndarray] = []
    for it in range(1, max_iter + 1):
        taus = ctx.all_taus(p)
        br = np.array(
            [_best_response_from_tau(taus[i], ctx.params, ctx.sigma) for i in range(ctx.n)]
        )
        resid = float(np.abs(br - p).max())
        if resid <= tol:
            return p, it, resid, True
        if resid < 0.9 * best_resid:
            best_resid = resid
            stall = 0
        else:
            stall += 1
            if stall >= 20 and lam > 1.0 / 64.0:
                lam *= 0.5
                stall = 0
        p = (1.0 - lam) * p + lam * br
        prev.append(p.copy())
        if len(prev) >= 3 and it % 8 == 0:
            d1 = prev[-2] - prev[-3]
            d2 = prev[-1] - prev[-2]
            den = float(d1 @ d1)
            if den > 0.0:
                r = float(d2 @ d1) / den
                if 0.0 < abs(r) < 0.98:
                    p = np.clip(p + d2 * (r / (1.0 - r)), ctx.params.c, ctx.params.a)
        if len(prev) > 3:
            prev.pop(0)
    return p, max_iter, resid, False


def price_equilibrium(
    config: Configuration,
    params: MarketParams,
    grid: ConsumerGrid,
    *,
    tol: float = 1e-6,
    damping: float = 0.5,
    max_iter: int = 500,
    starts: int = 3,
    seed: int = 0,
    warm_start: Optional[Sequence[float]] = None,
    context: Optional[PricingContext] = None,
) -> PriceSolveReport:
    """Damped simultaneous best-response iteration, run from several starts.

    Starts are all-c, all-a/2, and a seeded uniform draw; the spread across
    the equilibria they reach is reported so non-uniqueness would surface
    rather than hide. A warm start replaces the start list when starts == 1.
    """
    ctx = context if context is not None else PricingContext(config, params, grid)
    n = ctx.n
    if warm_start is not None and starts == 1:
        start_list = [np.asarray(warm_start, dtype=float)]
    else:
        rng = np.random.default_rng(seed)
        start_list = [
            np.full(n, params.c),
            np.full(n, 0.5 * params.a),
            rng.uniform(params.c, params.a, n),
        ][:starts]
        if warm_start is not None:
            start_list.insert(0, np.asarray(warm_start, dtype=float))

    runs = [_iterate(ctx, p0, tol, damping, max_iter) for p0 in start_list]
    finals = [r[0] for r in runs]
    spread = 0.0
    for i in range(len(finals)):
        for j in range(i + 1, len(finals)):
            spread = max(spread, float(np.abs(finals[i] - finals[j]).max()))

    pick = next((k for k, r in enumerate(runs) if r[3]), 0)
    prices, iterations, max_update, converged = runs[pick]
    return PriceSolveReport(
        prices=prices,
        iterations=iterations,
        max_update=max_update,
        converged=converged,
        multistart_spread=spread,
        shares=ctx.smooth_shares(prices),
    )
