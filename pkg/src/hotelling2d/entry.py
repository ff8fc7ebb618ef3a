"""First-stage location game: entrant best response, backward-induction
sequential equilibrium, deterrence, and market-size threshold sweeps.

Candidate locations live on a finite lattice. Each firm, in entry order,
picks the lattice point maximizing its own long-run profit, anticipating
that later firms choose by the same rule and that one further entrant
appears whenever its post-entry best-response profit is non-negative.
The search at each decision node screens every available lattice point
with a vectorized frozen-price profit bound, expands the best few
candidates through the exact recursion, and hill-climbs on the fine
lattice around the winner. Subgame outcomes are memoized on canonicalized
location sets; price equilibria are cached per configuration and reused
across market sizes (prices do not depend on M, only profits do).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import BracketingFailure, DeterrenceImpossible, InfeasibleN
from .geometry import SQUARE_SYMMETRIES
from .market import (
    Configuration,
    ConsumerGrid,
    MarketParams,
    Point,
    demand_shares_grid,
)
from .pricing import PricingContext, price_equilibrium

log = logging.getLogger(__name__)

IntLoc = tuple[int, int]

#: integer-lattice versions of geometry.SQUARE_SYMMETRIES, same ordering
_SYM_COUNT = 8
_SYM_INVERSE = (0, 1, 2, 3, 4, 6, 5, 7)


def _sym_apply(g: int, loc: IntLoc, D: int) -> IntLoc:
    i, j = loc
    if g == 0:
        return (i, j)
    if g == 1:
        return (D - i, j)
    if g == 2:
        return (i, D - j)
    if g == 3:
        return (D - i, D - j)
    if g == 4:
        return (j, i)
    if g == 5:
        return (D - j, i)
    if g == 6:
        return (j, D - i)
    return (D - j, D - i)


def canonical_site_set(locs: Iterable[IntLoc], D: int) -> tuple[tuple[IntLoc, ...], int]:
    """Lex-least sorted image of the set under the 8 symmetries, with the map used."""
    locs = tuple(locs)
    best, best_g = None, 0
    for g in range(_SYM_COUNT):
        cand = tuple(sorted(_sym_apply(g, s, D) for s in locs))
        if best is None or cand < best:
            best, best_g = cand, g
    return best, best_g


def _stabilizer(locs: Sequence[IntLoc], D: int) -> list[int]:
    base = sorted(locs)
    return [
        g
        for g in range(_SYM_COUNT)
        if sorted(_sym_apply(g, s, D) for s in locs) == base
    ]


@dataclass(frozen=True)
class LocationGrid:
    """Candidate-location lattice {0, 1/(R-1), ..., 1} per axis."""

    resolution: int = 33
    symmetry_reduction: bool = True

    def __post_init__(self):
        if self.resolution < 9:
            raise ValueError("location resolution must be >= 9")
        if (self.resolution - 1) % 2 != 0:
            raise ValueError("lattice must contain 1/2 exactly (odd resolution)")

    @property
    def denominator(self) -> int:
        return self.resolution - 1

    def all_points(self) -> list[IntLoc]:
        r = range(self.resolution)
        return [(i, j) for i in r for j in r]

    def fundamental_domain(self) -> list[IntLoc]:
        """Closed wedge 0 <= x2 <= x1 <= 1/2 of the symmetry group."""
        D = self.denominator
        return [(i, j) for i in range(D // 2 + 1) for j in range(i + 1)]

    def coarse_step(self) -> int:
        """Smallest lattice stride giving at most 9 points per axis."""
        D = self.denominator
        s = max(1, -(-D // 8))  # ceil(D / 8)
        while D % s != 0:
            s += 1
        return s

    def coarse_points(self) -> list[IntLoc]:
        s = self.coarse_step()
        r = range(0, self.resolution, s)
        return [(i, j) for i in r for j in r]

    def to_float(self, loc: IntLoc) -> Point:
        D = self.denominator
        return Point(loc[0] / D, loc[1] / D)


@dataclass
class EquilibriumResult:
    """Solved location equilibrium plus pricing, regime, and diagnostics."""

    configuration: Configuration
    prices: np.ndarray
    profits: np.ndarray
    regime: str  # "just_entered" | "deterrence" | "interior"
    entrant_blocked: bool
    best_entrant_profit: float
    social_cost: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class _Outcome:
    """Continuation result for a partially-placed state, in the query frame."""

    additions: tuple[IntLoc, ...]  # locations chosen after the state's prefix
    profits: dict[IntLoc, float]  # long-run profit by location at this M
    prices: dict[IntLoc, float]
    shares: dict[IntLoc, float]
    entrant_loc: Optional[IntLoc]
    best_entrant_profit: float
    entrant_entered: bool
    pricing_failures: int = 0

    def transformed(self, g: int, D: int) -> "_Outcome":
        if g == 0:
            return self
        f = lambda s: _sym_apply(g, s, D)
        return _Outcome(
            additions=tuple(f(s) for s in self.additions),
            profits={f(k): v for k, v in self.profits.items()},
            prices={f(k): v for k, v in self.prices.items()},
            shares={f(k): v for k, v in self.shares.items()},
            entrant_loc=f(self.entrant_loc) if self.entrant_loc is not None else None,
            best_entrant_profit=self.best_entrant_profit,
            entrant_entered=self.entrant_entered,
            pricing_failures=self.pricing_failures,
        )


class EntrySolver:
    """Backward-induction solver with shared pricing and subgame caches.

    One instance may be reused across market sizes; price equilibria are
    independent of M and cached per canonical configuration, so threshold
    bisections cost little more than a single solve.
    """

    def __init__(
        self,
        params: MarketParams,
        loc_grid: LocationGrid,
        grid: ConsumerGrid,
        *,
        search_resolution: int = 32,
        beam_width: int = 5,
        shallow_beam: Optional[int] = None,
        entrant_verify: int = 5,
        refine_depth: int = 7,
        climb_budget: tuple[int, int, int] = (24, 20, 8),
        seed: int = 0,
    ):
        self.params = params
        self.loc_grid = loc_grid
        self.report_grid = grid
        self.search_grid = ConsumerGrid(search_resolution)
        self.beam_width = beam_width
        # beam at nodes with three or more firms still to place
        self.shallow_beam = beam_width if shallow_beam is None else shallow_beam
        self.entrant_verify = entrant_verify
        self.refine_depth = refine_depth
        # hill-climb evaluation budgets by remaining depth (1, 2, >=3)
        self.climb_budget = climb_budget
        self.seed = seed
        self.D = loc_grid.denominator

        # lattice-point -> row index of the candidate distance matrix
        self._lattice = loc_grid.all_points()
        self._row = {loc: k for k, loc in enumerate(self._lattice)}
        pts = np.array([loc_grid.to_float(s) for s in self._lattice])
        cells = self.search_grid.centers
        self._cand_dist = np.hypot(
            pts[:, 0:1] - cells[None, :, 0], pts[:, 1:2] - cells[None, :, 1]
        )
        self._base_all = params.a - params.t * self._cand_dist

        self._price_cache: dict = {}
        self._screen_cache: dict = {}
        self._memo: dict = {}
        self._blockmin_cache: dict = {}
        self._monopoly_v: Optional[float] = None
        self.stats = {"pricing_solves": 0, "pricing_hits": 0, "memo_hits": 0,
                      "leaf_evals": 0, "pricing_failures": 0}

    # -- pricing ---------------------------------------------------------

    def _price(self, locs: tuple[IntLoc, ...], warm: Optional[np.ndarray] = None):
        """Search-resolution price equilibrium, cached per canonical set."""
        key, g = canonical_site_set(locs, self.D)
        hit = self._price_cache.get(key)
        if hit is not None:
            self.stats["pricing_hits"] += 1
            prices_by, shares_by, ok = hit
        else:
            config = Configuration([self.loc_grid.to_float(s) for s in locs])
            ctx = PricingContext(config, self.params, self.search_grid)
            report = price_equilibrium(
                config, self.params, self.search_grid,
                starts=1, seed=self.seed, context=ctx,
                warm_start=warm if warm is not None else np.full(len(locs), 0.5 * self.params.a),
            )
            self.stats["pricing_solves"] += 1
            ok = report.converged
            if not ok:
                self.stats["pricing_failures"] += 1
            canon = [_sym_apply(g, s, self.D) for s in locs]
            prices_by = {c: float(p) for c, p in zip(canon, report.prices)}
            shares_by = {c: float(s) for c, s in zip(canon, report.shares)}
            self._price_cache[key] = (prices_by, shares_by, ok)
        prices = {s: prices_by[_sym_apply(g, s, self.D)] for s in locs}
        shares = {s: shares_by[_sym_apply(g, s, self.D)] for s in locs}
        return prices, shares, ok

    # -- vectorized pessimistic screen ------------------------------------

    def _screen_rows(self, placed: Sequence[IntLoc], locs: list[IntLoc]):
        """Rent each candidate earns when all placed firms price at cost.

        A candidate serves every cell whose distance advantage exceeds its
        margin, so its exact best response against that step demand sits at
        one of the sorted thresholds; the max is fully vectorized. Pricing
        incumbents at cost makes the score a differentiation rent, which
        ranks spots that merely cannibalize a neighbor correctly low.
        """
        p = self.params
        rows = np.array([self._row[s] for s in locs])
        if len(placed):
            inc = np.array([self._row[s] for s in placed])
            floor = np.maximum((self._base_all[inc] - p.c).max(axis=0), 0.0)
        else:
            floor = np.zeros(self.search_grid.n_cells)
        tau = self._base_all[rows] - floor[None, :]
        tau.sort(axis=1)
        tau = tau[:, ::-1]
        m = tau.shape[1]
        prof = np.maximum(tau - p.c, 0.0) * (np.arange(1, m + 1)[None, :] / m)
        best_k = np.argmax(prof, axis=1)
        idx = np.arange(len(rows))
        return prof[idx, best_k], np.clip(tau[idx, best_k], p.c, p.a)

    def _screen(
        self, placed: tuple[IntLoc, ...], blocking: bool = False
    ) -> list[tuple[float, float, IntLoc]]:
        """Ranked (value, warm_price, loc) over coarse candidates, cached per state.

        Computed in the canonical frame of the placed set so cache hits are
        exact, then mapped back; one representative per orbit of the placed
        set's stabilizer. With ``blocking`` the ranking interleaves rent order
        with how strongly a candidate suppresses the remaining entrant threat.
        """
        key, g = canonical_site_set(placed, self.D)
        cache_key = (key, blocking)
        ranked = self._screen_cache.get(cache_key)
        if ranked is None:
            placed_set = set(key)
            if key:
                stab = _stabilizer(key, self.D)
            elif self.loc_grid.symmetry_reduction:
                stab = list(range(_SYM_COUNT))
            else:
                stab = [0]
            cands = []
            for loc in self.loc_grid.coarse_points():
                if loc in placed_set:
                    continue
                if min(_sym_apply(s, loc, self.D) for s in stab) == loc:
                    cands.append(loc)
            v, p_at = self._screen_rows(key, cands)
            ranked = sorted(
                zip(v.tolist(), p_at.tolist(), cands), key=lambda t: (-t[0], t[2])
            )
            if blocking:
                ranked = self._interleave_blockers(key, ranked)
            self._screen_cache[cache_key] = ranked
        ginv = _SYM_INVERSE[g]
        out = [(v, pi, _sym_apply(ginv, loc, self.D)) for v, pi, loc in ranked]
        if not blocking:
            out.sort(key=lambda t: (-t[0], t[2]))
        return out

    def _interleave_blockers(
        self, placed: tuple[IntLoc, ...], ranked: list[tuple[float, float, IntLoc]]
    ) -> list[tuple[float, float, IntLoc]]:
        """Reorder a rent ranking so strong entry-suppressors surface early.

        For each candidate, the residual threat is the best rent an entrant
        could still earn (at cost pricing) over the current top threat spots
        once the candidate is added; candidates are merged half by rent rank,
        half by ascending residual threat.
        """
        p = self.params
        threats = [loc for _, _, loc in ranked[: min(24, len(ranked))]]
        t_rows = np.array([self._row[s] for s in threats])
        if placed:
            inc = np.array([self._row[s] for s in placed])
            floor0 = np.maximum((self._base_all[inc] - p.c).max(axis=0), 0.0)
        else:
            floor0 = np.zeros(self.search_grid.n_cells)
        m = self.search_grid.n_cells
        pos = np.arange(1, m + 1) / m
        residual = []
        for v, pi, loc in ranked:
            floor_c = np.maximum(floor0, self._base_all[self._row[loc]] - p.c)
            tau = np.sort(self._base_all[t_rows] - floor_c[None, :], axis=1)[:, ::-1]
            rents = (np.maximum(tau - p.c, 0.0) * pos[None, :]).max()
            residual.append((float(rents), v, pi, loc))
        by_block = sorted(residual, key=lambda t: (t[0], t[3]))
        merged, seen = [], set()
        for pair in zip(ranked, by_block):
            for item in (pair[0], (pair[1][1], pair[1][2], pair[1][3])):
                if item[2] not in seen:
                    seen.add(item[2])
                    merged.append(item)
        return merged

    # -- leaf: full configuration plus the myopic extra entrant ----------

    def _entrant_value(
        self, placed: tuple[IntLoc, ...], prices: dict[IntLoc, float], loc: IntLoc,
        p_init: float,
    ) -> Optional[float]:
        """Per-unit-M profit of an entrant at ``loc`` after price re-equilibration."""
        warm_e = np.array([prices[s] for s in placed] + [p_init])
        pr_e, sh_e, ok_e = self._price(placed + (loc,), warm_e)
        if not ok_e:
            log.warning("pricing failed for entrant candidate %s; skipped", loc)
            return None
        return (pr_e[loc] - self.params.c) * sh_e[loc]

    def _best_entrant(
        self, placed: tuple[IntLoc, ...], prices: dict[IntLoc, float],
        M: Optional[float] = None, climb: bool = True,
    ) -> tuple[Optional[IntLoc], float, int]:
        """Best myopic entrant against ``placed``: screen, verify, fine-climb.

        The fine climb refines the entrant's location off the coarse set; it
        only matters when the entry decision is marginal, so away from the
        profit-zero boundary (when M is given) it is skipped.
        """
        failures = 0
        best_loc, best_v = None, -np.inf
        ranked = self._screen(placed)
        values: dict[IntLoc, float] = {}
        warm_p = {loc: pi for _, pi, loc in ranked}
        for v_surr, p_init, loc in ranked[: self.entrant_verify]:
            v_e = self._entrant_value(placed, prices, loc, p_init)
            if v_e is None:
                failures += 1
                continue
            values[loc] = v_e
            if v_e > best_v or (v_e == best_v and loc < best_loc):
                best_loc, best_v = loc, v_e
        if best_loc is None:
            return None, -np.inf, failures
        if not climb:
            return best_loc, best_v, failures
        if M is not None and abs(M * best_v - self.params.F) > 0.4 * self.params.F:
            return best_loc, best_v, failures

        placed_set = set(placed)
        evals = 0
        improved = True
        while improved and evals < 12:
            improved = False
            bi, bj = best_loc
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
                cand = (bi + di, bj + dj)
                if cand in placed_set or cand in values:
                    continue
                if not (0 <= cand[0] <= self.D and 0 <= cand[1] <= self.D):
                    continue
                v_e = self._entrant_value(
                    placed, prices, cand, warm_p.get(cand, best_v + self.params.c)
                )
                evals += 1
                if v_e is None:
                    failures += 1
                    continue
                values[cand] = v_e
                if v_e > best_v + 1e-15:
                    best_loc, best_v = cand, v_e
                    improved = True
                    break
        return best_loc, best_v, failures

    def _leaf(
        self, placed: tuple[IntLoc, ...], M: float, warm: Optional[np.ndarray],
        mode: str,
    ) -> _Outcome:
        p = self.params
        self.stats["leaf_evals"] += 1
        prices, shares, ok = self._price(placed, warm)
        failures = 0 if ok else 1

        allow_entry = mode != "free"
        best_loc, best_v = None, -np.inf
        if allow_entry:
            best_loc, best_v, fail_e = self._best_entrant(placed, prices, M)
            failures += fail_e

        entrant_profit = M * best_v - p.F if best_loc is not None else -p.F
        entered = allow_entry and best_loc is not None and entrant_profit >= 0.0

        if entered:
            cfg = placed + (best_loc,)
            pr, sh, _ = self._price(cfg)
            profits = {s: M * (pr[s] - p.c) * sh[s] - p.F for s in cfg}
            return _Outcome(
                additions=(best_loc,),
                profits=profits,
                prices=pr,
                shares=sh,
                entrant_loc=best_loc,
                best_entrant_profit=entrant_profit,
                entrant_entered=True,
                pricing_failures=failures,
            )
        profits = {s: M * (prices[s] - p.c) * shares[s] - p.F for s in placed}
        return _Outcome(
            additions=(),
            profits=profits,
            prices=prices,
            shares=shares,
            entrant_loc=best_loc,
            best_entrant_profit=entrant_profit,
            entrant_entered=False,
            pricing_failures=failures,
        )

    # -- recursion ---------------------------------------------------------

    def _solve_state(
        self, placed: tuple[IntLoc, ...], n_target: int, M: float,
        mode: str, warm: Optional[np.ndarray] = None,
    ) -> _Outcome:
        """Optimal continuation from ``placed``.

        mode "free": no further entrant is ever considered (benchmark);
        mode "threat": each firm maximizes its own long-run profit under the
        entry-iff-profitable continuation; mode "block": firms prefer, among
        their candidates, those whose final outcome keeps the next entrant
        out, maximizing profit within that set (deterrence entry point).
        """
        if len(placed) == n_target:
            return self._leaf(placed, M, warm, mode)

        key, g = canonical_site_set(placed, self.D)
        memo_key = (key, n_target, M, mode)
        hit = self._memo.get(memo_key)
        if hit is not None:
            self.stats["memo_hits"] += 1
            return hit.transformed(_SYM_INVERSE[g], self.D)

        k = len(placed)
        if k == 0 and self.loc_grid.symmetry_reduction:
            domain = set(self.loc_grid.fundamental_domain())
        else:
            domain = None

        blocking = mode == "block"
        if placed:
            prices, _, _ = self._price(placed, warm)
        else:
            prices = {}
        ranked = self._screen(placed, blocking=blocking)
        if domain is not None:
            ranked = [r for r in ranked if r[2] in domain]
        remaining = n_target - k
        width = self.shallow_beam if remaining >= 3 else self.beam_width
        if blocking:
            width = max(width, 2 * self.beam_width)
        beam = ranked[:width]
        if blocking and n_target in self._blockmin_cache:
            # make sure the known minimax-blocking arrangement is reachable
            placed_now = set(placed)
            in_beam = {loc for _, _, loc in beam}
            warm_by_loc = {loc: pi for _, pi, loc in ranked}
            for g2 in range(_SYM_COUNT):
                for s2 in self._blockmin_cache[n_target][0]:
                    q = _sym_apply(g2, s2, self.D)
                    if q in placed_now or q in in_beam:
                        continue
                    if domain is not None and q not in domain:
                        continue
                    beam.append((0.0, warm_by_loc.get(q, 0.5 * self.params.a), q))
                    in_beam.add(q)

        def evaluate(loc: IntLoc, p_init: float) -> tuple[float, bool, _Outcome]:
            warm_next = np.array([prices[s] for s in placed] + [p_init]) if placed else None
            out = self._solve_state(placed + (loc,), n_target, M, mode, warm_next)
            return out.profits[loc], out.entrant_entered, out

        def better(cand: IntLoc, best: IntLoc) -> bool:
            cp, ce, _ = evaluated[cand]
            bp, be, _ = evaluated[best]
            if blocking and ce != be:
                return not ce  # a blocking outcome beats any entered one
            return cp > bp + 1e-12

        evaluated: dict[IntLoc, tuple[float, bool, _Outcome]] = {}
        for v_surr, p_init, loc in beam:
            evaluated[loc] = evaluate(loc, p_init)

        order_key = lambda s: (
            evaluated[s][1] if blocking else False,
            -evaluated[s][0],
            s,
        )
        best_loc = min(evaluated, key=order_key)

        # fine-lattice hill climb around the beam winner (exact objective)
        if remaining <= self.refine_depth:
            budget = self.climb_budget[min(remaining, 3) - 1]
            placed_set = set(placed)
            evals = 0
            improved = True
            while improved and evals < budget:
                improved = False
                bi, bj = best_loc
                # warm the neighbor's price from the current winner's own
                p_init = evaluated[best_loc][2].prices.get(best_loc, 0.5 * self.params.a)
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        cand = (bi + di, bj + dj)
                        if cand == best_loc or cand in placed_set:
                            continue
                        if not (0 <= cand[0] <= self.D and 0 <= cand[1] <= self.D):
                            continue
                        if domain is not None and cand not in domain:
                            continue
                        if cand not in evaluated:
                            evaluated[cand] = evaluate(cand, p_init)
                            evals += 1
                        if better(cand, best_loc):
                            best_loc = cand
                            improved = True

        _, _, best_out = evaluated[best_loc]
        result = _Outcome(
            additions=(best_loc,) + best_out.additions,
            profits=best_out.profits,
            prices=best_out.prices,
            shares=best_out.shares,
            entrant_loc=best_out.entrant_loc,
            best_entrant_profit=best_out.best_entrant_profit,
            entrant_entered=best_out.entrant_entered,
            pricing_failures=best_out.pricing_failures,
        )
        self._memo[memo_key] = result.transformed(g, self.D)
        return result

    # -- reporting ---------------------------------------------------------

    def _report_entrant_value(
        self, locs: tuple[IntLoc, ...], hint: Optional[IntLoc] = None
    ) -> float:
        """Best entrant variable profit per unit M against ``locs``, report grid."""
        p = self.params
        prices, _, _ = self._price(locs)
        ranked = self._screen(locs)
        cands = [loc for _, _, loc in ranked[:3]]
        loc_s, v_s, _ = self._best_entrant(locs, prices)
        if loc_s is not None and loc_s not in cands:
            cands.append(loc_s)
        if hint is not None and hint not in cands:
            cands.append(hint)
        best = -np.inf
        for loc in cands:
            cfg_locs = locs + (loc,)
            pr_s, _, _ = self._price(cfg_locs)
            config = Configuration([self.loc_grid.to_float(s) for s in cfg_locs])
            report = price_equilibrium(
                config, p, self.report_grid, starts=1, seed=self.seed,
                warm_start=np.array([pr_s[s] for s in cfg_locs]),
            )
            if not report.converged:
                log.warning("report-grid pricing failed for entrant at %s; skipped", loc)
                continue
            best = max(best, (report.prices[-1] - p.c) * report.shares[-1])
        return float(best) if np.isfinite(best) else 0.0

    def monopoly_value(self) -> float:
        """Best single-firm variable profit per unit M, report-grid accurate."""
        if self._monopoly_v is None:
            out = self._solve_state((), 1, 1.0, mode="free")
            loc = out.additions[0]
            config = Configuration([self.loc_grid.to_float(loc)])
            rep = price_equilibrium(
                config, self.params, self.report_grid, starts=1, seed=self.seed,
                warm_start=np.array([out.prices[loc]]),
            )
            self._monopoly_v = float((rep.prices[0] - self.params.c) * rep.shares[0])
        return self._monopoly_v

    def minimal_entrant_rent(self, n: int) -> tuple[tuple[IntLoc, ...], float]:
        """Configuration of n firms minimizing the best entrant's variable profit.

        Market size does not enter (prices are M-free), so this single minimax
        search fixes the blocking-capability threshold for every M. Found by
        per-firm coordinate descent over the coarse lattice with a fine polish,
        from a greedy seed and classic facility patterns; the value is
        re-checked on the report grid.
        """
        if n in self._blockmin_cache:
            return self._blockmin_cache[n]

        p = self.params
        obj_cache: dict = {}

        def objective(locs: tuple[IntLoc, ...]) -> tuple[int, float]:
            """(infeasible, entrant rent): a config only counts as a blocker
            when every incumbent's variable profit covers the entrant's, the
            M-free form of incumbent viability at the capability threshold;
            price-war piles at the center would otherwise win the minimax.
            Non-convergent pricing (undercutting cycles between adjacent
            firms) also disqualifies, since its profits are unreliable."""
            key, _ = canonical_site_set(locs, self.D)
            if key not in obj_cache:
                prices, shares, ok = self._price(locs)
                _, v_e, _ = self._best_entrant(locs, prices, climb=False)
                v_own = min((prices[s] - p.c) * shares[s] for s in locs)
                feasible = ok and v_own >= v_e
                obj_cache[key] = (0 if feasible else 1, v_e)
            return obj_cache[key]

        D = self.D
        half, quarter = D // 2, D // 4
        third = round(D / 3)
        patterns = {
            1: [((half, half),)],
            2: [
                ((third, half), (D - third, half)),
                ((quarter, half), (D - quarter, half)),
                ((quarter, quarter), (D - quarter, D - quarter)),
            ],
            3: [
                ((quarter, half), (D - quarter, half), (half, half)),
                ((third, third), (D - third, D - third), (third, D - third)),
            ],
            4: [
                ((quarter, quarter), (D - quarter, D - quarter),
                 (quarter, D - quarter), (D - quarter, quarter)),
                ((half, quarter), (half, D - quarter), (quarter, half), (D - quarter, half)),
            ],
            5: [
                ((quarter, quarter), (D - quarter, D - quarter), (quarter, D - quarter),
                 (D - quarter, quarter), (half, half)),
            ],
            6: [
                ((quarter, third), (D - quarter, third), (quarter, D - third),
                 (D - quarter, D - third), (half, third), (half, D - third)),
                ((quarter, quarter), (D - quarter, D - quarter), (quarter, D - quarter),
                 (D - quarter, quarter), (half, half), (half, quarter)),
            ],
            7: [
                ((quarter, quarter), (D - quarter, D - quarter), (quarter, D - quarter),
                 (D - quarter, quarter), (half, half), (half, quarter), (half, D - quarter)),
            ],
        }
        seeds = [tuple(s) for s in patterns.get(n, []) if len(set(s)) == n]

        greedy: tuple[IntLoc, ...] = ()
        for _ in range(n):
            cands = [loc for _, _, loc in self._screen(greedy)[:10]]
            best = min(cands, key=lambda c: (objective(greedy + (c,)), c))
            greedy = greedy + (best,)
        seeds.append(greedy)

        coarse = self.loc_grid.coarse_points()
        finals: list[tuple[IntLoc, ...]] = list(seeds)
        for seed in seeds:
            cfg = list(seed)
            for _ in range(4):  # coordinate-descent rounds
                changed = False
                for k in range(n):
                    others = tuple(cfg[:k] + cfg[k + 1:])
                    current = cfg[k]
                    options = [c for c in coarse if c not in others]
                    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        fine = (current[0] + di, current[1] + dj)
                        if (0 <= fine[0] <= D and 0 <= fine[1] <= D
                                and fine not in others and fine not in options):
                            options.append(fine)
                    pick = min(
                        options,
                        key=lambda c: (objective(others[:k] + (c,) + others[k:]), c),
                    )
                    if pick != current:
                        cfg[k] = pick
                        changed = True
                if not changed:
                    break
            finals.append(tuple(cfg))

        # the descent ranks with a coarse entrant search; settle the winner
        # with the report-grid value, requiring viable (converged) incumbents
        best_cfg, best_key = None, None
        seen = set()
        for cfg in finals:
            key, _ = canonical_site_set(cfg, self.D)
            if key in seen:
                continue
            seen.add(key)
            feas = objective(cfg)[0]
            v_full = self._report_entrant_value(cfg)
            rank = (feas, v_full, cfg)
            if best_key is None or rank < best_key:
                best_cfg, best_key = cfg, rank
        v_report = best_key[1]
        self._blockmin_cache[n] = (best_cfg, v_report)
        return best_cfg, v_report

    def solve(
        self, n: int, M: Optional[float] = None, mode: str = "threat"
    ) -> EquilibriumResult:
        """Sequential equilibrium for n firms at market size M.

        mode "threat" is the no-coordination game; mode "block" restricts each
        firm's choice to entry-blocking outcomes when any exist (the
        deterrence entry point).
        """
        from .welfare import social_cost  # local import to avoid a cycle

        p = self.params
        M = p.M if M is None else float(M)
        if not 1 <= n <= 7:
            raise ValueError("firm count must be between 1 and 7")
        if mode not in ("threat", "block"):
            raise ValueError("mode must be 'threat' or 'block'")
        if mode == "block":
            self.minimal_entrant_rent(n)  # seeds the blocking beams

        out = self._solve_state((), n, M, mode=mode)
        locs = out.additions[:n]
        config = Configuration([self.loc_grid.to_float(s) for s in locs])

        report = price_equilibrium(
            config, p, self.report_grid, starts=3, seed=self.seed,
            warm_start=np.array([out.prices[s] for s in locs]),
        )
        shares_hard, coverage = demand_shares_grid(
            config, report.prices, p, self.report_grid
        )
        demand = shares_hard * M
        profits = (report.prices - p.c) * demand - p.F

        v_entrant = self._report_entrant_value(locs, hint=out.entrant_loc)
        best_entrant_profit = M * v_entrant - p.F
        entrant_blocked = best_entrant_profit < 0.0

        if not entrant_blocked:
            regime = "interior"
            threat_binds = False
        else:
            free = self._solve_state((), n, M, mode="free")
            free_locs = free.additions[:n]
            if canonical_site_set(free_locs, self.D)[0] == canonical_site_set(locs, self.D)[0]:
                threat_binds = False
            else:
                free_leaf = self._leaf(free_locs, M, None, mode="threat")
                threat_binds = free_leaf.best_entrant_profit >= 0.0
            regime = "deterrence" if threat_binds else "just_entered"

        if profits[n - 1] < 0.0:
            raise InfeasibleN(
                f"the {n}-th entrant earns {profits[n - 1]:.4f} < 0 at M={M:g}"
            )

        sc = social_cost(config, MarketParams(M=M, F=p.F, t=p.t, a=p.a, c=p.c))
        diagnostics = {
            "price_iterations": report.iterations,
            "multistart_spread": report.multistart_spread,
            "converged": report.converged,
            "coverage": coverage,
            "search_resolution": self.search_grid.resolution,
            "threat_binds": threat_binds,
            "mode": mode,
            "entrant_value": v_entrant,
            "pricing_failures": self.stats["pricing_failures"],
            "cache": dict(self.stats),
        }
        return EquilibriumResult(
            configuration=config,
            prices=report.prices,
            profits=profits,
            regime=regime,
            entrant_blocked=entrant_blocked,
            best_entrant_profit=best_entrant_profit,
            social_cost=sc.cost,
            diagnostics=diagnostics,
        )


# -- public operations ------------------------------------------------------


def entrant_best_response(
    incumbents: Optional[Configuration],
    params: MarketParams,
    loc_grid: LocationGrid,
    grid: ConsumerGrid,
    *,
    verify: int = 6,
    chunk: int = 128,
    seed: int = 0,
) -> tuple[Point, float]:
    """Best lattice location and profit for one more entrant.

    Candidates within 1e-9 of an incumbent are excluded; the rest are ranked
    by a frozen-price profit bound against the incumbents' current price
    equilibrium, and the leaders are verified with full post-entry pricing.
    Ties break lexicographically. Candidates whose pricing fails to converge
    are skipped with a logged warning.
    """
    p = params
    D = loc_grid.denominator
    lattice = [loc_grid.to_float(s) for s in loc_grid.all_points()]

    if incumbents is None or incumbents.n == 0:
        inc_pts = np.empty((0, 2))
        inc_prices = np.empty(0)
        floor = np.zeros(grid.n_cells)
        stab_pts = None
    else:
        inc_pts = incumbents.as_array()
        rep = price_equilibrium(incumbents, params, grid, starts=1, seed=seed)
        inc_prices = rep.prices
        d_inc = np.hypot(
            inc_pts[:, 0:1] - grid.centers[None, :, 0],
            inc_pts[:, 1:2] - grid.centers[None, :, 1],
        )
        floor = np.maximum((p.a - p.t * d_inc - inc_prices[:, None]).max(axis=0), 0.0)
        stab_pts = inc_pts

    # symmetry reduction: keep one candidate per orbit of the incumbents' stabilizer
    def _float_stabilizer(pts: np.ndarray) -> list[int]:
        if pts is None or len(pts) == 0:
            return list(range(_SYM_COUNT)) if loc_grid.symmetry_reduction else [0]
        base = np.array(sorted(map(tuple, np.round(pts, 12))))
        out = []
        for g, sym in enumerate(SQUARE_SYMMETRIES):
            img = np.array(sorted(map(tuple, np.round(sym(pts), 12))))
            if img.shape == base.shape and np.allclose(img, base, atol=1e-9):
                out.append(g)
        return out

    stab = _float_stabilizer(stab_pts)
    cands = []
    for k, pt in enumerate(lattice):
        if len(inc_pts) and np.min(np.hypot(inc_pts[:, 0] - pt[0], inc_pts[:, 1] - pt[1])) < 1e-9:
            continue
        if len(stab) > 1:
            arr = np.array([pt])
            rep_pt = min(tuple(np.round(SQUARE_SYMMETRIES[g](arr)[0], 12)) for g in stab)
            if tuple(np.round(arr[0], 12)) != rep_pt:
                continue
        cands.append(pt)

    # frozen-price screen, chunked to bound memory at fine consumer grids
    m = grid.n_cells
    v_surr = np.empty(len(cands))
    p_init = np.empty(len(cands))
    pts_arr = np.array(cands)
    for s0 in range(0, len(cands), chunk):
        sl = slice(s0, min(s0 + chunk, len(cands)))
        d = np.hypot(
            pts_arr[sl, 0:1] - grid.centers[None, :, 0],
            pts_arr[sl, 1:2] - grid.centers[None, :, 1],
        )
        tau = (p.a - p.t * d) - floor[None, :]
        tau.sort(axis=1)
        tau = tau[:, ::-1]
        prof = np.maximum(tau - p.c, 0.0) * (np.arange(1, m + 1)[None, :] / m)
        k_best = np.argmax(prof, axis=1)
        v_surr[sl] = prof[np.arange(prof.shape[0]), k_best]
        p_init[sl] = np.clip(tau[np.arange(prof.shape[0]), k_best], p.c, p.a)

    order = sorted(range(len(cands)), key=lambda k: (-v_surr[k], cands[k]))
    best_pt, best_profit = None, -np.inf
    for k in order[:verify]:
        pt = cands[k]
        cfg = Configuration(list(map(tuple, inc_pts)) + [pt]) if len(inc_pts) else Configuration([pt])
        warm = np.concatenate([inc_prices, [p_init[k]]])
        report = price_equilibrium(cfg, params, grid, starts=1, seed=seed, warm_start=warm)
        if not report.converged:
            log.warning("pricing failed for entrant candidate %s; skipped", pt)
            continue
        prof_e = params.M * (report.prices[-1] - p.c) * report.shares[-1] - p.F
        if prof_e > best_profit or (prof_e == best_profit and pt < best_pt):
            best_pt, best_profit = pt, prof_e
    return best_pt, float(best_profit)


def sequential_equilibrium(
    n: int,
    params: MarketParams,
    loc_grid: LocationGrid,
    grid: ConsumerGrid,
    *,
    solver: Optional[EntrySolver] = None,
    **solver_kwargs,
) -> EquilibriumResult:
    """Backward-induction equilibrium of the n-firm entry game at params.M."""
    s = solver if solver is not None else EntrySolver(params, loc_grid, grid, **solver_kwargs)
    return s.solve(n, M=params.M)


def deterrence_solve(
    n: int,
    params: MarketParams,
    loc_grid: LocationGrid,
    grid: ConsumerGrid,
    *,
    solver: Optional[EntrySolver] = None,
    **solver_kwargs,
) -> EquilibriumResult:
    """Sequential equilibrium with firms preferring entry-blocking outcomes.

    The unconstrained game is solved first; when its equilibrium already
    blocks the next entrant, that result is returned unchanged. Otherwise
    firms re-solve with blocking given priority over raw profit (late
    entrants can privately prefer to accommodate a newcomer even while
    blocking configurations exist, and this is the named entry point for the
    deterrence regime). DeterrenceImpossible signals that no examined
    configuration keeps the entrant out at this market size.
    """
    s = solver if solver is not None else EntrySolver(params, loc_grid, grid, **solver_kwargs)
    try:
        result = s.solve(n, M=params.M)
    except InfeasibleN:
        result = None  # the unconstrained game starves the last firm here
    if result is not None and result.entrant_blocked:
        result.diagnostics["blocking_constrained"] = False
        return result
    constrained = s.solve(n, M=params.M, mode="block")
    if not constrained.entrant_blocked:
        raise DeterrenceImpossible(
            f"best entrant earns {constrained.best_entrant_profit:.4f} >= 0 at "
            f"M={params.M:g} even when firms prioritize blocking"
        )
    constrained.diagnostics["blocking_constrained"] = True
    return constrained


def threshold_sweep(
    n: int,
    params: MarketParams,
    M_range: tuple[float, float],
    loc_grid: LocationGrid,
    grid: ConsumerGrid,
    *,
    rel_tol: float = 1e-3,
    solver: Optional[EntrySolver] = None,
    **solver_kwargs,
) -> tuple[float, float]:
    """Bisection thresholds (M_enter, M_max_deter) for n firms at fixed F.

    M_enter is the least market size at which the n-th entrant earns a
    non-negative best-response profit against incumbents placed to block it
    as well as any placement can (reported from the verified-entry end of
    the final bracket). M_max_deter is the greatest at which n incumbents
    can still block the next entrant (verified-blocked end). Since prices
    carry no M dependence, each indicator is M times a fixed capability
    value minus F, exactly monotone; the bisection certifies the bracket
    ends at the stated tolerance.
    """
    lo, hi = float(M_range[0]), float(M_range[1])
    if not 0 < lo < hi:
        raise ValueError("M_range must satisfy 0 < lo < hi")
    s = solver if solver is not None else EntrySolver(params, loc_grid, grid, **solver_kwargs)

    if n == 1:
        v_enter = s.monopoly_value()
    else:
        _, v_enter = s.minimal_entrant_rent(n - 1)

    def bisect(value: float, want_nonneg_at_hi: bool) -> tuple[float, float]:
        g = lambda M: M * value - params.F
        g_lo, g_hi = g(lo), g(hi)
        if not (g_lo < 0.0 <= g_hi):
            raise BracketingFailure(
                f"indicator not bracketed on [{lo:g}, {hi:g}] for n={n}: "
                f"values ({g_lo:.4f}, {g_hi:.4f})",
                g_lo,
                g_hi,
            )
        b_lo, b_hi = lo, hi
        while (b_hi - b_lo) / b_hi > rel_tol:
            mid = 0.5 * (b_lo + b_hi)
            if g(mid) >= 0.0:
                b_hi = mid
            else:
                b_lo = mid
        return b_lo, b_hi

    _, M_enter = bisect(v_enter, True)
    # certify the full n-firm solve is viable at the reported threshold
    for _ in range(5):
        try:
            s.solve(n, M_enter)
            break
        except InfeasibleN:
            M_enter *= 1.0 + rel_tol

    _, v_block = s.minimal_entrant_rent(n)
    if v_block <= 0.0:
        raise BracketingFailure(
            f"M_max_deter({n}): entrant rent is not positive ({v_block:.6f})",
            v_block,
            v_block,
        )
    M_deter_lo, _ = bisect(v_block, True)
    if M_deter_lo < M_enter:
        log.warning(
            "n=%d: blocking capability ends at M=%g before entry at M=%g",
            n, M_deter_lo, M_enter,
        )
    return M_enter, M_deter_lo
