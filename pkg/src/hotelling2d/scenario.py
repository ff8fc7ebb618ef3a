"""Scenario configuration, batch execution, and result serialization.

A scenario is one TOML file: market parameters, grid resolutions, the firm
counts and market sizes to solve, and output flags. Results are written as
a JSON array of flat records (schema 1), optionally with SVG figures and a
CSV profit table. Identical config and seed produce byte-identical
results.json; wall-clock timings go to a separate run_log.json so they
cannot break that determinism.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib  # python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from .entry import EntrySolver, LocationGrid, threshold_sweep
from .errors import (
    BracketingFailure,
    ConfigValidationError,
    DeterrenceImpossible,
    InfeasibleN,
)
from .market import ConsumerGrid, MarketParams
from .welfare import social_optimum
from .figures import emit_figure, figure_filename

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3


@dataclass
class ScenarioConfig:
    """Validated scenario: market parameters, grids, solves, and outputs."""

    scenario: str
    params: MarketParams
    M_values: list[float]
    n_max: int
    consumer_resolution: int
    location_resolution: int
    search_resolution: int
    seed: int
    thresholds: bool
    M_range: tuple[float, float]
    social_optimum: bool
    out_json: bool = True
    out_svg: bool = False
    out_csv: bool = False
    threads: int = 1

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:  # message carries line/column
            raise ConfigValidationError(f"{path}: {exc}") from exc
        return cls.from_dict(raw, source=str(path))

    @classmethod
    def from_dict(cls, raw: dict, source: str = "<config>") -> "ScenarioConfig":
        def fail(fieldname: str, message: str):
            raise ConfigValidationError(f"{source}: field '{fieldname}' {message}")

        known = {"scenario", "market", "grid", "entry", "outputs"}
        for key in raw:
            if key not in known:
                fail(key, "is not a recognized section or key")

        scenario = raw.get("scenario", "scenario")
        if not isinstance(scenario, str):
            fail("scenario", "must be a string")

        market = raw.get("market", {})
        for key in market:
            if key not in {"M_values", "M_sweep", "F", "t", "a", "c"}:
                fail(f"market.{key}", "is not recognized")
        try:
            params = MarketParams(
                M=1.0,
                F=float(market.get("F", 25.0)),
                t=float(market.get("t", 1.0)),
                a=float(market.get("a", 10.0)),
                c=float(market.get("c", 0.0)),
            )
        except (TypeError, ValueError) as exc:
            fail("market", f"has an invalid parameter: {exc}")

        if "M_values" in market and "M_sweep" in market:
            fail("market.M_values", "and market.M_sweep are mutually exclusive")
        if "M_sweep" in market:
            sweep = market["M_sweep"]
            for key in ("lo", "hi", "steps"):
                if key not in sweep:
                    fail(f"market.M_sweep.{key}", "is required")
            lo, hi, steps = float(sweep["lo"]), float(sweep["hi"]), int(sweep["steps"])
            if not (0 < lo < hi and steps >= 2):
                fail("market.M_sweep", "needs 0 < lo < hi and steps >= 2")
            M_values = list(np.linspace(lo, hi, steps))
        else:
            M_values = [float(v) for v in market.get("M_values", [100.0])]
        if not M_values or any(v <= 0 for v in M_values):
            fail("market.M_values", "must be a non-empty list of positive numbers")

        grid = raw.get("grid", {})
        for key in grid:
            if key not in {"consumer_resolution", "location_resolution", "search_resolution"}:
                fail(f"grid.{key}", "is not recognized")
        consumer_resolution = int(grid.get("consumer_resolution", 128))
        location_resolution = int(grid.get("location_resolution", 33))
        search_resolution = int(grid.get("search_resolution", 32))
        if consumer_resolution < 16:
            fail("grid.consumer_resolution", "must be >= 16")
        if search_resolution < 16:
            fail("grid.search_resolution", "must be >= 16")
        if location_resolution < 9 or (location_resolution - 1) % 2 != 0:
            fail("grid.location_resolution", "must be an odd number >= 9")

        entry = raw.get("entry", {})
        for key in entry:
            if key not in {"n_max", "thresholds", "M_range", "social_optimum", "seed"}:
                fail(f"entry.{key}", "is not recognized")
        n_max = int(entry.get("n_max", 1))
        if not 1 <= n_max <= 7:
            fail("entry.n_max", "must be between 1 and 7")
        seed = int(entry.get("seed", 0))
        thresholds = bool(entry.get("thresholds", False))
        mr = entry.get("M_range", [1.0, 2000.0])
        if len(mr) != 2 or not (0 < float(mr[0]) < float(mr[1])):
            fail("entry.M_range", "must be [lo, hi] with 0 < lo < hi")
        want_social = bool(entry.get("social_optimum", False))

        outputs = raw.get("outputs", {})
        for key in outputs:
            if key not in {"json", "svg", "csv"}:
                fail(f"outputs.{key}", "is not recognized")

        return cls(
            scenario=scenario,
            params=params,
            M_values=M_values,
            n_max=n_max,
            consumer_resolution=consumer_resolution,
            location_resolution=location_resolution,
            search_resolution=search_resolution,
            seed=seed,
            thresholds=thresholds,
            M_range=(float(mr[0]), float(mr[1])),
            social_optimum=want_social,
            out_json=bool(outputs.get("json", True)),
            out_svg=bool(outputs.get("svg", False)),
            out_csv=bool(outputs.get("csv", False)),
        )


def _record_base(cfg: ScenarioConfig, kind: str, n: int) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "kind": kind,
        "n": n,
        "status": "ok",
    }


def _solve_cases_for_n(cfg: ScenarioConfig, n: int) -> list[dict]:
    """All records for one firm count; one solver so caches span the M grid."""
    params = MarketParams(
        M=cfg.M_values[0], F=cfg.params.F, t=cfg.params.t, a=cfg.params.a, c=cfg.params.c
    )
    loc_grid = LocationGrid(cfg.location_resolution)
    grid = ConsumerGrid(cfg.consumer_resolution)
    solver = EntrySolver(
        params, loc_grid, grid,
        search_resolution=cfg.search_resolution, seed=cfg.seed,
    )
    records = []
    for M in cfg.M_values:
        rec = _record_base(cfg, "equilibrium", n)
        rec["M"] = M
        try:
            res = solver.solve(n, M=M)
            rec.update(
                locations=[[p.x1, p.x2] for p in res.configuration.locations],
                prices=list(map(float, res.prices)),
                profits=list(map(float, res.profits)),
                regime=res.regime,
                entrant_blocked=res.entrant_blocked,
                best_entrant_profit=float(res.best_entrant_profit),
                social_cost=float(res.social_cost),
                diagnostics={
                    "price_iterations": int(res.diagnostics["price_iterations"]),
                    "multistart_spread": float(res.diagnostics["multistart_spread"]),
                    "converged": bool(res.diagnostics["converged"]),
                    "coverage": float(res.diagnostics["coverage"]),
                    "pricing_failures": int(res.diagnostics["pricing_failures"]),
                },
            )
        except InfeasibleN as exc:
            rec["status"] = "infeasible"
            rec["message"] = str(exc)
        records.append(rec)

    if cfg.thresholds:
        rec = _record_base(cfg, "threshold", n)
        try:
            m_enter, m_max_deter = threshold_sweep(
                n, params, cfg.M_range, loc_grid, grid, solver=solver
            )
            rec.update(M_enter=float(m_enter), M_max_deter=float(m_max_deter))
        except (BracketingFailure, InfeasibleN, DeterrenceImpossible) as exc:
            rec["status"] = "error"
            rec["message"] = str(exc)
        records.append(rec)

    if cfg.social_optimum:
        rec = _record_base(cfg, "social_optimum", n)
        config, cost = social_optimum(n, params, seed=cfg.seed)
        rec.update(
            locations=[[p.x1, p.x2] for p in config.locations],
            social_cost=float(cost.cost),
            per_firm_cost=list(map(float, cost.per_firm)),
            local_optima_spread=float(cost.local_optima_spread),
        )
        records.append(rec)
    return records


def serialize_records(records: list[dict]) -> str:
    return json.dumps(records, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def parse_records(text: str) -> list[dict]:
    return json.loads(text)


def run_scenario(
    config_path: str | Path,
    out_dir: str | Path = ".",
    *,
    overrides: Optional[dict] = None,
    threads: int = 1,
) -> int:
    """Execute one scenario file; write results and return the exit code."""
    try:
        cfg = ScenarioConfig.from_file(config_path)
        for key, value in (overrides or {}).items():
            if not hasattr(cfg, key):
                raise ConfigValidationError(f"override '{key}' is not a config field")
            setattr(cfg, key, value)
    except ConfigValidationError as exc:
        print(f"config error: {exc}")
        return EXIT_CONFIG

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
    timings = {}
    all_records: list[dict] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {n: pool.submit(_solve_cases_for_n, cfg, n) for n in range(1, cfg.n_max + 1)}
            for n in range(1, cfg.n_max + 1):  # deterministic order
                all_records.extend(futures[n].result())
    else:
        for n in range(1, cfg.n_max + 1):
            tn = time.time()
            all_records.extend(_solve_cases_for_n(cfg, n))
            timings[f"n={n}"] = round(time.time() - tn, 3)

    if cfg.out_json:
        (out / "results.json").write_text(serialize_records(all_records))

    if cfg.out_svg:
        figdir = out / "figures"
        figdir.mkdir(exist_ok=True)
        used = set()
        for rec in all_records:
            if rec["kind"] != "equilibrium" or rec["status"] != "ok":
                continue
            name = figure_filename(rec)
            if name in used:
                stem, ext = name.rsplit(".", 1)
                k = 2
                while f"{stem}_{k}.{ext}" in used:
                    k += 1
                name = f"{stem}_{k}.{ext}"
            used.add(name)
            (figdir / name).write_bytes(emit_figure(rec))

    if cfg.out_csv:
        with (out / "results.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["scenario", "kind", "n", "M", "firm", "x1", "x2", "price", "profit", "regime"]
            )
            for rec in all_records:
                if rec["kind"] != "equilibrium" or rec["status"] != "ok":
                    continue
                for k, (loc, price, prof) in enumerate(
                    zip(rec["locations"], rec["prices"], rec["profits"])
                ):
                    writer.writerow(
                        [rec["scenario"], rec["kind"], rec["n"], rec["M"], k + 1,
                         loc[0], loc[1], price, prof, rec["regime"]]
                    )

    timings["total"] = round(time.time() - t0, 3)
    (out / "run_log.json").write_text(json.dumps({"wall_seconds": timings}, indent=1) + "\n")

    bad = any(
        rec.get("status") == "error"
        or (rec.get("diagnostics") or {}).get("converged") is False
        for rec in all_records
    )
    return EXIT_NOT_CONVERGED if bad else EXIT_OK
