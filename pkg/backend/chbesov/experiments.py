"""Inflation sweep and smooth baseline.

Every sweep cell (n, eps) integrates from the datum to t = eps * 2^{-kn}
and measures the block kn of the increment. Cells are independent and run
on a bounded worker pool; records come back in (n, eps) order.
"""

import asyncio
import math
import time
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

import anyio
import pandas as pd
from asyncer import asyncify
from dataclasses_json import DataClassJsonMixin
from pydantic.dataclasses import dataclass

from chbesov.ch_operators import RhsTerms, rhs_terms
from chbesov.config import ExperimentConfig
from chbesov.initial_data import build_u0, single_block_datum
from chbesov.littlewood_paley import (
    BesovParams,
    DyadicPartition,
    besov_norm,
    dyadic_block,
    partition_for,
)
from chbesov.logger import logger
from chbesov.solver import SolverHaltError, integrate
from chbesov.spectral_grid import SpectralField, TorusGrid, lp_norm
from chbesov.storage import dump_field, write_manifest, write_table

CSV_COLUMNS = ["k", "n", "eps", "t", "block_norm", "besov_sigma_diff", "v0_block", "w_bound"]


@dataclass(frozen=True)
class ExperimentRecord(DataClassJsonMixin):
    k: int
    n: int
    eps: float
    t: float
    # 2^{kn sigma} ||Delta_{kn}(u(t) - u0)||_{L^p}
    block_norm: float
    # ||u(t) - u0||_{B^sigma_{p,inf}}
    besov_sigma_diff: float
    # t 2^{kn sigma} ||Delta_{kn} v0||_{L^p}
    v0_block: float
    # 2^{2kn} ||w||_{B^{sigma-2}_{p,inf}}
    w_bound: float
    complete: bool = True

    def satisfies_chain(self, rtol: float = 1e-9) -> bool:
        """besov_sigma_diff >= block_norm >= v0_block - w_bound, up to rtol."""
        if not self.complete:
            return True
        slack = rtol * max(self.besov_sigma_diff, self.v0_block, 1e-300)
        return (
            self.besov_sigma_diff + slack >= self.block_norm
            and self.block_norm + slack >= self.v0_block - self.w_bound
        )


class SweepContext(NamedTuple):
    cfg: ExperimentConfig
    grid: TorusGrid
    part: DyadicPartition
    datum: SpectralField
    terms: RhsTerms
    v0: SpectralField


class SweepResult(NamedTuple):
    records: List[ExperimentRecord]
    # Block split of v0 into the advection and nonlocal parts, one row per n
    v0_split: pd.DataFrame
    eps0: float
    crossover_n: Optional[int]
    elapsed: float

    @property
    def incomplete(self) -> List[Dict[str, float]]:
        return [{"n": r.n, "eps": r.eps, "t": r.t} for r in self.records if not r.complete]

    def frame(self) -> pd.DataFrame:
        return records_frame(self.records)


def records_frame(records: List[ExperimentRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in records], columns=CSV_COLUMNS + ["complete"])


def prepare(cfg: ExperimentConfig, datum: Optional[SpectralField] = None) -> SweepContext:
    cfg.check()
    grid = cfg.build_grid()
    if datum is None:
        datum = build_u0(cfg.spec, grid, cfg.solver.dealias)
    terms = rhs_terms(datum, cfg.solver.dealias)
    return SweepContext(cfg, grid, partition_for(grid), datum, terms, terms.total())


def _block_weight(cfg: ExperimentConfig, n: int) -> float:
    return 2.0 ** (cfg.spec.k * n * cfg.spec.sigma)


def run_cell(ctx: SweepContext, n: int, eps: float) -> ExperimentRecord:
    cfg = ctx.cfg
    spec = cfg.spec
    j = spec.k * n
    t = eps * 2.0 ** (-j)
    weight = _block_weight(cfg, n)

    try:
        trajectory = integrate(ctx.datum, cfg.solver, [t])
    except SolverHaltError as e:
        logger.warning(f"Cell n={n} eps={eps} halted at t={e.last_finite_time:.6g}, marked incomplete")
        return ExperimentRecord(
            spec.k, n, eps, t, math.nan, math.nan, math.nan, math.nan, complete=False
        )

    delta = trajectory.increments[-1]
    w = delta - t * ctx.v0
    record = ExperimentRecord(
        k=spec.k,
        n=n,
        eps=eps,
        t=t,
        block_norm=weight * lp_norm(dyadic_block(delta, j, ctx.part), spec.p),
        besov_sigma_diff=besov_norm(delta, BesovParams(spec.sigma, spec.p), ctx.part),
        v0_block=t * weight * lp_norm(dyadic_block(ctx.v0, j, ctx.part), spec.p),
        w_bound=2.0 ** (2 * j) * besov_norm(w, BesovParams(spec.sigma - 2, spec.p), ctx.part),
    )
    if not record.satisfies_chain():
        logger.warning(f"Record n={n} eps={eps} violates the triangle-inequality chain")
    logger.info(f"Cell n={n} eps={eps} t={t:.4g}: block_norm={record.block_norm:.6g}")
    return record


async def run_cells(ctx: SweepContext) -> List[ExperimentRecord]:
    settings = ctx.cfg.experiment
    limiter = anyio.CapacityLimiter(settings.workers)

    async def cell(n: int, eps: float) -> ExperimentRecord:
        async with limiter:
            return await asyncify(run_cell)(ctx, n, eps)

    records = await asyncio.gather(
        *[cell(n, eps) for n in settings.n_list for eps in settings.eps_list]
    )
    return sorted(records, key=lambda r: (r.n, r.eps))


def v0_block_split(ctx: SweepContext) -> pd.DataFrame:
    """Normalised block kn of the advection and nonlocal parts of v0."""
    spec = ctx.cfg.spec
    rows = []
    for n in range(1, spec.N + 1):
        j = spec.k * n
        weight = _block_weight(ctx.cfg, n)
        norm = lambda f: weight * lp_norm(dyadic_block(f, j, ctx.part), spec.p)  # noqa: E731
        rows.append(
            {
                "n": n,
                "advection_block": norm(ctx.terms.advection),
                "q_block": norm(ctx.terms.q),
                "r_block": norm(ctx.terms.r),
                "nonlocal_block": norm(ctx.terms.nonlocal_part),
                "v0_block": norm(ctx.v0),
            }
        )
    return pd.DataFrame(rows)


def crossover_block(split: pd.DataFrame) -> Optional[int]:
    """Smallest n whose advection block is at least twice the nonlocal block."""
    dominant = split[split["advection_block"] >= 2 * split["nonlocal_block"]]
    return int(dominant["n"].min()) if len(dominant) else None


def measured_eps0(records: List[ExperimentRecord]) -> float:
    ratios = [r.block_norm / r.eps for r in records if r.complete]
    return min(ratios) if ratios else math.nan


def _sweep(ctx: SweepContext) -> SweepResult:
    started = time.perf_counter()
    records = asyncio.run(run_cells(ctx))
    split = v0_block_split(ctx)
    return SweepResult(
        records,
        split,
        measured_eps0(records),
        crossover_block(split),
        time.perf_counter() - started,
    )


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.experiment.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest_payload(ctx: SweepContext, result: SweepResult, kind: str) -> dict:
    return {
        "kind": kind,
        "config": ctx.cfg.to_dict(),
        "grid": {"d": ctx.grid.d, "L": ctx.grid.L, "M": ctx.grid.M, "M_perp": ctx.grid.M_perp},
        "J_max": ctx.part.J_max,
        "timings": {"sweep_seconds": result.elapsed},
        "eps0": result.eps0,
        "crossover_n": result.crossover_n,
        "v0_split": result.v0_split.to_dict(orient="records"),
        "incomplete": result.incomplete,
    }


def run_inflation_sweep(cfg: ExperimentConfig, write: bool = True) -> SweepResult:
    """Sweep (n, eps) from the lacunary datum; writes inflation.csv and a manifest."""
    ctx = prepare(cfg)
    logger.info(
        f"Inflation sweep on grid {ctx.grid.shape} (J_max={ctx.part.J_max}) "
        f"for n={cfg.experiment.n_list}, eps={cfg.experiment.eps_list}"
    )
    result = _sweep(ctx)
    logger.info(f"Measured eps0={result.eps0:.6g}, crossover n={result.crossover_n}")

    if write:
        out = _out_dir(cfg)
        write_table(result.frame(), out / "inflation.csv", CSV_COLUMNS)
        write_table(result.v0_split, out / "v0_split.csv")
        dump_field(ctx.datum, out / "u0")
        write_manifest(out / "manifest.json", _manifest_payload(ctx, result, "inflation"))
    return result


def run_smooth_baseline(cfg: ExperimentConfig, write: bool = True) -> SweepResult:
    """Same sweep from the single-block datum 2^{-k n sigma} f_n (n = baseline_n).

    The first record is the t = 0 anchor.
    """
    cfg.check()
    grid = cfg.build_grid()
    datum = single_block_datum(cfg.spec, grid, cfg.experiment.baseline_n, cfg.solver.dealias)
    ctx = prepare(cfg, datum)
    result = _sweep(ctx)

    anchor = ExperimentRecord(cfg.spec.k, cfg.experiment.baseline_n, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    result = result._replace(records=[anchor] + result.records)

    if write:
        out = _out_dir(cfg)
        write_table(result.frame(), out / "baseline.csv", CSV_COLUMNS)
        dump_field(ctx.datum, out / "baseline_u0")
        write_manifest(out / "baseline_manifest.json", _manifest_payload(ctx, result, "baseline"))
    return result
