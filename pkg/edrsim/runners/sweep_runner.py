import asyncio
import csv
import io
import logging
import math
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from edrsim.cli.config import StatisticsMode, SweepConfig
from edrsim.counting.counts import run_repetitions
from edrsim.edr.relations import (
    AuxiliaryStateError,
    EdrPoint,
    EdrReport,
    Method,
    RelationKind,
    direct_disturbance,
    direct_error,
    edr_report,
    min_disturbance_bound,
    three_state_disturbance,
    three_state_error,
    uncertainty_terms,
    weak_probe_disturbance,
    weak_probe_error,
)
from edrsim.simulation.circuit import (
    ChainConfig,
    Pair,
    Quantity,
    chain_distribution,
    marginal_joint,
    named_signal,
    state_entering_ma,
    theta_for_strength,
)
from edrsim.simulation.optics import imperfect_chain_config
from edrsim.simulation.qcore import X, Z
from edrsim.utils.logging import setup_logger

logger = logging.getLogger(__name__)

DEFAULT_MAX_WORKERS = 4

FIGURE_COLUMNS = (
    "strength",
    "method",
    "eps",
    "eta",
    "eps_err",
    "eta_err",
    "sigma_a",
    "sigma_b",
    "c_bound",
    "lhs_heisenberg",
    "lhs_ozawa",
    "lhs_branciard",
    "lhs_branciard_tight",
    "heisenberg_ok",
    "ozawa_ok",
    "branciard_ok",
    "branciard_tight_ok",
)
METHOD_ORDER = {method: position for position, method in enumerate(Method)}


def format_cell(value) -> str:
    """CSV cell: empty for absent values, true/false for flags, shortest round-trip repr for reals."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Method):
        return value.value
    if isinstance(value, float) and math.isinf(value):
        return ""
    return repr(float(value))


@dataclass
class FigureRow:
    strength: float
    method: Method
    eps: float
    eta: float
    eps_err: Optional[float]
    eta_err: Optional[float]
    sigma_a: float
    sigma_b: float
    c_bound: float
    lhs_heisenberg: float
    lhs_ozawa: float
    lhs_branciard: float
    lhs_branciard_tight: float
    heisenberg_ok: bool
    ozawa_ok: bool
    branciard_ok: bool
    branciard_tight_ok: bool
    repetitions: list[EdrPoint] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.method = Method(self.method)

    @classmethod
    def from_report(
        cls,
        report: EdrReport,
        eps_err: Optional[float] = None,
        eta_err: Optional[float] = None,
        repetitions: Sequence[EdrPoint] = (),
    ) -> "FigureRow":
        point = report.point
        return cls(
            strength=point.strength,
            method=point.method,
            eps=point.eps,
            eta=point.eta,
            eps_err=eps_err,
            eta_err=eta_err,
            sigma_a=point.sigma_a,
            sigma_b=point.sigma_b,
            c_bound=point.c_bound,
            lhs_heisenberg=report.lhs_heisenberg,
            lhs_ozawa=report.lhs_ozawa,
            lhs_branciard=report.lhs_branciard,
            lhs_branciard_tight=report.lhs_branciard_tight,
            heisenberg_ok=report.heisenberg_ok,
            ozawa_ok=report.ozawa_ok,
            branciard_ok=report.branciard_ok,
            branciard_tight_ok=report.branciard_tight_ok,
            repetitions=list(repetitions),
        )

    def to_csv_row(self) -> list[str]:
        return [format_cell(getattr(self, column)) for column in FIGURE_COLUMNS]


def build_chains(cfg: SweepConfig, strength: float) -> tuple[ChainConfig, ChainConfig]:
    """Error (Z-basis WP) and disturbance (X-basis WP) chains at one strength."""
    signal = named_signal(cfg.signal)
    theta = theta_for_strength(strength)
    chains = (
        ChainConfig.build(signal, cfg.wp_strength, theta, Quantity.ERROR),
        ChainConfig.build(signal, cfg.wp_strength, theta, Quantity.DISTURBANCE),
    )
    apparatus = cfg.apparatus_spec()
    if apparatus is None:
        return chains
    return tuple(imperfect_chain_config(chain, apparatus) for chain in chains)


def evaluate_point(cfg: SweepConfig, index: int, strength: float) -> list[FigureRow]:
    """All requested methods at one grid point.

    Direct and three-state values use the MA acting on the signal itself;
    σ(Z), σ(X) and C come from the state entering the MA in the error chain.
    """
    error_cfg, disturbance_cfg = build_chains(cfg, strength)
    signal = error_cfg.signal
    sigma_a, sigma_b, c_bound = uncertainty_terms(Z, X, state_entering_ma(error_cfg))

    rows = []
    for method in cfg.methods:
        eps_err = eta_err = None
        repetitions: list[EdrPoint] = []
        if method == Method.DIRECT:
            eps = direct_error(error_cfg.ma, signal)
            eta = direct_disturbance(error_cfg.ma, signal)
        elif method == Method.THREE_STATE:
            try:
                eps = three_state_error(error_cfg.ma, signal)
                eta = three_state_disturbance(error_cfg.ma, signal)
            except AuxiliaryStateError as e:
                raise AuxiliaryStateError(
                    f"Signal {cfg.signal!r} cannot be measured with the three-state method ({e}); "
                    f"drop three_state from --methods"
                ) from e
        elif cfg.mode == StatisticsMode.EXACT:
            eps = weak_probe_error(
                marginal_joint(chain_distribution(error_cfg), Pair.WP_MA), cfg.wp_strength
            )
            eta = weak_probe_disturbance(
                marginal_joint(chain_distribution(disturbance_cfg), Pair.WP_POST),
                cfg.wp_strength,
            )
        else:
            stats = run_repetitions(
                error_cfg,
                disturbance_cfg,
                total=cfg.total,
                reps=cfg.reps,
                seed=cfg.seed,
                stream=(index,),
                normalization=cfg.norm,
            )
            eps, eta = stats.eps_mean, stats.eta_mean
            eps_err, eta_err = stats.eps_rms, stats.eta_rms
            repetitions = stats.points

        point = EdrPoint(
            strength=strength,
            eps=eps,
            eta=eta,
            sigma_a=sigma_a,
            sigma_b=sigma_b,
            c_bound=c_bound,
            method=method,
        )
        rows.append(FigureRow.from_report(edr_report(point), eps_err, eta_err, repetitions))
    return rows


async def _run_sweep_async(cfg: SweepConfig, max_workers: int) -> list[FigureRow]:
    semaphore = asyncio.Semaphore(max_workers)

    async def evaluate_with_limit(index: int, strength: float) -> list[FigureRow]:
        async with semaphore:
            return await asyncio.to_thread(evaluate_point, cfg, index, strength)

    tasks = [evaluate_with_limit(index, strength) for index, strength in enumerate(cfg.grid)]
    results = await asyncio.gather(*tasks)
    return [row for rows in results for row in rows]


def run_sweep(
    cfg: SweepConfig,
    max_workers: int = DEFAULT_MAX_WORKERS,
    run_log: Optional[Path] = None,
) -> list[FigureRow]:
    """Evaluate every grid point for every requested method.

    Grid points run concurrently; rows come back sorted by (strength, method).
    Monte Carlo sub-streams are keyed by grid index, so results do not depend
    on completion order.
    """
    if max_workers < 1:
        raise ValueError(f"max_workers must be at least 1, got {max_workers}")
    logger.info(
        f"Sweeping {len(cfg.grid)} strengths with methods "
        f"{[m.value for m in cfg.methods]} ({cfg.mode.value} statistics)"
    )
    log_context = setup_logger("edrsim_run", run_log) if run_log else nullcontext()
    with log_context as run_logger:
        if run_logger:
            run_logger.info(f"Config: {cfg.model_dump_json()}")
        rows = asyncio.run(_run_sweep_async(cfg, max_workers))
        rows.sort(key=lambda row: (row.strength, METHOD_ORDER[row.method]))
        if run_logger:
            for row in rows:
                run_logger.info(
                    f"strength={row.strength} method={row.method.value} "
                    f"eps={row.eps} eta={row.eta} c={row.c_bound}"
                )
    violations = sum(not row.heisenberg_ok for row in rows)
    logger.info(f"Sweep finished: {len(rows)} rows, {violations} Heisenberg violations")
    return rows


def render_csv(columns: Sequence[str], rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row.to_csv_row())
    return buffer.getvalue()


def write_figure_csv(rows: Sequence[FigureRow], path: Path):
    path.write_text(render_csv(FIGURE_COLUMNS, rows), encoding="utf-8")
    logger.info(f"Wrote {len(rows)} figure rows to {path}")


@dataclass(frozen=True)
class BoundRow:
    eps: float
    min_eta: float

    def to_csv_row(self) -> list[str]:
        return [format_cell(self.eps), format_cell(self.min_eta)]


BOUND_COLUMNS = ("eps", "min_eta")


def emit_bounds_curve(
    kind: RelationKind,
    c: float,
    eps_grid: Sequence[float],
    sigma_a: float = 1.0,
    sigma_b: float = 1.0,
) -> list[BoundRow]:
    """Lower disturbance bound of one relation over an error grid.

    Points without a finite bound keep min_eta = inf, written as an empty cell.
    """
    kind = RelationKind(kind)
    return [
        BoundRow(eps=eps, min_eta=min_disturbance_bound(kind, eps, sigma_a, sigma_b, c))
        for eps in eps_grid
    ]


def write_bounds_csv(rows: Sequence[BoundRow], path: Path):
    path.write_text(render_csv(BOUND_COLUMNS, rows), encoding="utf-8")
    logger.info(f"Wrote {len(rows)} bound rows to {path}")
