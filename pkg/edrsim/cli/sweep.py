import logging
from enum import Enum
from pathlib import Path
from typing import Optional

import typer
from typing_extensions import Annotated

from edrsim.cli.config import (
    EXIT_CONFIG_ERROR,
    EXIT_FAILURE,
    EXIT_NUMERICAL_ERROR,
    ConfigError,
    emit_config,
    flag_overrides,
    parse_config,
)
from edrsim.cli.options import (
    ConfigOption,
    GridOption,
    MethodsOption,
    ModeOption,
    NormOption,
    OutOption,
    ExperimentalOpticsOption,
    PbsMaOption,
    PbsPostOption,
    PbsWpOption,
    RepsOption,
    SeedOption,
    SignalOption,
    TotalOption,
    WpStrengthOption,
)
from edrsim.cli.settings import EdrSimSettings
from edrsim.edr.relations import AuxiliaryStateError
from edrsim.records.report import SweepReport, render_report, write_report
from edrsim.runners.sweep_runner import FIGURE_COLUMNS, render_csv, run_sweep, write_figure_csv

app = typer.Typer()


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


@app.command()
def sweep(
    config: ConfigOption = None,
    grid: GridOption = None,
    wp_strength: WpStrengthOption = None,
    signal: SignalOption = None,
    experimental_optics: ExperimentalOpticsOption = False,
    pbs_wp: PbsWpOption = None,
    pbs_ma: PbsMaOption = None,
    pbs_post: PbsPostOption = None,
    mode: ModeOption = None,
    total: TotalOption = None,
    reps: RepsOption = None,
    seed: SeedOption = None,
    methods: MethodsOption = None,
    norm: NormOption = None,
    out: OutOption = None,
    output_format: Annotated[
        OutputFormat,
        typer.Option("--format", help="Figure-row CSV or structured JSON report"),
    ] = OutputFormat.CSV,
    run_log: Annotated[
        Optional[Path],
        typer.Option(help="Per-run log file", file_okay=True, dir_okay=False),
    ] = None,
    workers: Annotated[
        Optional[int],
        typer.Option(help="Grid points evaluated concurrently", show_default="EDRSIM_MAX_WORKERS or 4"),
    ] = None,
    emit_config_path: Annotated[
        Optional[Path],
        typer.Option("--emit-config", help="Write the effective config as JSON", dir_okay=False),
    ] = None,
):
    """
    Tabulate ε, η, σ, C and the relation left-hand sides over a strength grid.
    """
    logger = logging.getLogger(__name__)
    settings = EdrSimSettings()

    try:
        cfg = parse_config(
            config,
            defaults={"seed": settings.default_seed},
            **flag_overrides(
                grid=grid,
                wp_strength=wp_strength,
                signal=signal,
                experimental_optics=experimental_optics,
                pbs_wp=pbs_wp,
                pbs_ma=pbs_ma,
                pbs_post=pbs_post,
                mode=mode,
                total=total,
                reps=reps,
                seed=seed,
                methods=methods,
                norm=norm,
            ),
        )
        if emit_config_path:
            emit_config(cfg, emit_config_path)

        rows = run_sweep(cfg, max_workers=workers or settings.max_workers, run_log=run_log)
        report = SweepReport(config=cfg, rows=rows)
        if out and output_format == OutputFormat.JSON:
            write_report(report, out)
        elif out:
            write_figure_csv(rows, out)
        elif output_format == OutputFormat.JSON:
            typer.echo(render_report(report), nl=False)
        else:
            typer.echo(render_csv(FIGURE_COLUMNS, rows), nl=False)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    except AuxiliaryStateError as e:
        logger.error(f"Invalid method for this signal: {e}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    except ArithmeticError as e:
        logger.error(f"Numerical inconsistency during sweep: {e}")
        logger.exception(e)
        raise typer.Exit(code=EXIT_NUMERICAL_ERROR)
    except Exception as e:
        logger.error(f"Error running sweep: {e}")
        logger.exception(e)
        raise typer.Exit(code=EXIT_FAILURE)
