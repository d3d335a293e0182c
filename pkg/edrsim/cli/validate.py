import logging
from pathlib import Path
from typing import Optional

import typer
from typing_extensions import Annotated

from edrsim.cli.config import EXIT_FAILURE, EXIT_NUMERICAL_ERROR
from edrsim.cli.settings import EdrSimSettings
from edrsim.runners.validation import run_validation, write_validation_report

app = typer.Typer()


@app.command()
def validate(
    report_file_path: Annotated[
        Optional[Path],
        typer.Option(
            "--report",
            help="Path to write the markdown validation report",
            file_okay=True,
            dir_okay=False,
        ),
    ] = None,
    seed: Annotated[
        Optional[int],
        typer.Option(help="Seed for random states", show_default="EDRSIM_DEFAULT_SEED or 0"),
    ] = None,
    samples: Annotated[
        int, typer.Option(help="Random (state, θ) pairs for the universal-validity check")
    ] = 10_000,
    monte_carlo: Annotated[
        bool, typer.Option(help="Also run the photon-counting check (10 × 10⁶ photons per point)")
    ] = False,
    workers: Annotated[
        Optional[int],
        typer.Option(help="Grid points evaluated concurrently", show_default="EDRSIM_MAX_WORKERS or 4"),
    ] = None,
):
    """
    Run the acceptance checks and exit with 3 if any fails.
    """
    logger = logging.getLogger(__name__)
    settings = EdrSimSettings()

    try:
        checks = run_validation(
            seed=settings.default_seed if seed is None else seed,
            samples=samples,
            include_monte_carlo=monte_carlo,
            max_workers=workers or settings.max_workers,
        )
        if report_file_path:
            write_validation_report(checks, report_file_path)
    except Exception as e:
        logger.error(f"Error running validation: {e}")
        logger.exception(e)
        raise typer.Exit(code=EXIT_FAILURE)

    failed = [check.name for check in checks if not check.passed]
    for check in checks:
        typer.echo(f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {check.detail}")
    if failed:
        logger.error(f"{len(failed)} validation checks failed: {failed}")
        raise typer.Exit(code=EXIT_NUMERICAL_ERROR)
