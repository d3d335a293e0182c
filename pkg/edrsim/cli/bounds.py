import logging
from typing import Optional

import numpy as np
import typer
from typing_extensions import Annotated

from edrsim.cli.config import EXIT_CONFIG_ERROR, EXIT_FAILURE, EXIT_NUMERICAL_ERROR
from edrsim.cli.options import OutOption
from edrsim.edr.relations import MAX_ERROR, EdrPointError, RelationKind
from edrsim.runners.sweep_runner import (
    BOUND_COLUMNS,
    emit_bounds_curve,
    render_csv,
    write_bounds_csv,
)

app = typer.Typer()

DEFAULT_BOUND_POINTS = 50


@app.command()
def bounds(
    kind: Annotated[RelationKind, typer.Option(help="Relation whose lower bound is tabulated")],
    c: Annotated[float, typer.Option("--c", help="Commutator bound C = |⟨[A,B]⟩|/2")] = 1.0,
    sigma_a: Annotated[float, typer.Option(help="Standard deviation σ(A)")] = 1.0,
    sigma_b: Annotated[float, typer.Option(help="Standard deviation σ(B)")] = 1.0,
    eps_grid: Annotated[
        Optional[str],
        typer.Option(
            help="Comma-separated error values",
            show_default=f"{DEFAULT_BOUND_POINTS} points from 0 to {MAX_ERROR}",
        ),
    ] = None,
    out: OutOption = None,
):
    """
    Tabulate the smallest disturbance allowed by one relation over an error grid.
    """
    logger = logging.getLogger(__name__)

    try:
        if eps_grid is None:
            grid = [float(eps) for eps in np.linspace(0, MAX_ERROR, DEFAULT_BOUND_POINTS)]
        else:
            grid = [float(value) for value in eps_grid.split(",") if value.strip()]
    except ValueError as e:
        logger.error(f"Invalid eps grid: {e}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    if c < 0 or sigma_a < 0 or sigma_b < 0 or any(eps < 0 for eps in grid):
        logger.error("Invalid bounds input: c, sigma_a, sigma_b and eps must be non-negative")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)

    try:
        rows = emit_bounds_curve(kind, c, grid, sigma_a=sigma_a, sigma_b=sigma_b)
        if out:
            write_bounds_csv(rows, out)
        else:
            typer.echo(render_csv(BOUND_COLUMNS, rows), nl=False)
    except ArithmeticError as e:
        logger.error(f"Numerical inconsistency in bound inputs: {e}")
        raise typer.Exit(code=EXIT_NUMERICAL_ERROR)
    except EdrPointError as e:
        logger.error(f"Invalid bounds input: {e}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    except Exception as e:
        logger.error(f"Error computing bounds: {e}")
        logger.exception(e)
        raise typer.Exit(code=EXIT_FAILURE)
