import logging
from pathlib import Path
from typing import Optional

import dotenv
import typer
from typing_extensions import Annotated

from edrsim.cli.bounds import app as bounds_app
from edrsim.cli.counts import app as counts_app
from edrsim.cli.settings import EdrSimSettings, LogLevel
from edrsim.cli.sweep import app as sweep_app
from edrsim.cli.validate import app as validate_app

# EDRSIM_* variables may live in a local .env file
dotenv.load_dotenv()

app = typer.Typer()

app.add_typer(sweep_app)
app.add_typer(bounds_app)
app.add_typer(counts_app)
app.add_typer(validate_app)

settings = EdrSimSettings()


@app.callback()
def main(
    log_level: Annotated[LogLevel, typer.Option(help="Set the logging level.")] = settings.log_level,
    log_file: Annotated[
        Optional[Path],
        typer.Option(
            help="Log file path",
            show_default="Write logs to stderr",
            file_okay=True,
            dir_okay=False,
        ),
    ] = settings.log_file,
):
    """
    Error–disturbance relation simulator.
    """
    log_kwargs = {
        "level": getattr(logging, log_level.value),
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    }
    if log_file:
        log_kwargs["filename"] = log_file
    logging.basicConfig(**log_kwargs)


if __name__ == "__main__":
    app()
