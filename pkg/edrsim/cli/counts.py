import logging

import typer
from typing_extensions import Annotated

from edrsim.cli.config import (
    EXIT_CONFIG_ERROR,
    EXIT_FAILURE,
    ConfigError,
    flag_overrides,
    parse_config,
)
from edrsim.cli.options import (
    ConfigOption,
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
from edrsim.counting.counts import CountsRecord, sample_counts, write_counts_csv
from edrsim.runners.sweep_runner import build_chains, render_csv
from edrsim.simulation.circuit import Quantity, chain_distribution

app = typer.Typer()


@app.command()
def counts(
    strength: Annotated[float, typer.Option(help="MA strength cos2θ in [0, 1]")],
    quantity: Annotated[
        Quantity, typer.Option(help="Error chain (Z-basis WP) or disturbance chain (X-basis WP)")
    ] = Quantity.ERROR,
    config: ConfigOption = None,
    wp_strength: WpStrengthOption = None,
    signal: SignalOption = None,
    experimental_optics: ExperimentalOpticsOption = False,
    pbs_wp: PbsWpOption = None,
    pbs_ma: PbsMaOption = None,
    pbs_post: PbsPostOption = None,
    total: TotalOption = None,
    reps: RepsOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
):
    """
    Emit raw eight-detector counts, one CountsRecord per repetition.

    Repetitions use the sub-streams of a single-point Monte Carlo sweep.
    """
    logger = logging.getLogger(__name__)
    settings = EdrSimSettings()

    try:
        if not 0 <= strength <= 1:
            raise ConfigError(f"strength: {strength} must lie in [0, 1]")
        cfg = parse_config(
            config,
            defaults={"seed": settings.default_seed},
            **flag_overrides(
                wp_strength=wp_strength,
                signal=signal,
                experimental_optics=experimental_optics,
                pbs_wp=pbs_wp,
                pbs_ma=pbs_ma,
                pbs_post=pbs_post,
                total=total,
                reps=reps,
                seed=seed,
            ),
        )
        error_cfg, disturbance_cfg = build_chains(cfg, strength)
        chain = error_cfg if quantity == Quantity.ERROR else disturbance_cfg
        table = chain_distribution(chain)
        chain_key = 0 if quantity == Quantity.ERROR else 1
        records = [
            sample_counts(table, cfg.total, cfg.seed, (0, rep, chain_key), config=quantity.value)
            for rep in range(cfg.reps)
        ]
        if out:
            write_counts_csv(records, out)
        else:
            typer.echo(render_csv(CountsRecord.csv_header(), records), nl=False)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    except Exception as e:
        logger.error(f"Error sampling counts: {e}")
        logger.exception(e)
        raise typer.Exit(code=EXIT_FAILURE)
