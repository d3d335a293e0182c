from pathlib import Path
from typing import Optional

import typer
from typing_extensions import Annotated

from edrsim.cli.config import StatisticsMode
from edrsim.counting.counts import Normalization

ConfigOption = Annotated[
    Optional[Path],
    typer.Option(
        "--config",
        help="JSON or TOML sweep configuration; flags override its values",
        exists=True,
        file_okay=True,
        dir_okay=False,
    ),
]
GridOption = Annotated[
    Optional[str],
    typer.Option(
        help="Comma-separated measurement strengths cos2θ in [0, 1]",
        show_default="21 points from 0 to 1",
    ),
]
WpStrengthOption = Annotated[
    Optional[float], typer.Option(help="Weak-probe strength cos2θ_w in (0, 1]", show_default="0.104")
]
SignalOption = Annotated[
    Optional[str],
    typer.Option(help="Signal state: z+, z-, x+, x-, y+, y- or bloch:THETA,PHI", show_default="y+"),
]
ExperimentalOpticsOption = Annotated[
    bool, typer.Option(help="Use the quoted experimental extinction ratios for every PBS")
]
PbsWpOption = Annotated[Optional[str], typer.Option(help="WP PBS extinction ratios E_R,E_T")]
PbsMaOption = Annotated[Optional[str], typer.Option(help="MA PBS extinction ratios E_R,E_T")]
PbsPostOption = Annotated[Optional[str], typer.Option(help="Post PBS extinction ratios E_R,E_T")]
ModeOption = Annotated[
    Optional[StatisticsMode],
    typer.Option(help="Exact probabilities or Monte Carlo photon counts", show_default="exact"),
]
TotalOption = Annotated[
    Optional[int], typer.Option(help="Photons per counting run", show_default="1000000")
]
RepsOption = Annotated[Optional[int], typer.Option(help="Counting repetitions", show_default="10")]
SeedOption = Annotated[
    Optional[int], typer.Option(help="Master seed", show_default="EDRSIM_DEFAULT_SEED or 0")
]
MethodsOption = Annotated[
    Optional[str],
    typer.Option(
        help="Comma-separated subset of direct, three_state, weak_probe",
        show_default="all methods",
    ),
]
NormOption = Annotated[
    Optional[Normalization],
    typer.Option(help="Joint-probability estimator for counts", show_default="grand_total"),
]
OutOption = Annotated[
    Optional[Path],
    typer.Option(
        help="Output file", show_default="Write to stdout", file_okay=True, dir_okay=False
    ),
]
