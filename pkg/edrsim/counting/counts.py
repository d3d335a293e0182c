"""Photon-counting Monte Carlo over the eight detectors N_ijk."""

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from edrsim.edr.relations import (
    EdrPoint,
    Method,
    RadicandError,
    uncertainty_terms,
    weak_probe_disturbance,
    weak_probe_error,
)
from edrsim.simulation.circuit import (
    ChainConfig,
    JointTable2,
    JointTable3,
    Pair,
    chain_distribution,
    state_entering_ma,
)
from edrsim.simulation.qcore import X, Z

logger = logging.getLogger(__name__)

DEFAULT_TOTAL = 1_000_000
DEFAULT_REPETITIONS = 10
SHOT_NOISE_SIGMAS = 5.0
CELL_LABELS = tuple("".join(bits) for bits in itertools.product("01", repeat=3))


class CountsError(ValueError):
    pass


class NormalizationError(ArithmeticError):
    """Raised when the conditional estimator hits an empty conditioning bin."""

    pass


class Normalization(str, Enum):
    GRAND_TOTAL = "grand_total"
    # MA-conditioned ratio, each final-outcome column weighted 1/2
    CONDITIONAL = "paper"

    @classmethod
    def _missing_(cls, value):
        if value == "conditional":
            return cls.CONDITIONAL
        return None


def _rng(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


@dataclass(frozen=True, eq=False)
class CountsRecord:
    """Detector counts indexed (i, j, k) = (WP, MA, post), 0 ↔ outcome +1."""

    n: np.ndarray
    total: int
    seed: int
    config: str = ""
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        n = np.array(self.n, dtype=np.int64, copy=True)
        if n.shape != (2, 2, 2) or np.any(n < 0):
            raise CountsError(f"Counts must be a non-negative 2x2x2 table, got {n.shape}")
        if int(n.sum()) != self.total or self.total <= 0:
            raise CountsError(f"Counts sum to {int(n.sum())}, record says {self.total}")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "stream", tuple(self.stream))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountsRecord):
            return NotImplemented
        return (
            np.array_equal(self.n, other.n)
            and (self.total, self.seed, self.config, self.stream)
            == (other.total, other.seed, other.config, other.stream)
        )

    @staticmethod
    def csv_header() -> list[str]:
        return ["seed", "total"] + [f"N{label}" for label in CELL_LABELS]

    def to_csv_row(self) -> list[str]:
        # i-major, then j, then k
        return [str(self.seed), str(self.total)] + [str(int(v)) for v in self.n.reshape(-1)]

    @classmethod
    def from_csv_row(cls, row: Sequence[str]) -> "CountsRecord":
        if len(row) != len(cls.csv_header()):
            raise CountsError(f"Expected {len(cls.csv_header())} columns, got {len(row)}")
        seed, total, *cells = (int(value) for value in row)
        return cls(n=np.array(cells).reshape(2, 2, 2), total=total, seed=seed)


def write_counts_csv(records: Sequence[CountsRecord], path: Path):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CountsRecord.csv_header())
        for record in records:
            writer.writerow(record.to_csv_row())
    logger.info(f"Wrote {len(records)} counts records to {path}")


def read_counts_csv(path: Path) -> list[CountsRecord]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != CountsRecord.csv_header():
            raise CountsError(f"Unexpected counts header {header}")
        return [CountsRecord.from_csv_row(row) for row in reader]


def sample_counts(
    p: JointTable3,
    total: int,
    seed: int,
    stream: Sequence[int] = (),
    config: str = "",
) -> CountsRecord:
    """Multinomial draw of `total` photons over the eight detectors.

    The draw is a pure function of (seed, stream).
    """
    if total <= 0:
        raise CountsError(f"total must be a positive number of photons, got {total}")
    probabilities = p.p.reshape(-1)
    # multinomial rejects sums drifting above 1 by rounding
    probabilities = probabilities / probabilities.sum()
    n = _rng(seed, stream).multinomial(total, probabilities).reshape(2, 2, 2)
    return CountsRecord(n=n, total=total, seed=seed, config=config, stream=tuple(stream))


def estimate_joint(
    record: CountsRecord,
    pair: Pair = Pair.WP_MA,
    mode: Normalization = Normalization.GRAND_TOTAL,
) -> JointTable2:
    """Estimate P(a_i, a_f) from counts.

    grand_total: P(i, f) = Σ N / total over the unused index.
    paper (conditional): the ratio Σ_k N_ijk / Σ_{i,k} N_ijk, which conditions on the
    final outcome; each conditional column gets weight 1/2.
    """
    pair = Pair(pair)
    mode = Normalization(mode)
    unused_axis = 2 if pair == Pair.WP_MA else 1
    pair_counts = record.n.sum(axis=unused_axis).astype(float)

    if mode == Normalization.GRAND_TOTAL:
        return JointTable2(pair_counts / record.total)

    column_totals = pair_counts.sum(axis=0)
    if np.any(column_totals == 0):
        raise NormalizationError(
            f"Conditional normalization needs counts in every final outcome, got {column_totals}"
        )
    return JointTable2(0.5 * pair_counts / column_totals)


def shot_noise_tolerance(total: int, wp_strength: float) -> float:
    """Radicand window covering SHOT_NOISE_SIGMAS standard deviations of 2·corr/g_w."""
    return SHOT_NOISE_SIGMAS * 2 / (wp_strength * math.sqrt(total))


@dataclass
class RunStats:
    points: list[EdrPoint] = field(default_factory=list)
    records: list[tuple[CountsRecord, CountsRecord]] = field(default_factory=list, repr=False)
    eps_mean: float = math.nan
    eta_mean: float = math.nan
    eps_rms: Optional[float] = None
    eta_rms: Optional[float] = None

    @property
    def repetitions(self) -> int:
        return len(self.points)


def _rms_spread(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return None
    return float(np.std(values))


def run_repetitions(
    error_cfg: ChainConfig,
    disturbance_cfg: ChainConfig,
    total: int = DEFAULT_TOTAL,
    reps: int = DEFAULT_REPETITIONS,
    seed: int = 0,
    stream: Sequence[int] = (),
    normalization: Normalization = Normalization.GRAND_TOTAL,
) -> RunStats:
    """Repeat the counting experiment and estimate ε(Z), η(X) each time.

    Repetition r of the error chain draws from sub-stream (*stream, r, 0), the
    disturbance chain from (*stream, r, 1).
    """
    if reps < 1:
        raise CountsError(f"reps must be at least 1, got {reps}")
    if error_cfg.ma.theta != disturbance_cfg.ma.theta:
        raise CountsError("Error and disturbance chains must share the MA setting")

    error_table = chain_distribution(error_cfg)
    disturbance_table = chain_distribution(disturbance_cfg)
    sigma_a, sigma_b, c_bound = uncertainty_terms(Z, X, state_entering_ma(error_cfg))
    strength = error_cfg.ma.strength

    stats = RunStats()
    for rep in range(reps):
        z_record = sample_counts(error_table, total, seed, (*stream, rep, 0), config="error")
        x_record = sample_counts(
            disturbance_table, total, seed, (*stream, rep, 1), config="disturbance"
        )
        try:
            eps = weak_probe_error(
                estimate_joint(z_record, Pair.WP_MA, normalization),
                error_cfg.wp_strength,
                tolerance=shot_noise_tolerance(total, error_cfg.wp_strength),
            )
            eta = weak_probe_disturbance(
                estimate_joint(x_record, Pair.WP_POST, normalization),
                disturbance_cfg.wp_strength,
                tolerance=shot_noise_tolerance(total, disturbance_cfg.wp_strength),
            )
        except RadicandError as e:
            raise RadicandError(
                f"strength={strength}, total={total}, repetition={rep}: {e}"
            ) from e
        stats.records.append((z_record, x_record))
        stats.points.append(
            EdrPoint(
                strength=strength,
                eps=eps,
                eta=eta,
                sigma_a=sigma_a,
                sigma_b=sigma_b,
                c_bound=c_bound,
                method=Method.WEAK_PROBE,
            )
        )

    eps_values = [point.eps for point in stats.points]
    eta_values = [point.eta for point in stats.points]
    stats.eps_mean = float(np.mean(eps_values))
    stats.eta_mean = float(np.mean(eta_values))
    stats.eps_rms = _rms_spread(eps_values)
    stats.eta_rms = _rms_spread(eta_values)
    logger.debug(
        f"strength={strength:.4f}: eps={stats.eps_mean:.5f}±{stats.eps_rms}, "
        f"eta={stats.eta_mean:.5f}±{stats.eta_rms} over {reps} repetitions"
    )
    return stats
