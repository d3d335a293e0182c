import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path

import numpy as np

from edrsim.cli.config import SweepConfig
from edrsim.edr.relations import EdrPoint
from edrsim.runners.sweep_runner import FigureRow

logger = logging.getLogger(__name__)


@dataclass
class SweepReport:
    """Structured sweep output: the effective config plus every row."""

    config: SweepConfig
    rows: list[FigureRow]
    created: datetime = field(default_factory=datetime.now)


class ReportJSONEncoder(json.JSONEncoder):
    """JSON encoder for sweep rows, points and configs."""

    def default(self, obj):
        if isinstance(obj, SweepConfig):
            return obj.model_dump(mode="json")
        if isinstance(obj, (SweepReport, FigureRow, EdrPoint)):
            return asdict(obj)
        if isinstance(obj, datetime):
            return obj.isoformat()
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, np.floating):
            return float(obj)
        return super().default(obj)


def render_report(report: SweepReport) -> str:
    return json.dumps(report, cls=ReportJSONEncoder, indent=2) + "\n"


def write_report(report: SweepReport, path: Path):
    path.write_text(render_report(report), encoding="utf-8")
    logger.info(f"Sweep report with {len(report.rows)} rows written to {path}")
