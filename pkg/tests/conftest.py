from pathlib import Path

import numpy as np
import pytest

from edrsim.simulation.circuit import named_signal
from edrsim.simulation.qcore import StateVector


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240521)


@pytest.fixture
def y_plus() -> StateVector:
    """(|0⟩ + i|1⟩)/√2, the default signal."""
    return named_signal("y+")


@pytest.fixture
def figure_rows_header_path() -> Path:
    """
    Golden header of the figure-row CSV; column order is part of the output contract.
    """
    return Path(__file__).parent / "mock_outputs" / "figure_rows_header.csv"


@pytest.fixture
def experimental_apparatus_config_path() -> Path:
    """
    TOML sweep config with the quoted extinction ratios (100/1000, 50/1000, 100/1000).
    """
    return Path(__file__).parent / "mock_configs" / "experimental_apparatus.toml"
