"""Polarizing beamsplitters with finite extinction ratios.

Each PBS encounter is a lossless two-port splitter per polarization: H is
transmitted with intensity T_H = 1 − 1/e_r and leaks into the reflected port
with R_H = 1/e_r; V is reflected with R_V = 1 − 1/e_t and leaks into the
transmitted port with T_V = 1/e_t. A leaked photon travels a distinguishable
path mode, so each stage carries four Kraus routes (outcome ± × correct or
leaked) instead of two. Interferometric phase errors are not modelled.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from edrsim.simulation.circuit import (
    Basis,
    ChainConfig,
    ChainMode,
    JointTable3,
    MeasurementStage,
    chain_distribution,
    povm_from_routes,
)
from edrsim.simulation.qcore import HADAMARD, KrausChannel, LinearOperator

logger = logging.getLogger(__name__)

IDEAL_LIMIT_RATIO = 1e12
# meter label of the correct (+, −) and leaked (+, −) routes
ROUTE_LABELS = (1, -1, 1, -1)


class PbsCoefficients(NamedTuple):
    t_h: float
    r_h: float
    t_v: float
    r_v: float


@dataclass(frozen=True)
class PbsSpec:
    """Reflection and transmission extinction ratios of one PBS."""

    e_r: float
    e_t: float

    def __post_init__(self):
        for name, value in (("e_r", self.e_r), ("e_t", self.e_t)):
            if not np.isfinite(value) or value <= 1:
                raise ValueError(f"Extinction ratio {name}={value} must be finite and > 1")

    @classmethod
    def ideal_limit(cls) -> "PbsSpec":
        return cls(e_r=IDEAL_LIMIT_RATIO, e_t=IDEAL_LIMIT_RATIO)

    @classmethod
    def parse(cls, text: str) -> "PbsSpec":
        """Parse "E_R,E_T"."""
        try:
            e_r, e_t = (float(part) for part in text.split(","))
        except ValueError as e:
            raise ValueError(f"Expected 'E_R,E_T', got '{text}'") from e
        return cls(e_r=e_r, e_t=e_t)


@dataclass(frozen=True)
class ApparatusSpec:
    wp_pbs: PbsSpec
    ma_pbs: PbsSpec
    post_pbs: PbsSpec

    @classmethod
    def experimental(cls) -> "ApparatusSpec":
        """e_r ≃ 100, e_t > 10³ for WP and post; e_r ≃ 50 for MA."""
        return cls(
            wp_pbs=PbsSpec(e_r=100, e_t=1000),
            ma_pbs=PbsSpec(e_r=50, e_t=1000),
            post_pbs=PbsSpec(e_r=100, e_t=1000),
        )

    @classmethod
    def ideal_limit(cls) -> "ApparatusSpec":
        spec = PbsSpec.ideal_limit()
        return cls(wp_pbs=spec, ma_pbs=spec, post_pbs=spec)


def pbs_coefficients(spec: PbsSpec) -> PbsCoefficients:
    r_h = 1 / spec.e_r
    t_v = 1 / spec.e_t
    return PbsCoefficients(t_h=1 - r_h, r_h=r_h, t_v=t_v, r_v=1 - t_v)


def imperfect_stage(theta: float, basis: Basis, spec: PbsSpec) -> MeasurementStage:
    """Probe-circuit instrument whose polarization-to-path coupling leaks.

    The correct route couples H (V) to the path with amplitude √T_H (√R_V)
    exactly as the ideal CNOT; the leaked route swaps the roles of the two
    paths with amplitude √R_H (√T_V).
    """
    basis = Basis(basis)
    c, s = np.cos(theta), np.sin(theta)
    coefficients = pbs_coefficients(spec)
    ok_h, ok_v = np.sqrt(coefficients.t_h), np.sqrt(coefficients.r_v)
    leak_h, leak_v = np.sqrt(coefficients.r_h), np.sqrt(coefficients.t_v)

    routes = [
        np.diag([ok_h * c, ok_v * s]),
        np.diag([ok_h * s, ok_v * c]),
        np.diag([leak_h * s, leak_v * c]),
        np.diag([leak_h * c, leak_v * s]),
    ]
    change = HADAMARD.entries if basis == Basis.X else np.eye(2)
    operators = tuple(LinearOperator(change @ k.astype(complex) @ change) for k in routes)
    return MeasurementStage(
        theta=theta,
        basis=basis,
        kraus=KrausChannel(operators),
        labels=ROUTE_LABELS,
        povm=povm_from_routes(operators, ROUTE_LABELS),
        ideal=False,
    )


def imperfect_chain_config(cfg: ChainConfig, apparatus: ApparatusSpec) -> ChainConfig:
    """Rebuild every stage of `cfg` on the apparatus PBSs, keeping θ and basis."""
    return ChainConfig(
        signal=cfg.signal,
        wp=imperfect_stage(cfg.wp.theta, cfg.wp.basis, apparatus.wp_pbs),
        ma=imperfect_stage(cfg.ma.theta, cfg.ma.basis, apparatus.ma_pbs),
        post=imperfect_stage(cfg.post.theta, cfg.post.basis, apparatus.post_pbs),
        quantity=cfg.quantity,
    )


def imperfect_chain_distribution(
    cfg: ChainConfig, apparatus: ApparatusSpec, mode: ChainMode = ChainMode.KRAUS
) -> JointTable3:
    logger.debug(f"Imperfect chain for {apparatus}")
    return chain_distribution(imperfect_chain_config(cfg, apparatus), mode=mode)
