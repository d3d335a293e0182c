"""Error, disturbance and the error–disturbance relations built on them.

Three routes to ε(Z) and η(X) are provided:

- direct: the indirect-measurement definitions evaluated on signal ⊗ probe
  through the stage's unitary dilation,
- three-state: meter statistics on |ψ⟩, A|ψ⟩ and (A + I)|ψ⟩,
- weak-probe: WP/MA (or WP/post) correlators divided by the WP strength.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from edrsim.simulation.circuit import (
    Basis,
    JointTable2,
    MeasurementStage,
    dilation_unitary,
    dilated_output_observable,
    make_stage,
    probe_ket,
    theta_for_strength,
)
from edrsim.simulation.qcore import (
    I2,
    DensityMatrix,
    LinearOperator,
    StateVector,
    X,
    Z,
    apply_channel,
    commutator_bound,
    expectation,
    identity,
    std_dev,
    tensor,
)

logger = logging.getLogger(__name__)

RADICAND_TOL = 1e-9
RELATION_TOL = 1e-9
ROBERTSON_TOL = 1e-10
MAX_ERROR = 2.0  # largest RMS difference between ±1-valued observables


class BasisMismatchError(ValueError):
    pass


class AuxiliaryStateError(ValueError):
    """Raised when a three-state auxiliary state has zero norm."""

    pass


class WeakProbeStrengthError(ValueError):
    pass


class EdrPointError(ValueError):
    pass


class RadicandError(ArithmeticError):
    """Raised when a weak-probe estimate has a clearly negative radicand."""

    pass


class RobertsonViolationError(ArithmeticError):
    pass


class Method(str, Enum):
    DIRECT = "direct"
    THREE_STATE = "three_state"
    WEAK_PROBE = "weak_probe"


class RelationKind(str, Enum):
    HEISENBERG = "heisenberg"
    OZAWA = "ozawa"
    BRANCIARD = "branciard"
    BRANCIARD_TIGHT = "branciard_tight"


@dataclass(frozen=True)
class EdrPoint:
    strength: float
    eps: float
    eta: float
    sigma_a: float
    sigma_b: float
    c_bound: float
    method: Method

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        values = {
            "strength": self.strength,
            "eps": self.eps,
            "eta": self.eta,
            "sigma_a": self.sigma_a,
            "sigma_b": self.sigma_b,
            "c_bound": self.c_bound,
        }
        for name, value in values.items():
            if not math.isfinite(value) or value < -RELATION_TOL:
                raise EdrPointError(f"{name}={value} must be finite and non-negative")
        for name in ("eps", "eta"):
            if values[name] > MAX_ERROR + RELATION_TOL:
                raise EdrPointError(f"{name}={values[name]} exceeds {MAX_ERROR}")
        if self.c_bound > 1 + RELATION_TOL:
            raise EdrPointError(f"c_bound={self.c_bound} exceeds 1")


@dataclass(frozen=True)
class EdrReport:
    point: EdrPoint
    lhs_heisenberg: float
    lhs_ozawa: float
    lhs_branciard: float
    lhs_branciard_tight: float
    heisenberg_ok: bool
    ozawa_ok: bool
    branciard_ok: bool
    branciard_tight_ok: bool
    tilde_eps: float
    tilde_eta: float

    def lhs(self, kind: RelationKind) -> float:
        return getattr(self, f"lhs_{RelationKind(kind).value}")

    def satisfied(self, kind: RelationKind) -> bool:
        return getattr(self, f"{RelationKind(kind).value}_ok")


class RobertsonCheck(NamedTuple):
    margin: float
    holds: bool


def _require_z_basis(stage: MeasurementStage):
    if stage.basis != Basis.Z:
        raise BasisMismatchError(
            f"The MA measures Z; got a {stage.basis.value}-basis stage"
        )


def _joint_state(stage: MeasurementStage, state: StateVector | DensityMatrix):
    probe = probe_ket(stage)
    if isinstance(state, StateVector):
        return tensor(state, probe)
    return tensor(state, probe.density())


def _rms(op: LinearOperator, state) -> float:
    square = LinearOperator(op.entries @ op.entries, hermitian=True)
    return math.sqrt(max(expectation(square, state), 0.0))


def direct_error(
    stage: MeasurementStage, state: StateVector | DensityMatrix, observable: LinearOperator = Z
) -> float:
    """ε(A) = ⟨(U†(I⊗M)U − A⊗I)²⟩^½ in state ⊗ |0⟩_p."""
    _require_z_basis(stage)
    meter = dilated_output_observable(stage)
    probe_identity = identity(meter.dim // observable.dim)
    noise = meter - tensor(observable, probe_identity)
    return _rms(noise, _joint_state(stage, state))


def direct_disturbance(
    stage: MeasurementStage, state: StateVector | DensityMatrix, observable: LinearOperator = X
) -> float:
    """η(B) = ⟨(U†(B⊗I)U − B⊗I)²⟩^½ in state ⊗ |0⟩_p."""
    _require_z_basis(stage)
    u = dilation_unitary(stage)
    lifted = tensor(observable, identity(u.dim // observable.dim))
    change = lifted.conjugated_by(u) - lifted
    return _rms(change, _joint_state(stage, state))


def _weighted_mean(op: LinearOperator, vector: np.ndarray) -> float:
    """‖φ‖² times the mean of `op` on the normalized φ."""
    norm_sq = float(np.vdot(vector, vector).real)
    if norm_sq < 1e-12:
        raise AuxiliaryStateError("Three-state method needs auxiliary states of non-zero norm")
    normalized = StateVector(vector / math.sqrt(norm_sq))
    return norm_sq * expectation(op, normalized)


def _three_state(
    psi: StateVector,
    observable: LinearOperator,
    second_moment: LinearOperator,
    response: LinearOperator,
) -> float:
    amplitudes = psi.amplitudes
    shifted = observable + I2
    radicand = (
        expectation(second_moment, psi)
        + expectation(LinearOperator(observable.entries @ observable.entries, hermitian=True), psi)
        + _weighted_mean(response, amplitudes)
        + _weighted_mean(response, observable.entries @ amplitudes)
        - _weighted_mean(response, shifted.entries @ amplitudes)
    )
    return _root(radicand, RADICAND_TOL)


def three_state_error(
    stage: MeasurementStage, psi: StateVector, observable: LinearOperator = Z
) -> float:
    """ε(A) from the mean meter values on |ψ⟩, A|ψ⟩ and (A + I)|ψ⟩."""
    _require_z_basis(stage)
    return _three_state(
        psi,
        observable,
        second_moment=stage.povm.second_moment_operator(),
        response=stage.povm.mean_operator(),
    )


def three_state_disturbance(
    stage: MeasurementStage, psi: StateVector, observable: LinearOperator = X
) -> float:
    """η(B) from the mean of B after the apparatus on |ψ⟩, B|ψ⟩ and (B + I)|ψ⟩."""
    _require_z_basis(stage)
    square = LinearOperator(observable.entries @ observable.entries, hermitian=True)
    return _three_state(
        psi,
        observable,
        second_moment=stage.kraus.adjoint_apply(square),
        response=stage.kraus.adjoint_apply(observable),
    )


def _root(radicand: float, tolerance: float) -> float:
    """√radicand for a squared error in [0, 4], clipping overshoot within `tolerance`."""
    upper = MAX_ERROR**2
    if radicand < -tolerance or radicand > upper + tolerance:
        raise RadicandError(
            f"Radicand {radicand} outside [0, {upper}] beyond tolerance {tolerance}"
        )
    clipped = min(max(radicand, 0.0), upper)
    if clipped != radicand:
        logger.debug(f"Clipping radicand {radicand} to {clipped}")
    return math.sqrt(clipped)


def _weak_probe_estimate(joint: JointTable2, wp_strength: float, tolerance: float) -> float:
    if not 0 < wp_strength <= 1:
        raise WeakProbeStrengthError(
            f"wp_strength={wp_strength}: a weak probe at zero strength carries no information"
        )
    return _root(2 * (1 - joint.correlator() / wp_strength), tolerance)


def weak_probe_error(
    joint: JointTable2, wp_strength: float, tolerance: float = RADICAND_TOL
) -> float:
    """ε(Z)² = 2(1 − Σ z_i z_f P(z_i, z_f) / cos2θ_w)."""
    return _weak_probe_estimate(joint, wp_strength, tolerance)


def weak_probe_disturbance(
    joint: JointTable2, wp_strength: float, tolerance: float = RADICAND_TOL
) -> float:
    """η(X)² = 2(1 − Σ x_i x_f P(x_i, x_f) / cos2θ_w)."""
    return _weak_probe_estimate(joint, wp_strength, tolerance)


def tilde(value: float) -> float:
    """x·√(1 − x²/4), defined for 0 ≤ x ≤ 2."""
    if value > MAX_ERROR + RELATION_TOL:
        raise EdrPointError(f"Tilde transform needs a value <= {MAX_ERROR}, got {value}")
    value = min(value, MAX_ERROR)
    return value * math.sqrt(1 - value**2 / 4)


def _robertson_gap(sigma_a: float, sigma_b: float, c: float) -> float:
    gap = sigma_a**2 * sigma_b**2 - c**2
    if gap < -RELATION_TOL:
        raise RobertsonViolationError(
            f"sigma_a^2 sigma_b^2 - C^2 = {gap} < 0: inputs violate the Robertson relation"
        )
    return max(gap, 0.0)


def relation_lhs(
    kind: RelationKind,
    eps: float,
    eta: float,
    sigma_a: float = 1.0,
    sigma_b: float = 1.0,
    c: float = 1.0,
) -> float:
    """Left-hand side of one error–disturbance relation, to be compared with C."""
    kind = RelationKind(kind)
    if kind == RelationKind.HEISENBERG:
        return eps * eta
    if kind == RelationKind.OZAWA:
        return eps * eta + eps * sigma_b + sigma_a * eta
    if kind == RelationKind.BRANCIARD:
        gap = _robertson_gap(sigma_a, sigma_b, c)
        return math.sqrt(
            eps**2 * sigma_b**2 + sigma_a**2 * eta**2 + 2 * eps * eta * math.sqrt(gap)
        )
    t_eps, t_eta = tilde(eps), tilde(eta)
    gap = _robertson_gap(1.0, 1.0, c)
    return math.sqrt(t_eps**2 + t_eta**2 + 2 * t_eps * t_eta * math.sqrt(gap))


def edr_report(point: EdrPoint) -> EdrReport:
    args = (point.eps, point.eta, point.sigma_a, point.sigma_b, point.c_bound)
    lhs = {kind: relation_lhs(kind, *args) for kind in RelationKind}
    ok = {kind: value >= point.c_bound - RELATION_TOL for kind, value in lhs.items()}
    if not ok[RelationKind.OZAWA] or not ok[RelationKind.BRANCIARD]:
        logger.warning(f"Universally valid relation fails at {point}")
    return EdrReport(
        point=point,
        lhs_heisenberg=lhs[RelationKind.HEISENBERG],
        lhs_ozawa=lhs[RelationKind.OZAWA],
        lhs_branciard=lhs[RelationKind.BRANCIARD],
        lhs_branciard_tight=lhs[RelationKind.BRANCIARD_TIGHT],
        heisenberg_ok=ok[RelationKind.HEISENBERG],
        ozawa_ok=ok[RelationKind.OZAWA],
        branciard_ok=ok[RelationKind.BRANCIARD],
        branciard_tight_ok=ok[RelationKind.BRANCIARD_TIGHT],
        tilde_eps=tilde(point.eps),
        tilde_eta=tilde(point.eta),
    )


def uncertainty_terms(
    a: LinearOperator, b: LinearOperator, state: StateVector | DensityMatrix
) -> tuple[float, float, float]:
    """(σ(A), σ(B), C) in the given state."""
    return std_dev(a, state), std_dev(b, state), commutator_bound(a, b, state)


def robertson_check(a: LinearOperator, b: LinearOperator, state) -> RobertsonCheck:
    """σ(A)σ(B) − C, with a tolerance scaled by ‖A‖‖B‖."""
    sigma_a, sigma_b, c = uncertainty_terms(a, b, state)
    margin = sigma_a * sigma_b - c
    scale = max(1.0, np.linalg.norm(a.entries, 2) * np.linalg.norm(b.entries, 2))
    return RobertsonCheck(margin=margin, holds=margin >= -ROBERTSON_TOL * scale)


def post_probe_bound(
    signal: StateVector, wp_strength: float, basis: Basis = Basis.Z
) -> float:
    """C = |⟨[Z, X]⟩|/2 in the state left by a non-selective weak probe."""
    stage = make_stage(theta_for_strength(wp_strength), basis)
    return commutator_bound(Z, X, apply_channel(stage.kraus, signal.density()))


def _smallest_nonnegative_root(a: float, b: float, c0: float) -> float:
    """Smallest x >= 0 with a x² + b x + c0 >= 0, for a, b >= 0."""
    if c0 >= 0:
        return 0.0
    if a == 0:
        return -c0 / b if b > 0 else math.inf
    return (-b + math.sqrt(b * b - 4 * a * c0)) / (2 * a)


def min_disturbance_bound(
    kind: RelationKind,
    eps: float,
    sigma_a: float = 1.0,
    sigma_b: float = 1.0,
    c: float = 1.0,
) -> float:
    """Smallest η >= 0 allowed by the relation at error ε.

    Returns math.inf where no finite disturbance satisfies the relation
    (Heisenberg at ε = 0).
    """
    kind = RelationKind(kind)
    if eps < 0 or c < 0:
        raise ValueError(f"eps={eps} and c={c} must be non-negative")

    if kind == RelationKind.HEISENBERG:
        if eps == 0:
            return 0.0 if c == 0 else math.inf
        return c / eps
    if kind == RelationKind.OZAWA:
        numerator = c - eps * sigma_b
        if numerator <= 0:
            return 0.0
        denominator = sigma_a + eps
        return numerator / denominator if denominator > 0 else math.inf
    if kind == RelationKind.BRANCIARD:
        d = math.sqrt(_robertson_gap(sigma_a, sigma_b, c))
        return _smallest_nonnegative_root(
            sigma_a**2, 2 * eps * d, eps**2 * sigma_b**2 - c**2
        )

    t_eps = tilde(eps)
    d = math.sqrt(_robertson_gap(1.0, 1.0, c))
    t_eta = _smallest_nonnegative_root(1.0, 2 * t_eps * d, t_eps**2 - c**2)
    if t_eta > 1:
        return math.inf
    return math.sqrt(2 * (1 - math.sqrt(1 - t_eta**2)))
