"""Weak probe → MA → X post-measurement chain.

Each measurement stage is the probe circuit: a probe qubit prepared in |0⟩,
rotated by S(θ), then coupled to the signal with a CNOT and read out in the
computational basis. The X-basis variant sandwiches the CNOT between
Hadamards on the signal.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from edrsim.simulation.qcore import (
    BUILD_TOL,
    CHECK_TOL,
    CNOT,
    HADAMARD,
    I2,
    DensityMatrix,
    KrausChannel,
    LinearOperator,
    PovmSet,
    StateVector,
    X,
    Z,
    embed,
    identity,
    ket,
    tensor,
)

logger = logging.getLogger(__name__)

THETA_MAX = np.pi / 4
OUTCOMES = (1, -1)  # meter value for outcome index 0 and 1


class StageError(ValueError):
    pass


class ChainConfigError(ValueError):
    pass


class Basis(str, Enum):
    Z = "Z"
    X = "X"


class Quantity(str, Enum):
    ERROR = "error"
    DISTURBANCE = "disturbance"


class ChainMode(str, Enum):
    KRAUS = "kraus"
    DILATION = "dilation"


class Pair(str, Enum):
    WP_MA = "wp_ma"
    WP_POST = "wp_post"


def _check_theta(theta: float) -> float:
    if not np.isfinite(theta) or theta < -BUILD_TOL or theta > THETA_MAX + BUILD_TOL:
        raise StageError(f"theta={theta} outside [0, pi/4]")
    return float(min(max(theta, 0.0), THETA_MAX))


def theta_for_strength(strength: float) -> float:
    """Invert strength = cos 2θ."""
    if not 0.0 - BUILD_TOL <= strength <= 1.0 + BUILD_TOL:
        raise StageError(f"strength={strength} outside [0, 1]")
    return 0.5 * float(np.arccos(np.clip(strength, 0.0, 1.0)))


def s_gate(theta: float) -> LinearOperator:
    theta = _check_theta(theta)
    c, s = np.cos(theta), np.sin(theta)
    return LinearOperator([[c, s], [s, -c]], hermitian=True, unitary=True)


def _basis_change(basis: Basis) -> LinearOperator:
    return HADAMARD if basis == Basis.X else I2


@dataclass(frozen=True, eq=False)
class MeasurementStage:
    """A two-outcome instrument with meter values ±1.

    `labels[k]` is the meter value read out when Kraus route `k` fires; ideal
    stages have one route per outcome, imperfect optics adds leaked routes.
    """

    theta: float
    basis: Basis
    kraus: KrausChannel
    labels: tuple[int, ...]
    povm: PovmSet
    ideal: bool = True

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_theta(self.theta))
        object.__setattr__(self, "basis", Basis(self.basis))
        labels = tuple(int(label) for label in self.labels)
        if len(labels) != len(self.kraus.operators) or set(labels) - set(OUTCOMES):
            raise StageError(f"Invalid meter labels {labels}")
        object.__setattr__(self, "labels", labels)
        if self.kraus.dim != 2 or self.povm.dim != 2:
            raise StageError("Measurement stages act on a single signal qubit")

        for outcome in OUTCOMES:
            from_kraus = sum(
                k.entries.conj().T @ k.entries for k in self.routes(outcome)
            )
            if not np.allclose(
                from_kraus, self.povm.element(outcome).entries, atol=CHECK_TOL, rtol=0
            ):
                raise StageError(f"Kraus routes do not reproduce POVM element {outcome}")

        if self.ideal:
            expected = ideal_povm(self.strength, self.basis)
            for outcome in OUTCOMES:
                if not np.allclose(
                    self.povm.element(outcome).entries,
                    expected.element(outcome).entries,
                    atol=CHECK_TOL,
                    rtol=0,
                ):
                    raise StageError(
                        f"POVM element {outcome} differs from 1/2 (I ± cos2θ {self.basis.value})"
                    )

    @property
    def strength(self) -> float:
        return float(np.cos(2 * self.theta))

    def routes(self, outcome: int) -> list[LinearOperator]:
        return [k for k, label in zip(self.kraus.operators, self.labels) if label == outcome]


def ideal_povm(strength: float, basis: Basis) -> PovmSet:
    observable = Z if basis == Basis.Z else X
    return PovmSet(
        tuple(
            (outcome, LinearOperator(0.5 * (np.eye(2) + outcome * strength * observable.entries), hermitian=True))
            for outcome in OUTCOMES
        )
    )


def povm_from_routes(
    operators: Sequence[LinearOperator], labels: Sequence[int]
) -> PovmSet:
    elements = []
    for outcome in OUTCOMES:
        entries = sum(
            k.entries.conj().T @ k.entries
            for k, label in zip(operators, labels)
            if label == outcome
        )
        elements.append((outcome, LinearOperator(0.5 * (entries + entries.conj().T), hermitian=True)))
    return PovmSet(tuple(elements))


def make_stage(
    theta: float, basis: Basis = Basis.Z, probe_state: StateVector | None = None
) -> MeasurementStage:
    """Ideal probe-circuit instrument.

    K₊ = cosθ·P₀ + sinθ·P₁ and K₋ = sinθ·P₀ + cosθ·P₁ in the Z basis; the X
    basis conjugates both with a Hadamard.

    Raises:
        StageError: If θ is outside [0, π/4] or the probe is not prepared in |0⟩
    """
    theta = _check_theta(theta)
    basis = Basis(basis)
    if probe_state is not None:
        if probe_state.dim != 2 or abs(abs(probe_state.amplitudes[0]) - 1.0) > BUILD_TOL:
            raise StageError("The probe qubit must be prepared in |0⟩")

    c, s = np.cos(theta), np.sin(theta)
    k_plus = np.diag([c, s]).astype(complex)
    k_minus = np.diag([s, c]).astype(complex)
    h = _basis_change(basis).entries
    operators = tuple(LinearOperator(h @ k @ h) for k in (k_plus, k_minus))
    return MeasurementStage(
        theta=theta,
        basis=basis,
        kraus=KrausChannel(operators),
        labels=OUTCOMES,
        povm=povm_from_routes(operators, OUTCOMES),
    )


def projective_x() -> MeasurementStage:
    return make_stage(0.0, Basis.X)


def _probe_dim(stage: MeasurementStage) -> int:
    routes = len(stage.kraus.operators)
    return max(2, 1 << (routes - 1).bit_length())


def dilation_unitary(stage: MeasurementStage) -> LinearOperator:
    """Unitary U on signal ⊗ probe with U(|ψ⟩|0⟩) = Σ_k K_k|ψ⟩ ⊗ |k⟩.

    Ideal stages use the S(θ) + CNOT circuit directly. Other instruments get a
    Stinespring isometry completed to a unitary.
    """
    if stage.ideal:
        change = tensor(_basis_change(stage.basis), I2)
        cnot = change @ CNOT @ change
        return cnot @ tensor(I2, s_gate(stage.theta))

    probe_dim = _probe_dim(stage)
    dim = 2 * probe_dim
    isometry = np.zeros((dim, 2), dtype=complex)
    for route, k in enumerate(stage.kraus.operators):
        # rows indexed (signal, probe); probe is the least significant factor
        isometry[route::probe_dim, :] = k.entries
    complement = null_space(isometry.conj().T)
    unitary = np.zeros((dim, dim), dtype=complex)
    input_columns = [s * probe_dim for s in range(2)]
    other_columns = [c for c in range(dim) if c not in input_columns]
    unitary[:, input_columns] = isometry
    unitary[:, other_columns] = complement
    return LinearOperator(unitary, unitary=True)


def meter_observable(stage: MeasurementStage) -> LinearOperator:
    """Probe-side meter M, reading the label of each Kraus route."""
    probe_dim = _probe_dim(stage)
    values = list(stage.labels) + [OUTCOMES[0]] * (probe_dim - len(stage.labels))
    return LinearOperator(np.diag(values).astype(complex), hermitian=True)


def meter_projector(stage: MeasurementStage, outcome: int) -> LinearOperator:
    probe_dim = _probe_dim(stage)
    diagonal = [1.0 if label == outcome else 0.0 for label in stage.labels]
    diagonal += [0.0] * (probe_dim - len(diagonal))
    return LinearOperator(np.diag(diagonal).astype(complex), hermitian=True)


def probe_ket(stage: MeasurementStage) -> StateVector:
    return ket("0" * (_probe_dim(stage).bit_length() - 1))


def dilated_output_observable(stage: MeasurementStage) -> LinearOperator:
    """U†(I ⊗ M)U on signal ⊗ probe."""
    u = dilation_unitary(stage)
    return tensor(identity(2), meter_observable(stage)).conjugated_by(u)


def kraus_from_dilation(stage: MeasurementStage) -> list[LinearOperator]:
    """(I ⊗ ⟨k|) U (I ⊗ |0⟩) for each probe basis state |k⟩."""
    u = dilation_unitary(stage).entries
    probe_dim = _probe_dim(stage)
    columns = u[:, [s * probe_dim for s in range(2)]]
    return [LinearOperator(columns[k::probe_dim, :]) for k in range(probe_dim)]


@dataclass(frozen=True, eq=False)
class JointTable2:
    """P(a_i, a_f) indexed by outcome index (0 ↔ +1, 1 ↔ −1)."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _validated_table(self.p, (2, 2)))

    def correlator(self) -> float:
        values = np.array(OUTCOMES, dtype=float)
        return float(values @ self.p @ values)


@dataclass(frozen=True, eq=False)
class JointTable3:
    """P(i, j, k) over WP, MA and post outcome indices."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _validated_table(self.p, (2, 2, 2)))


def _validated_table(values, shape: tuple[int, ...]) -> np.ndarray:
    table = np.array(values, dtype=float, copy=True)
    if table.shape != shape:
        raise ValueError(f"Probability table must have shape {shape}, got {table.shape}")
    if np.any(table < -BUILD_TOL) or not np.all(np.isfinite(table)):
        raise ValueError("Probability table has negative or non-finite entries")
    table = np.clip(table, 0.0, None)
    if abs(table.sum() - 1.0) > CHECK_TOL:
        raise ValueError(f"Probability table sums to {table.sum()}")
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class ChainConfig:
    signal: StateVector
    wp: MeasurementStage
    ma: MeasurementStage
    post: MeasurementStage
    quantity: Quantity

    def __post_init__(self):
        object.__setattr__(self, "quantity", Quantity(self.quantity))
        if self.signal.dim != 2:
            raise ChainConfigError("The signal is a single qubit")
        expected = Basis.Z if self.quantity == Quantity.ERROR else Basis.X
        if self.wp.basis != expected:
            raise ChainConfigError(
                f"Estimating the {self.quantity.value} needs a {expected.value}-basis weak probe"
            )
        if self.ma.basis != Basis.Z:
            raise ChainConfigError("The MA always measures in the Z basis")
        if self.post.basis != Basis.X or self.post.theta > BUILD_TOL:
            raise ChainConfigError("The post-measurement is a projective X measurement")

    @classmethod
    def build(
        cls,
        signal: StateVector,
        wp_strength: float,
        theta: float,
        quantity: Quantity = Quantity.ERROR,
    ) -> "ChainConfig":
        quantity = Quantity(quantity)
        wp_basis = Basis.Z if quantity == Quantity.ERROR else Basis.X
        return cls(
            signal=signal,
            wp=make_stage(theta_for_strength(wp_strength), wp_basis),
            ma=make_stage(theta, Basis.Z),
            post=projective_x(),
            quantity=quantity,
        )

    @property
    def wp_strength(self) -> float:
        return self.wp.strength


def _apply_routes(routes: Sequence[LinearOperator], rho: np.ndarray) -> np.ndarray:
    return sum(k.entries @ rho @ k.entries.conj().T for k in routes)


def state_entering_ma(cfg: ChainConfig) -> DensityMatrix:
    """Signal state after the non-selective weak probe."""
    rho = cfg.signal.density().entries
    return DensityMatrix.from_unnormalized(_apply_routes(cfg.wp.kraus.operators, rho))


def two_stage_distribution(
    rho: DensityMatrix, ma: MeasurementStage, post: MeasurementStage
) -> np.ndarray:
    """(j, k) outcome table of MA followed by the post-measurement, without a weak probe."""
    table = np.zeros((2, 2))
    for j, ma_outcome in enumerate(OUTCOMES):
        rho_j = _apply_routes(ma.routes(ma_outcome), rho.entries)
        for k, post_outcome in enumerate(OUTCOMES):
            table[j, k] = np.trace(post.povm.element(post_outcome).entries @ rho_j).real
    return table


def chain_distribution(cfg: ChainConfig, mode: ChainMode = ChainMode.KRAUS) -> JointTable3:
    """Exact joint distribution of the WP, MA and post outcomes."""
    mode = ChainMode(mode)
    if mode == ChainMode.DILATION:
        return _dilated_chain_distribution(cfg)

    rho = cfg.signal.density().entries
    table = np.zeros((2, 2, 2))
    for i, wp_outcome in enumerate(OUTCOMES):
        rho_i = _apply_routes(cfg.wp.routes(wp_outcome), rho)
        for j, ma_outcome in enumerate(OUTCOMES):
            rho_ij = _apply_routes(cfg.ma.routes(ma_outcome), rho_i)
            for k, post_outcome in enumerate(OUTCOMES):
                element = cfg.post.povm.element(post_outcome).entries
                table[i, j, k] = np.trace(element @ rho_ij).real
    logger.debug(f"Chain distribution ({cfg.quantity.value}): {table.reshape(-1)}")
    return JointTable3(table)


def _dilated_chain_distribution(cfg: ChainConfig) -> JointTable3:
    wp_dim, ma_dim = _probe_dim(cfg.wp), _probe_dim(cfg.ma)
    dims = [2, wp_dim, ma_dim]
    initial = tensor(tensor(cfg.signal, probe_ket(cfg.wp)), probe_ket(cfg.ma))
    u_wp = embed(dilation_unitary(cfg.wp), dims, [0, 1])
    u_ma = embed(dilation_unitary(cfg.ma), dims, [0, 2])
    final = u_ma.entries @ u_wp.entries @ initial.amplitudes

    table = np.zeros((2, 2, 2))
    for i, wp_outcome in enumerate(OUTCOMES):
        for j, ma_outcome in enumerate(OUTCOMES):
            for k, post_outcome in enumerate(OUTCOMES):
                effect = np.kron(
                    np.kron(
                        cfg.post.povm.element(post_outcome).entries,
                        meter_projector(cfg.wp, wp_outcome).entries,
                    ),
                    meter_projector(cfg.ma, ma_outcome).entries,
                )
                table[i, j, k] = np.vdot(final, effect @ final).real
    return JointTable3(table)


def marginal_joint(table: JointTable3, pair: Pair) -> JointTable2:
    pair = Pair(pair)
    axis = 2 if pair == Pair.WP_MA else 1
    return JointTable2(table.p.sum(axis=axis))


def named_signal(spec: str) -> StateVector:
    """Signal state from a short name ("y+", "x-", "z+", ...) or "bloch:THETA,PHI"."""
    spec = spec.strip().lower()
    r = 1 / np.sqrt(2)
    named = {
        "z+": [1, 0],
        "z-": [0, 1],
        "x+": [r, r],
        "x-": [r, -r],
        "y+": [r, 1j * r],
        "y-": [r, -1j * r],
    }
    if spec in named:
        return StateVector(named[spec])
    if spec.startswith("bloch:"):
        try:
            polar, azimuth = (float(v) for v in spec[len("bloch:") :].split(","))
        except ValueError as e:
            raise ValueError(f"Malformed Bloch signal spec '{spec}'") from e
        return StateVector(
            [np.cos(polar / 2), np.exp(1j * azimuth) * np.sin(polar / 2)]
        )
    raise ValueError(f"Unknown signal state '{spec}'")
