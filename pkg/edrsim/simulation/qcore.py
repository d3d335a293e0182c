"""Small-dimension complex linear algebra for qubit states, operators and channels.

Layout convention: tensor factors are ordered signal, WP probe, MA probe,
most significant first.
"""

import logging
from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

BUILD_TOL = 1e-12  # construction invariants
CHECK_TOL = 1e-10  # validation of derived quantities
PSD_TOL = 1e-10
MAX_DIM = 64


class QuantumStateError(ValueError):
    """Raised when amplitudes or entries do not describe a valid state."""

    pass


class OperatorError(ValueError):
    """Raised when an operator does not carry the property it claims."""

    pass


class DimensionMismatchError(ValueError):
    pass


class ChannelError(ValueError):
    """Raised for Kraus sets that are empty, ragged or incomplete."""

    pass


class PovmError(ValueError):
    pass


class SubsystemError(ValueError):
    """Raised for an invalid set of qubit factors in a partial trace."""

    pass


def _frozen(values, dtype=complex) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_finite(array: np.ndarray, what: str):
    if not np.all(np.isfinite(array)):
        raise QuantumStateError(f"{what} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes).reshape(-1)
        _check_finite(amplitudes, "State vector")
        if not _is_power_of_two(amplitudes.size) or amplitudes.size > MAX_DIM:
            raise QuantumStateError(
                f"State dimension {amplitudes.size} is not a power of 2 up to {MAX_DIM}"
            )
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > BUILD_TOL:
            raise QuantumStateError(f"State vector has norm {norm}, expected 1")
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def normalized(cls, values) -> "StateVector":
        array = np.asarray(values, dtype=complex).reshape(-1)
        norm = np.linalg.norm(array)
        if norm < BUILD_TOL:
            raise QuantumStateError("Cannot normalize a zero vector")
        return cls(array / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def evolve(self, op: "LinearOperator") -> "StateVector":
        _check_dims(op.dim, self.dim)
        return StateVector.normalized(op.entries @ self.amplitudes)

    def fidelity(self, other: "StateVector") -> float:
        _check_dims(self.dim, other.dim)
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        _check_finite(entries, "Density matrix")
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise QuantumStateError(f"Density matrix must be square, got {entries.shape}")
        if not _is_power_of_two(entries.shape[0]) or entries.shape[0] > MAX_DIM:
            raise QuantumStateError(f"Density matrix dimension {entries.shape[0]} unsupported")
        if not np.allclose(entries, entries.conj().T, atol=BUILD_TOL, rtol=0):
            raise QuantumStateError("Density matrix is not Hermitian")
        trace = np.trace(entries).real
        if abs(trace - 1.0) > BUILD_TOL:
            raise QuantumStateError(f"Density matrix has trace {trace}, expected 1")
        min_eig = np.linalg.eigvalsh(entries).min()
        if min_eig < -PSD_TOL:
            raise QuantumStateError(f"Density matrix has negative eigenvalue {min_eig}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_unnormalized(cls, entries) -> "DensityMatrix":
        array = np.asarray(entries, dtype=complex)
        array = 0.5 * (array + array.conj().T)
        trace = np.trace(array).real
        if trace < BUILD_TOL:
            raise QuantumStateError("Cannot normalize a density matrix with zero trace")
        return cls(array / trace)

    @classmethod
    def maximally_mixed(cls, dim: int = 2) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    entries: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise OperatorError(f"Operator must be square, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise OperatorError("Operator contains non-finite entries")
        if self.hermitian and not _is_hermitian(entries, BUILD_TOL):
            raise OperatorError("Operator flagged hermitian is not Hermitian")
        if self.unitary and not _is_unitary(entries, BUILD_TOL):
            raise OperatorError("Operator flagged unitary is not unitary")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.entries.conj().T, self.hermitian, self.unitary)

    def is_hermitian(self, tol: float = BUILD_TOL) -> bool:
        return _is_hermitian(self.entries, tol)

    def is_unitary(self, tol: float = BUILD_TOL) -> bool:
        return _is_unitary(self.entries, tol)

    def conjugated_by(self, u: "LinearOperator") -> "LinearOperator":
        """Return U† A U, keeping the hermitian flag."""
        _check_dims(u.dim, self.dim)
        return LinearOperator(
            u.entries.conj().T @ self.entries @ u.entries, hermitian=self.hermitian
        )

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        _check_dims(self.dim, other.dim)
        return LinearOperator(
            self.entries @ other.entries, unitary=self.unitary and other.unitary
        )

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        _check_dims(self.dim, other.dim)
        return LinearOperator(
            self.entries + other.entries, hermitian=self.hermitian and other.hermitian
        )

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        _check_dims(self.dim, other.dim)
        return LinearOperator(
            self.entries - other.entries, hermitian=self.hermitian and other.hermitian
        )

    def scaled(self, factor: float) -> "LinearOperator":
        return LinearOperator(factor * self.entries, hermitian=self.hermitian)


def _is_hermitian(entries: np.ndarray, tol: float) -> bool:
    return np.allclose(entries, entries.conj().T, atol=tol, rtol=0)


def _is_unitary(entries: np.ndarray, tol: float) -> bool:
    return np.allclose(
        entries.conj().T @ entries, np.eye(entries.shape[0]), atol=tol, rtol=0
    )


def _check_dims(expected: int, actual: int):
    if expected != actual:
        raise DimensionMismatchError(f"Dimension mismatch: {expected} vs {actual}")


def identity(dim: int) -> LinearOperator:
    return LinearOperator(np.eye(dim), hermitian=True, unitary=True)


I2 = identity(2)
X = LinearOperator([[0, 1], [1, 0]], hermitian=True, unitary=True)
Y = LinearOperator([[0, -1j], [1j, 0]], hermitian=True, unitary=True)
Z = LinearOperator([[1, 0], [0, -1]], hermitian=True, unitary=True)
HADAMARD = LinearOperator(
    np.array([[1, 1], [1, -1]]) / np.sqrt(2), hermitian=True, unitary=True
)
# control = first factor, target = second factor
CNOT = LinearOperator(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    hermitian=True,
    unitary=True,
)
PROJECTORS = (
    LinearOperator([[1, 0], [0, 0]], hermitian=True),
    LinearOperator([[0, 0], [0, 1]], hermitian=True),
)


def ket(bits: str) -> StateVector:
    """Computational basis state, e.g. ket("01") = |0⟩ ⊗ |1⟩."""
    index = int(bits, 2)
    amplitudes = np.zeros(2 ** len(bits), dtype=complex)
    amplitudes[index] = 1.0
    return StateVector(amplitudes)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple[LinearOperator, ...]

    def __post_init__(self):
        operators = tuple(self.operators)
        if not operators:
            raise ChannelError("Kraus channel needs at least one operator")
        dims = {op.dim for op in operators}
        if len(dims) != 1:
            raise ChannelError(f"Kraus operators have different dimensions: {sorted(dims)}")
        dim = dims.pop()
        completeness = sum(op.entries.conj().T @ op.entries for op in operators)
        if not np.allclose(completeness, np.eye(dim), atol=CHECK_TOL, rtol=0):
            raise ChannelError("Kraus operators do not satisfy sum K†K = I")
        object.__setattr__(self, "operators", operators)

    @property
    def dim(self) -> int:
        return self.operators[0].dim

    @classmethod
    def identity(cls, dim: int = 2) -> "KrausChannel":
        return cls((identity(dim),))

    def adjoint_apply(self, op: LinearOperator) -> LinearOperator:
        """Heisenberg-picture action Σ K† A K."""
        _check_dims(self.dim, op.dim)
        entries = sum(k.entries.conj().T @ op.entries @ k.entries for k in self.operators)
        return LinearOperator(0.5 * (entries + entries.conj().T), hermitian=True)


@dataclass(frozen=True, eq=False)
class PovmSet:
    elements: tuple[tuple[int, LinearOperator], ...]

    def __post_init__(self):
        elements = tuple((int(label), op) for label, op in self.elements)
        if not elements:
            raise PovmError("POVM needs at least one element")
        dims = {op.dim for _, op in elements}
        if len(dims) != 1:
            raise PovmError(f"POVM elements have different dimensions: {sorted(dims)}")
        dim = dims.pop()
        for label, op in elements:
            if not op.is_hermitian(CHECK_TOL):
                raise PovmError(f"POVM element {label} is not Hermitian")
            min_eig = np.linalg.eigvalsh(op.entries).min()
            if min_eig < -PSD_TOL:
                raise PovmError(f"POVM element {label} has negative eigenvalue {min_eig}")
        total = sum(op.entries for _, op in elements)
        if not np.allclose(total, np.eye(dim), atol=CHECK_TOL, rtol=0):
            raise PovmError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", elements)

    @property
    def dim(self) -> int:
        return self.elements[0][1].dim

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(label for label, _ in self.elements)

    def element(self, label: int) -> LinearOperator:
        for candidate, op in self.elements:
            if candidate == label:
                return op
        raise PovmError(f"POVM has no outcome labelled {label}")

    def mean_operator(self) -> LinearOperator:
        """Σ m E_m, the observable whose expectation is the mean meter value."""
        return LinearOperator(
            sum(label * op.entries for label, op in self.elements), hermitian=True
        )

    def second_moment_operator(self) -> LinearOperator:
        return LinearOperator(
            sum(label**2 * op.entries for label, op in self.elements), hermitian=True
        )


def tensor(a, b):
    """Kronecker product with the left factor most significant."""
    if isinstance(a, LinearOperator) and isinstance(b, LinearOperator):
        return LinearOperator(
            np.kron(a.entries, b.entries),
            hermitian=a.hermitian and b.hermitian,
            unitary=a.unitary and b.unitary,
        )
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries))
    raise TypeError(f"Cannot tensor {type(a).__name__} with {type(b).__name__}")


def embed(op: LinearOperator, dims: Sequence[int], targets: Sequence[int]) -> LinearOperator:
    """Lift `op`, acting on the subsystems `targets` (in that order), to the
    full space with subsystem dimensions `dims`."""
    targets = list(targets)
    if len(set(targets)) != len(targets) or any(t < 0 or t >= len(dims) for t in targets):
        raise SubsystemError(f"Invalid target subsystems {targets} for dims {list(dims)}")
    _check_dims(prod(dims[t] for t in targets), op.dim)

    rest = [k for k in range(len(dims)) if k not in targets]
    order = targets + rest
    full = np.kron(op.entries, np.eye(prod(dims[k] for k in rest)))
    shape = [dims[k] for k in order]
    full = full.reshape(shape + shape)
    inverse = list(np.argsort(order))
    n = len(dims)
    full = full.transpose(inverse + [n + axis for axis in inverse])
    total = prod(dims)
    return LinearOperator(
        full.reshape(total, total), hermitian=op.hermitian, unitary=op.unitary
    )


def _as_density(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return np.outer(state.amplitudes, state.amplitudes.conj())
    if isinstance(state, DensityMatrix):
        return state.entries
    raise TypeError(f"Expected StateVector or DensityMatrix, got {type(state).__name__}")


def expectation(op: LinearOperator, state: StateVector | DensityMatrix) -> float:
    """Mean value ⟨op⟩ in a pure or mixed state.

    Raises:
        DimensionMismatchError: If op and state dimensions differ
        OperatorError: If op is not Hermitian or the mean has an imaginary residue
    """
    _check_dims(op.dim, state.dim)
    if not op.is_hermitian(BUILD_TOL):
        raise OperatorError("Expectation values are defined for Hermitian operators only")
    if isinstance(state, StateVector):
        value = np.vdot(state.amplitudes, op.entries @ state.amplitudes)
    else:
        value = np.trace(op.entries @ _as_density(state))
    if abs(value.imag) > CHECK_TOL:
        raise OperatorError(f"Expectation has imaginary residue {value.imag}")
    return float(value.real)


def std_dev(op: LinearOperator, state: StateVector | DensityMatrix) -> float:
    """σ = ⟨(A − ⟨A⟩)²⟩^½, from the centered operator.

    Near eigenstates ⟨A²⟩ − ⟨A⟩² cancels to rounding residue; the centered
    form keeps the relative precision of the small spread.
    """
    mean = expectation(op, state)
    centered = op.entries - mean * np.eye(op.dim)
    if isinstance(state, StateVector):
        shifted = centered @ state.amplitudes
        variance = float(np.vdot(shifted, shifted).real)
    else:
        variance = float(np.trace(centered @ centered @ state.entries).real)
    if variance < 0:
        if variance < -BUILD_TOL:
            raise OperatorError(f"Negative variance {variance}")
        variance = 0.0
    return float(np.sqrt(variance))


def commutator_bound(a: LinearOperator, b: LinearOperator, state) -> float:
    """C = |⟨[A, B]⟩| / 2."""
    _check_dims(a.dim, b.dim)
    for name, op in (("A", a), ("B", b)):
        if not op.is_hermitian(BUILD_TOL):
            raise OperatorError(f"Observable {name} is not Hermitian")
    # i[A, B] is Hermitian for Hermitian A, B
    commutator = 1j * (a.entries @ b.entries - b.entries @ a.entries)
    return abs(expectation(LinearOperator(commutator, hermitian=True), state)) / 2


def apply_channel(channel: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    _check_dims(channel.dim, rho.dim)
    out = sum(k.entries @ rho.entries @ k.entries.conj().T for k in channel.operators)
    out = 0.5 * (out + out.conj().T)
    trace = np.trace(out).real
    if abs(trace - 1.0) > CHECK_TOL:
        raise ChannelError(f"Channel output has trace {trace}")
    return DensityMatrix(out / trace)


def povm_probabilities(povm: PovmSet, state: StateVector | DensityMatrix) -> list[float]:
    _check_dims(povm.dim, state.dim)
    rho = _as_density(state)
    probabilities = []
    for label, op in povm.elements:
        p = float(np.trace(op.entries @ rho).real)
        if p < 0:
            if p < -BUILD_TOL:
                raise PovmError(f"Outcome {label} has negative probability {p}")
            p = 0.0
        probabilities.append(p)
    if abs(sum(probabilities) - 1.0) > CHECK_TOL:
        raise PovmError(f"Outcome probabilities sum to {sum(probabilities)}")
    return probabilities


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduce `rho` to the qubit factors listed in `keep` (0 = most significant)."""
    n = rho.n_qubits
    keep = sorted(keep)
    if not keep or len(set(keep)) != len(keep) or keep[0] < 0 or keep[-1] >= n:
        raise SubsystemError(f"Cannot keep qubits {keep} of a {n}-qubit state")

    tensor_view = rho.entries.reshape([2] * (2 * n))
    # trace the highest factor first so lower axis positions stay valid
    for qubit in reversed([q for q in range(n) if q not in keep]):
        half = tensor_view.ndim // 2
        tensor_view = np.trace(tensor_view, axis1=qubit, axis2=qubit + half)
    dim = 2 ** len(keep)
    return DensityMatrix(tensor_view.reshape(dim, dim))


@dataclass
class SpectralCheck:
    """Eigen-decomposition of an observable paired with Born probabilities."""

    eigenvalues: np.ndarray
    probabilities: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(np.dot(self.eigenvalues, self.probabilities))


def spectral_expectation(op: LinearOperator, state) -> SpectralCheck:
    """Evaluate ⟨op⟩ as Σ a_k p_k from the eigen-decomposition of op."""
    eigenvalues, vectors = np.linalg.eigh(op.entries)
    rho = _as_density(state)
    probabilities = np.real(np.einsum("ik,ij,jk->k", vectors.conj(), rho, vectors))
    return SpectralCheck(eigenvalues=eigenvalues, probabilities=probabilities)


def random_state(rng: np.random.Generator, dim: int = 2) -> StateVector:
    values = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector.normalized(values)


def random_unitary(rng: np.random.Generator, dim: int = 2) -> LinearOperator:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(ginibre)
    phases = np.diag(r) / np.abs(np.diag(r))
    return LinearOperator(q * phases, unitary=True)
