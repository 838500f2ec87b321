"""Core value types: diagonal states, density matrices, reset spec, polarization.

Conventions used everywhere in this package:

* bit order is big-endian: qubit 0 is the most significant bit of a basis index;
* the Hilbert space is H_C (x) H_R, i.e. the reset qubit is the last, least
  significant qubit;
* states are immutable value objects; every operation returns a new object.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMarginalError, RangeError, ValidationError

# Tolerances shared by the constructors.
NEG_TOL = 1e-14       # entries may dip this far below zero after arithmetic
SUM_TOL = 1e-12       # probability vectors / traces must match 1 this closely
HERM_TOL = 1e-12      # entrywise Hermiticity tolerance
PSD_TOL = 1e-10       # eigenvalue floor for density matrices

# Largest supported exponent spread: the smallest OAS element is
# p0 * e^{-2*(2^n-1)*eps}; beyond this cap the harness refuses the (n, eps) pair.
MAX_EXPONENT = 600.0


class ResetSpec:
    """Heat-bath polarization eps > 0 and the derived partition constant z."""

    __slots__ = ("epsilon", "z", "p_plus", "p_minus")

    def __init__(self, epsilon: float):
        epsilon = float(epsilon)
        if not math.isfinite(epsilon) or epsilon <= 0.0:
            raise ValidationError(f"epsilon must be finite and > 0, got {epsilon!r}")
        self.epsilon = epsilon
        self.z = math.exp(epsilon) + math.exp(-epsilon)
        self.p_plus = math.exp(epsilon) / self.z
        # complement form keeps the pair summing to 1.0 exactly
        self.p_minus = 1.0 - self.p_plus

    def populations(self) -> np.ndarray:
        """Reset state populations [e^eps/z, e^-eps/z] (ground first)."""
        return np.array([self.p_plus, self.p_minus])

    def __repr__(self) -> str:
        return f"ResetSpec(epsilon={self.epsilon!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ResetSpec) and other.epsilon == self.epsilon

    def __hash__(self) -> int:
        return hash(("ResetSpec", self.epsilon))


@dataclass(frozen=True)
class PolarizationReading:
    """Single-qubit polarization (1/2)*ln(P0/P1) of one qubit of a state."""

    qubit_index: int
    value: float

    def bias(self) -> float:
        """The alternative P0 - P1 reading; equals tanh(value)."""
        return math.tanh(self.value)


class DiagonalState:
    """Probability vector over the computational basis of num_qubits qubits."""

    __slots__ = ("num_qubits", "probs")

    def __init__(self, num_qubits: int, probs):
        num_qubits = int(num_qubits)
        if num_qubits < 1:
            raise ValidationError(f"num_qubits must be >= 1, got {num_qubits}")
        arr = np.asarray(probs, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.shape[0] != 1 << num_qubits:
            raise ValidationError(
                f"expected a flat vector of length 2^{num_qubits}, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("probabilities must be finite")
        lo = float(arr.min())
        if lo < -NEG_TOL:
            raise ValidationError(f"negative probability {lo} below tolerance {-NEG_TOL}")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"probabilities sum to {total}, not 1 within {SUM_TOL}")
        arr.flags.writeable = False
        self.num_qubits = num_qubits
        self.probs = arr

    def __len__(self) -> int:
        return self.probs.shape[0]

    def __repr__(self) -> str:
        return f"DiagonalState(num_qubits={self.num_qubits}, probs={self.probs!r})"

    def to_csv(self) -> str:
        """One probability per line, shortest round-trip decimal form."""
        lines = [f"# m={self.num_qubits}"]
        lines.extend(repr(float(p)) for p in self.probs)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "DiagonalState":
        num_qubits = None
        values = []
        for raw in io.StringIO(text):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("m="):
                    num_qubits = int(body[2:])
                continue
            values.append(float(line))
        if num_qubits is None:
            raise ValidationError("missing '# m=<num_qubits>' header")
        return cls(num_qubits, values)


class DensityMatrix:
    """Full complex Hermitian, trace-1, PSD matrix for small systems."""

    __slots__ = ("num_qubits", "entries")

    # above this size the PSD eigenvalue check is skipped (cubic cost)
    PSD_CHECK_MAX_QUBITS = 8

    def __init__(self, num_qubits: int, entries):
        num_qubits = int(num_qubits)
        if num_qubits < 1:
            raise ValidationError(f"num_qubits must be >= 1, got {num_qubits}")
        dim = 1 << num_qubits
        mat = np.asarray(entries, dtype=np.complex128).copy()
        if mat.shape != (dim, dim):
            raise ValidationError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat.real)) or not np.all(np.isfinite(mat.imag)):
            raise ValidationError("entries must be finite")
        herm = float(np.abs(mat - mat.conj().T).max())
        if herm > HERM_TOL:
            raise ValidationError(f"not Hermitian: max |A - A^dag| = {herm}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > SUM_TOL:
            raise ValidationError(f"trace is {tr}, not 1 within {SUM_TOL}")
        if num_qubits <= self.PSD_CHECK_MAX_QUBITS:
            lo = float(np.linalg.eigvalsh(mat).min())
            if lo < -PSD_TOL:
                raise ValidationError(f"not PSD: smallest eigenvalue {lo}")
        mat.flags.writeable = False
        self.num_qubits = num_qubits
        self.entries = mat

    def __repr__(self) -> str:
        return f"DensityMatrix(num_qubits={self.num_qubits})"

    def to_csv(self) -> str:
        """Row-major entries as re,im pairs, one matrix row per line."""
        lines = [f"# m={self.num_qubits}"]
        for row in self.entries:
            cells = []
            for v in row:
                cells.append(repr(float(v.real)))
                cells.append(repr(float(v.imag)))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "DensityMatrix":
        num_qubits = None
        rows = []
        for raw in io.StringIO(text):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("m="):
                    num_qubits = int(body[2:])
                continue
            cells = [float(c) for c in line.split(",")]
            if len(cells) % 2:
                raise ValidationError("expected re,im pairs")
            rows.append([complex(cells[2 * k], cells[2 * k + 1]) for k in range(len(cells) // 2)])
        if num_qubits is None:
            raise ValidationError("missing '# m=<num_qubits>' header")
        return cls(num_qubits, np.array(rows, dtype=np.complex128))


def make_thermal(num_qubits: int, reset: ResetSpec) -> DiagonalState:
    """Product state with every qubit at bath polarization eps."""
    if num_qubits < 1:
        raise ValidationError(f"num_qubits must be >= 1, got {num_qubits}")
    probs = reset.populations()
    for _ in range(num_qubits - 1):
        probs = np.kron(probs, reset.populations())
    probs = probs / probs.sum()
    return DiagonalState(num_qubits, probs)


def make_maximally_mixed(num_qubits: int) -> DiagonalState:
    if num_qubits < 1:
        raise ValidationError(f"num_qubits must be >= 1, got {num_qubits}")
    dim = 1 << num_qubits
    return DiagonalState(num_qubits, np.full(dim, 1.0 / dim))


def marginal_populations(state: DiagonalState, qubit_index: int) -> tuple[float, float]:
    """(P0, P1) marginal of one qubit; qubit 0 is the most significant bit."""
    m = state.num_qubits
    if not 0 <= qubit_index < m:
        raise ValidationError(f"qubit_index {qubit_index} out of range for {m} qubits")
    shaped = state.probs.reshape(1 << qubit_index, 2, -1)
    p0 = float(shaped[:, 0, :].sum())
    p1 = float(shaped[:, 1, :].sum())
    return p0, p1


def polarization(state: DiagonalState, qubit_index: int) -> PolarizationReading:
    """Log-ratio polarization (1/2)*ln(P0/P1) of the indexed qubit."""
    p0, p1 = marginal_populations(state, qubit_index)
    if p0 <= 0.0 or p1 <= 0.0:
        raise DegenerateMarginalError(
            f"qubit {qubit_index} has marginals P0={p0}, P1={p1}; log-ratio undefined"
        )
    return PolarizationReading(qubit_index, 0.5 * math.log(p0 / p1))


def diagonal_of(dm: DensityMatrix) -> DiagonalState:
    """Real diagonal of a density matrix as a DiagonalState."""
    diag = np.real(np.diagonal(dm.entries)).copy()
    total = float(diag.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValidationError(f"diagonal sums to {total}, drift beyond {SUM_TOL}")
    return DiagonalState(dm.num_qubits, diag / total)


def embed_diagonal(state: DiagonalState) -> DensityMatrix:
    """DiagonalState as a diagonal DensityMatrix (inverse of diagonal_of on diagonals)."""
    return DensityMatrix(state.num_qubits, np.diag(state.probs.astype(np.complex128)))


def tv_distance(a: DiagonalState | np.ndarray, b: DiagonalState | np.ndarray) -> float:
    """Total variation distance (1/2) * sum |a_i - b_i|."""
    pa = a.probs if isinstance(a, DiagonalState) else np.asarray(a, dtype=np.float64)
    pb = b.probs if isinstance(b, DiagonalState) else np.asarray(b, dtype=np.float64)
    if pa.shape != pb.shape:
        raise ValidationError(f"length mismatch: {pa.shape} vs {pb.shape}")
    return 0.5 * float(np.abs(pa - pb).sum())


def check_exponent_range(n: int, epsilon: float) -> None:
    """Reject (n, eps) whose OAS tail exponent (2^n - 1)*eps exceeds the cap."""
    spread = ((1 << n) - 1) * epsilon
    if spread > MAX_EXPONENT:
        raise RangeError(
            f"(2^{n} - 1) * {epsilon} = {spread} exceeds the supported exponent cap "
            f"{MAX_EXPONENT}; the smallest asymptotic population would underflow"
        )
