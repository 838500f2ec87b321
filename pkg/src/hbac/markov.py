"""Markov-chain theory of TSAC: transfer matrix, spectrum, OAS, gap, mixing bound.

The chain acts on the computation marginal (a 2^n probability vector). Its
transfer matrix is column-stochastic and tridiagonal apart from the two corner
boundary terms, which makes the whole spectrum available in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundViolationError, RangeError, ValidationError
from .state import DiagonalState, ResetSpec, check_exponent_range, tv_distance

DENSE_BUILD_MAX_N = 14
EIG_MAX_N = 10


class TransferMatrix:
    """Column-stochastic 2^n x 2^n one-step map of the computation marginal.

    The dense entries are built lazily: at n = 14 they occupy 2 GiB, while
    apply_transfer only ever needs the two rate constants.
    """

    __slots__ = ("n", "epsilon", "_reset", "_entries")

    def __init__(self, n: int, reset: ResetSpec):
        if not 1 <= n <= DENSE_BUILD_MAX_N:
            raise RangeError(f"n must be in [1, {DENSE_BUILD_MAX_N}], got {n}")
        self.n = int(n)
        self.epsilon = reset.epsilon
        self._reset = reset
        self._entries = None

    @property
    def reset(self) -> ResetSpec:
        return self._reset

    @property
    def entries(self) -> np.ndarray:
        if self._entries is None:
            dim = 1 << self.n
            a = self._reset.p_plus
            b = self._reset.p_minus
            t = np.zeros((dim, dim))
            idx = np.arange(1, dim - 1)
            t[idx, idx - 1] = b          # fall from below
            t[idx, idx + 1] = a          # rise from above
            t[0, 0] = t[0, 1] = a        # top boundary
            t[dim - 1, dim - 1] = t[dim - 1, dim - 2] = b  # bottom boundary
            t.flags.writeable = False
            self._entries = t
        return self._entries

    def to_csv(self) -> str:
        lines = [f"# n={self.n} epsilon={self.epsilon!r}"]
        for row in self.entries:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SpectrumReport:
    """Analytic vs numeric spectrum of T, with the gap and its lower bound."""

    analytic_eigenvalues: np.ndarray
    numeric_eigenvalues: np.ndarray
    gap: float
    gap_lower_bound: float
    max_abs_error: float
    oas_eigenvector_tv: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "analytic_eigenvalues": [float(v) for v in self.analytic_eigenvalues],
                "numeric_eigenvalues": [float(v) for v in self.numeric_eigenvalues],
                "gap": self.gap,
                "gap_lower_bound": self.gap_lower_bound,
                "max_abs_error": self.max_abs_error,
                "oas_eigenvector_tv": self.oas_eigenvector_tv,
            },
            indent=2,
        )


def build_transfer_matrix(n: int, reset: ResetSpec) -> TransferMatrix:
    return TransferMatrix(n, reset)


def apply_transfer(transfer: TransferMatrix, p: np.ndarray) -> np.ndarray:
    """Sparse product T @ p without materializing T."""
    p = np.asarray(p, dtype=np.float64)
    dim = 1 << transfer.n
    if p.shape != (dim,):
        raise ValidationError(f"expected a vector of length {dim}, got shape {p.shape}")
    a = transfer.reset.p_plus
    b = transfer.reset.p_minus
    out = np.empty_like(p)
    out[0] = (p[0] + p[1]) * a
    out[-1] = (p[-2] + p[-1]) * b
    out[1:-1] = b * p[:-2] + a * p[2:]
    return out


def analytic_eigenvalues(n: int, reset: ResetSpec) -> np.ndarray:
    """{1} union {2 cos(k pi / 2^n) / z : k = 1..2^n - 1}, sorted descending."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    dim = 1 << n
    k = np.arange(1, dim)
    vals = np.concatenate(([1.0], 2.0 * np.cos(k * np.pi / dim) / reset.z))
    return np.sort(vals)[::-1].copy()


def oas(n: int, reset: ResetSpec) -> DiagonalState:
    """Optimal asymptotic state: probs[k] = p0 * e^{-2 eps k}, geometric."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    check_exponent_range(n, reset.epsilon)
    dim = 1 << n
    eps = reset.epsilon
    # expm1 keeps p0 accurate for small eps
    p0 = math.expm1(-2.0 * eps) / math.expm1(-2.0 * eps * dim)
    probs = p0 * np.exp(-2.0 * eps * np.arange(dim))
    return DiagonalState(n, probs / probs.sum())


def spectral_gap(n: int, reset: ResetSpec) -> tuple[float, float]:
    """(gap, lower bound): 1 - 2 cos(pi/2^n)/z and (z - 2)/z."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    gap = 1.0 - 2.0 * math.cos(math.pi / (1 << n)) / reset.z
    lower = (reset.z - 2.0) / reset.z
    if gap < lower:
        raise BoundViolationError(f"gap {gap} below its analytic lower bound {lower}")
    return gap, lower


def mixing_time_bound(n: int, reset: ResetSpec, xi: float) -> float:
    """Upper bound ln(1/(xi * l)) / gap with l = p0 * e^{-(2^n - 1) eps}.

    Evaluated in log space so the tiny l never has to be represented:
    ln(1/(xi l)) = -ln(xi) - ln(p0) + (2^n - 1) eps.
    """
    if not 0.0 < xi < 1.0:
        raise ValidationError(f"xi must be in (0, 1), got {xi}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    eps = reset.epsilon
    dim = 1 << n
    log_p0 = math.log(-math.expm1(-2.0 * eps)) - math.log(-math.expm1(-2.0 * eps * dim))
    log_inv = -math.log(xi) - log_p0 + (dim - 1) * eps
    gap, _ = spectral_gap(n, reset)
    return log_inv / gap


def symmetrized_transfer(n: int, reset: ResetSpec) -> np.ndarray:
    """The symmetric matrix similar to T under D^{-1/2} T D^{1/2}, D = diag(OAS).

    Detailed balance holds (T[i][i+1] pi_{i+1} = T[i+1][i] pi_i), so the
    conjugated matrix is symmetric tridiagonal with constant off-diagonal 1/z
    and diagonal (e^eps/z, 0, ..., 0, e^-eps/z). It shares T's eigenvalues
    exactly and, unlike T itself, is perfectly conditioned for eigensolvers.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    dim = 1 << n
    s = np.zeros((dim, dim))
    off = 1.0 / reset.z
    idx = np.arange(dim - 1)
    s[idx, idx + 1] = off
    s[idx + 1, idx] = off
    s[0, 0] = reset.p_plus
    s[dim - 1, dim - 1] = reset.p_minus
    return s


def verify_spectrum(n: int, reset: ResetSpec) -> SpectrumReport:
    """Numeric eigendecomposition of T checked against the closed-form spectrum.

    The eigenproblem is solved on the symmetrized similar matrix: T itself is
    so non-normal for large (2^n - 1)*eps that a general eigensolver acquires
    O(1e-2) imaginary parts, while the similar symmetric form is exact.
    """
    if not 1 <= n <= EIG_MAX_N:
        raise RangeError(f"n must be in [1, {EIG_MAX_N}] for the dense eigensolver, got {n}")
    vals, vecs = np.linalg.eigh(symmetrized_transfer(n, reset))
    numeric = vals[::-1].copy()
    analytic = analytic_eigenvalues(n, reset)
    max_abs_error = float(np.abs(numeric - analytic).max())

    asymptotic = oas(n, reset)
    # map the top eigenvector back through D^{1/2}; for the +1 mode this is the OAS
    vec = np.sqrt(asymptotic.probs) * vecs[:, -1]
    vec = vec / vec.sum()
    tv = tv_distance(vec, asymptotic.probs)
    if tv > 1e-10:
        raise BoundViolationError(f"+1 eigenvector is {tv} TV away from the OAS")
    gap, lower = spectral_gap(n, reset)
    return SpectrumReport(
        analytic_eigenvalues=analytic,
        numeric_eigenvalues=numeric,
        gap=gap,
        gap_lower_bound=lower,
        max_abs_error=max_abs_error,
        oas_eigenvector_tv=tv,
    )
