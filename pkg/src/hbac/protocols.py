"""Cooling protocols: reset channel, two-sort compression, TSAC and PPA iterations.

A full system has n computation qubits plus one reset qubit (the last, least
significant qubit), so diagonal states here have num_qubits = n + 1 >= 2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._permutation import Permutation, nbds
from .errors import ValidationError
from .state import DiagonalState, DensityMatrix, ResetSpec, polarization, tv_distance


class ProtocolKind(enum.Enum):
    TSAC = "tsac"
    PPA = "ppa"
    NOISY_PPA = "noisy_ppa"


@dataclass(frozen=True)
class ProtocolStep:
    """One iteration t -> t+1 of a cooling protocol."""

    kind: ProtocolKind
    applied_permutation: Permutation
    pre_state: DiagonalState
    post_state: DiagonalState
    iteration_index: int


@dataclass(frozen=True)
class Trajectory:
    """An ordered run of protocol steps plus the first-qubit polarization series.

    polarization_series has one entry per state, so its length is len(steps) + 1.
    """

    steps: list[ProtocolStep]
    reset: ResetSpec
    polarization_series: list[float] = field(default_factory=list)

    @property
    def initial_state(self) -> DiagonalState:
        return self.steps[0].pre_state if self.steps else None

    @property
    def final_state(self) -> DiagonalState:
        return self.steps[-1].post_state if self.steps else None

    def to_csv(self) -> str:
        """Columns iter, tv_to_prev, pol_q0, nbds (nbds blank for TSAC rows).

        Row 0 is the initial state: tv_to_prev and nbds are blank there too.
        nbds is the excl-fixed variant of each step's applied permutation.
        """
        lines = ["iter,tv_to_prev,pol_q0,nbds"]
        lines.append(f"0,,{self.polarization_series[0]!r},")
        for step in self.steps:
            tv = tv_distance(step.post_state, step.pre_state)
            pol = self.polarization_series[step.iteration_index + 1]
            if step.kind is ProtocolKind.TSAC:
                tail = ""
            else:
                tail = str(nbds(step.applied_permutation)[1])
            lines.append(f"{step.iteration_index + 1},{tv!r},{pol!r},{tail}")
        return "\n".join(lines) + "\n"


def _require_full_system(state: DiagonalState) -> None:
    if state.num_qubits < 2:
        raise ValidationError(
            "need at least one computation qubit plus the reset qubit (num_qubits >= 2)"
        )


def reset_channel(state: DiagonalState, reset: ResetSpec) -> DiagonalState:
    """Trace out the reset qubit and re-append it at bath polarization.

    output[2k]   = (in[2k] + in[2k+1]) * e^{+eps}/z
    output[2k+1] = (in[2k] + in[2k+1]) * e^{-eps}/z
    """
    _require_full_system(state)
    merged = state.probs.reshape(-1, 2).sum(axis=1)
    out = np.empty_like(state.probs)
    out[0::2] = merged * reset.p_plus
    out[1::2] = merged * reset.p_minus
    return DiagonalState(state.num_qubits, out)


def two_sort_permutation(num_qubits: int) -> Permutation:
    """The fixed permutation of U_TS: swap (1,2), (3,4), ..., fix 0 and the last index."""
    dim = 1 << num_qubits
    mp = np.arange(dim, dtype=np.int64)
    mp[1:-2:2] = np.arange(2, dim - 1, 2)
    mp[2:-1:2] = np.arange(1, dim - 2, 2)
    return Permutation(mp)


def two_sort(state: DiagonalState) -> DiagonalState:
    """Swap every two neighboring populations except the first and last entries."""
    x = state.probs
    out = x.copy()
    out[1:-2:2] = x[2:-1:2]
    out[2:-1:2] = x[1:-2:2]
    return DiagonalState(state.num_qubits, out)


def tsac_step(state: DiagonalState, reset: ResetSpec) -> DiagonalState:
    """One TSAC iteration: reset, then two-sort, then renormalize."""
    after = two_sort(reset_channel(state, reset))
    return DiagonalState(state.num_qubits, after.probs / after.probs.sum())


def tsac_step_density(dm: DensityMatrix, reset: ResetSpec) -> DensityMatrix:
    """One TSAC iteration on a full density matrix: U_TS (Tr_R(dm) (x) rho_R) U_TS.

    U_TS is a real symmetric involution, so the adjoint placement is immaterial.
    """
    if dm.num_qubits < 2:
        raise ValidationError("need num_qubits >= 2")
    if dm.num_qubits > 12:
        raise ValidationError("density-matrix path supports at most 12 qubits")
    half = 1 << (dm.num_qubits - 1)
    traced = dm.entries.reshape(half, 2, half, 2).trace(axis1=1, axis2=3)
    rho_r = np.diag(reset.populations().astype(np.complex128))
    refreshed = np.kron(traced, rho_r)
    mp = two_sort_permutation(dm.num_qubits).map
    swapped = np.empty_like(refreshed)
    swapped[np.ix_(mp, mp)] = refreshed
    return DensityMatrix(dm.num_qubits, swapped)


def ppa_sort_permutation(state: DiagonalState) -> Permutation:
    """Permutation placing the populations in non-increasing order, stable on ties."""
    order = np.argsort(-state.probs, kind="stable")
    mp = np.empty(order.shape[0], dtype=np.int64)
    mp[order] = np.arange(order.shape[0], dtype=np.int64)
    return Permutation(mp)


def ppa_step(state: DiagonalState, reset: ResetSpec) -> tuple[DiagonalState, Permutation]:
    """One PPA iteration: sort the diagonal descending, reset, renormalize."""
    _require_full_system(state)
    perm = ppa_sort_permutation(state)
    sorted_state = DiagonalState(state.num_qubits, perm.apply(state.probs))
    after = reset_channel(sorted_state, reset)
    return DiagonalState(state.num_qubits, after.probs / after.probs.sum()), perm


def run_protocol(
    initial: DiagonalState,
    reset: ResetSpec,
    kind: ProtocolKind,
    max_iters: int,
    stop_tv: float = 0.0,
    noise_sigma: float = 0.0,
    rng_seed: int = 0,
) -> Trajectory:
    """Iterate one protocol until tv-to-previous < stop_tv or max_iters steps ran.

    noise_sigma is only read for NOISY_PPA; the run is deterministic given rng_seed.
    """
    from .ppa_analysis import noisy_ppa_step  # local import, avoids a module cycle

    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    if stop_tv < 0.0:
        raise ValidationError(f"stop_tv must be >= 0, got {stop_tv}")
    if kind is not ProtocolKind.NOISY_PPA and noise_sigma != 0.0:
        raise ValidationError(f"noise_sigma is only valid for NOISY_PPA, got {noise_sigma}")
    _require_full_system(initial)

    fixed_perm = two_sort_permutation(initial.num_qubits)
    rng = np.random.default_rng(rng_seed)
    steps: list[ProtocolStep] = []
    pols = [polarization(initial, 0).value]
    current = initial
    for it in range(max_iters):
        if kind is ProtocolKind.TSAC:
            nxt, perm = tsac_step(current, reset), fixed_perm
        elif kind is ProtocolKind.PPA:
            nxt, perm = ppa_step(current, reset)
        elif kind is ProtocolKind.NOISY_PPA:
            nxt, perm = noisy_ppa_step(current, reset, noise_sigma, rng)
        else:
            raise ValidationError(f"unknown protocol kind {kind!r}")
        steps.append(ProtocolStep(kind, perm, current, nxt, it))
        pols.append(polarization(nxt, 0).value)
        moved = tv_distance(nxt, current)
        current = nxt
        if moved < stop_tv:
            break
    return Trajectory(steps=steps, reset=reset, polarization_series=pols)
