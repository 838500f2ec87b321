"""PPA complexity and robustness: NBDS trajectories and the noisy-estimate step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._permutation import Permutation, cycle_decomposition, nbds
from .errors import ValidationError
from .protocols import ppa_sort_permutation, reset_channel
from .state import DiagonalState, ResetSpec

__all__ = [
    "Permutation",
    "cycle_decomposition",
    "nbds",
    "NbdsRecord",
    "nbds_trajectory",
    "noisy_ppa_step",
    "nbds_rows_to_csv",
    "noise_rows_to_csv",
]


@dataclass(frozen=True)
class NbdsRecord:
    """Per-iteration NBDS of one PPA run; headline numbers use the excl-fixed variant."""

    n: int
    epsilon: float
    per_iteration_nbds: list[int]          # excl-fixed, one entry per iteration
    per_iteration_nbds_incl: list[int]     # incl-fixed companion, same length
    max_nbds: int
    iterations_run: int


def nbds_trajectory(
    n: int, reset: ResetSpec, initial: DiagonalState, max_iters: int
) -> NbdsRecord:
    """Run PPA from `initial` and record the NBDS of every sort permutation."""
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    if initial.num_qubits != n + 1:
        raise ValidationError(
            f"initial state has {initial.num_qubits} qubits, expected n+1 = {n + 1}"
        )
    excl_series: list[int] = []
    incl_series: list[int] = []
    current = initial
    for _ in range(max_iters):
        perm = ppa_sort_permutation(current)
        incl, excl = nbds(perm)
        incl_series.append(incl)
        excl_series.append(excl)
        sorted_state = DiagonalState(current.num_qubits, perm.apply(current.probs))
        after = reset_channel(sorted_state, reset)
        current = DiagonalState(current.num_qubits, after.probs / after.probs.sum())
    return NbdsRecord(
        n=n,
        epsilon=reset.epsilon,
        per_iteration_nbds=excl_series,
        per_iteration_nbds_incl=incl_series,
        max_nbds=max(excl_series),
        iterations_run=len(excl_series),
    )


def noisy_ppa_step(
    state: DiagonalState, reset: ResetSpec, sigma: float, rng: np.random.Generator
) -> tuple[DiagonalState, Permutation]:
    """PPA step driven by a noisy population estimate.

    The sort permutation is computed from p + Normal(0, sigma^2) draws on the
    full diagonal, then applied to the TRUE state (tomography error, not
    operation error). sigma is a standard deviation. sigma = 0 reproduces
    ppa_step bit for bit.
    """
    if sigma < 0.0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    if state.num_qubits < 2:
        raise ValidationError("need at least one computation qubit plus the reset qubit")
    probs = state.probs
    if sigma == 0.0:
        estimate = probs
    else:
        estimate = probs + rng.normal(0.0, sigma, probs.shape[0])
    order = np.argsort(-estimate, kind="stable")
    mp = np.empty(order.shape[0], dtype=np.int64)
    mp[order] = np.arange(order.shape[0], dtype=np.int64)
    perm = Permutation(mp)
    sorted_state = DiagonalState(state.num_qubits, perm.apply(probs))
    after = reset_channel(sorted_state, reset)
    return DiagonalState(state.num_qubits, after.probs / after.probs.sum()), perm


def nbds_rows_to_csv(records: list[NbdsRecord]) -> str:
    """CSV with columns n, epsilon, iter, nbds_incl, nbds_excl."""
    lines = ["n,epsilon,iter,nbds_incl,nbds_excl"]
    for rec in records:
        for it, (inc, exc) in enumerate(
            zip(rec.per_iteration_nbds_incl, rec.per_iteration_nbds)
        ):
            lines.append(f"{rec.n},{rec.epsilon!r},{it + 1},{inc},{exc}")
    return "\n".join(lines) + "\n"


def noise_rows_to_csv(rows: list[tuple[float, int, int, float]]) -> str:
    """CSV with columns sigma, seed, iter, pol_q0."""
    lines = ["sigma,seed,iter,pol_q0"]
    for sigma, seed, it, pol in rows:
        lines.append(f"{sigma!r},{seed},{it},{pol!r}")
    return "\n".join(lines) + "\n"
