"""Figure rendering for the experiment runners (one PNG next to each CSV)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_converge(series: dict[str, tuple[list[int], list[float]]], xi: float, path: str) -> None:
    """TV distance to the OAS per iteration, one line per protocol, log y."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (iters, tvs) in series.items():
        ax.semilogy(iters, np.maximum(tvs, 1e-300), label=label)
    ax.axhline(xi, color="gray", ls="--", lw=0.8, label=f"xi = {xi:g}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("TV distance to OAS")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def plot_spectrum(analytic: np.ndarray, numeric: np.ndarray, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    k = np.arange(len(analytic))
    ax.plot(k, analytic, "-", lw=1.0, label="analytic")
    ax.plot(k, numeric, ".", ms=3.0, label="numeric")
    ax.set_xlabel("rank")
    ax.set_ylabel("eigenvalue")
    ax.legend()
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def plot_nbds(per_n_maxima: dict[int, int], epsilon: float, path: str) -> None:
    """max NBDS vs n on a log2 y axis."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ns = sorted(per_n_maxima)
    ax.plot(ns, [per_n_maxima[n] for n in ns], "o-")
    ax.set_yscale("log", base=2)
    ax.set_xlabel("computation qubits n")
    ax.set_ylabel("max NBDS")
    ax.set_title(f"epsilon = {epsilon:g}")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def plot_noise(
    bands: dict[float, tuple[list[int], list[float], list[float], list[float]]],
    tsac_ref: tuple[list[int], list[float]] | None,
    path: str,
) -> None:
    """Mean first-qubit polarization per iteration with min/max band, per sigma."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    for sigma, (iters, mean, lo, hi) in sorted(bands.items()):
        (line,) = ax.plot(iters, mean, label=f"sigma = {sigma:g}")
        ax.fill_between(iters, lo, hi, alpha=0.2, color=line.get_color())
    if tsac_ref is not None:
        ax.plot(tsac_ref[0], tsac_ref[1], "k--", lw=1.0, label="TSAC (noise-free)")
    ax.set_xlabel("iteration")
    ax.set_ylabel("polarization of qubit 0")
    ax.legend()
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def plot_gate_counts(per_m: dict[int, int], fitted_c: float, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ms = sorted(per_m)
    ax.plot(ms, [per_m[m] for m in ms], "o-", label="expanded gate count")
    ax.plot(ms, [fitted_c * m * m for m in ms], "--", label=f"{fitted_c:.3g} m^2")
    ax.set_xlabel("total qubits m")
    ax.set_ylabel("gates")
    ax.legend()
    ax.grid(True, alpha=0.3)
    _save(fig, path)
