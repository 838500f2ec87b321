"""Experiment runner behind the CLI: configs, seeds, CSV/JSON emission, figures.

Every runner writes, into the configured output directory:
  * one or more CSV files (deterministic bytes for identical config + seeds),
  * a matplotlib PNG next to each CSV (unless plots are disabled),
  * run_record.json with timestamps, a git-style content hash of the config,
    and the list of result files.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import plotting
from .circuit import align_global_phase, gate_count, gates_to_unitary, synth_two_sort
from .errors import BoundViolationError, ValidationError
from .markov import mixing_time_bound, oas, verify_spectrum
from .ppa_analysis import nbds_rows_to_csv, nbds_trajectory, noise_rows_to_csv, noisy_ppa_step
from .protocols import ppa_step, tsac_step, two_sort_permutation
from .state import (
    DiagonalState,
    ResetSpec,
    check_exponent_range,
    make_maximally_mixed,
    make_thermal,
    polarization,
    tv_distance,
)

EXPERIMENTS = ("converge", "spectrum", "nbds", "noise", "circuit")

_DEFAULTS = {
    "converge": dict(n=2, epsilon=0.1, xi=1e-6, max_iters=200_000),
    "spectrum": dict(n=6, epsilon=0.1),
    "nbds": dict(n=10, epsilon=0.1, max_iters=500),
    "noise": dict(n=2, epsilon=0.02, max_iters=500,
                  sigma_list=(0.0, 0.05, 0.1, 0.5), seeds=tuple(range(20))),
    "circuit": dict(n=8),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int
    epsilon: float = 0.1
    sigma_list: tuple[float, ...] = ()
    xi: float = 1e-6
    max_iters: int = 500
    seeds: tuple[int, ...] = ()
    initial: str = "thermal"
    output_path: str = "hbac_out"
    plots: bool = True

    def canonical_text(self) -> str:
        """Stable key=value serialization; also the content-hash input."""
        parts = [
            f"experiment={self.experiment}",
            f"n={self.n}",
            f"epsilon={self.epsilon!r}",
            f"sigma={','.join(repr(s) for s in self.sigma_list)}",
            f"xi={self.xi!r}",
            f"iters={self.max_iters}",
            f"seeds={','.join(str(s) for s in self.seeds)}",
            f"initial={self.initial}",
            f"out={self.output_path}",
        ]
        return "\n".join(parts) + "\n"

    def content_hash(self) -> str:
        """Git blob style sha1 of the canonical config text."""
        payload = self.canonical_text().encode()
        return hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()


def parse_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment; later keys win."""
    values: dict[str, str] = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValidationError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, val = line.split("=", 1)
                values[key.strip()] = val.strip()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    return values


def _parse_float_list(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise ValidationError(f"bad {what} list {text!r}") from exc


def _parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise ValidationError(f"bad {what} list {text!r}") from exc


def build_config(experiment: str, file_values: dict[str, str] | None = None,
                 overrides: dict[str, object] | None = None) -> ExperimentConfig:
    """Merge defaults <- config file <- CLI overrides (overrides win)."""
    if experiment not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    merged: dict[str, object] = dict(_DEFAULTS[experiment])
    known = {"n", "epsilon", "xi", "sigma", "seeds", "iters", "initial", "out", "experiment"}
    for source in (file_values or {},):
        for key, raw in source.items():
            if key not in known:
                raise ValidationError(f"unknown config key {key!r}")
            if key == "experiment":
                if raw != experiment:
                    raise ValidationError(
                        f"config file says experiment={raw!r} but the {experiment!r} "
                        "subcommand was invoked"
                    )
                continue
            if key == "n":
                merged["n"] = int(raw)
            elif key == "epsilon":
                merged["epsilon"] = float(raw)
            elif key == "xi":
                merged["xi"] = float(raw)
            elif key == "sigma":
                merged["sigma_list"] = _parse_float_list(raw, "sigma")
            elif key == "seeds":
                merged["seeds"] = _parse_int_list(raw, "seeds")
            elif key == "iters":
                merged["max_iters"] = int(raw)
            elif key == "initial":
                merged["initial"] = raw
            elif key == "out":
                merged["output_path"] = raw
    for key, val in (overrides or {}).items():
        if val is not None:
            merged[key] = val
    config = ExperimentConfig(experiment=experiment, **merged)
    _validate_config(config)
    return config


def _validate_config(config: ExperimentConfig) -> None:
    if config.n < 1:
        raise ValidationError(f"n must be >= 1, got {config.n}")
    if not math.isfinite(config.epsilon) or config.epsilon <= 0.0:
        raise ValidationError(f"epsilon must be finite and > 0, got {config.epsilon}")
    if config.experiment in ("converge", "nbds", "noise"):
        check_exponent_range(config.n, config.epsilon)
    if config.experiment == "converge" and not 0.0 < config.xi < 1.0:
        raise ValidationError(f"xi must be in (0, 1), got {config.xi}")
    if config.max_iters < 1:
        raise ValidationError(f"iters must be >= 1, got {config.max_iters}")
    if config.experiment == "noise":
        if not config.seeds:
            raise ValidationError("noise is stochastic: seeds must be non-empty")
        if not config.sigma_list:
            raise ValidationError("noise needs at least one sigma")
        if any(s < 0 for s in config.sigma_list):
            raise ValidationError("sigma values must be >= 0")
    if config.experiment == "nbds" and config.n < 2:
        raise ValidationError("nbds needs n >= 2")
    if config.experiment == "circuit" and config.n < 2:
        raise ValidationError("circuit needs n >= 2 total qubits")
    if config.experiment == "spectrum" and not 1 <= config.n <= 10:
        raise ValidationError("spectrum supports n in [1, 10] (dense eigensolver)")
    kind = config.initial.split(":", 1)[0]
    if kind not in ("thermal", "mixed", "custom"):
        raise ValidationError(f"initial must be thermal, mixed, or custom:<path>, got {config.initial!r}")
    if kind == "custom" and ":" not in config.initial:
        raise ValidationError("custom initial state needs a path: custom:<path>")


def _initial_state(config: ExperimentConfig, reset: ResetSpec) -> DiagonalState:
    total = config.n + 1
    if config.initial == "thermal":
        return make_thermal(total, reset)
    if config.initial == "mixed":
        return make_maximally_mixed(total)
    path = config.initial.split(":", 1)[1]
    try:
        with open(path) as fh:
            state = DiagonalState.from_csv(fh.read())
    except OSError as exc:
        raise ValidationError(f"cannot read initial state {path}: {exc}") from exc
    if state.num_qubits != total:
        raise ValidationError(
            f"custom initial state has {state.num_qubits} qubits, expected n+1 = {total}"
        )
    return state


def worker_count(num_jobs: int) -> int:
    """Pool size: HBAC_THREADS if set, else the CPU count, capped by the job count."""
    raw = os.environ.get("HBAC_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ValidationError(f"HBAC_THREADS must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise ValidationError(f"HBAC_THREADS must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, num_jobs))


class _Run:
    """Collects result files and writes run_record.json at the end."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        self.files: list[str] = []
        os.makedirs(config.output_path, exist_ok=True)

    def write_text(self, name: str, text: str) -> str:
        path = os.path.join(self.config.output_path, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        self.files.append(name)
        return path

    def figure_path(self, name: str) -> str | None:
        if not self.config.plots:
            return None
        self.files.append(name)
        return os.path.join(self.config.output_path, name)

    def finish(self) -> dict:
        record = {
            "config": {
                "experiment": self.config.experiment,
                "n": self.config.n,
                "epsilon": self.config.epsilon,
                "sigma": list(self.config.sigma_list),
                "xi": self.config.xi,
                "iters": self.config.max_iters,
                "seeds": list(self.config.seeds),
                "initial": self.config.initial,
                "out": self.config.output_path,
            },
            "started": self.started,
            "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "content_hash": self.config.content_hash(),
            "result_files": self.files,
        }
        path = os.path.join(self.config.output_path, "run_record.json")
        with open(path, "w", newline="\n") as fh:
            json.dump(record, fh, indent=2)
            fh.write("\n")
        return record


def _converge_one(kind: str, initial: DiagonalState, reset: ResetSpec, target: DiagonalState,
                  xi: float, max_iters: int) -> tuple[list[str], dict]:
    """Lean iteration loop for one protocol; returns CSV rows and summary stats."""
    from ._permutation import nbds as nbds_of

    half = 1 << (initial.num_qubits - 1)
    rows: list[str] = []
    state = initial
    t_mix = None
    pol_prev = polarization(state, 0).value
    stable = 0
    it = 0
    tv_oas = None
    while it < max_iters:
        it += 1
        if kind == "tsac":
            nxt = tsac_step(state, reset)
            nbds_cell = ""
        else:
            nxt, perm = ppa_step(state, reset)
            nbds_cell = str(nbds_of(perm)[1])
        tv_prev = tv_distance(nxt, state)
        marg = nxt.probs.reshape(half, 2).sum(axis=1)
        tv_oas = 0.5 * float(np.abs(marg - target.probs).sum())
        pol = polarization(nxt, 0).value
        rows.append(f"{kind},{it},{tv_prev!r},{tv_oas!r},{pol!r},{nbds_cell}")
        state = nxt
        if t_mix is None and tv_oas <= xi:
            t_mix = it
        # after crossing xi, run on until the polarization stops moving
        if abs(pol - pol_prev) <= 1e-12 * max(1.0, abs(pol)):
            stable += 1
        else:
            stable = 0
        pol_prev = pol
        if t_mix is not None and stable >= 10:
            break
    summary = {
        "t_mix_empirical": t_mix,
        "iterations_run": it,
        "final_tv_to_oas": tv_oas,
        "final_pol_q0": pol_prev,
    }
    return rows, summary


def run_converge(config: ExperimentConfig) -> dict:
    """TSAC and PPA side by side against the OAS; asserts the analytic mixing bound."""
    run = _Run(config)
    reset = ResetSpec(config.epsilon)
    target = oas(config.n, reset)
    initial = _initial_state(config, reset)
    bound = mixing_time_bound(config.n, reset, config.xi)

    lines = ["protocol,iter,tv_to_prev,tv_to_oas,pol_q0,nbds"]
    summaries = {}
    series = {}
    for kind in ("tsac", "ppa"):
        rows, summary = _converge_one(kind, initial, reset, target, config.xi, config.max_iters)
        lines.extend(rows)
        summaries[kind] = summary
        iters = list(range(1, len(rows) + 1))
        series[kind.upper()] = (iters, [float(r.split(",")[3]) for r in rows])
    run.write_text("converge.csv", "\n".join(lines) + "\n")

    if summaries["tsac"]["t_mix_empirical"] is None:
        raise BoundViolationError(
            f"TSAC did not reach xi={config.xi} within {config.max_iters} iterations "
            f"(bound predicts {bound:.1f}); raise --iters"
        )
    if summaries["tsac"]["t_mix_empirical"] > bound:
        raise BoundViolationError(
            f"empirical t_mix {summaries['tsac']['t_mix_empirical']} exceeds the "
            f"mixing-time bound {bound:.3f}"
        )
    summary = {
        "n": config.n,
        "epsilon": config.epsilon,
        "xi": config.xi,
        "mixing_time_bound": bound,
        "bound_satisfied": True,
        "oas_pol_q0": (1 << (config.n - 1)) * config.epsilon,
        "tsac": summaries["tsac"],
        "ppa": summaries["ppa"],
    }
    run.write_text("converge_summary.json", json.dumps(summary, indent=2) + "\n")
    fig = run.figure_path("converge.png")
    if fig:
        plotting.plot_converge(series, config.xi, fig)
    return run.finish()


def run_spectrum(config: ExperimentConfig) -> dict:
    run = _Run(config)
    report = verify_spectrum(config.n, ResetSpec(config.epsilon))
    run.write_text("spectrum.json", report.to_json() + "\n")
    fig = run.figure_path("spectrum.png")
    if fig:
        plotting.plot_spectrum(report.analytic_eigenvalues, report.numeric_eigenvalues, fig)
    return run.finish()


def run_nbds(config: ExperimentConfig) -> dict:
    """PPA NBDS trajectories for n = 2..config.n at one epsilon."""
    run = _Run(config)
    reset = ResetSpec(config.epsilon)
    records = []
    for n in range(2, config.n + 1):
        check_exponent_range(n, config.epsilon)
        initial = make_thermal(n + 1, reset) if config.initial == "thermal" else \
            _initial_state(replace(config, n=n), reset)
        records.append(nbds_trajectory(n, reset, initial, config.max_iters))
    run.write_text("nbds.csv", nbds_rows_to_csv(records))
    maxima = {rec.n: rec.max_nbds for rec in records}
    fitted = [rec for rec in records if rec.n >= 3]
    slope = None
    if len(fitted) >= 2:
        xs = np.array([rec.n for rec in fitted], dtype=float)
        ys = np.log2([rec.max_nbds for rec in fitted])
        slope = float(np.polyfit(xs, ys, 1)[0])
    summary = {
        "epsilon": config.epsilon,
        "max_nbds_per_n": {str(n): maxima[n] for n in sorted(maxima)},
        "log2_slope_from_n3": slope,
    }
    run.write_text("nbds_summary.json", json.dumps(summary, indent=2) + "\n")
    fig = run.figure_path("nbds.png")
    if fig:
        plotting.plot_nbds(maxima, config.epsilon, fig)
    return run.finish()


def _noise_one(args: tuple) -> list[tuple[float, int, int, float]]:
    sigma_index, sigma, seed, initial, reset, max_iters = args
    rng = np.random.default_rng(seed ^ sigma_index)  # per-run substream
    state = initial
    rows = []
    for it in range(1, max_iters + 1):
        state, _ = noisy_ppa_step(state, reset, sigma, rng)
        rows.append((sigma, seed, it, polarization(state, 0).value))
    return rows


def run_noise(config: ExperimentConfig) -> dict:
    """Noisy-estimate PPA sweep over sigma x seeds, plus the noise-free TSAC reference."""
    run = _Run(config)
    reset = ResetSpec(config.epsilon)
    initial = _initial_state(config, reset)

    jobs = [
        (si, sigma, seed, initial, reset, config.max_iters)
        for si, sigma in enumerate(config.sigma_list)
        for seed in config.seeds
    ]
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        results = list(pool.map(_noise_one, jobs))  # pool.map preserves job order
    rows = [row for chunk in results for row in chunk]
    run.write_text("noise.csv", noise_rows_to_csv(rows))

    # mean plus min/max band per sigma, merged in (sigma, iter) order
    band_lines = ["sigma,iter,pol_mean,pol_min,pol_max"]
    bands = {}
    per_sigma = len(config.seeds) * config.max_iters
    for si, sigma in enumerate(config.sigma_list):
        chunk = rows[si * per_sigma:(si + 1) * per_sigma]
        pol = np.array([c[3] for c in chunk]).reshape(len(config.seeds), config.max_iters)
        mean, lo, hi = pol.mean(axis=0), pol.min(axis=0), pol.max(axis=0)
        iters = list(range(1, config.max_iters + 1))
        bands[sigma] = (iters, mean.tolist(), lo.tolist(), hi.tolist())
        for k, it in enumerate(iters):
            band_lines.append(f"{sigma!r},{it},{mean[k]!r},{lo[k]!r},{hi[k]!r}")
    run.write_text("noise_band.csv", "\n".join(band_lines) + "\n")

    # TSAC never reads the estimate, so one noise-free trajectory is the reference
    tsac_lines = ["iter,pol_q0"]
    state = initial
    tsac_iters, tsac_pols = [], []
    for it in range(1, config.max_iters + 1):
        state = tsac_step(state, reset)
        pol = polarization(state, 0).value
        tsac_lines.append(f"{it},{pol!r}")
        tsac_iters.append(it)
        tsac_pols.append(pol)
    run.write_text("noise_tsac.csv", "\n".join(tsac_lines) + "\n")

    fig = run.figure_path("noise.png")
    if fig:
        plotting.plot_noise(bands, (tsac_iters, tsac_pols), fig)
    return run.finish()


def run_circuit(config: ExperimentConfig) -> dict:
    """Synthesize and verify U_TS for m = 2..n; count gates out to m = 12."""
    run = _Run(config)
    if config.n > 10:
        raise ValidationError("circuit verification supports at most n = 10 total qubits")
    verification = []
    for m in range(2, config.n + 1):
        seq = synth_two_sort(m)
        run.write_text(f"two_sort_m{m}.txt", seq.to_netlist())
        unitary = gates_to_unitary(seq)
        dim = 1 << m
        mp = two_sort_permutation(m).map
        reference = np.zeros((dim, dim))
        reference[mp, np.arange(dim)] = 1.0
        max_error = float(np.abs(align_global_phase(unitary, reference) - reference).max())
        if max_error > 1e-9:
            raise BoundViolationError(f"two-sort reconstruction at m={m} errs by {max_error}")
        verification.append({
            "m": m,
            "max_error": max_error,
            "counts": gate_count(seq),
            "expanded_counts": gate_count(seq, expand_mcx_gates=True),
        })

    count_lines = ["m,total,expanded_total,ratio_expanded_over_m2"]
    per_m = {}
    ratios = {}
    for m in range(2, max(config.n, 12) + 1):
        counts = gate_count(synth_two_sort(m))
        expanded = gate_count(synth_two_sort(m), expand_mcx_gates=True)
        per_m[m] = expanded["total"]
        ratio = expanded["total"] / (m * m)
        ratios[m] = ratio
        count_lines.append(f"{m},{counts['total']},{expanded['total']},{ratio!r}")
    fitted_c = max(ratio for m, ratio in ratios.items() if m >= 3)
    run.write_text("gate_counts.csv", "\n".join(count_lines) + "\n")
    summary = {"verified_m": [v["m"] for v in verification], "fitted_c": fitted_c,
               "verification": verification}
    run.write_text("circuit_verification.json", json.dumps(summary, indent=2) + "\n")
    fig = run.figure_path("circuit.png")
    if fig:
        plotting.plot_gate_counts(per_m, fitted_c, fig)
    return run.finish()


RUNNERS = {
    "converge": run_converge,
    "spectrum": run_spectrum,
    "nbds": run_nbds,
    "noise": run_noise,
    "circuit": run_circuit,
}


def run_experiment(config: ExperimentConfig) -> dict:
    return RUNNERS[config.experiment](config)
