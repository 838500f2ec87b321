"""Gate-level synthesis of the two-sort unitary and its building blocks.

SHIFT_m is built as QFT, per-qubit phase rotations encoding +m, inverse QFT;
U_TS conjugates (NOT o MCX) on the last qubit by SHIFT_{-1} / SHIFT_{+1}.
Every synthesized sequence can be reconstructed to an explicit unitary for
verification (up to 10 qubits), with a single global phase quotiented out.

Gate lists are in application order: gates[0] acts first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError, ValidationError

RECONSTRUCT_MAX_QUBITS = 10
GATE_KINDS = ("X", "H", "CX", "CPHASE", "RZ", "MCX")
_H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    """One elementary gate; targets/controls are qubit indices, 0 = most significant."""

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        if len(self.targets) != 1:
            raise ValidationError(f"{self.kind} takes exactly one target")
        if set(self.targets) & set(self.controls):
            raise ValidationError("targets and controls must be disjoint")
        if len(set(self.controls)) != len(self.controls):
            raise ValidationError("duplicate control qubit")
        expected_controls = {"X": 0, "H": 0, "RZ": 0, "CX": 1, "CPHASE": 1}
        if self.kind in expected_controls and len(self.controls) != expected_controls[self.kind]:
            raise ValidationError(f"{self.kind} takes {expected_controls[self.kind]} control(s)")
        if self.kind == "MCX" and len(self.controls) < 1:
            raise ValidationError("MCX needs at least one control")
        if self.kind in ("CPHASE", "RZ"):
            if self.theta is None or not math.isfinite(self.theta):
                raise ValidationError(f"{self.kind} needs a finite angle")
        elif self.theta is not None:
            raise ValidationError(f"{self.kind} takes no angle")

    def inverse(self) -> "Gate":
        if self.kind in ("CPHASE", "RZ"):
            return Gate(self.kind, self.targets, self.controls, -self.theta)
        return self  # X, H, CX, MCX are involutions


@dataclass(frozen=True)
class GateSequence:
    """Ordered gates on a register of num_qubits qubits, in application order."""

    num_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise ValidationError(f"num_qubits must be >= 1, got {self.num_qubits}")
        for g in self.gates:
            for q in g.targets + g.controls:
                if not 0 <= q < self.num_qubits:
                    raise ValidationError(f"qubit {q} out of range for {self.num_qubits} qubits")

    @property
    def metadata(self) -> dict[str, int]:
        """Gate counts per kind (only kinds that appear)."""
        counts: dict[str, int] = {}
        for g in self.gates:
            counts[g.kind] = counts.get(g.kind, 0) + 1
        return counts

    def __len__(self) -> int:
        return len(self.gates)

    def concat(self, other: "GateSequence") -> "GateSequence":
        if other.num_qubits != self.num_qubits:
            raise ValidationError("register width mismatch")
        return GateSequence(self.num_qubits, self.gates + other.gates)

    def inverse(self) -> "GateSequence":
        return GateSequence(self.num_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def to_netlist(self) -> str:
        """One gate per line: KIND q<targets> c<controls> [theta]."""
        lines = [f"# qubits={self.num_qubits}"]
        for g in self.gates:
            parts = [g.kind, "q" + ",".join(str(q) for q in g.targets)]
            if g.controls:
                parts.append("c" + ",".join(str(q) for q in g.controls))
            if g.theta is not None:
                parts.append(repr(g.theta))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_netlist(cls, text: str) -> "GateSequence":
        num_qubits = None
        gates = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("qubits="):
                    num_qubits = int(body[len("qubits="):])
                continue
            parts = line.split()
            kind = parts[0]
            targets: tuple[int, ...] = ()
            controls: tuple[int, ...] = ()
            theta = None
            for tok in parts[1:]:
                if tok.startswith("q"):
                    targets = tuple(int(v) for v in tok[1:].split(","))
                elif tok.startswith("c") and not tok[1].isalpha():
                    controls = tuple(int(v) for v in tok[1:].split(","))
                else:
                    theta = float(tok)
            gates.append(Gate(kind, targets, controls, theta))
        if num_qubits is None:
            raise ValidationError("missing '# qubits=<m>' header")
        return cls(num_qubits, tuple(gates))

    def to_qasm(self) -> str:
        """OpenQASM-2-style export (best effort; MCX is expanded first)."""
        seq = expand_mcx(self)
        lines = [
            "OPENQASM 2.0;",
            'include "qelib1.inc";',
            f"qreg q[{seq.num_qubits}];",
        ]
        for g in seq.gates:
            t = g.targets[0]
            if g.kind == "H":
                lines.append(f"h q[{t}];")
            elif g.kind == "X":
                lines.append(f"x q[{t}];")
            elif g.kind == "CX":
                lines.append(f"cx q[{g.controls[0]}],q[{t}];")
            elif g.kind == "RZ":
                lines.append(f"rz({g.theta!r}) q[{t}];")
            elif g.kind == "CPHASE":
                lines.append(f"cu1({g.theta!r}) q[{g.controls[0]}],q[{t}];")
            elif g.kind == "MCX" and len(g.controls) == 2:
                c1, c2 = g.controls
                lines.append(f"ccx q[{c1}],q[{c2}],q[{t}];")
            else:  # pragma: no cover - expand_mcx leaves at most 2 controls
                raise ValidationError(f"cannot export {g.kind} with {len(g.controls)} controls")
        return "\n".join(lines) + "\n"


def synth_qft(num_qubits: int) -> GateSequence:
    """QFT as H plus a controlled-phase ladder; no terminal swap layer.

    The bit reversal is absorbed into the rotation indexing, so the
    reconstruction equals (bit-reversal o DFT), which is what the shift
    synthesis needs. Gate count is num_qubits * (num_qubits + 1) / 2.
    """
    if num_qubits < 1:
        raise ValidationError(f"num_qubits must be >= 1, got {num_qubits}")
    gates = []
    for j in range(num_qubits):
        gates.append(Gate("H", (j,)))
        for k in range(j + 1, num_qubits):
            gates.append(Gate("CPHASE", (j,), (k,), 2.0 * math.pi / (1 << (k - j + 1))))
    return GateSequence(num_qubits, tuple(gates))


def synth_shift(m: int, num_qubits: int) -> GateSequence:
    """Cyclic shift |x> -> |x + m mod 2^num_qubits> via QFT + rotations + inverse QFT.

    Up to one global phase, the reconstruction equals the shift permutation
    matrix; m is taken mod 2^num_qubits, so m = -1 is the inverse of m = +1.
    """
    if num_qubits < 1:
        raise ValidationError(f"num_qubits must be >= 1, got {num_qubits}")
    dim = 1 << num_qubits
    mt = int(m) % dim
    qft = synth_qft(num_qubits)
    rotations = tuple(
        Gate("RZ", (j,), (), 2.0 * math.pi * mt / (1 << (num_qubits - j)))
        for j in range(num_qubits)
    )
    return GateSequence(num_qubits, qft.gates + rotations + qft.inverse().gates)


def synth_mcx(num_qubits: int) -> GateSequence:
    """X on the last qubit controlled on all others being 1 (macro form)."""
    if num_qubits < 1:
        raise ValidationError(f"num_qubits must be >= 1, got {num_qubits}")
    target = num_qubits - 1
    if num_qubits == 1:
        return GateSequence(1, (Gate("X", (0,)),))
    if num_qubits == 2:
        return GateSequence(2, (Gate("CX", (1,), (0,)),))
    controls = tuple(range(num_qubits - 1))
    return GateSequence(num_qubits, (Gate("MCX", (target,), controls),))


def synth_two_sort(num_qubits: int) -> GateSequence:
    """U_TS: conjugate (NOT o MCX) on the last qubit by the +-1 shifts.

    Application order is SHIFT_{-1}, MCX, X, SHIFT_{+1}; the direction was
    fixed by matching the reconstruction against the size-4 two-sort matrix.
    """
    if num_qubits < 2:
        raise ValidationError(f"num_qubits must be >= 2, got {num_qubits}")
    down = synth_shift(-1, num_qubits)
    up = synth_shift(1, num_qubits)
    middle = synth_mcx(num_qubits).gates + (Gate("X", (num_qubits - 1,)),)
    return GateSequence(num_qubits, down.gates + middle + up.gates)


def _controls_mask(indices: tuple[int, ...], num_qubits: int) -> int:
    mask = 0
    for q in indices:
        mask |= 1 << (num_qubits - 1 - q)
    return mask


def gates_to_unitary(seq: GateSequence) -> np.ndarray:
    """Ordered product of the gate matrices as one dense unitary."""
    m = seq.num_qubits
    if m > RECONSTRUCT_MAX_QUBITS:
        raise RangeError(f"reconstruction supports at most {RECONSTRUCT_MAX_QUBITS} qubits")
    dim = 1 << m
    u = np.eye(dim, dtype=np.complex128)
    idx = np.arange(dim)
    for g in seq.gates:
        if g.kind == "H":
            t = g.targets[0]
            tensor = u.reshape((2,) * m + (dim,))
            tensor = np.tensordot(_H_MATRIX, tensor, axes=([1], [t]))
            u = np.moveaxis(tensor, 0, t).reshape(dim, dim)
        elif g.kind in ("X", "CX", "MCX"):
            cmask = _controls_mask(g.controls, m)
            tbit = 1 << (m - 1 - g.targets[0])
            src = np.where((idx & cmask) == cmask, idx ^ tbit, idx)
            u = u[src, :]
        elif g.kind == "CPHASE":
            mask = _controls_mask(g.controls + g.targets, m)
            rows = (idx & mask) == mask
            u = u.copy()
            u[rows, :] *= np.exp(1j * g.theta)
        elif g.kind == "RZ":
            tbit = 1 << (m - 1 - g.targets[0])
            ones = (idx & tbit) != 0
            u = u.copy()
            u[ones, :] *= np.exp(0.5j * g.theta)
            u[~ones, :] *= np.exp(-0.5j * g.theta)
        else:  # pragma: no cover
            raise ValidationError(f"unknown gate kind {g.kind!r}")
    return u


def expand_mcx(seq: GateSequence) -> GateSequence:
    """Rewrite every MCX with 3+ controls into CCX gates via borrowed qubits.

    Each k-control MCX needs k - 2 borrowed qubits outside its own footprint;
    they may hold any state and are restored (the network applies twice). If
    the register has too few spare qubits the result is widened and the
    reconstruction equals the original unitary tensored with identity on the
    extra qubits. Cost per MCX: 4 (k - 2) CCX gates.
    """
    width = seq.num_qubits
    new_gates: list[Gate] = []
    for g in seq.gates:
        if g.kind == "MCX" and len(g.controls) == 1:
            new_gates.append(Gate("CX", g.targets, g.controls))
            continue
        if g.kind != "MCX" or len(g.controls) == 2:
            new_gates.append(g)
            continue
        k = len(g.controls)
        used = set(g.controls) | set(g.targets)
        borrows = [q for q in range(width) if q not in used][: k - 2]
        while len(borrows) < k - 2:
            borrows.append(width)
            width += 1
        c = list(g.controls)
        t = g.targets[0]
        half: list[Gate] = [Gate("MCX", (t,), (c[k - 1], borrows[k - 3]))]
        for j in range(k - 2, 1, -1):  # descending borrow ladder
            half.append(Gate("MCX", (borrows[j - 1],), (c[j], borrows[j - 2])))
        half.append(Gate("MCX", (borrows[0],), (c[0], c[1])))
        for j in range(2, k - 1):      # ascending repeat of the ladder
            half.append(Gate("MCX", (borrows[j - 1],), (c[j], borrows[j - 2])))
        new_gates.extend(half + half)
    return GateSequence(width, tuple(new_gates))


def gate_count(seq: GateSequence, expand_mcx_gates: bool = False) -> dict[str, int]:
    """Counts per kind plus 'total'; optionally after the MCX expansion pass."""
    counted = expand_mcx(seq) if expand_mcx_gates else seq
    counts = counted.metadata
    counts["total"] = len(counted)
    return counts


def align_global_phase(u: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rescale u by one phase so it matches reference at the largest entry."""
    if u.shape != reference.shape:
        raise ValidationError(f"shape mismatch: {u.shape} vs {reference.shape}")
    flat = int(np.argmax(np.abs(reference)))
    ui = u.flat[flat]
    ri = reference.flat[flat]
    if abs(ui) < 1e-14:
        raise ValidationError("largest reference entry is zero in u; cannot align phase")
    return u * (ri / ui * abs(ui) / abs(ri))
