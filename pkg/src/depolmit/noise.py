"""Kraus channels, per-gate noise models, noisy circuit execution, and the
global depolarizing channel.

Noise attaches to gate applications: the ideal gate acts first, then the
channel registered for it.  Optional state-preparation and measurement
channels act qubit-by-qubit at the start and end of a run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .circuits import Circuit, Gate
from .constants import TOL
from .qstate import DensityMatrix, PAULI_MATRICES, _apply_unitary_mat, _check_targets


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators.

    Operators are square 2^k x 2^k matrices with k in {1, 2} and must
    satisfy sum_i K_i^dag K_i = 1 within tolerance.
    """

    operators: tuple

    def __post_init__(self):
        ops = tuple(np.array(op, dtype=complex) for op in self.operators)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if dim not in (2, 4):
            raise ValueError(f"Kraus operators must be 2x2 or 4x4, got dim {dim}")
        total = np.zeros((dim, dim), dtype=complex)
        for op in ops:
            if op.shape != (dim, dim):
                raise ValueError("Kraus operators must share one square shape")
            op.setflags(write=False)
            total += op.conj().T @ op
        dev = np.max(np.abs(total - np.eye(dim)))
        if dev > TOL.kraus:
            raise ValueError(f"Kraus completeness violated, deviation {dev:.3e}")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def arity(self) -> int:
        return 1 if self.dim == 2 else 2


def identity_channel(k: int = 1) -> KrausChannel:
    return KrausChannel((np.eye(2**k, dtype=complex),))


def _pauli_products(k: int):
    singles = [PAULI_MATRICES[c] for c in "IXYZ"]
    if k == 1:
        labels = ["I", "X", "Y", "Z"]
        return labels, singles
    labels, mats = [], []
    for a in "IXYZ":
        for b in "IXYZ":
            labels.append(a + b)
            # qubit 0 = local bit 0, so the second character is the high bit
            mats.append(np.kron(PAULI_MATRICES[b], PAULI_MATRICES[a]))
    return labels, mats


def depolarizing_channel(p: float, k: int = 1) -> KrausChannel:
    """Depolarizing channel: with probability p the k-qubit state is
    replaced by the maximally mixed state."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if k not in (1, 2):
        raise ValueError("only 1- and 2-qubit depolarizing channels supported")
    dim2 = 4.0**k
    labels, mats = _pauli_products(k)
    ops = [math.sqrt(1.0 - p * (dim2 - 1.0) / dim2) * mats[0]]
    w = math.sqrt(p / dim2)
    if w > 0.0:
        ops.extend(w * m for m in mats[1:])
    return KrausChannel(tuple(ops))


def thermal_relaxation_channel(
    t1: float, t2: float, gate_time: float, excited_population: float = 0.0
) -> KrausChannel:
    """Single-qubit thermal relaxation: generalized amplitude damping toward
    the given excited-state population, composed with pure dephasing.

    Requires t2 <= 2*t1 (the Kraus construction breaks down otherwise).
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("relaxation times must be positive")
    if gate_time < 0:
        raise ValueError("gate time must be non-negative")
    if t2 > 2.0 * t1 * (1.0 + 1e-12):
        raise ValueError(f"t2={t2} exceeds 2*t1={2 * t1}")
    if not 0.0 <= excited_population <= 1.0:
        raise ValueError("excited population must lie in [0, 1]")
    gamma = 1.0 - math.exp(-gate_time / t1)
    # extra off-diagonal decay on top of the damping contribution
    residual = math.exp(gate_time / (2.0 * t1) - gate_time / t2)
    p_phase = max(0.0, (1.0 - residual) / 2.0)
    p1 = excited_population
    sg, sq = math.sqrt(gamma), math.sqrt(1.0 - gamma)
    damping = [
        math.sqrt(1.0 - p1) * np.array([[1.0, 0.0], [0.0, sq]], dtype=complex),
        math.sqrt(1.0 - p1) * np.array([[0.0, sg], [0.0, 0.0]], dtype=complex),
        math.sqrt(p1) * np.array([[sq, 0.0], [0.0, 1.0]], dtype=complex),
        math.sqrt(p1) * np.array([[0.0, 0.0], [sg, 0.0]], dtype=complex),
    ]
    dephasing = [
        math.sqrt(1.0 - p_phase) * np.eye(2, dtype=complex),
        math.sqrt(p_phase) * PAULI_MATRICES["Z"],
    ]
    ops = []
    for ka in damping:
        for kp in dephasing:
            op = kp @ ka
            if np.max(np.abs(op)) > 1e-14:
                ops.append(op)
    return KrausChannel(tuple(ops))


def _apply_channel_raw(mat: np.ndarray, ops: Sequence[np.ndarray], targets, n: int) -> np.ndarray:
    acc = np.zeros_like(mat)
    for op in ops:
        acc += _apply_unitary_mat(mat, op, targets, n)
    return acc


def apply_channel(rho: DensityMatrix, channel: KrausChannel, targets: Sequence[int]) -> DensityMatrix:
    """sum_i K_i rho K_i^dag with the channel embedded on the target qubits."""
    targets = _check_targets(targets, rho.n)
    if len(targets) != channel.arity:
        raise ValueError(f"channel arity {channel.arity} does not match targets {targets}")
    out = _apply_channel_raw(rho.matrix, channel.operators, targets, rho.n)
    tr = complex(np.trace(out))
    if abs(tr - 1.0) > TOL.trace_preserve:
        raise ValueError(f"channel application changed the trace by {tr - 1.0:.3e}")
    return DensityMatrix(rho.n, out)


# ---------------------------------------------------------------------------
# Per-gate noise models
# ---------------------------------------------------------------------------

SPAM_KINDS = ("prep", "measure")


@dataclass(frozen=True)
class NoiseRule:
    """Channel attached to a gate kind, optionally to specific qubits."""

    kind: str
    qubits: Optional[tuple]
    channel: KrausChannel

    def __post_init__(self):
        if self.qubits is not None:
            object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))


@dataclass(frozen=True)
class NoiseModel:
    """Lookup from gate applications to Kraus channels.

    Resolution order: a rule naming the exact (kind, qubits) pair wins,
    then a kind-wide rule.  Gates without a rule run ideally.  ``prep``
    and ``measure`` channels, when present, are single-qubit channels
    applied to every qubit at the start / end of a noisy run.
    """

    rules: tuple = ()
    prep: Optional[KrausChannel] = None
    measure: Optional[KrausChannel] = None

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        for ch in (self.prep, self.measure):
            if ch is not None and ch.arity != 1:
                raise ValueError("prep/measure channels must be single-qubit")

    @classmethod
    def empty(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def uniform_depolarizing(cls, p1: float, p2: float) -> "NoiseModel":
        """Depolarizing noise on every gate: p1 per 1-qubit, p2 per 2-qubit gate."""
        ch1 = depolarizing_channel(p1, 1)
        ch2 = depolarizing_channel(p2, 2)
        rules = []
        for kind, arity in (("u3", 1), ("rx", 1), ("rz", 1), ("x", 1), ("h", 1), ("cnot", 2), ("rzz", 2)):
            rules.append(NoiseRule(kind, None, ch1 if arity == 1 else ch2))
        return cls(tuple(rules))

    def channel_for(self, gate: Gate) -> Optional[KrausChannel]:
        fallback = None
        for rule in self.rules:
            if rule.kind != gate.kind:
                continue
            if rule.qubits == gate.targets:
                return rule.channel
            if rule.qubits is None and fallback is None:
                fallback = rule.channel
        return fallback

    # -- JSON-compatible file format ------------------------------------
    #
    # {"channels": [
    #     {"gate": "cnot", "depolarizing": 0.008},
    #     {"gate": "u3", "thermal": {"t1": ..., "t2": ..., "gate_time": ..., "pop": 0.0}},
    #     {"gate": "cnot", "qubits": [0, 1], "kraus": [[[re, im], ...], ...]},
    #     {"gate": "measure", "depolarizing": 0.01}
    # ]}
    #
    # A raw "kraus" entry lists operators; each operator is its row-major
    # matrix flattened to [re, im] pairs (length 4 for 2x2, 16 for 4x4).

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        rules = []
        prep = measure = None
        for entry in data.get("channels", []):
            kind = entry["gate"]
            channel = _channel_from_entry(entry, kind)
            if kind in SPAM_KINDS:
                if kind == "prep":
                    prep = channel
                else:
                    measure = channel
                continue
            if kind not in GATE_KINDS:
                raise ValueError(f"unknown gate kind {kind!r} in noise model")
            qubits = entry.get("qubits")
            rules.append(NoiseRule(kind, tuple(qubits) if qubits is not None else None, channel))
        return cls(tuple(rules), prep=prep, measure=measure)

    @classmethod
    def from_file(cls, path) -> "NoiseModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        entries = []
        for rule in self.rules:
            entry = {"gate": rule.kind, "kraus": _kraus_to_json(rule.channel)}
            if rule.qubits is not None:
                entry["qubits"] = list(rule.qubits)
            entries.append(entry)
        if self.prep is not None:
            entries.append({"gate": "prep", "kraus": _kraus_to_json(self.prep)})
        if self.measure is not None:
            entries.append({"gate": "measure", "kraus": _kraus_to_json(self.measure)})
        return {"channels": entries}

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


GATE_KINDS = ("u3", "rx", "rz", "rzz", "x", "h", "cnot")


def _channel_from_entry(entry: dict, kind: str) -> KrausChannel:
    specs = [key for key in ("kraus", "depolarizing", "thermal") if key in entry]
    if len(specs) != 1:
        raise ValueError(f"noise entry for {kind!r} needs exactly one of kraus/depolarizing/thermal")
    spec = specs[0]
    if spec == "depolarizing":
        k = 1 if kind in SPAM_KINDS else (1 if kind in ("u3", "rx", "rz", "x", "h") else 2)
        return depolarizing_channel(float(entry["depolarizing"]), k)
    if spec == "thermal":
        th = entry["thermal"]
        return thermal_relaxation_channel(
            float(th["t1"]), float(th["t2"]), float(th["gate_time"]), float(th.get("pop", 0.0))
        )
    ops = []
    for flat in entry["kraus"]:
        pairs = np.asarray(flat, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("kraus operator must be a list of [re, im] pairs")
        dim = math.isqrt(pairs.shape[0])
        if dim * dim != pairs.shape[0]:
            raise ValueError("kraus operator length must be a square (row-major matrix)")
        ops.append((pairs[:, 0] + 1j * pairs[:, 1]).reshape(dim, dim))
    return KrausChannel(tuple(ops))


def _kraus_to_json(channel: KrausChannel) -> list:
    out = []
    for op in channel.operators:
        flat = op.reshape(-1)
        out.append([[float(z.real), float(z.imag)] for z in flat])
    return out


# ---------------------------------------------------------------------------
# Noisy execution and the global depolarizing channel
# ---------------------------------------------------------------------------

def run_noisy(circ: Circuit, nm: NoiseModel, rho0: DensityMatrix) -> DensityMatrix:
    """Run the circuit with per-gate noise: ideal gate, then its channel.

    Preparation channels act before the first layer, measurement channels
    after the last.  Gates without a registered channel run ideally.
    """
    if rho0.n != circ.n:
        raise ValueError(f"state has {rho0.n} qubits, circuit has {circ.n}")
    n = circ.n
    mat = np.array(rho0.matrix, dtype=complex)
    if nm.prep is not None:
        for q in range(n):
            mat = _apply_channel_raw(mat, nm.prep.operators, (q,), n)
    for layer in circ.layers:
        for gate in layer:
            mat = _apply_unitary_mat(mat, gate.matrix(), gate.targets, n)
            channel = nm.channel_for(gate)
            if channel is not None:
                if channel.arity != len(gate.targets):
                    raise ValueError(
                        f"channel arity {channel.arity} does not match gate {gate.kind} targets"
                    )
                mat = _apply_channel_raw(mat, channel.operators, gate.targets, n)
    if nm.measure is not None:
        for q in range(n):
            mat = _apply_channel_raw(mat, nm.measure.operators, (q,), n)
    return DensityMatrix(n, mat)


def run_ideal(circ: Circuit, state):
    """Noise-free execution (statevector or density matrix)."""
    return circ.apply(state)


def global_depolarize(rho: DensityMatrix, p_tot: float) -> DensityMatrix:
    """(1 - p) rho + p I/2^n on the entire register."""
    if not 0.0 <= p_tot <= 1.0:
        raise ValueError(f"probability {p_tot} outside [0, 1]")
    d = 2**rho.n
    mat = (1.0 - p_tot) * rho.matrix + p_tot * np.eye(d, dtype=complex) / d
    return DensityMatrix(rho.n, mat)


def compose_global(p_list: Iterable[float]) -> float:
    """Combine per-layer depolarizing probabilities: 1 - prod(1 - p_l)."""
    survive = 1.0
    for p in p_list:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
        survive *= 1.0 - p
    return 1.0 - survive


@dataclass(frozen=True)
class GlobalDepolarizingParams:
    """Effective circuit-level depolarizing probability with optional
    per-layer and zeroth-order per-gate breakdowns."""

    p_tot: float
    per_layer: Optional[tuple] = None
    per_gate: Optional[tuple] = None

    def __post_init__(self):
        if not 0.0 <= self.p_tot <= 1.0:
            raise ValueError(f"p_tot {self.p_tot} outside [0, 1]")
        for name in ("per_layer", "per_gate"):
            vals = getattr(self, name)
            if vals is None:
                continue
            vals = tuple(float(v) for v in vals)
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            object.__setattr__(self, name, vals)
        if self.per_layer is not None:
            expected = compose_global(self.per_layer)
            if abs(expected - self.p_tot) > 1e-9:
                raise ValueError("p_tot inconsistent with per-layer probabilities")

    @classmethod
    def from_layers(cls, per_layer: Iterable[float]) -> "GlobalDepolarizingParams":
        per_layer = tuple(float(p) for p in per_layer)
        return cls(compose_global(per_layer), per_layer=per_layer)
