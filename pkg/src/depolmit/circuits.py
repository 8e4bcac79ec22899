"""Gate/circuit model, Trotterized Ising evolution, brickwork circuits,
and the exact-diagonalization reference.

A circuit is an ordered list of layers; gates within one layer act on
disjoint qubits.  The circuit depth is the number of layers that contain
at least one CNOT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .qstate import (
    DensityMatrix,
    PauliObservable,
    State,
    Statevector,
    _apply_unitary_mat,
    _apply_unitary_vec,
    apply_unitary,
)

GATE_ARITY = {"u3": 1, "rx": 1, "rz": 1, "x": 1, "h": 1, "rzz": 2, "cnot": 2}
GATE_PARAM_COUNT = {"u3": 3, "rx": 1, "rz": 1, "rzz": 1, "x": 0, "h": 0, "cnot": 0}


@dataclass(frozen=True)
class Gate:
    """One gate application: kind, target qubits, rotation angles."""

    kind: str
    targets: tuple
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        params = tuple(float(p) for p in self.params)
        if len(targets) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {GATE_ARITY[self.kind]} target(s), got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate targets {targets}")
        if len(params) != GATE_PARAM_COUNT[self.kind]:
            raise ValueError(f"{self.kind} takes {GATE_PARAM_COUNT[self.kind]} angle(s), got {params}")
        if any(not np.isfinite(p) for p in params):
            raise ValueError("gate angles must be finite")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "params", params)

    def matrix(self) -> np.ndarray:
        """Unitary in the local convention: gate bit j = targets[j]'s bit."""
        return gate_matrix(self.kind, self.params)


def gate_matrix(kind: str, params: Sequence[float] = ()) -> np.ndarray:
    if kind == "u3":
        theta, phi, lam = params
        c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
        return np.array(
            [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
            dtype=complex,
        )
    if kind == "rx":
        (theta,) = params
        c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "rz":
        (theta,) = params
        return np.array([[np.exp(-1j * theta / 2.0), 0.0], [0.0, np.exp(1j * theta / 2.0)]], dtype=complex)
    if kind == "x":
        return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    if kind == "h":
        return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
    if kind == "cnot":
        # control = targets[0] (local bit 0), target = targets[1] (local bit 1)
        m = np.zeros((4, 4), dtype=complex)
        for src, dst in ((0, 0), (1, 3), (2, 2), (3, 1)):
            m[dst, src] = 1.0
        return m
    if kind == "rzz":
        (theta,) = params
        half = theta / 2.0
        phases = [np.exp(-1j * half), np.exp(1j * half), np.exp(1j * half), np.exp(-1j * half)]
        return np.diag(phases).astype(complex)
    raise ValueError(f"unknown gate kind {kind!r}")


def expand_rzz(gate: Gate) -> list:
    """Compile an rzz gate into its CNOT - rz - CNOT macro."""
    if gate.kind != "rzz":
        return [gate]
    c, t = gate.targets
    return [Gate("cnot", (c, t)), Gate("rz", (t,), gate.params), Gate("cnot", (c, t))]


@dataclass(frozen=True)
class Circuit:
    """Layered gate program on ``n`` qubits."""

    n: int
    layers: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        layers = []
        for layer in self.layers:
            layer = tuple(layer)
            if not layer:
                raise ValueError("empty layers are not allowed")
            used = []
            for gate in layer:
                if not isinstance(gate, Gate):
                    raise TypeError("layers must contain Gate objects")
                for q in gate.targets:
                    if not 0 <= q < self.n:
                        raise ValueError(f"gate target {q} out of range for n={self.n}")
                used.extend(gate.targets)
            if len(set(used)) != len(used):
                raise ValueError("gates within one layer must act on disjoint qubits")
            layers.append(layer)
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def depth(self) -> int:
        """Number of entangling (CNOT) layers."""
        return sum(1 for layer in self.layers if any(g.kind == "cnot" for g in layer))

    def gates(self):
        for layer in self.layers:
            yield from layer

    @property
    def num_gates(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def num_cnots(self) -> int:
        return sum(1 for g in self.gates() if g.kind == "cnot")

    def apply(self, state: State) -> State:
        """Run the ideal circuit on a statevector or density matrix."""
        if state.n != self.n:
            raise ValueError(f"state has {state.n} qubits, circuit has {self.n}")
        for gate in self.gates():
            state = apply_unitary(state, gate.matrix(), gate.targets)
        return state

    def unitary(self) -> np.ndarray:
        """Dense 2^n x 2^n circuit unitary (small n only)."""
        d = 2**self.n
        cols = np.eye(d, dtype=complex).reshape((2,) * self.n + (d,))
        from .qstate import _state_axes, _tensor_apply

        for gate in self.gates():
            cols = _tensor_apply(cols, gate.matrix(), _state_axes(gate.targets, self.n))
        return cols.reshape(d, d)


# ---------------------------------------------------------------------------
# Transverse-field Ising model with longitudinal field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TfimParams:
    """Open-boundary Ising chain: H = -J [sum ZZ + h_x sum X + h_z sum Z]."""

    n: int
    J: float = 1.0
    h_x: float = 0.0
    h_z: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("chain needs at least two spins")
        if not self.J > 0:
            raise ValueError("J must be positive")
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")


def tfim_hamiltonian(p: TfimParams) -> PauliObservable:
    """Pauli-sum Hamiltonian of the Ising chain (traceless)."""
    terms = []
    for i in range(p.n - 1):
        s = ["I"] * p.n
        s[i] = s[i + 1] = "Z"
        terms.append((-p.J, "".join(s)))
    for i in range(p.n):
        s = ["I"] * p.n
        s[i] = "X"
        terms.append((-p.J * p.h_x, "".join(s)))
    for i in range(p.n):
        s = ["I"] * p.n
        s[i] = "Z"
        terms.append((-p.J * p.h_z, "".join(s)))
    return PauliObservable(p.n, terms)


def _bond_layers(bonds, angle) -> list:
    """CNOT - rz - CNOT macro layers realizing exp(-i angle/2 ZZ) per bond."""
    return [
        tuple(Gate("cnot", (i, j)) for i, j in bonds),
        tuple(Gate("rz", (j,), (angle,)) for _, j in bonds),
        tuple(Gate("cnot", (i, j)) for i, j in bonds),
    ]


def build_tfim_trotter(p: TfimParams, t: float, steps: int) -> Circuit:
    """First-order Trotter circuit for evolution to time ``t`` in ``steps`` steps.

    Per step: ZZ bond rotations (compiled as CNOT-rz-CNOT), then X-field
    rotations, then Z-field rotations.  Uses 2(n-1)*steps CNOTs.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t < 0:
        raise ValueError("time must be non-negative")
    dt = t / steps
    theta_zz = -2.0 * p.J * dt
    theta_x = -2.0 * p.J * p.h_x * dt
    theta_z = -2.0 * p.J * p.h_z * dt
    even = [(i, i + 1) for i in range(0, p.n - 1, 2)]
    odd = [(i, i + 1) for i in range(1, p.n - 1, 2)]
    layers = []
    for _ in range(steps):
        for bonds in (even, odd):
            if bonds:
                layers.extend(_bond_layers(bonds, theta_zz))
        layers.append(tuple(Gate("rx", (q,), (theta_x,)) for q in range(p.n)))
        layers.append(tuple(Gate("rz", (q,), (theta_z,)) for q in range(p.n)))
    return Circuit(p.n, layers)


def build_brickwork(n: int, depth: int, angles: Sequence[float]) -> Circuit:
    """Alternating u3 and CNOT-brick layers with a final u3 layer.

    ``depth`` counts the CNOT layers; even layers entangle even bonds,
    odd layers odd bonds.  Needs 3*n*(depth+1) angles.
    """
    angles = np.asarray(angles, dtype=float)
    expected = 3 * n * (depth + 1)
    if angles.shape != (expected,):
        raise ValueError(f"need {expected} angles for n={n}, depth={depth}, got {angles.shape}")
    even = [(i, i + 1) for i in range(0, n - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n - 1, 2)]
    layers = []
    for layer_idx in range(depth + 1):
        block = angles[3 * n * layer_idx : 3 * n * (layer_idx + 1)]
        layers.append(tuple(Gate("u3", (q,), tuple(block[3 * q : 3 * q + 3])) for q in range(n)))
        if layer_idx < depth:
            bonds = even if layer_idx % 2 == 0 else odd
            if not bonds:
                bonds = even
            layers.append(tuple(Gate("cnot", (i, j)) for i, j in bonds))
    return Circuit(n, layers)


def domain_wall_state(n: int, flips: Iterable[int] = ()) -> Statevector:
    """Polarized |00...0> with the given sites flipped to |1>."""
    flips = sorted(set(int(q) for q in flips))
    if any(not 0 <= q < n for q in flips):
        raise ValueError(f"flip positions {flips} out of range for n={n}")
    return Statevector.basis(n, sum(1 << q for q in flips))


# ---------------------------------------------------------------------------
# Exact diagonalization reference
# ---------------------------------------------------------------------------

_ED_MAX_QUBITS = 14


def _dense_hamiltonian(p: TfimParams) -> np.ndarray:
    if p.n > _ED_MAX_QUBITS:
        raise ValueError(f"dense diagonalization limited to n <= {_ED_MAX_QUBITS}")
    return tfim_hamiltonian(p).to_matrix()


def ed_evolve(p: TfimParams, psi0: Statevector, times: Sequence[float]) -> list:
    """Exact |psi(t)> = exp(-iHt)|psi0> via one shared eigendecomposition."""
    if psi0.n != p.n:
        raise ValueError(f"state has {psi0.n} qubits, Hamiltonian has {p.n}")
    energies, vectors = np.linalg.eigh(_dense_hamiltonian(p))
    coeffs = vectors.conj().T @ psi0.amplitudes
    out = []
    for t in times:
        amps = vectors @ (np.exp(-1j * energies * float(t)) * coeffs)
        out.append(Statevector(p.n, amps))
    return out


def ed_energy_levels(p: TfimParams) -> np.ndarray:
    """Distinct energy levels, degeneracies merged within float tolerance."""
    energies = np.linalg.eigvalsh(_dense_hamiltonian(p))
    tol = 1e-8 * max(1.0, float(np.max(np.abs(energies))))
    levels = [float(energies[0])]
    for e in energies[1:]:
        if e - levels[-1] > tol:
            levels.append(float(e))
    return np.asarray(levels)


def ed_energy_gaps(p: TfimParams, count: int) -> np.ndarray:
    """Sorted gaps E_i - E_0 to the lowest ``count`` excited levels."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > 2**p.n - 1:
        raise ValueError(f"count {count} exceeds Hilbert-space dimension - 1")
    levels = ed_energy_levels(p)
    if count > len(levels) - 1:
        raise ValueError(f"only {len(levels) - 1} distinct excited level(s) available")
    return levels[1 : count + 1] - levels[0]


# ---------------------------------------------------------------------------
# Line-based circuit serialization: `GATE q0[,q1] [angle1 angle2 angle3]`
# ---------------------------------------------------------------------------

def circuit_to_text(circ: Circuit) -> str:
    """Serialize a circuit; blank lines separate layers."""
    lines = [f"qubits {circ.n}"]
    for i, layer in enumerate(circ.layers):
        if i > 0:
            lines.append("")
        for gate in layer:
            fields = [gate.kind, ",".join(str(q) for q in gate.targets)]
            fields.extend(repr(p) for p in gate.params)
            lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    n = None
    layers = []
    current = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current:
                layers.append(tuple(current))
                current = []
            continue
        fields = line.split()
        if n is None:
            if fields[0] != "qubits" or len(fields) != 2:
                raise ValueError(f"line {lineno}: expected 'qubits N' header")
            n = int(fields[1])
            continue
        kind = fields[0]
        if kind not in GATE_ARITY:
            raise ValueError(f"line {lineno}: unknown gate {kind!r}")
        targets = tuple(int(q) for q in fields[1].split(","))
        params = tuple(float(x) for x in fields[2:])
        current.append(Gate(kind, targets, params))
    if current:
        layers.append(tuple(current))
    if n is None:
        raise ValueError("missing 'qubits N' header")
    if not layers:
        raise ValueError("circuit has no gates")
    return Circuit(n, layers)


def save_circuit(circ: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(circuit_to_text(circ))


def load_circuit(path) -> Circuit:
    with open(path, "r", encoding="utf-8") as fh:
        return circuit_from_text(fh.read())
