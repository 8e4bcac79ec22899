"""Dense quantum-state representations and the primitives acting on them.

Conventions used throughout the package:

* Qubit 0 is the least significant bit of a basis-state index, so the
  basis state with index ``b`` has qubit ``q`` in ``(b >> q) & 1``.
* Pauli strings and basis-state labels are read left to right as qubit
  0, 1, 2, ...  (``"ZI"`` is Z on qubit 0).
* Dense storage: statevectors hold 2^n amplitudes, density matrices
  2^n x 2^n entries.  Density matrices are practical up to n ~ 10-12.

All types are immutable; operations return new values.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .constants import TOL

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Statevector:
    """Pure state of ``n`` qubits as a length-2^n complex amplitude vector."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        amps = _frozen_array(self.amplitudes, shape=(2**self.n,))
        object.__setattr__(self, "amplitudes", amps)
        sq_norm = float(np.real(np.vdot(amps, amps)))
        if abs(sq_norm - 1.0) > TOL.structural:
            raise ValueError(f"statevector norm^2 deviates from 1 by {sq_norm - 1.0:.3e}")

    @classmethod
    def zero(cls, n: int) -> "Statevector":
        return cls.basis(n, 0)

    @classmethod
    def basis(cls, n: int, index: int) -> "Statevector":
        amps = np.zeros(2**n, dtype=complex)
        amps[index] = 1.0
        return cls(n, amps)

    @classmethod
    def from_label(cls, label: str) -> "Statevector":
        """Computational-basis state from a 0/1 string, char q = qubit q."""
        if not label or set(label) - {"0", "1"}:
            raise ValueError(f"invalid basis label {label!r}")
        index = sum(1 << q for q, ch in enumerate(label) if ch == "1")
        return cls.basis(len(label), index)

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.n, np.outer(self.amplitudes, np.conj(self.amplitudes)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state of ``n`` qubits as a 2^n x 2^n density matrix."""

    n: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        d = 2**self.n
        mat = _frozen_array(self.matrix, shape=(d, d))
        object.__setattr__(self, "matrix", mat)
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > TOL.structural:
            raise ValueError(f"density matrix not Hermitian, deviation {herm:.3e}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > TOL.structural:
            raise ValueError(f"density matrix trace deviates from 1 by {tr - 1.0:.3e}")

    @classmethod
    def from_statevector(cls, psi: Statevector) -> "DensityMatrix":
        return psi.density_matrix()

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        d = 2**n
        return cls(n, np.eye(d, dtype=complex) / d)

    def validate(self) -> None:
        """Full physicality check, including the eigenvalue floor."""
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs.min() < TOL.eig_floor:
            raise ValueError(f"density matrix has eigenvalue {eigs.min():.3e} below floor")

    def outcome_probabilities(self) -> np.ndarray:
        """Computational-basis probabilities (the real diagonal)."""
        return np.real(np.diag(self.matrix))


State = Union[Statevector, DensityMatrix]


@dataclass(frozen=True)
class PauliObservable:
    """Weighted sum of Pauli strings over {I,X,Y,Z}^n with real coefficients."""

    n: int
    terms: tuple

    def __post_init__(self):
        norm_terms = []
        for coeff, pstr in self.terms:
            coeff = float(coeff)
            if not np.isfinite(coeff):
                raise ValueError("coefficients must be finite")
            if len(pstr) != self.n or set(pstr) - set("IXYZ"):
                raise ValueError(f"invalid Pauli string {pstr!r} for n={self.n}")
            norm_terms.append((coeff, str(pstr)))
        if not norm_terms:
            raise ValueError("observable needs at least one term")
        object.__setattr__(self, "terms", tuple(norm_terms))

    @classmethod
    def from_terms(cls, terms: Iterable) -> "PauliObservable":
        terms = list(terms)
        return cls(len(terms[0][1]), terms)

    def trace(self) -> float:
        """Tr[O] in closed form: 2^n times the all-identity coefficients."""
        ident = "I" * self.n
        return 2.0**self.n * sum(c for c, s in self.terms if s == ident)

    def mixed_expectation(self) -> float:
        """Expectation in the maximally mixed state, 2^-n Tr[O]."""
        ident = "I" * self.n
        return float(sum(c for c, s in self.terms if s == ident))

    def to_matrix(self) -> np.ndarray:
        d = 2**self.n
        mat = np.zeros((d, d), dtype=complex)
        for coeff, pstr in self.terms:
            mat += coeff * pauli_string_matrix(pstr)
        return mat

    def to_text(self) -> str:
        return "\n".join(f"{coeff!r} {pstr}" for coeff, pstr in self.terms) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PauliObservable":
        terms = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ValueError(f"operator line {lineno}: expected 'coefficient PAULISTRING'")
            terms.append((float(fields[0]), fields[1].upper()))
        if not terms:
            raise ValueError("operator text contains no terms")
        n = len(terms[0][1])
        if any(len(s) != n for _, s in terms):
            raise ValueError("operator strings have inconsistent lengths")
        return cls(n, terms)

    @classmethod
    def from_file(cls, path) -> "PauliObservable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def single_z(n: int, site: int) -> PauliObservable:
    """sigma^z on one site of an n-qubit register."""
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for n={n}")
    pstr = "".join("Z" if q == site else "I" for q in range(n))
    return PauliObservable(n, [(1.0, pstr)])


# ---------------------------------------------------------------------------
# Pauli-string machinery (bit-mask based, no 2^n x 2^n intermediates)
# ---------------------------------------------------------------------------

def _pauli_masks(pstr: str):
    """Masks so that P|s> = prefactor * (-1)^parity(s & sign_mask) |s ^ flip_mask>."""
    flip = 0
    sign = 0
    n_y = 0
    for q, ch in enumerate(pstr):
        bit = 1 << q
        if ch == "X":
            flip |= bit
        elif ch == "Y":
            flip |= bit
            sign |= bit
            n_y += 1
        elif ch == "Z":
            sign |= bit
    return flip, sign, (1.0j) ** (n_y % 4)


def _parity(values: np.ndarray) -> np.ndarray:
    x = values.astype(np.uint64, copy=True)
    for shift in (32, 16, 8, 4, 2, 1):
        x ^= x >> np.uint64(shift)
    return (x & np.uint64(1)).astype(np.int64)


def pauli_string_matrix(pstr: str) -> np.ndarray:
    """Dense matrix of one Pauli string (signed permutation)."""
    flip, sign_mask, pref = _pauli_masks(pstr)
    d = 2 ** len(pstr)
    idx = np.arange(d)
    signs = 1 - 2 * _parity(idx & sign_mask)
    mat = np.zeros((d, d), dtype=complex)
    mat[idx ^ flip, idx] = pref * signs
    return mat


def _pauli_string_expectation(state: State, pstr: str) -> complex:
    flip, sign_mask, pref = _pauli_masks(pstr)
    d = 2 ** len(pstr)
    idx = np.arange(d)
    if isinstance(state, Statevector):
        j = idx ^ flip
        signs = 1 - 2 * _parity(j & sign_mask)
        return pref * np.sum(np.conj(state.amplitudes) * signs * state.amplitudes[j])
    signs = 1 - 2 * _parity(idx & sign_mask)
    return pref * np.sum(signs * state.matrix[idx, idx ^ flip])


# ---------------------------------------------------------------------------
# Unitary application
# ---------------------------------------------------------------------------

def _check_targets(targets: Sequence[int], n: int) -> tuple:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets must be distinct, got {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise ValueError(f"target {t} out of range for n={n}")
    return targets


def _check_unitary(gate: np.ndarray, k: int) -> np.ndarray:
    gate = np.asarray(gate, dtype=complex)
    d = 2**k
    if gate.shape != (d, d):
        raise ValueError(f"gate acting on {k} qubit(s) must be {d}x{d}, got {gate.shape}")
    dev = np.max(np.abs(gate.conj().T @ gate - np.eye(d)))
    if dev > TOL.structural:
        raise ValueError(f"matrix is not unitary, deviation {dev:.3e}")
    return gate


def _tensor_apply(tensor: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``op`` (2^k x 2^k, reshaped) into the given tensor axes."""
    k = len(axes)
    g = op.reshape((2,) * (2 * k))
    out = np.tensordot(g, tensor, axes=(tuple(range(k, 2 * k)), tuple(axes)))
    return np.moveaxis(out, tuple(range(k)), tuple(axes))


def _state_axes(targets: Sequence[int], n: int, offset: int = 0):
    # gate bit j corresponds to targets[j]; tensordot wants MSB-first axes
    return [offset + n - 1 - q for q in reversed(targets)]


def _apply_unitary_vec(amps: np.ndarray, gate: np.ndarray, targets, n: int) -> np.ndarray:
    t = amps.reshape((2,) * n)
    t = _tensor_apply(t, gate, _state_axes(targets, n))
    return t.reshape(-1)


def _apply_unitary_mat(mat: np.ndarray, gate: np.ndarray, targets, n: int) -> np.ndarray:
    t = mat.reshape((2,) * (2 * n))
    t = _tensor_apply(t, gate, _state_axes(targets, n))
    t = _tensor_apply(t, np.conj(gate), _state_axes(targets, n, offset=n))
    return t.reshape(mat.shape)


def apply_unitary(state: State, gate, targets: Sequence[int]) -> State:
    """Apply a k-qubit unitary to the given target qubits.

    Gate bit j is the local bit of ``targets[j]``; e.g. a CNOT built for
    targets (control, target) reads its control from the first target.
    """
    targets = _check_targets(targets, state.n)
    gate = _check_unitary(gate, len(targets))
    if isinstance(state, Statevector):
        return Statevector(state.n, _apply_unitary_vec(state.amplitudes, gate, targets, state.n))
    return DensityMatrix(state.n, _apply_unitary_mat(state.matrix, gate, targets, state.n))


# ---------------------------------------------------------------------------
# Partial trace, purity, entropy, expectation values
# ---------------------------------------------------------------------------

def partial_trace(rho: State, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on the kept qubits (ascending order).

    Qubit j of the result is the j-th smallest kept qubit index.
    """
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep must be a nonempty qubit subset")
    n = rho.n
    if any(not 0 <= q < n for q in keep):
        raise ValueError(f"keep {keep} out of range for n={n}")
    k = len(keep)
    if isinstance(rho, Statevector):
        psi = rho.amplitudes.reshape((2,) * n)
        env_axes = [n - 1 - q for q in range(n) if q not in keep]
        red = np.tensordot(psi, np.conj(psi), axes=(env_axes, env_axes))
        return DensityMatrix(k, red.reshape(2**k, 2**k))
    letters = string.ascii_letters
    row = {}
    col = {}
    cursor = 0
    for q in range(n):
        if q in keep:
            row[q], col[q] = letters[cursor], letters[cursor + 1]
            cursor += 2
        else:
            row[q] = col[q] = letters[cursor]
            cursor += 1
    in_sub = "".join(row[n - 1 - i] for i in range(n)) + "".join(col[n - 1 - i] for i in range(n))
    kept_desc = sorted(keep, reverse=True)
    out_sub = "".join(row[q] for q in kept_desc) + "".join(col[q] for q in kept_desc)
    red = np.einsum(f"{in_sub}->{out_sub}", rho.matrix.reshape((2,) * (2 * n)))
    return DensityMatrix(k, red.reshape(2**k, 2**k))


def purity(rho: State) -> float:
    """Tr[rho^2]; equals 1 for pure states, 2^-n for maximally mixed."""
    if isinstance(rho, Statevector):
        return 1.0
    return float(np.real(np.einsum("ij,ji->", rho.matrix, rho.matrix)))


def renyi2(rho: State) -> float:
    """Second-order Renyi entropy -log2 Tr[rho^2]."""
    return -float(np.log2(max(purity(rho), 1e-300)))


def expectation(state: State, obs: PauliObservable) -> float:
    """Real expectation value of a Pauli-sum observable."""
    if obs.n != state.n:
        raise ValueError(f"observable acts on {obs.n} qubits, state has {state.n}")
    value = 0.0 + 0.0j
    for coeff, pstr in obs.terms:
        value += coeff * _pauli_string_expectation(state, pstr)
    if abs(value.imag) > TOL.imag_residue:
        raise ValueError(f"expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


# ---------------------------------------------------------------------------
# Random states and unitaries
# ---------------------------------------------------------------------------

def haar_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_statevector(n: int, rng: np.random.Generator) -> Statevector:
    """Haar-random pure state."""
    z = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return Statevector(n, z / np.linalg.norm(z))
