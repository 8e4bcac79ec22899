"""Purity estimation from randomized measurements with shot sampling.

Protocol: draw local Haar-random single-qubit unitaries on the subsystem,
measure in the computational basis, and combine outcome statistics with
Hamming-distance weights:

    X_u = 2^{n_A} sum_{s,s'} (-2)^{-D(s,s')} P(s) P(s')

averaged over unitaries.  Probability products use the unbiased pair
estimator (N_s N_s' - delta_{ss'} N_s) / (N_m (N_m - 1)).  Uncertainty
comes from leave-one-out jackknife over unitaries (bootstrap optional).

Random streams are split per unitary index so results are reproducible
regardless of evaluation order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .constants import TOL
from .qstate import (
    DensityMatrix,
    PauliObservable,
    State,
    _apply_unitary_mat,
    _pauli_string_expectation,
    haar_unitary,
    partial_trace,
)

_STREAM_UNITARIES = 0
_STREAM_SHOTS = 1
_STREAM_BOOTSTRAP = 2


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic child generator for one (seed, stream key) pair.

    Splitting per work item keeps results independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in key)]))


@dataclass(frozen=True)
class MeasurementPlan:
    """Randomized-measurement budget: unitaries, shots, subsystem, seed."""

    n_u: int
    n_m: int
    subsystem: tuple
    seed: int

    def __post_init__(self):
        if self.n_u < 2 or self.n_m < 2:
            raise ValueError("the unbiased estimator needs n_u >= 2 and n_m >= 2")
        subsystem = tuple(sorted(set(int(q) for q in self.subsystem)))
        if not subsystem:
            raise ValueError("subsystem must be nonempty")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "subsystem", subsystem)

    @property
    def n_a(self) -> int:
        return len(self.subsystem)


@dataclass(frozen=True)
class ShotRecord:
    """Counts of subsystem outcomes for one random unitary."""

    unitary_index: int
    counts: dict


@dataclass(frozen=True)
class PurityEstimate:
    """Estimated Tr[rho_A^2] with resampled standard error."""

    value: float
    sigma: float
    plan: MeasurementPlan

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


def sample_local_random_unitaries(plan: MeasurementPlan) -> list:
    """N_u tuples of Haar-random 2x2 unitaries, one per subsystem qubit."""
    out = []
    for i in range(plan.n_u):
        rng = child_rng(plan.seed, _STREAM_UNITARIES, i)
        out.append(tuple(haar_unitary(rng) for _ in plan.subsystem))
    return out


def simulate_shots(rho: DensityMatrix, unitaries: Sequence, plan: MeasurementPlan) -> list:
    """Multinomial outcome counts of the rotated subsystem, per unitary."""
    if any(q >= rho.n for q in plan.subsystem):
        raise ValueError(f"subsystem {plan.subsystem} out of range for n={rho.n}")
    reduced = partial_trace(rho, plan.subsystem)
    n_a = plan.n_a
    records = []
    for i, local_us in enumerate(unitaries):
        if len(local_us) != n_a:
            raise ValueError("one single-qubit unitary needed per subsystem qubit")
        mat = reduced.matrix
        for q, u in enumerate(local_us):
            mat = _apply_unitary_mat(mat, np.asarray(u, dtype=complex), (q,), n_a)
        probs = np.real(np.diag(mat))
        if probs.min() < -TOL.negative_prob:
            raise ValueError(f"negative outcome probability {probs.min():.3e}")
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
        counts = child_rng(plan.seed, _STREAM_SHOTS, i).multinomial(plan.n_m, probs)
        records.append(
            ShotRecord(i, {int(s): int(c) for s, c in enumerate(counts) if c > 0})
        )
    return records


def _hamming_weights(n_a: int) -> np.ndarray:
    d = 2**n_a
    idx = np.arange(d)
    xor = idx[:, None] ^ idx[None, :]
    dist = np.zeros_like(xor)
    for b in range(n_a):
        dist += (xor >> b) & 1
    return (-2.0) ** (-dist.astype(float))


def _per_unitary_estimates(records: Sequence[ShotRecord], plan: MeasurementPlan) -> np.ndarray:
    n_a, n_m = plan.n_a, plan.n_m
    d = 2**n_a
    weights = _hamming_weights(n_a)
    values = np.empty(len(records))
    for pos, record in enumerate(records):
        counts = np.zeros(d)
        for outcome, c in record.counts.items():
            if not 0 <= outcome < d:
                raise ValueError(f"outcome {outcome} out of range for subsystem size {n_a}")
            counts[outcome] = c
        if counts.sum() != n_m:
            raise ValueError(f"record {record.unitary_index} counts do not sum to n_m={n_m}")
        pair = np.outer(counts, counts) - np.diag(counts)
        values[pos] = d * np.sum(weights * pair) / (n_m * (n_m - 1))
    return values


def estimate_purity(
    records: Sequence[ShotRecord],
    plan: MeasurementPlan,
    resampler: str = "jackknife",
    bootstrap_samples: int = 500,
) -> PurityEstimate:
    """Unbiased purity estimate with jackknife (default) or bootstrap error."""
    if len(records) < 2:
        raise ValueError("need at least two unitaries")
    if len(records) != plan.n_u:
        raise ValueError(f"plan expects {plan.n_u} records, got {len(records)}")
    values = _per_unitary_estimates(records, plan)
    if resampler == "jackknife":
        sigma = jackknife_sigma(values)
    elif resampler == "bootstrap":
        sigma = bootstrap_sigma(values, bootstrap_samples, child_rng(plan.seed, _STREAM_BOOTSTRAP, 0))
    else:
        raise ValueError(f"unknown resampler {resampler!r}")
    return PurityEstimate(float(values.mean()), float(sigma), plan)


def jackknife_sigma(estimates: Sequence[float]) -> float:
    """Leave-one-out jackknife standard error of the mean."""
    xs = np.asarray(estimates, dtype=float)
    m = len(xs)
    if m < 2:
        raise ValueError("jackknife needs at least two estimates")
    loo = (xs.sum() - xs) / (m - 1)
    return float(np.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2)))


def bootstrap_sigma(estimates: Sequence[float], n_boot: int, rng: np.random.Generator) -> float:
    xs = np.asarray(estimates, dtype=float)
    if len(xs) < 2:
        raise ValueError("bootstrap needs at least two estimates")
    idx = rng.integers(0, len(xs), size=(n_boot, len(xs)))
    return float(np.std(xs[idx].mean(axis=1), ddof=1))


# ---------------------------------------------------------------------------
# Sampled Pauli-sum expectation values (simulated measurement)
# ---------------------------------------------------------------------------

def sample_expectation(
    state: State, obs: PauliObservable, shots: int, rng: np.random.Generator
) -> tuple:
    """Shot-sampled estimate of <O> with its binomial standard error.

    Each non-identity Pauli term is measured independently with the full
    shot budget; identity terms contribute exactly.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if obs.n != state.n:
        raise ValueError(f"observable acts on {obs.n} qubits, state has {state.n}")
    total = 0.0
    variance = 0.0
    for coeff, pstr in obs.terms:
        if set(pstr) == {"I"}:
            total += coeff
            continue
        mean = float(np.real(_pauli_string_expectation(state, pstr)))
        p_plus = min(max((1.0 + mean) / 2.0, 0.0), 1.0)
        hits = rng.binomial(shots, p_plus)
        est = 2.0 * hits / shots - 1.0
        total += coeff * est
        variance += coeff**2 * max(1.0 - est**2, 1.0 / shots) / shots
    return float(total), float(math.sqrt(variance))


# ---------------------------------------------------------------------------
# Shot-record CSV: header carries the plan, rows are (index, bitstring, count)
# ---------------------------------------------------------------------------

def dump_records(path, records: Iterable[ShotRecord], plan: MeasurementPlan, meta: Optional[dict] = None) -> None:
    """Write shot records; bitstring char j is subsystem qubit j's outcome."""
    header = {
        "n_u": plan.n_u,
        "n_m": plan.n_m,
        "subsystem": list(plan.subsystem),
        "seed": plan.seed,
    }
    if meta:
        header.update(meta)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["unitary_index", "bitstring", "count"])
        for record in records:
            for outcome in sorted(record.counts):
                bits = format(outcome, f"0{plan.n_a}b")[::-1]
                writer.writerow([record.unitary_index, bits, record.counts[outcome]])


def load_records(path) -> tuple:
    """Read shot records back; returns (records, plan)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing plan header line")
        header = json.loads(first[2:])
        plan = MeasurementPlan(header["n_u"], header["n_m"], tuple(header["subsystem"]), header["seed"])
        reader = csv.reader(fh)
        names = next(reader)
        if names != ["unitary_index", "bitstring", "count"]:
            raise ValueError("unexpected column header")
        counts_by_index: dict = {}
        for row in reader:
            if not row:
                continue
            idx, bits, count = int(row[0]), row[1], int(row[2])
            outcome = sum(1 << q for q, ch in enumerate(bits) if ch == "1")
            counts_by_index.setdefault(idx, {})[outcome] = count
    records = [ShotRecord(idx, counts_by_index[idx]) for idx in sorted(counts_by_index)]
    return records, plan
