"""Calibration of the effective global depolarizing probability and the
inversion of the ansatz for observables and Renyi entropies.

The noisy state is modeled as rho = (1 - p_tot) rho_exact + p_tot I/2^n.
Under this ansatz

    <O>_meas        = (1 - p) <O>_exact + p 2^-n Tr[O]
    Tr[rho^2]       = 2^-n + (1 - 2^-n)(1 - p)^2
    Tr[rho_A^2]     = (1 - p)^2 Tr[rho_A,exact^2]
                      + p(1 - p)/2^(n_A - 1) + p^2/2^n_A

p_tot is calibrated either from a measured full-system purity or from an
observable with a known value, then inverted out of measured quantities.
Out-of-range inputs are clamped with explicit flags, never silently.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .qstate import PauliObservable


def global_depolarized_purity(p_tot: float, n: int) -> float:
    """Full-system purity predicted by the ansatz for pure rho_exact."""
    scale = 1.0 - 2.0 ** (-n)
    return 2.0 ** (-n) + scale * (1.0 - p_tot) ** 2


def global_depolarized_subsystem_purity(exact_purity: float, p_tot: float, n_a: int) -> float:
    """Subsystem purity predicted by the ansatz."""
    q = 1.0 - p_tot
    return q**2 * exact_purity + p_tot * q / 2.0 ** (n_a - 1) + p_tot**2 / 2.0**n_a


@dataclass(frozen=True)
class Calibration:
    """Effective global error probability with provenance."""

    p_tot: float
    sigma_p: float
    method: str
    n: int
    depth_tag: str = ""
    timestamp: Optional[float] = None
    clamped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_tot <= 1.0:
            raise ValueError(f"p_tot {self.p_tot} outside [0, 1]")
        if self.sigma_p < 0:
            raise ValueError("sigma_p must be non-negative")
        if self.method not in ("purity", "known_observable"):
            raise ValueError(f"unknown calibration method {self.method!r}")


@dataclass(frozen=True)
class KnownObservableSpec:
    """Observable whose error-free expectation value is known.

    ``epsilon`` records t*E_max when the circuit was tuned to approximate
    the identity; it should be small in that mode.
    """

    observable: PauliObservable
    known_value: float
    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if abs(self.known_value - self.observable.mixed_expectation()) <= 1e-6:
            raise ValueError(
                "known value coincides with the maximally mixed value; p_tot is not invertible"
            )


@dataclass(frozen=True)
class MitigatedValue:
    """Mitigated estimate with propagated uncertainty."""

    value: float
    sigma: float
    calibration: Calibration
    clamped: bool = False

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------

def solve_ptot_from_purity(
    T: float,
    n: int,
    sigma_T: float = 0.0,
    depth_tag: str = "",
    timestamp: Optional[float] = None,
    sigma_mode: str = "implicit",
) -> Calibration:
    """Invert the full-system purity relation for p_tot.

    The purity is clamped into [2^-n, 1] first (flagged); the root on
    [0, 1] is found by bisection, which is safe because the map is
    strictly decreasing there.
    """
    if not np.isfinite(T):
        raise ValueError("measured purity must be finite")
    floor = 2.0 ** (-n)
    clamped_T = min(max(T, floor), 1.0)
    clamped = clamped_T != T
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if global_depolarized_purity(mid, n) > clamped_T:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    sigma_p = 0.0
    if sigma_T > 0.0:
        sigma_p = ptot_sigma(clamped_T, sigma_T, n, p, mode=sigma_mode)
    return Calibration(p, sigma_p, "purity", n, depth_tag, timestamp, clamped)


def calibrate_known_observable(
    measured: float,
    spec: KnownObservableSpec,
    n: int,
    sigma_measured: float = 0.0,
    depth_tag: str = "",
    timestamp: Optional[float] = None,
) -> Calibration:
    """p_tot from one observable whose error-free value is known.

    p = (known - measured) / (known - 2^-n Tr[O]), clamped into [0, 1]
    with a flag; over-mitigation (measured beyond the known value) clamps
    to 0.
    """
    if spec.observable.n != n:
        raise ValueError(f"observable acts on {spec.observable.n} qubits, expected {n}")
    denom = spec.known_value - spec.observable.mixed_expectation()
    p_raw = (spec.known_value - measured) / denom
    p = min(max(p_raw, 0.0), 1.0)
    clamped = p != p_raw
    sigma_p = abs(sigma_measured / denom)
    return Calibration(p, sigma_p, "known_observable", n, depth_tag, timestamp, clamped)


# ---------------------------------------------------------------------------
# Uncertainty propagation
# ---------------------------------------------------------------------------

def ptot_sigma(T: float, sigma_T: float, n: int, p_tot: float, mode: str = "implicit") -> float:
    """Uncertainty of p_tot from the purity measurement uncertainty.

    ``implicit`` divides by the slope of the purity relation,
    |dT/dp| = 2 (1 - p)(1 - 2^-n).  ``printed`` is the alternate form
    (1 - p) sigma_T / (2 (2^n - T)); the two disagree and implicit is
    the default.
    """
    if sigma_T < 0:
        raise ValueError("sigma_T must be non-negative")
    if mode == "implicit":
        slope = 2.0 * (1.0 - p_tot) * (1.0 - 2.0 ** (-n))
        if slope == 0.0:
            return math.inf
        return sigma_T / slope
    if mode == "printed":
        return (1.0 - p_tot) * sigma_T / (2.0 * (2.0**n - T))
    raise ValueError(f"unknown sigma mode {mode!r}")


def mitigated_expectation_sigma(
    measured: float, sigma_meas: float, mixed_value: float, p_tot: float, sigma_p: float
) -> float:
    """delta<O> = sigma_meas/(1-p) + sigma_p |<O> - 2^-n Tr O| / (1-p)^2."""
    if p_tot >= 1.0:
        raise ValueError("p_tot = 1 leaves no recoverable information")
    q = 1.0 - p_tot
    return sigma_meas / q + sigma_p * abs(measured - mixed_value) / q**2


# ---------------------------------------------------------------------------
# Mitigation
# ---------------------------------------------------------------------------

def mitigate_expectation(
    measured: float, sigma_meas: float, obs: PauliObservable, cal: Calibration
) -> MitigatedValue:
    """Invert the ansatz for one measured expectation value."""
    if cal.p_tot >= 1.0:
        raise ValueError("p_tot = 1 leaves no recoverable information")
    if obs.n != cal.n:
        raise ValueError(f"observable acts on {obs.n} qubits, calibration is for {cal.n}")
    mixed = obs.mixed_expectation()
    value = (measured - cal.p_tot * mixed) / (1.0 - cal.p_tot)
    sigma = mitigated_expectation_sigma(measured, sigma_meas, mixed, cal.p_tot, cal.sigma_p)
    return MitigatedValue(value, sigma, cal)


def _subsystem_purity_dp(T_a: float, p: float, n_a: int) -> float:
    """d(exact subsystem purity)/dp at fixed measured purity."""
    q = 1.0 - p
    bias = p * q / 2.0 ** (n_a - 1) + p**2 / 2.0**n_a
    dbias = q / 2.0 ** (n_a - 1)
    return (-dbias + 2.0 * (T_a - bias) / q) / q**2


def mitigate_renyi(T_a: float, sigma: float, n_a: int, cal: Calibration) -> MitigatedValue:
    """Second-order Renyi entropy of the subsystem after removing the
    global depolarizing contribution from the measured purity.

    The recovered purity is clamped into [2^-n_A, 1] with a flag before
    taking -log2.
    """
    if cal.p_tot >= 1.0:
        raise ValueError("p_tot = 1 leaves no recoverable information")
    p = cal.p_tot
    q = 1.0 - p
    raw_purity = (T_a - p * q / 2.0 ** (n_a - 1) - p**2 / 2.0**n_a) / q**2
    floor = 2.0 ** (-n_a)
    pur = min(max(raw_purity, floor), 1.0)
    clamped = pur != raw_purity
    entropy = -math.log2(pur)
    sigma_pur = sigma / q**2 + cal.sigma_p * abs(_subsystem_purity_dp(T_a, p, n_a))
    sigma_S = sigma_pur / (pur * math.log(2.0))
    return MitigatedValue(entropy, sigma_S, cal, clamped)


# ---------------------------------------------------------------------------
# Trotter-depth scaling of the calibrated error
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrotterExtrapolation:
    """Per-step error probability under (1 - p_tot) = (1 - p_step)^steps."""

    p_step: float

    def predict(self, steps: int) -> float:
        return -math.expm1(steps * math.log1p(-self.p_step))


def trotter_extrapolate(calibrations: Sequence) -> TrotterExtrapolation:
    """Least-squares fit of log(1 - p_tot) vs step count through the origin.

    Accepts (steps, p_tot) pairs.
    """
    points = [(int(s), float(p)) for s, p in calibrations]
    if not points:
        raise ValueError("need at least one calibration point")
    for steps, p in points:
        if steps < 1:
            raise ValueError("step counts must be >= 1")
        if not 0.0 <= p < 1.0:
            raise ValueError(f"p_tot {p} must lie in [0, 1) for extrapolation")
    xs = np.array([s for s, _ in points], dtype=float)
    ys = np.array([math.log1p(-p) for _, p in points])
    slope = float(np.dot(xs, ys) / np.dot(xs, xs))
    return TrotterExtrapolation(-math.expm1(slope))


# ---------------------------------------------------------------------------
# Append-only calibration store (JSON lines)
# ---------------------------------------------------------------------------

def calibration_to_dict(cal: Calibration) -> dict:
    return asdict(cal)


def calibration_from_dict(data: dict) -> Calibration:
    return Calibration(
        p_tot=float(data["p_tot"]),
        sigma_p=float(data["sigma_p"]),
        method=data["method"],
        n=int(data["n"]),
        depth_tag=data.get("depth_tag", ""),
        timestamp=data.get("timestamp"),
        clamped=bool(data.get("clamped", False)),
    )


def append_calibrations(path, cals: Iterable[Calibration], meta: Optional[dict] = None) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        if meta:
            fh.write(json.dumps({"record": "meta", **meta}, sort_keys=True) + "\n")
        for cal in cals:
            fh.write(json.dumps({"record": "calibration", **calibration_to_dict(cal)}, sort_keys=True) + "\n")


def load_calibrations(path) -> list:
    cals = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            if data.get("record") == "calibration":
                cals.append(calibration_from_dict(data))
    return cals
