"""Time-series assembly, damped-cosine frequency fitting, and meson-mass
extraction from quench dynamics, cross-validated against exact
diagonalization.

The fitted model is A exp(-d t) cos(w t) + c1 t + c2; it captures the
dominant short-time oscillation of the local magnetization but not the
long-time behaviour.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .circuits import (
    TfimParams,
    build_tfim_trotter,
    domain_wall_state,
    ed_energy_gaps,
    ed_energy_levels,
    ed_evolve,
)
from .mitigation import (
    Calibration,
    KnownObservableSpec,
    TrotterExtrapolation,
    calibrate_known_observable,
    mitigate_expectation,
    trotter_extrapolate,
)
from .noise import NoiseModel, run_noisy
from .qstate import DensityMatrix, expectation, single_z
from .randmeas import child_rng, sample_expectation


@dataclass
class TimeSeries:
    """Measured, mitigated, and (optionally) exact values on a time grid."""

    times: np.ndarray
    raw: np.ndarray
    raw_sigma: np.ndarray
    mitigated: np.ndarray
    mitigated_sigma: np.ndarray
    exact: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name in ("raw", "raw_sigma", "mitigated", "mitigated_sigma"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.times.shape:
                raise ValueError(f"column {name} does not match the time grid")
            setattr(self, name, arr)
        if self.exact is not None:
            self.exact = np.asarray(self.exact, dtype=float)
            if self.exact.shape != self.times.shape:
                raise ValueError("column exact does not match the time grid")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    COLUMNS = ("t", "raw", "raw_sigma", "mitigated", "mitigated_sigma", "exact")

    def to_csv(self, path, meta: Optional[dict] = None) -> None:
        exact = self.exact if self.exact is not None else np.full_like(self.times, np.nan)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if meta:
                fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in zip(self.times, self.raw, self.raw_sigma, self.mitigated, self.mitigated_sigma, exact):
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        rows = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    continue
                rows.append(line.rstrip("\n"))
        reader = csv.reader(rows)
        names = next(reader)
        if tuple(names) != cls.COLUMNS:
            raise ValueError(f"unexpected columns {names}")
        data = np.array([[float(x) for x in row] for row in reader if row])
        exact = data[:, 5]
        return cls(
            times=data[:, 0],
            raw=data[:, 1],
            raw_sigma=data[:, 2],
            mitigated=data[:, 3],
            mitigated_sigma=data[:, 4],
            exact=None if np.all(np.isnan(exact)) else exact,
        )


def damped_cosine(t, amplitude, decay, omega, drift, offset):
    return amplitude * np.exp(-decay * t) * np.cos(omega * t) + drift * t + offset


@dataclass(frozen=True)
class CosineFit:
    """Result of the five-parameter damped-cosine fit."""

    amplitude: float
    decay: float
    omega: float
    drift: float
    offset: float
    covariance: Optional[np.ndarray]
    residual_norm: float
    quality: float
    converged: bool
    identifiable: bool = True

    @property
    def sigma_omega(self) -> float:
        if self.covariance is None:
            return math.nan
        var = float(self.covariance[2, 2])
        return math.sqrt(var) if var >= 0 else math.nan

    @property
    def params(self) -> np.ndarray:
        return np.array([self.amplitude, self.decay, self.omega, self.drift, self.offset])


def _coerce_xy(series, values, column):
    if isinstance(series, TimeSeries):
        return series.times, getattr(series, column)
    return np.asarray(series, dtype=float), np.asarray(values, dtype=float)


_UNIDENTIFIABLE = object()


def frequency_seed(series, values=None, column: str = "mitigated"):
    """Initial guess for the fit from the periodogram of the detrended data.

    Returns (guess, identifiable); ``identifiable`` is False for series
    with no oscillating component (constant or purely linear input).
    """
    t, y = _coerce_xy(series, values, column)
    if len(t) < 8:
        raise ValueError("need at least 8 points to seed the fit")
    dts = np.diff(t)
    mean_dt = dts.mean()
    if np.max(np.abs(dts - mean_dt)) > 0.1 * mean_dt:
        raise ValueError("frequency seeding needs an approximately uniform time grid")
    drift, offset = np.polyfit(t, y, 1)
    resid = y - (drift * t + offset)
    nfft = 8 * int(2 ** math.ceil(math.log2(len(t))))
    spectrum = np.abs(np.fft.rfft(resid, nfft))
    peak = int(np.argmax(spectrum[1:])) + 1
    scale = float(np.max(np.abs(y))) + 1e-30
    identifiable = bool(spectrum[peak] > max(1e-12, 1e-6 * scale * len(t)))
    omega = 2.0 * math.pi * peak / (nfft * mean_dt)
    amplitude = float(np.ptp(resid)) / 2.0
    decay = 0.5 / (t[-1] - t[0])
    guess = np.array([amplitude, decay, omega, drift, offset])
    return guess, identifiable


def fit_damped_cosine(
    series,
    values=None,
    initial_guess=None,
    column: str = "mitigated",
    max_iterations: int = 500,
) -> CosineFit:
    """Nonlinear least-squares fit of the damped-cosine model.

    Uses Levenberg-Marquardt with a numerically differentiated Jacobian,
    seeded from the periodogram when no guess is given.  Degenerate input
    (no oscillation to identify) is flagged instead of raising.
    """
    t, y = _coerce_xy(series, values, column)
    if len(t) < 6:
        raise ValueError("need at least 6 points to fit 5 parameters")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("fit input contains non-finite values")

    def flagged(offset_val):
        return CosineFit(0.0, 0.0, 0.0, 0.0, float(offset_val), None, 0.0, 0.0, False, False)

    if np.ptp(y) < 1e-12:
        return flagged(y[0])
    if initial_guess is None:
        initial_guess, identifiable = frequency_seed(t, y, column)
        if not identifiable:
            return flagged(float(np.mean(y)))

    def residuals(params):
        return damped_cosine(t, *params) - y

    result = least_squares(
        residuals,
        np.asarray(initial_guess, dtype=float),
        method="lm",
        max_nfev=max_iterations * 6,
    )
    amplitude, decay, omega, drift, offset = result.x
    omega = abs(float(omega))
    m = len(t)
    ssr = float(2.0 * result.cost)
    dof = m - 5
    covariance = None
    if dof > 0:
        jtj = result.jac.T @ result.jac
        covariance = np.linalg.pinv(jtj) * (ssr / dof)
    signal = max(float(np.std(y)), 1e-30)
    quality = math.sqrt(ssr / m) / signal
    return CosineFit(
        amplitude=float(amplitude),
        decay=float(decay),
        omega=omega,
        drift=float(drift),
        offset=float(offset),
        covariance=covariance,
        residual_norm=math.sqrt(ssr),
        quality=quality,
        converged=bool(result.success),
    )


# ---------------------------------------------------------------------------
# Quench pipeline: noisy Trotter evolution + self-calibrated mitigation
# ---------------------------------------------------------------------------

@dataclass
class QuenchConfig:
    """Settings for a noisy magnetization-quench run.

    Times are in units of tJ; the grid must start near zero because the
    first point doubles as the known-observable calibration circuit.
    """

    noise_model: NoiseModel = field(default_factory=NoiseModel.empty)
    nts: tuple = (5, 6)
    times: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 2.5, 25))
    site: Optional[int] = None
    shots: int = 8192
    seed: int = 0
    extrapolate: bool = True
    poor_fit_threshold: float = 0.35

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.nts = tuple(int(v) for v in self.nts)


@dataclass
class QuenchResult:
    series: TimeSeries
    calibrations: tuple
    extrapolation: Optional[TrotterExtrapolation]
    clamped: bool
    calibration_failed: bool


def simulate_mitigated_quench(
    params: TfimParams,
    flips: Sequence[int],
    config: QuenchConfig,
    calibrations: Optional[dict] = None,
) -> QuenchResult:
    """Noisy Trotterized local-magnetization quench with mitigation.

    Each Trotter-step count keeps its gate count fixed across the time
    grid (the step size scales with t), so one calibration at t ~ 0
    serves the whole series.  With several step counts the per-step error
    model is fitted and the mitigated series are averaged pointwise.

    ``calibrations`` may map a step count to a pre-computed Calibration;
    missing entries fall back to the t ~ 0 self-calibration.
    """
    n = params.n
    site = config.site if config.site is not None else n // 2
    obs = single_z(n, site)
    psi0 = domain_wall_state(n, flips)
    times_real = config.times / params.J
    rho0 = DensityMatrix.from_statevector(psi0)

    exact_states = ed_evolve(params, psi0, times_real)
    exact_vals = np.array([expectation(psi, obs) for psi in exact_states])
    levels = ed_energy_levels(params)
    epsilon = float(times_real[0]) * float(levels[-1] - levels[0])
    known = KnownObservableSpec(obs, float(exact_vals[0]), epsilon=epsilon)

    raw_by_nt, sig_by_nt, cals = [], [], []
    for nt in config.nts:
        raw = np.empty_like(times_real)
        sig = np.empty_like(times_real)
        for ti, t in enumerate(times_real):
            circ = build_tfim_trotter(params, float(t), nt)
            rho = run_noisy(circ, config.noise_model, rho0)
            rng = child_rng(config.seed, 10, nt, ti)
            raw[ti], sig[ti] = sample_expectation(rho, obs, config.shots, rng)
        cal = calibrate_known_observable(
            raw[0], known, n, sigma_measured=sig[0], depth_tag=f"tfim_nt={nt}"
        )
        raw_by_nt.append(raw)
        sig_by_nt.append(sig)
        cals.append(cal)

    failed = any(cal.p_tot >= 1.0 - 1e-12 for cal in cals)
    extrapolation = None
    effective = list(cals)
    if failed:
        mit = np.full_like(times_real, np.nan)
        mit_sig = np.full_like(times_real, np.nan)
    else:
        if config.extrapolate:
            extrapolation = trotter_extrapolate([(nt, cal.p_tot) for nt, cal in zip(config.nts, cals)])
            effective = [
                dataclasses.replace(cal, p_tot=extrapolation.predict(nt))
                for nt, cal in zip(config.nts, cals)
            ]
        per_nt_vals, per_nt_sigs = [], []
        for raw, sig, cal in zip(raw_by_nt, sig_by_nt, effective):
            vals = np.empty_like(raw)
            sigs = np.empty_like(raw)
            for ti in range(len(raw)):
                mv = mitigate_expectation(raw[ti], sig[ti], obs, cal)
                vals[ti], sigs[ti] = mv.value, mv.sigma
            per_nt_vals.append(vals)
            per_nt_sigs.append(sigs)
        k = len(config.nts)
        mit = np.mean(per_nt_vals, axis=0)
        mit_sig = np.sqrt(np.sum(np.asarray(per_nt_sigs) ** 2, axis=0)) / k

    series = TimeSeries(
        times=config.times,
        raw=np.mean(raw_by_nt, axis=0),
        raw_sigma=np.sqrt(np.sum(np.asarray(sig_by_nt) ** 2, axis=0)) / len(config.nts),
        mitigated=mit,
        mitigated_sigma=mit_sig,
        exact=exact_vals,
    )
    return QuenchResult(
        series=series,
        calibrations=tuple(cals),
        extrapolation=extrapolation,
        clamped=any(cal.clamped for cal in cals),
        calibration_failed=failed,
    )


# ---------------------------------------------------------------------------
# Meson masses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MesonMassReport:
    """Fitted oscillation frequency of one initial state vs its ED gap."""

    label: str
    omega: float
    sigma_omega: float
    gap: float
    deviation: float
    fit_quality: float
    poor_fit: bool = False
    converged: bool = True
    calibration_failed: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def extract_meson_masses(
    params: TfimParams,
    initial_states: Sequence,
    config: QuenchConfig,
    mass_indices: Optional[Sequence[int]] = None,
    return_results: bool = False,
):
    """Fit the dominant magnetization frequency per initial state and
    compare with the matching exact-diagonalization energy gap.

    ``initial_states`` lists flip-position tuples on the polarized
    background; by default the i-th state is compared with the i-th gap.
    """
    states = [tuple(s) for s in initial_states]
    if mass_indices is None:
        mass_indices = list(range(len(states)))
    mass_indices = [int(i) for i in mass_indices]
    gaps = ed_energy_gaps(params, max(mass_indices) + 1)

    reports, results = [], []
    for flips, mass_idx in zip(states, mass_indices):
        label = "flips=" + ",".join(str(q) for q in flips) if flips else "polarized"
        result = simulate_mitigated_quench(params, flips, config)
        results.append(result)
        if result.calibration_failed:
            reports.append(
                MesonMassReport(label, math.nan, math.nan, float(gaps[mass_idx]), math.nan,
                                math.nan, poor_fit=True, converged=False, calibration_failed=True)
            )
            continue
        fit = fit_damped_cosine(result.series)
        gap = float(gaps[mass_idx])
        deviation = abs(fit.omega - gap) / gap
        poor = (not fit.converged) or (not fit.identifiable) or fit.quality > config.poor_fit_threshold
        reports.append(
            MesonMassReport(
                label=label,
                omega=fit.omega,
                sigma_omega=fit.sigma_omega,
                gap=gap,
                deviation=deviation,
                fit_quality=fit.quality,
                poor_fit=poor,
                converged=fit.converged,
            )
        )
    if return_results:
        return reports, results
    return reports


def save_mass_reports(path, reports: Iterable[MesonMassReport], meta: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if meta:
            fh.write(json.dumps({"record": "meta", **meta}, sort_keys=True) + "\n")
        for report in reports:
            fh.write(json.dumps({"record": "mass", **report.to_dict()}, sort_keys=True) + "\n")


def load_mass_reports(path) -> list:
    reports = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            if data.get("record") == "mass":
                data.pop("record")
                reports.append(MesonMassReport(**data))
    return reports
