"""Command-line driver for reproducible simulation + mitigation runs.

Experiments: ``calibrate``, ``quench``, ``renyi``, ``masses``,
``brickwork-bench``.  Each reads a JSON config, applies flag overrides,
and writes plot-ready CSV / JSON-lines files into the output directory.
Every output embeds the effective config hash and seed.  Runs are fully
deterministic: the same (config, seed) yields byte-identical output.

Exit codes: 0 success, 2 completed with clamped/flagged values,
1 hard failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import (
    QuenchConfig,
    extract_meson_masses,
    fit_damped_cosine,
    save_mass_reports,
    simulate_mitigated_quench,
)
from .circuits import (
    TfimParams,
    build_brickwork,
    build_tfim_trotter,
    domain_wall_state,
    ed_evolve,
    load_circuit,
)
from .mitigation import (
    Calibration,
    KnownObservableSpec,
    append_calibrations,
    calibrate_known_observable,
    load_calibrations,
    mitigate_expectation,
    mitigate_renyi,
    solve_ptot_from_purity,
)
from .noise import NoiseModel, run_noisy
from .qstate import (
    DensityMatrix,
    PauliObservable,
    Statevector,
    expectation,
    partial_trace,
    renyi2,
    single_z,
)
from .randmeas import (
    MeasurementPlan,
    child_rng,
    estimate_purity,
    sample_expectation,
    sample_local_random_unitaries,
    simulate_shots,
)

WARN_EXIT = 2


def data_path(name: str) -> Path:
    """Path of a packaged data file (noise models, operator files)."""
    return Path(str(resources.files("depolmit").joinpath("data", name)))


def _resolve_path(value: str) -> Path:
    if value.startswith("builtin:"):
        return data_path(value.split(":", 1)[1])
    return Path(value)


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([int(seed), *(int(k) for k in key)]).generate_state(1)[0])


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_table(path, columns, rows, meta: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


class RunConfig:
    """Effective experiment configuration: JSON file plus flag overrides."""

    def __init__(self, experiment: str, data: dict):
        declared = data.get("experiment")
        if declared is not None and declared != experiment:
            raise ValueError(f"config is for experiment {declared!r}, not {experiment!r}")
        if "seed" not in data:
            raise ValueError("a seed is required (config key 'seed' or --seed)")
        if "out" not in data:
            raise ValueError("an output directory is required (config key 'out' or --out)")
        self.experiment = experiment
        self.data = dict(data)
        self.seed = int(data["seed"])
        self.out = Path(data["out"])
        self.hash = _config_hash({**self.data, "experiment": experiment})

    def get(self, key, default=None):
        return self.data.get(key, default)

    def require(self, key):
        if key not in self.data:
            raise ValueError(f"config key {key!r} is required for {self.experiment}")
        return self.data[key]

    @property
    def meta(self) -> dict:
        return {"config_hash": self.hash, "seed": self.seed, "experiment": self.experiment}

    def noise_model(self) -> NoiseModel:
        path = self.get("noise_model")
        if not path:
            return NoiseModel.empty()
        return NoiseModel.from_file(_resolve_path(path))

    def tfim(self) -> TfimParams:
        raw = self.require("tfim")
        return TfimParams(
            n=int(raw["n"]),
            J=float(raw.get("J", 1.0)),
            h_x=float(raw.get("h_x", 0.0)),
            h_z=float(raw.get("h_z", 0.0)),
        )

    def times(self) -> np.ndarray:
        raw = self.get("times", {"start": 0.0, "stop": 2.5, "num": 25})
        if isinstance(raw, dict):
            return np.linspace(float(raw["start"]), float(raw["stop"]), int(raw["num"]))
        return np.asarray([float(t) for t in raw])

    def nts(self) -> tuple:
        raw = self.get("nts", [5, 6])
        if isinstance(raw, int):
            raw = [raw]
        return tuple(int(v) for v in raw)


# ---------------------------------------------------------------------------
# Calibration command
# ---------------------------------------------------------------------------

def _group_purity_calibration(
    cfg: RunConfig, circuits, n: int, nm: NoiseModel, depth_tag: str, rho0: Optional[DensityMatrix] = None
):
    """Average purity-route calibrations over several circuit settings."""
    cal_cfg = cfg.get("calibration", {})
    n_u = int(cal_cfg.get("n_u", 100))
    n_m = int(cal_cfg.get("n_m", 8192))
    if rho0 is None:
        rho0 = DensityMatrix.from_statevector(Statevector.zero(n))
    group_cals = []
    for g, circ in enumerate(circuits):
        rho = run_noisy(circ, nm, rho0)
        plan = MeasurementPlan(n_u, n_m, tuple(range(n)), _derived_seed(cfg.seed, 30, g))
        unitaries = sample_local_random_unitaries(plan)
        records = simulate_shots(rho, unitaries, plan)
        est = estimate_purity(records, plan)
        group_cals.append(
            solve_ptot_from_purity(est.value, n, sigma_T=est.sigma, depth_tag=f"{depth_tag}/group{g}")
        )
    k = len(group_cals)
    p = float(np.mean([c.p_tot for c in group_cals]))
    sigma = float(np.sqrt(np.sum([c.sigma_p**2 for c in group_cals])) / k)
    final = Calibration(p, sigma, "purity", n, depth_tag, None, any(c.clamped for c in group_cals))
    return final, group_cals


def _calibration_circuits(cfg: RunConfig):
    """Circuits to calibrate on, plus (n, depth_tag, initial state)."""
    nm_groups = int(cfg.get("calibration", {}).get("groups", 5))
    if cfg.get("circuit"):
        circ = load_circuit(_resolve_path(cfg.get("circuit")))
        return [circ] * nm_groups, circ.n, f"circuit_depth={circ.depth}", None
    if cfg.get("brickwork"):
        bw = cfg.get("brickwork")
        n, depth = int(bw["n"]), int(bw["depth"])
        circuits = []
        for g in range(nm_groups):
            rng = child_rng(cfg.seed, 41, g)
            angles = rng.uniform(0.0, 2.0 * math.pi, size=3 * n * (depth + 1))
            circuits.append(build_brickwork(n, depth, angles))
        return circuits, n, f"brickwork_depth={depth}", None
    params = cfg.tfim()
    nt = cfg.nts()[0]
    times = cfg.times()
    picks = np.unique(np.linspace(0, len(times) - 1, nm_groups).round().astype(int))
    circuits = [build_tfim_trotter(params, float(times[i] / params.J), nt) for i in picks]
    psi0 = domain_wall_state(params.n, cfg.get("flips", []))
    return circuits, params.n, f"tfim_nt={nt}", DensityMatrix.from_statevector(psi0)


def cmd_calibrate(cfg: RunConfig) -> int:
    nm = cfg.noise_model()
    method = cfg.get("method", "purity")
    cfg.out.mkdir(parents=True, exist_ok=True)
    out_file = cfg.out / "calibrations.jsonl"
    out_file.unlink(missing_ok=True)

    if method == "purity":
        circuits, n, tag, rho0 = _calibration_circuits(cfg)
        final, groups = _group_purity_calibration(cfg, circuits, n, nm, tag, rho0)
        append_calibrations(out_file, [*groups, final], meta=cfg.meta)
    elif method == "known":
        circuits, n, tag, rho0 = _calibration_circuits(cfg)
        circ = circuits[0]
        if rho0 is None:
            rho0 = DensityMatrix.from_statevector(Statevector.zero(n))
        if cfg.get("observable"):
            obs = PauliObservable.from_file(_resolve_path(cfg.get("observable")))
        else:
            obs = single_z(n, int(cfg.get("site", n // 2)))
        # error-free reference from the ideal simulation of the same circuit
        psi_ideal = circ.apply(Statevector.zero(n)) if cfg.get("circuit") or cfg.get("brickwork") else None
        if psi_ideal is not None:
            known_value = expectation(psi_ideal, obs)
        else:
            params = cfg.tfim()
            t0 = float(cfg.times()[0] / params.J)
            psi0 = domain_wall_state(params.n, cfg.get("flips", []))
            known_value = expectation(ed_evolve(params, psi0, [t0])[0], obs)
            circ = build_tfim_trotter(params, t0, cfg.nts()[0])
            rho0 = DensityMatrix.from_statevector(psi0)
        spec = KnownObservableSpec(obs, known_value)
        shots = int(cfg.get("known_shots", 40960))
        rho = run_noisy(circ, nm, rho0)
        measured, sigma = sample_expectation(rho, obs, shots, child_rng(cfg.seed, 33))
        final = calibrate_known_observable(measured, spec, n, sigma_measured=sigma, depth_tag=tag)
        append_calibrations(out_file, [final], meta=cfg.meta)
    else:
        raise ValueError(f"unknown calibration method {method!r}")

    print(f"calibrate: p_tot={final.p_tot:.6f} sigma={final.sigma_p:.6f} "
          f"method={final.method} clamped={final.clamped} -> {out_file}")
    return WARN_EXIT if final.clamped else 0


# ---------------------------------------------------------------------------
# Quench command
# ---------------------------------------------------------------------------

def cmd_quench(cfg: RunConfig) -> int:
    params = cfg.tfim()
    run_cfg = QuenchConfig(
        noise_model=cfg.noise_model(),
        nts=cfg.nts(),
        times=cfg.times(),
        site=cfg.get("site"),
        shots=int(cfg.get("shots", 8192)),
        seed=cfg.seed,
        extrapolate=bool(cfg.get("extrapolate", True)),
    )
    calibrations = None
    if cfg.get("calibration_path"):
        loaded = load_calibrations(_resolve_path(cfg.get("calibration_path")))
        calibrations = {}
        for nt in run_cfg.nts:
            tag = f"tfim_nt={nt}"
            matches = [c for c in loaded if c.depth_tag == tag]
            if not matches:
                raise ValueError(f"no calibration with depth_tag {tag!r} in file")
            calibrations[nt] = matches[-1]
    elif not bool(cfg.get("self_calibrate", True)):
        raise ValueError("self-calibration disabled and no calibration_path given")

    result = simulate_mitigated_quench(params, cfg.get("flips", []), run_cfg, calibrations=calibrations)
    if result.calibration_failed:
        raise RuntimeError(
            "calibration found p_tot = 1: the measured signal carries no recoverable "
            "information at this depth"
        )
    cfg.out.mkdir(parents=True, exist_ok=True)
    result.series.to_csv(cfg.out / "quench.csv", meta=cfg.meta)
    if bool(cfg.get("fit_masses", False)):
        fit = fit_damped_cosine(result.series)
        with open(cfg.out / "quench_fit.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    **cfg.meta,
                    "omega": fit.omega,
                    "sigma_omega": None if math.isnan(fit.sigma_omega) else fit.sigma_omega,
                    "quality": fit.quality,
                    "converged": fit.converged,
                },
                fh,
                sort_keys=True,
            )
            fh.write("\n")
    print(f"quench: wrote {cfg.out / 'quench.csv'} "
          f"(p_tot per nt: {[round(c.p_tot, 4) for c in result.calibrations]})")
    return WARN_EXIT if result.clamped else 0


# ---------------------------------------------------------------------------
# Renyi-entropy command
# ---------------------------------------------------------------------------

def cmd_renyi(cfg: RunConfig) -> int:
    params = cfg.tfim()
    n = params.n
    nm = cfg.noise_model()
    nt = cfg.nts()[0]
    times = cfg.times()
    times_real = times / params.J
    subsystem = tuple(cfg.get("subsystem", list(range(n // 2))))
    plan_cfg = cfg.get("plan", {})
    n_u = int(plan_cfg.get("n_u", 800))
    n_m = int(plan_cfg.get("n_m", 512))
    flips = cfg.get("flips", [])
    psi0 = domain_wall_state(n, flips)
    rho0 = DensityMatrix.from_statevector(psi0)

    noisy_states = []
    for t in times_real:
        circ = build_tfim_trotter(params, float(t), nt)
        noisy_states.append(run_noisy(circ, nm, rho0))

    # full-system purity calibration, averaged over a few time points
    cal_cfg = cfg.get("calibration", {})
    groups = int(cal_cfg.get("groups", 5))
    picks = np.unique(np.linspace(0, len(times) - 1, groups).round().astype(int))
    group_cals = []
    for g, idx in enumerate(picks):
        plan = MeasurementPlan(
            int(cal_cfg.get("n_u", 100)),
            int(cal_cfg.get("n_m", 8192)),
            tuple(range(n)),
            _derived_seed(cfg.seed, 31, g),
        )
        unitaries = sample_local_random_unitaries(plan)
        records = simulate_shots(noisy_states[idx], unitaries, plan)
        est = estimate_purity(records, plan)
        group_cals.append(
            solve_ptot_from_purity(est.value, n, sigma_T=est.sigma, depth_tag=f"tfim_nt={nt}/group{g}")
        )
    cal = Calibration(
        float(np.mean([c.p_tot for c in group_cals])),
        float(np.sqrt(np.sum([c.sigma_p**2 for c in group_cals])) / len(group_cals)),
        "purity",
        n,
        f"tfim_nt={nt}",
        None,
        any(c.clamped for c in group_cals),
    )
    if cal.p_tot >= 1.0 - 1e-12:
        raise RuntimeError("calibration found p_tot = 1; entropies are not recoverable")

    exact_states = ed_evolve(params, psi0, times_real)
    n_a = len(subsystem)
    floor = 2.0 ** (-n_a)
    rows = []
    any_clamped = cal.clamped
    for ti, t in enumerate(times):
        plan = MeasurementPlan(n_u, n_m, subsystem, _derived_seed(cfg.seed, 32, ti))
        unitaries = sample_local_random_unitaries(plan)
        records = simulate_shots(noisy_states[ti], unitaries, plan)
        est = estimate_purity(records, plan)
        clipped = min(max(est.value, floor), 1.0)
        raw_entropy = -math.log2(clipped)
        raw_sigma = est.sigma / (clipped * math.log(2.0))
        mit = mitigate_renyi(est.value, est.sigma, n_a, cal)
        any_clamped = any_clamped or mit.clamped
        exact_entropy = renyi2(partial_trace(exact_states[ti], subsystem))
        rows.append(
            (float(t), raw_entropy, raw_sigma, mit.value, mit.sigma, exact_entropy,
             est.value, est.sigma)
        )
    cfg.out.mkdir(parents=True, exist_ok=True)
    out_file = cfg.out / "renyi.csv"
    _write_table(
        out_file,
        ("t", "raw", "raw_sigma", "mitigated", "mitigated_sigma", "exact", "purity", "purity_sigma"),
        rows,
        {**cfg.meta, "p_tot": cal.p_tot, "sigma_p": cal.sigma_p, "subsystem": list(subsystem)},
    )
    print(f"renyi: p_tot={cal.p_tot:.4f} wrote {out_file}")
    return WARN_EXIT if any_clamped else 0


# ---------------------------------------------------------------------------
# Meson-mass command
# ---------------------------------------------------------------------------

def _default_initial_states(n: int) -> list:
    center = n // 2
    return [[center], [center - 1, center], [center - 1, center, center + 1]]


def cmd_masses(cfg: RunConfig) -> int:
    params = cfg.tfim()
    run_cfg = QuenchConfig(
        noise_model=cfg.noise_model(),
        nts=cfg.nts(),
        times=cfg.times(),
        site=cfg.get("site"),
        shots=int(cfg.get("shots", 8192)),
        seed=cfg.seed,
        extrapolate=bool(cfg.get("extrapolate", True)),
        poor_fit_threshold=float(cfg.get("poor_fit_threshold", 0.35)),
    )
    initial_states = cfg.get("initial_states", _default_initial_states(params.n))
    mass_indices = cfg.get("mass_indices")
    reports, results = extract_meson_masses(
        params, initial_states, run_cfg, mass_indices=mass_indices, return_results=True
    )
    cfg.out.mkdir(parents=True, exist_ok=True)
    save_mass_reports(cfg.out / "masses.jsonl", reports, meta=cfg.meta)
    for i, result in enumerate(results):
        result.series.to_csv(cfg.out / f"quench_state{i}.csv", meta={**cfg.meta, "state_index": i})
    for report in reports:
        print(f"masses: {report.label}: omega={report.omega:.4f} gap={report.gap:.4f} "
              f"deviation={report.deviation:.3%} poor_fit={report.poor_fit}")
    flagged = any(r.poor_fit or r.calibration_failed for r in reports) or any(
        res.clamped for res in results
    )
    return WARN_EXIT if flagged else 0


# ---------------------------------------------------------------------------
# Brickwork benchmark command
# ---------------------------------------------------------------------------

def _bench_operators(cfg: RunConfig) -> list:
    default = [
        {"kind": "single_z", "n": 8, "site": 0},
        {"kind": "tfim", "n": 6, "J": 1.0, "h_x": 0.5, "h_z": 0.0},
        {"kind": "pauli_string", "string": "XYZIXX"},
        {"kind": "file", "path": "builtin:operators/multi_term_6q.txt"},
    ]
    out = []
    for entry in cfg.get("operators", default):
        kind = entry["kind"]
        if kind == "single_z":
            n = int(entry["n"])
            obs = single_z(n, int(entry.get("site", 0)))
            name = f"single_z_{n}q"
        elif kind == "tfim":
            params = TfimParams(
                n=int(entry["n"]), J=float(entry.get("J", 1.0)),
                h_x=float(entry.get("h_x", 0.0)), h_z=float(entry.get("h_z", 0.0)),
            )
            from .circuits import tfim_hamiltonian

            obs = tfim_hamiltonian(params)
            name = f"tfim_{params.n}q"
        elif kind == "pauli_string":
            s = entry["string"].upper()
            obs = PauliObservable(len(s), [(1.0, s)])
            name = s
        elif kind == "file":
            path = _resolve_path(entry["path"])
            obs = PauliObservable.from_file(path)
            name = f"file_{path.stem}"
        else:
            raise ValueError(f"unknown operator kind {kind!r}")
        out.append((name, obs))
    return out


def cmd_brickwork_bench(cfg: RunConfig) -> int:
    nm = cfg.noise_model()
    depths = cfg.get("depths", [18])
    if isinstance(depths, int):
        depths = [depths]
    points = int(cfg.get("points", 30))
    eval_shots = int(cfg.get("shots", 8192))
    single_cal_shots = int(cfg.get("known_shots", 40960))
    operators = _bench_operators(cfg)

    rows, summaries = [], []
    flagged = False
    trace_cache: dict = {}
    for depth in depths:
        for op_idx, (name, obs) in enumerate(operators):
            n = obs.n
            rho0 = DensityMatrix.from_statevector(Statevector.zero(n))
            key = (n, depth)
            if key not in trace_cache:
                circuits = []
                for g in range(int(cfg.get("calibration", {}).get("groups", 5))):
                    rng = child_rng(cfg.seed, 40, depth, n, g)
                    angles = rng.uniform(0.0, 2.0 * math.pi, size=3 * n * (depth + 1))
                    circuits.append(build_brickwork(n, depth, angles))
                trace_cache[key] = _group_purity_calibration(
                    cfg, circuits, n, nm, f"brickwork_depth={depth}"
                )[0]
            cal_trace = trace_cache[key]

            # single-expectation calibration on one fixed parameter draw
            rng = child_rng(cfg.seed, 42, depth, op_idx)
            angles = rng.uniform(0.0, 2.0 * math.pi, size=3 * n * (depth + 1))
            circ = build_brickwork(n, depth, angles)
            exact_cal = expectation(circ.apply(Statevector.zero(n)), obs)
            measured_cal, sigma_cal = sample_expectation(
                run_noisy(circ, nm, rho0), obs, single_cal_shots, child_rng(cfg.seed, 43, depth, op_idx)
            )
            cal_single = None
            single_flag = ""
            try:
                spec = KnownObservableSpec(obs, exact_cal)
                cal_single = calibrate_known_observable(
                    measured_cal, spec, n, sigma_measured=sigma_cal,
                    depth_tag=f"brickwork_depth={depth}/{name}",
                )
                if cal_single.clamped:
                    single_flag = "clamped"
                    flagged = True
                if cal_single.p_tot >= 1.0 - 1e-12:
                    single_flag = "p_tot=1"
                    flagged = True
            except ValueError:
                single_flag = "not_invertible"
                flagged = True

            err_raw, err_trace, err_single = [], [], []
            for point in range(points):
                rng = child_rng(cfg.seed, 44, depth, op_idx, point)
                angles = rng.uniform(0.0, 2.0 * math.pi, size=3 * n * (depth + 1))
                circ = build_brickwork(n, depth, angles)
                exact = expectation(circ.apply(Statevector.zero(n)), obs)
                rho = run_noisy(circ, nm, rho0)
                measured, sigma = sample_expectation(
                    rho, obs, eval_shots, child_rng(cfg.seed, 45, depth, op_idx, point)
                )
                mit_trace = mitigate_expectation(measured, sigma, obs, cal_trace)
                if cal_single is not None and cal_single.p_tot < 1.0 - 1e-12:
                    mv = mitigate_expectation(measured, sigma, obs, cal_single)
                    single_val, single_sigma = mv.value, mv.sigma
                    err_single.append((single_val - exact) ** 2)
                else:
                    single_val, single_sigma = math.nan, math.nan
                err_raw.append((measured - exact) ** 2)
                err_trace.append((mit_trace.value - exact) ** 2)
                rows.append(
                    (depth, name, point, exact, measured, sigma,
                     mit_trace.value, mit_trace.sigma, single_val, single_sigma,
                     cal_trace.p_tot, cal_single.p_tot if cal_single else math.nan)
                )
            summaries.append(
                {
                    "depth": depth,
                    "operator": name,
                    "n": n,
                    "points": points,
                    "rms_raw": math.sqrt(float(np.mean(err_raw))),
                    "rms_trace": math.sqrt(float(np.mean(err_trace))),
                    "rms_single": math.sqrt(float(np.mean(err_single))) if err_single else None,
                    "p_trace": cal_trace.p_tot,
                    "sigma_p_trace": cal_trace.sigma_p,
                    "p_single": cal_single.p_tot if cal_single else None,
                    "single_flag": single_flag,
                }
            )

    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_table(
        cfg.out / "bench.csv",
        ("depth", "operator", "point", "exact", "raw", "raw_sigma", "trace_mitigated",
         "trace_sigma", "single_mitigated", "single_sigma", "p_trace", "p_single"),
        rows,
        cfg.meta,
    )
    with open(cfg.out / "bench_summary.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"record": "meta", **cfg.meta}, sort_keys=True) + "\n")
        for summary in summaries:
            fh.write(json.dumps({"record": "summary", **summary}, sort_keys=True) + "\n")
    for summary in summaries:
        print(f"bench: depth={summary['depth']} {summary['operator']}: "
              f"rms raw={summary['rms_raw']:.4f} trace={summary['rms_trace']:.4f} "
              f"single={summary['rms_single']} p_trace={summary['p_trace']:.4f}")
    return WARN_EXIT if flagged else 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

COMMANDS = {
    "calibrate": cmd_calibrate,
    "quench": cmd_quench,
    "renyi": cmd_renyi,
    "masses": cmd_masses,
    "brickwork-bench": cmd_brickwork_bench,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depolmit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--method", choices=["purity", "known"], default=None)
        p.add_argument("--nt", type=int, default=None, help="override the Trotter step count")
        p.add_argument("--depth", type=int, default=None, help="override the brickwork depth")
        p.add_argument("--threads", type=int, default=1,
                       help="worker hint; execution is deterministic regardless")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        for key in ("seed", "out", "method"):
            value = getattr(args, key)
            if value is not None:
                data[key] = value
        if args.nt is not None:
            data["nts"] = [args.nt]
        if args.depth is not None:
            data["depths"] = [args.depth]
        data["threads"] = args.threads
        cfg = RunConfig(args.command, data)
        return COMMANDS[args.command](cfg)
    except Exception as exc:  # hard failure path: message + exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
