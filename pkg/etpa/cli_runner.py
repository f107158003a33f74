"""
Command-line front end: simulate -> transform -> analyze.

    python -m etpa simulate --config configs/two_state.json --out outputs/two_state
    python -m etpa extract  --config configs/two_pumps.json --out outputs/two_pumps
    python -m etpa sweep    --config configs/sweep.json --out outputs/sweep
    python -m etpa validate-config --config configs/two_pumps.json

Exit codes: 0 ok, 2 config error, 3 runtime error.
"""

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from tqdm import tqdm

from etpa import artifacts
from etpa.config import ExperimentConfig, child_seeds, load_config
from etpa.errors import ConfigError, EtpaError
from etpa.physics_core import (
    LevelSystem,
    PredictedFrequencies,
    PumpConfig,
    detunings,
    predicted_frequencies,
    random_level_system,
)
from etpa.scan_engine import (
    DelayGrid,
    DelayTrace,
    NoiseSpec,
    ResolutionReport,
    Spectrum,
    frequency_resolution,
    make_grid,
    resolution_report,
    simulate_trace,
    spectrum,
)
from etpa.signal_model import SourceConfig
from etpa.spectral_analysis import (
    ExtractionResult,
    PeakSet,
    detect_peaks,
    extract_energies,
    guess_budget,
    score_recovery,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


@dataclass(frozen=True)
class PumpRun:
    """Everything produced for one pump setting."""

    index: int
    pump: PumpConfig
    system: LevelSystem
    source: SourceConfig
    grid: DelayGrid
    trace: DelayTrace
    spectrum: Spectrum
    peaks: PeakSet
    predicted: PredictedFrequencies
    resolution: ResolutionReport

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "omega0_ev": self.pump.omega0,
            "wavelength_nm": self.pump.wavelength_nm,
            "entanglement_time_fs": self.source.entanglement_time,
            "samples": len(self.grid),
            "tau_max_fs": self.grid.tau_max,
            "resolution": self.resolution.to_dict(),
            "peaks": [
                {**p.to_dict(), "outside_bandwidth": self.resolution.outside_bandwidth(p.frequency)}
                for p in self.peaks.peaks
            ],
        }


def configure_logging(level: Optional[str] = None) -> None:
    load_dotenv()
    name = (level or os.getenv("ETPA_LOG", "WARNING")).upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def simulate_pump(
    config: ExperimentConfig,
    system: LevelSystem,
    pump: PumpConfig,
    index: int,
    noise: NoiseSpec,
    delta_omega: Optional[float] = None,
    delta_tau: Optional[float] = None,
) -> PumpRun:
    """Trace, spectrum and peaks of one system at one pump setting."""
    settings = config.analysis
    source = config.source_for(pump, delta_omega)
    if config.system is None or config.system.epsilon_f is None:
        system = system.resonant_with(pump)
    grid = make_grid(delta_tau or config.delta_tau, source.entanglement_time, config.margin)
    trace = simulate_trace(system, source, grid, noise)
    sp = spectrum(trace, settings.subtract_mean, settings.window)
    peaks = detect_peaks(sp, settings.min_prominence, settings.dc_exclusion_bins * sp.omega_res)
    return PumpRun(
        index=index,
        pump=pump,
        system=system,
        source=source,
        grid=grid,
        trace=trace,
        spectrum=sp,
        peaks=peaks,
        predicted=predicted_frequencies(detunings(system, pump)),
        resolution=resolution_report(grid, source.delta_omega, settings.visibility_factor),
    )


def _simulate_all(config: ExperimentConfig, system: LevelSystem, workers: int = 1) -> List[PumpRun]:
    pumps = config.pump_configs()
    jobs = [(i, p, config.noise_for(i, len(pumps))) for i, p in enumerate(pumps)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: simulate_pump(config, system, job[1], job[0], job[2]), jobs))
    return [simulate_pump(config, system, p, i, noise) for i, p, noise in jobs]


def _ensemble_spectra(config: ExperimentConfig, pump: PumpConfig, index: int) -> List[Spectrum]:
    spec = config.ensemble
    root = config.noise.seed if config.noise.seed is not None else 0
    rng = np.random.default_rng(np.random.SeedSequence([root, index]))
    pumps = config.pump_configs()
    spectra = []
    for _ in range(spec.count):
        system = random_level_system(rng, spec.n_states, spec.band, pumps, min_detuning=spec.min_detuning)
        noise = NoiseSpec(config.noise.counts_budget, int(rng.integers(2 ** 63)))
        spectra.append(simulate_pump(config, system, pump, index, noise).spectrum)
    return spectra


def run_simulate(config: ExperimentConfig, out_dir, workers: int = 1) -> List[PumpRun]:
    """Write trace.csv, spectrum.csv and spectrum.svg per pump setting."""
    out = Path(out_dir)
    digest = artifacts.config_hash(config)
    artifacts.write_json(out / "config.json", config.model_dump(mode="json"), digest)

    runs: List[PumpRun] = []
    if config.system is not None:
        base = config.system.to_level_system(config.pump_configs()[0])
        runs = _simulate_all(config, base, workers)
        for run in runs:
            pump_dir = out / f"pump_{run.index}"
            artifacts.write_csv(pump_dir / "trace.csv", run.trace.to_frame(), run.trace.metadata(), digest)
            artifacts.write_csv(pump_dir / "spectrum.csv", run.spectrum.to_frame(), run.spectrum.metadata(), digest)
            artifacts.plot_spectrum(
                pump_dir / "spectrum.svg",
                run.spectrum,
                digest,
                peaks=run.peaks,
                predicted=run.predicted,
                title=f"omega0 = {run.pump.omega0:.4f} eV, {len(run.peaks)} peaks",
            )
        if len(runs) >= 2:
            artifacts.plot_pump_map(out / "pump_map.svg", [r.spectrum for r in runs], digest)

    if config.ensemble is not None:
        for i, pump in enumerate(config.pump_configs()):
            spectra = _ensemble_spectra(config, pump, i)
            artifacts.plot_ensemble(
                out / f"pump_{i}" / "spectrum_ensemble.svg",
                spectra,
                digest,
                title=f"delta_omega = {config.delta_omega * 1e3:.2f} meV, omega_res = {spectra[0].omega_res * 1e3:.3f} meV",
            )

    artifacts.write_json(
        out / "manifest.json",
        {"command": "simulate", "pumps": [r.to_dict() for r in runs]},
        digest,
    )
    logger.info("simulate: %d pump settings written to %s", len(runs), out)
    return runs


def _require_extractable(config: ExperimentConfig) -> None:
    if config.system is None:
        raise ConfigError("extract needs a level system", ["system: field required"])
    omegas = [p.omega0 for p in config.pump_configs()]
    if len(omegas) < 2:
        raise ConfigError(
            "extract needs measurements at two or more different pump wavelengths",
            [f"pumps: got {len(omegas)} setting"],
        )
    if len({round(w, 12) for w in omegas}) < len(omegas):
        raise ConfigError("pump settings must be distinct", [f"pumps: omega0 values {omegas}"])


def run_extract(config: ExperimentConfig, out_dir, workers: int = 1) -> ExtractionResult:
    """Simulate every pump setting, then recover eps_j into match_report.json."""
    _require_extractable(config)
    out = Path(out_dir)
    digest = artifacts.config_hash(config)
    runs = run_simulate(config, out, workers)

    scans = [r.peaks for r in runs]
    tol = config.analysis.tol_bins * max(r.spectrum.omega_res for r in runs)
    result = extract_energies(scans, tol, epsilon_i=config.system.epsilon_i)

    report = {
        "command": "extract",
        "true_energies": config.system.energies,
        "pumps": [r.to_dict() for r in runs],
        **result.to_dict(),
    }
    artifacts.write_json(out / "match_report.json", report, digest)
    artifacts.write_text(out / "summary.txt", result.summary_table(), digest)
    logger.info("extract: %d energies recovered", len(result.energies))
    return result


def _sweep_pumps(config: ExperimentConfig, n_pumps: Optional[int]) -> List[PumpConfig]:
    pumps = config.pump_configs()
    if not config.sweep.n_pumps:
        return pumps
    start = pumps[0].omega0
    return [PumpConfig(start - k * config.sweep.pump_spacing) for k in range(n_pumps)]


def _run_cell(config: ExperimentConfig, cell: Dict[str, Any], seed: Optional[int]) -> Dict[str, Any]:
    spec = config.sweep
    started = time.perf_counter()
    pumps = _sweep_pumps(config, cell["n_pumps"])
    # a bandwidth axis re-derives T_e per cell; otherwise an explicit T_e stands
    delta_omega = cell["delta_omega"] if spec.delta_omega else None
    source = config.source_for(pumps[0], delta_omega)
    grid = make_grid(cell["delta_tau"], source.entanglement_time, config.margin)
    omega_res = frequency_resolution(grid)
    row: Dict[str, Any] = {**cell, "trials": spec.trials, "omega_res_ev": omega_res}

    if omega_res > source.delta_omega and not config.override_resolution_check:
        row.update(status="rejected: resolution coarser than bandwidth", recovery_rate=np.nan,
                   mean_abs_error=np.nan, false_energies=np.nan, guess_feasible=False,
                   runtime_s=time.perf_counter() - started)
        return row

    fixed = config.system is not None and not spec.n_states
    rng = np.random.default_rng(seed)
    complete, false_count, errors, feasible = 0, 0, [], True
    for _ in range(spec.trials):
        if fixed:
            system = config.system.to_level_system(pumps[0])
        else:
            system = random_level_system(
                rng, cell["n_states"], spec.band, pumps,
                min_separation=spec.min_separation_bins * omega_res,
            )
        seeds = child_seeds(int(rng.integers(2 ** 63)), len(pumps))
        runs = [
            simulate_pump(
                config, system, pump, i, NoiseSpec(cell["counts_budget"], seeds[i]),
                delta_omega=delta_omega, delta_tau=cell["delta_tau"],
            )
            for i, pump in enumerate(pumps)
        ]
        tol = config.analysis.tol_bins * max(r.spectrum.omega_res for r in runs)
        result = extract_energies([r.peaks for r in runs], tol, epsilon_i=system.epsilon_i)
        score = score_recovery(result, system.energies, tol)
        complete += int(score.complete)
        false_count += score.false
        errors.extend(score.errors)
        m = len(runs[0].peaks.positive())
        feasible &= guess_budget(m, system.n_states) <= config.analysis.guess_cap

    row.update(
        status="ok",
        recovery_rate=complete / spec.trials,
        mean_abs_error=float(np.mean(errors)) if errors else np.nan,
        false_energies=false_count / spec.trials,
        guess_feasible=feasible,
        runtime_s=time.perf_counter() - started,
    )
    return row


def run_sweep(config: ExperimentConfig, out_dir, workers: int = 1, progress: Optional[bool] = None) -> pd.DataFrame:
    """Seeded Monte Carlo over the sweep grid, one sweep.csv row per cell."""
    if config.sweep is None:
        raise ConfigError("sweep needs a sweep section", ["sweep: field required"])
    out = Path(out_dir)
    digest = artifacts.config_hash(config)
    cells = list(config.sweep.cells(config))
    root = config.noise.seed if config.noise.seed is not None else 0
    seeds = child_seeds(root, len(cells))
    if progress is None:
        progress = sys.stderr.isatty() and logging.getLogger().getEffectiveLevel() <= logging.INFO

    def work(i: int) -> Dict[str, Any]:
        return _run_cell(config, cells[i], seeds[i])

    with tqdm(total=len(cells), desc="sweep", disable=not progress) as bar:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = []
                for row in pool.map(work, range(len(cells))):
                    rows.append(row)
                    bar.update(1)
        else:
            rows = []
            for i in range(len(cells)):
                rows.append(work(i))
                bar.update(1)

    frame = pd.DataFrame(rows)
    artifacts.write_csv(out / "sweep.csv", frame, {"cells": len(cells), "trials": config.sweep.trials}, digest)
    logger.info("sweep: %d cells written to %s", len(cells), out)
    return frame


def validate_config(config: ExperimentConfig) -> str:
    pumps = config.pump_configs()
    source = config.source_for(pumps[0])
    grid = make_grid(config.delta_tau, source.entanglement_time, config.margin)
    report = resolution_report(grid, config.delta_omega, config.analysis.visibility_factor)
    lines = [
        f"config_hash: {artifacts.config_hash(config)}",
        f"pumps (eV): {', '.join(f'{p.omega0:.4f}' for p in pumps)}",
        f"entanglement time: {source.entanglement_time:.2f} fs ({config.te_convention})",
        f"grid: {len(grid)} samples, tau_max {grid.tau_max:.1f} fs",
        f"omega_res: {report.omega_res * 1e3:.3f} meV, omega_max: {report.omega_max:.3f} eV",
    ]
    if report.bound_violated:
        lines.append("note: omega_res exceeds delta_omega / 2pi")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etpa", description="eTPA virtual-state spectroscopy toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "write trace, spectrum and plots per pump setting"),
        ("extract", "recover intermediate-state energies from two or more pump settings"),
        ("sweep", "seeded Monte Carlo recovery-rate sweep"),
        ("validate-config", "check a config and print its resolution summary"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="experiment config (JSON)")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument(
            "--override-resolution-check",
            action="store_true",
            help="accept a frequency resolution coarser than the bandwidth",
        )
        if name != "validate-config":
            cmd.add_argument("--out", default=None, help="output directory (default $ETPA_OUTPUT_DIR or outputs)")
            cmd.add_argument("--workers", type=int, default=1, help="parallel pump settings / sweep cells")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        config = load_config(
            args.config, seed=args.seed, override_resolution_check=args.override_resolution_check
        )
        if args.command == "validate-config":
            print(validate_config(config))
            return EXIT_OK
        out = args.out or os.getenv("ETPA_OUTPUT_DIR", "outputs")
        if args.command == "simulate":
            runs = run_simulate(config, out, args.workers)
            print(f"wrote {len(runs)} pump settings to {out}")
        elif args.command == "extract":
            result = run_extract(config, out, args.workers)
            print(result.summary_table())
        else:
            frame = run_sweep(config, out, args.workers)
            print(f"wrote {len(frame)} sweep cells to {Path(out) / 'sweep.csv'}")
        return EXIT_OK
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EtpaError, ValueError, OSError) as exc:
        logger.error("runtime error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
