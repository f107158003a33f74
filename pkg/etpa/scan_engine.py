"""
Discrete experiment synthesis.

Delay grids under the tau_max < T_e constraint, Poisson-noisy delay traces,
DFT spectra on an angular-frequency axis in eV and the resolution / Nyquist
bookkeeping that goes with them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from etpa.errors import DomainError, InsufficientScanRangeError, NonUniformGridError
from etpa.physics_core import (
    CONSTANTS,
    MIN_DETUNING_EV,
    RESONANCE_TOL_EV,
    LevelSystem,
    PhysicalConstants,
    detunings,
)
from etpa.signal_model import SourceConfig, cross_section

logger = logging.getLogger(__name__)

MIN_GRID_SAMPLES = 16
WINDOWS = (None, "hann")


@dataclass(frozen=True)
class DelayGrid:
    """Symmetric delay grid. `samples` are in fs, spaced by `delta_tau`."""

    delta_tau: float
    samples: np.ndarray
    entanglement_time: Optional[float] = None

    def __post_init__(self):
        if not self.delta_tau > 0:
            raise DomainError(f"delay step must be positive, got {self.delta_tau} fs")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise InsufficientScanRangeError("a delay grid needs at least two samples")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_samples(cls, samples, entanglement_time: Optional[float] = None) -> "DelayGrid":
        samples = np.asarray(samples, dtype=float)
        step = float(np.median(np.diff(samples))) if samples.size > 1 else 0.0
        return cls(step, samples, entanglement_time)

    @property
    def tau_min(self) -> float:
        return float(self.samples[0])

    @property
    def tau_max(self) -> float:
        return float(self.samples[-1])

    @property
    def span(self) -> float:
        return self.tau_max - self.tau_min

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        steps = np.diff(self.samples)
        return bool(np.all(np.abs(steps - self.delta_tau) <= rtol * self.delta_tau))

    def is_symmetric(self, atol: float = 1e-9) -> bool:
        return bool(np.allclose(self.samples, -self.samples[::-1], rtol=0.0, atol=atol))

    def __len__(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True)
class NoiseSpec:
    """Poisson counting noise. No budget means a noiseless trace."""

    counts_budget: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.counts_budget is not None and not self.counts_budget > 0:
            raise DomainError(f"counts_budget must be positive, got {self.counts_budget}")

    @property
    def enabled(self) -> bool:
        return self.counts_budget is not None


@dataclass(frozen=True)
class DelayTrace:
    grid: DelayGrid
    values: np.ndarray
    noise_seed: Optional[int] = None
    counts_budget: Optional[float] = None
    omega0: Optional[float] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.samples.shape:
            raise DomainError(
                f"trace has {values.size} values for a grid of {len(self.grid)} samples"
            )
        object.__setattr__(self, "values", values)

    def metadata(self) -> Dict[str, Any]:
        return {
            "delta_tau_fs": self.grid.delta_tau,
            "tau_max_fs": self.grid.tau_max,
            "entanglement_time_fs": self.grid.entanglement_time,
            "omega0_ev": self.omega0,
            "noise_seed": self.noise_seed,
            "counts_budget": self.counts_budget,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"tau_fs": self.grid.samples, "signal": self.values})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None) -> "DelayTrace":
        metadata = metadata or {}
        grid = DelayGrid.from_samples(
            frame["tau_fs"].to_numpy(), _optional_float(metadata.get("entanglement_time_fs"))
        )
        seed = metadata.get("noise_seed")
        return cls(
            grid=grid,
            values=frame["signal"].to_numpy(),
            noise_seed=int(seed) if seed not in (None, "", "None") else None,
            counts_budget=_optional_float(metadata.get("counts_budget")),
            omega0=_optional_float(metadata.get("omega0_ev")),
        )


@dataclass(frozen=True)
class Spectrum:
    """DFT magnitudes on a symmetric angular-frequency axis (eV).

    The DC bin is kept; `dc_subtracted` records whether the trace mean was
    removed before the transform.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    omega_res: float
    omega_max: float
    omega0: Optional[float] = None
    dc_subtracted: bool = True
    window: Optional[str] = None

    @property
    def dc_index(self) -> int:
        return int(np.argmin(np.abs(self.frequencies)))

    def positive(self):
        mask = self.frequencies > 0
        return self.frequencies[mask], self.magnitudes[mask]

    def metadata(self) -> Dict[str, Any]:
        meta = {
            "omega_res_ev": self.omega_res,
            "omega_max_ev": self.omega_max,
            "omega0_ev": self.omega0,
            "dc_subtracted": self.dc_subtracted,
            "window": self.window,
        }
        return meta

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"omega_ev": self.frequencies, "magnitude": self.magnitudes})


@dataclass(frozen=True)
class ResolutionReport:
    """Resolution and Nyquist accounting of a grid against a source bandwidth."""

    omega_res: float
    omega_max: float
    delta_omega: float
    bound_violated: bool
    visibility_limit: float

    def outside_bandwidth(self, frequency: float) -> bool:
        return abs(frequency) > self.visibility_limit

    def to_dict(self) -> Dict[str, Any]:
        return {
            "omega_res_ev": self.omega_res,
            "omega_max_ev": self.omega_max,
            "delta_omega_ev": self.delta_omega,
            "bound_violated": self.bound_violated,
            "visibility_limit_ev": self.visibility_limit,
        }


def _optional_float(value) -> Optional[float]:
    if value in (None, "", "None"):
        return None
    return float(value)


def make_grid(delta_tau: float, T_e: float, margin: float = 0.99) -> DelayGrid:
    """Symmetric grid with tau_max = margin*T_e rounded down to a multiple of delta_tau."""
    if not delta_tau > 0:
        raise DomainError(f"delay step must be positive, got {delta_tau} fs")
    if not 0 < margin <= 1:
        raise DomainError(f"margin must lie in (0, 1], got {margin}")
    if not T_e > 0:
        raise DomainError(f"entanglement time must be positive, got {T_e} fs")
    n = int(math.floor(margin * T_e / delta_tau + 1e-9))
    # tau_max must stay strictly below T_e even for margin = 1.
    while n > 0 and n * delta_tau >= T_e:
        n -= 1
    count = 2 * n + 1
    if count < MIN_GRID_SAMPLES:
        raise InsufficientScanRangeError(
            f"insufficient scan range: {count} samples for delta_tau={delta_tau} fs, "
            f"T_e={T_e:.3f} fs, margin={margin} (need {MIN_GRID_SAMPLES})"
        )
    samples = np.arange(-n, n + 1, dtype=float) * delta_tau
    logger.debug("delay grid: tau_max=%.3f fs, %d samples", n * delta_tau, count)
    return DelayGrid(delta_tau, samples, T_e)


def mirror_step(delta_tau: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Delay-line mirror step Delta_L = c*delta_tau/2 in nm."""
    if not delta_tau > 0:
        raise DomainError(f"delay step must be positive, got {delta_tau} fs")
    return constants.c * delta_tau / 2.0


def frequency_resolution(grid: DelayGrid, constants: PhysicalConstants = CONSTANTS) -> float:
    """Angular-frequency resolution 2*pi*hbar / (tau_max - tau_min) in eV."""
    if not grid.span > 0:
        raise DomainError("grid span must be positive")
    return 2.0 * math.pi * constants.hbar / grid.span


def nyquist_frequency(delta_tau: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """omega_max = pi*hbar / delta_tau in eV."""
    if not delta_tau > 0:
        raise DomainError(f"delay step must be positive, got {delta_tau} fs")
    return math.pi * constants.hbar / delta_tau


def resolution_report(
    grid: DelayGrid,
    delta_omega: float,
    visibility_factor: float = 1.0,
    constants: PhysicalConstants = CONSTANTS,
) -> ResolutionReport:
    """Compare the grid's resolution with the source bandwidth.

    The bound flag follows omega_res > delta_omega / (2 pi) with both sides
    as angular frequencies in eV.
    """
    if not delta_omega > 0:
        raise DomainError(f"bandwidth must be positive, got {delta_omega} eV")
    omega_res = frequency_resolution(grid, constants)
    return ResolutionReport(
        omega_res=omega_res,
        omega_max=nyquist_frequency(grid.delta_tau, constants),
        delta_omega=delta_omega,
        bound_violated=omega_res > delta_omega / (2.0 * math.pi),
        visibility_limit=delta_omega * visibility_factor,
    )


def simulate_trace(
    sys: LevelSystem,
    src: SourceConfig,
    grid: DelayGrid,
    noise: Optional[NoiseSpec] = None,
    min_detuning: float = MIN_DETUNING_EV,
    resonance_tol: float = RESONANCE_TOL_EV,
    constants: PhysicalConstants = CONSTANTS,
) -> DelayTrace:
    """Sample s(T_e, tau) over the grid, optionally with Poisson counting noise.

    Noisy values are counts ~ Poisson(s * budget / max(s)) rescaled back to
    the signal scale; the same seed reproduces the same trace.
    """
    noise = noise or NoiseSpec()
    t_e = src.entanglement_time
    if grid.tau_max >= t_e:
        raise DomainError(f"grid tau_max={grid.tau_max} fs must stay below T_e={t_e:.3f} fs")
    d = detunings(sys, src.pump, min_detuning, resonance_tol)
    values = cross_section(d, t_e, grid.samples, constants)

    if noise.enabled:
        peak = float(np.max(values))
        if peak > 0:
            rng = np.random.default_rng(noise.seed)
            counts = rng.poisson(values * noise.counts_budget / peak)
            values = counts.astype(float) * peak / noise.counts_budget
        logger.debug("poisson noise applied: budget=%g seed=%s", noise.counts_budget, noise.seed)

    return DelayTrace(
        grid=grid,
        values=values,
        noise_seed=noise.seed if noise.enabled else None,
        counts_budget=noise.counts_budget,
        omega0=src.omega0,
    )


def spectrum(
    trace: DelayTrace,
    subtract_mean: bool = True,
    window: Optional[str] = None,
    constants: PhysicalConstants = CONSTANTS,
) -> Spectrum:
    """Orthonormal DFT of the trace on a symmetric angular-frequency axis (eV).

    With `norm="ortho"` the squared magnitudes sum to the squared samples that
    went into the transform.
    """
    grid = trace.grid
    if not grid.is_uniform():
        raise NonUniformGridError("delay samples are not uniformly spaced")
    if window not in WINDOWS:
        raise DomainError(f"unknown window {window!r}; expected one of {WINDOWS}")

    x = analysed_samples(trace, subtract_mean, window)
    coefficients = np.fft.fftshift(np.fft.fft(x, norm="ortho"))
    cycles = np.fft.fftshift(np.fft.fftfreq(x.size, d=grid.delta_tau))
    frequencies = 2.0 * math.pi * constants.hbar * cycles

    return Spectrum(
        frequencies=frequencies,
        magnitudes=np.abs(coefficients),
        omega_res=2.0 * math.pi * constants.hbar / (x.size * grid.delta_tau),
        omega_max=nyquist_frequency(grid.delta_tau, constants),
        omega0=trace.omega0,
        dc_subtracted=subtract_mean,
        window=window,
    )


def analysed_samples(trace: DelayTrace, subtract_mean: bool = True, window: Optional[str] = None) -> np.ndarray:
    """The exact samples `spectrum` transforms, for energy bookkeeping."""
    x = trace.values.astype(float)
    if subtract_mean:
        x = x - x.mean()
    if window == "hann":
        x = x * np.hanning(x.size)
    return x
