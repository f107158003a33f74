"""
Experiment configuration.

Configs are JSON documents (schema_version 1) validated by pydantic models.
Energies are given in eV, wavelengths in nm and times in fs; no other units
are parsed.
"""

import itertools
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from etpa.errors import ConfigError, DomainError
from etpa.physics_core import (
    IntermediateState,
    LevelSystem,
    PumpConfig,
    check_resonance,
    detunings,
)
from etpa.scan_engine import NoiseSpec, frequency_resolution, make_grid
from etpa.signal_model import SourceConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MAX_SWEEP_CELLS = 10_000


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IntermediateSpec(_Model):
    epsilon: float
    mu_fj: float = 1.0
    mu_ji: float = 1.0


class LevelSpec(_Model):
    """Sample levels. Without `epsilon_f` each pump binds the resonant final state."""

    epsilon_i: float = 0.0
    intermediates: List[IntermediateSpec] = Field(min_length=1)
    epsilon_f: Optional[float] = None

    @model_validator(mode="after")
    def _ordered(self):
        energies = [s.epsilon for s in self.intermediates]
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise ValueError(f"intermediate energies must be strictly ascending, got {energies}")
        if any(e <= self.epsilon_i for e in energies):
            raise ValueError("intermediate energies must lie above epsilon_i")
        return self

    def to_level_system(self, pump: PumpConfig) -> LevelSystem:
        states = tuple(IntermediateState(s.epsilon, s.mu_fj, s.mu_ji) for s in self.intermediates)
        epsilon_f = self.epsilon_f if self.epsilon_f is not None else self.epsilon_i + pump.omega_p
        return LevelSystem(self.epsilon_i, states, epsilon_f)

    @property
    def energies(self) -> List[float]:
        return [s.epsilon for s in self.intermediates]


class PumpSpec(_Model):
    wavelength_nm: Optional[PositiveFloat] = None
    omega0: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.wavelength_nm is None) == (self.omega0 is None):
            raise ValueError("give exactly one of wavelength_nm or omega0")
        return self

    def to_pump(self) -> PumpConfig:
        if self.omega0 is not None:
            return PumpConfig(self.omega0)
        return PumpConfig.from_wavelength(self.wavelength_nm)


class NoiseSettings(_Model):
    counts_budget: Optional[PositiveFloat] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)


class AnalysisSettings(_Model):
    min_prominence: float = Field(default=0.01, ge=0.0, lt=1.0)
    tol_bins: PositiveFloat = 2.0
    dc_exclusion_bins: float = Field(default=3.0, ge=0.0)
    window: Optional[Literal["hann"]] = None
    subtract_mean: bool = True
    guess_cap: int = Field(default=200_000, gt=0)
    visibility_factor: PositiveFloat = 1.0


class EnsembleSpec(_Model):
    """Random non-degenerate systems drawn for the stacked-panel plots."""

    count: int = Field(default=10, ge=1, le=100)
    n_states: int = Field(default=2, ge=1, le=6)
    band: Tuple[float, float] = (0.5, 2.6)
    min_detuning: PositiveFloat = 0.05

    @model_validator(mode="after")
    def _band(self):
        if not 0 <= self.band[0] < self.band[1]:
            raise ValueError(f"energy band must be increasing and non-negative, got {self.band}")
        return self


class SweepSpec(_Model):
    """Monte Carlo grid; empty axes keep the base config's value."""

    delta_omega: List[PositiveFloat] = Field(default_factory=list)
    delta_tau: List[PositiveFloat] = Field(default_factory=list)
    counts_budget: List[Optional[PositiveFloat]] = Field(default_factory=list)
    n_states: List[int] = Field(default_factory=list)
    n_pumps: List[int] = Field(default_factory=list)
    trials: int = Field(default=20, ge=1, le=10_000)
    pump_spacing: PositiveFloat = 0.08
    band: Tuple[float, float] = (0.5, 2.6)
    min_separation_bins: float = Field(default=3.0, ge=0.0)
    max_cells: int = Field(default=200, ge=1, le=MAX_SWEEP_CELLS)

    @model_validator(mode="after")
    def _bounded(self):
        if any(n < 1 or n > 6 for n in self.n_states):
            raise ValueError("n_states values must lie in 1..6")
        if any(n < 2 for n in self.n_pumps):
            raise ValueError("n_pumps values must be at least 2")
        if self.n_cells > self.max_cells:
            raise ValueError(f"sweep has {self.n_cells} cells, above max_cells={self.max_cells}")
        return self

    @property
    def n_cells(self) -> int:
        total = 1
        for axis in (self.delta_omega, self.delta_tau, self.counts_budget, self.n_states, self.n_pumps):
            total *= max(len(axis), 1)
        return total

    def cells(self, base: "ExperimentConfig") -> Iterator[Dict[str, Any]]:
        """Every combination of the sweep axes, filled in from `base`."""
        n_states = len(base.system.intermediates) if base.system else (base.ensemble.n_states if base.ensemble else 2)
        axes = (
            self.delta_omega or [base.delta_omega],
            self.delta_tau or [base.delta_tau],
            self.counts_budget or [base.noise.counts_budget],
            self.n_states or [n_states],
            self.n_pumps or [max(len(base.pumps), 2)],
        )
        for dw, dt, budget, n, pumps in itertools.product(*axes):
            yield {"delta_omega": dw, "delta_tau": dt, "counts_budget": budget, "n_states": n, "n_pumps": pumps}


class ExperimentConfig(_Model):
    schema_version: Literal[1] = SCHEMA_VERSION
    system: Optional[LevelSpec] = None
    ensemble: Optional[EnsembleSpec] = None
    pumps: List[PumpSpec] = Field(min_length=1)
    delta_omega: PositiveFloat = 0.0074
    te_convention: Literal["planck", "reduced"] = "planck"
    entanglement_time: Optional[PositiveFloat] = None
    delta_tau: PositiveFloat = 0.3
    margin: float = Field(default=0.99, gt=0.0, le=1.0)
    noise: NoiseSettings = Field(default_factory=NoiseSettings)
    analysis: AnalysisSettings = Field(default_factory=AnalysisSettings)
    override_resolution_check: bool = False
    sweep: Optional[SweepSpec] = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.system is None and self.ensemble is None and self.sweep is None:
            raise ValueError("a config needs a system, an ensemble or a sweep")
        pumps = self.pump_configs()
        source = self.source_for(pumps[0])
        try:
            grid = make_grid(self.delta_tau, source.entanglement_time, self.margin)
        except DomainError as exc:
            raise ValueError(str(exc)) from exc
        omega_res = frequency_resolution(grid)
        if omega_res > self.delta_omega and not self.override_resolution_check:
            raise ValueError(
                f"frequency resolution {omega_res * 1e3:.3f} meV is coarser than the bandwidth "
                f"{self.delta_omega * 1e3:.3f} meV; set override_resolution_check to run anyway"
            )
        if self.system is not None:
            for pump in pumps:
                system = self.system.to_level_system(pump)
                if self.system.epsilon_f is not None:
                    check_resonance(system, pump)
                detunings(system, pump)
        return self

    def pump_configs(self) -> List[PumpConfig]:
        return [p.to_pump() for p in self.pumps]

    def source_for(self, pump: PumpConfig, delta_omega: Optional[float] = None) -> SourceConfig:
        return SourceConfig(
            omega0=pump.omega0,
            delta_omega=delta_omega or self.delta_omega,
            entanglement_time=self.entanglement_time if delta_omega is None else None,
            te_convention=self.te_convention,
        )

    def noise_for(self, index: int, count: int) -> NoiseSpec:
        """Noise of the index-th pump setting, seeded from the config seed."""
        return NoiseSpec(self.noise.counts_budget, child_seeds(self.noise.seed, count)[index])

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def child_seeds(seed: Optional[int], count: int) -> List[Optional[int]]:
    """Independent integer seeds spawned from one root seed."""
    if seed is None:
        return [None] * count
    return [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _diagnostics(exc: ValidationError) -> List[str]:
    out = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append(f"{path}: {err['msg']}")
    return out


def parse_config(data: Union[str, Dict[str, Any]], **overrides) -> ExperimentConfig:
    """Validate a config from JSON text or a dict, applying top-level overrides."""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                "invalid JSON", [f"line {exc.lineno} column {exc.colno}: {exc.msg}"]
            ) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    # stamp carried by written config.json artifacts
    data.pop("config_hash", None)
    seed = overrides.pop("seed", None)
    if seed is not None:
        data["noise"] = {**data.get("noise", {}), "seed": seed}
    if overrides.pop("override_resolution_check", False):
        data["override_resolution_check"] = True
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("invalid experiment config", _diagnostics(exc)) from exc


def load_config(path: Union[str, Path], **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}", [str(exc)]) from exc
    logger.debug("loading config %s", path)
    return parse_config(text, **overrides)
