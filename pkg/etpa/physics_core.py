"""
Physics core for entangled two-photon absorption (eTPA) spectroscopy.

Domain types and unit conventions shared by every other module:

- energies and angular frequencies are expressed in eV (i.e. hbar*omega),
- times are expressed in fs,
- lengths are expressed in nm,
- phases are obtained as (eV * fs) / hbar through `phase()` only.

The algebra of detunings, transition amplitudes and the predicted set of
spectral peak frequencies lives here as well.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from etpa.errors import (
    DegenerateSourceWarning,
    DomainError,
    ResonanceError,
    VirtualStateError,
)

logger = logging.getLogger(__name__)

HBAR_EV_FS = 0.6582119569
C_NM_PER_FS = 299.792458
EPS0_SI = 8.8541878128e-12
HBAR_C_EV_NM = 197.3269804

# Guard below which an intermediate state counts as resonant with omega_0.
MIN_DETUNING_EV = 0.010
RESONANCE_TOL_EV = 1.0e-3

FAMILY_DC = "dc"
FAMILY_SINGLE = "single"  # +-Delta_j, slope -+1 against omega_0
FAMILY_DIFFERENCE = "difference"  # +-(Delta_j - Delta_k), slope 0
FAMILY_SUM = "sum"  # +-(Delta_j + Delta_k), slope -+2

FAMILY_SLOPES = {FAMILY_DC: 0.0, FAMILY_SINGLE: -1.0, FAMILY_DIFFERENCE: 0.0, FAMILY_SUM: -2.0}


@dataclass(frozen=True)
class PhysicalConstants:
    """Constants in the toolkit's unit system.

    `eps0` (SI) and `beam_area` (m^2) only enter the transition-probability
    prefactor, which is therefore reported in relative units.
    """

    hbar: float = HBAR_EV_FS
    c: float = C_NM_PER_FS
    eps0: float = EPS0_SI
    beam_area: float = 1.0e-10

    def __post_init__(self):
        if self.hbar <= 0 or self.c <= 0 or self.eps0 <= 0 or self.beam_area <= 0:
            raise DomainError("physical constants must be positive")
        if abs(self.hbar * self.c / HBAR_C_EV_NM - 1.0) > 1e-4:
            raise DomainError(
                f"hbar*c = {self.hbar * self.c:.6f} eV nm is inconsistent with "
                f"{HBAR_C_EV_NM} eV nm"
            )

    @property
    def h(self) -> float:
        """Planck constant in eV fs."""
        return 2.0 * math.pi * self.hbar

    @property
    def hbar_c(self) -> float:
        return self.hbar * self.c


CONSTANTS = PhysicalConstants()


def phase(energy, time, constants: PhysicalConstants = CONSTANTS):
    """Convert energy (eV) times time (fs) into radians.

    This is the single conversion site between eV-fs products and phases;
    `energy` and `time` may be scalars or broadcastable arrays.
    """
    return np.multiply(energy, time) / constants.hbar


@dataclass(frozen=True)
class IntermediateState:
    epsilon: float
    mu_fj: float = 1.0
    mu_ji: float = 1.0

    @property
    def mu_product(self) -> float:
        return self.mu_fj * self.mu_ji


@dataclass(frozen=True)
class LevelSystem:
    """Sample model: initial state, ordered intermediate states, final state."""

    epsilon_i: float
    intermediates: Tuple[IntermediateState, ...]
    epsilon_f: float

    def __post_init__(self):
        states = tuple(
            s if isinstance(s, IntermediateState) else IntermediateState(*s)
            for s in self.intermediates
        )
        object.__setattr__(self, "intermediates", states)
        if not states:
            raise DomainError("a level system needs at least one intermediate state")
        energies = [s.epsilon for s in states]
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise DomainError(
                f"intermediate energies must be strictly ascending and distinct, got {energies}"
            )
        if self.epsilon_f <= self.epsilon_i:
            raise DomainError(
                f"epsilon_f ({self.epsilon_f}) must lie above epsilon_i ({self.epsilon_i})"
            )

    @classmethod
    def from_energies(
        cls,
        energies: Iterable[float],
        epsilon_f: float,
        epsilon_i: float = 0.0,
        mu: float = 1.0,
    ) -> "LevelSystem":
        """Build a system with equal dipole moments for every transition."""
        states = tuple(IntermediateState(float(e), mu, mu) for e in sorted(energies))
        return cls(epsilon_i=epsilon_i, intermediates=states, epsilon_f=epsilon_f)

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.epsilon for s in self.intermediates], dtype=float)

    @property
    def mu_products(self) -> np.ndarray:
        return np.array([s.mu_product for s in self.intermediates], dtype=float)

    @property
    def n_states(self) -> int:
        return len(self.intermediates)

    def resonant_with(self, pump: "PumpConfig") -> "LevelSystem":
        """Copy whose final state is the member of the final band picked by the pump."""
        return replace(self, epsilon_f=self.epsilon_i + pump.omega_p)

    def scaled_dipoles(self, factor: float) -> "LevelSystem":
        states = tuple(
            IntermediateState(s.epsilon, s.mu_fj * factor, s.mu_ji * factor)
            for s in self.intermediates
        )
        return replace(self, intermediates=states)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon_i": self.epsilon_i,
            "epsilon_f": self.epsilon_f,
            "intermediates": [
                {"epsilon": s.epsilon, "mu_fj": s.mu_fj, "mu_ji": s.mu_ji}
                for s in self.intermediates
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LevelSystem":
        states = tuple(
            IntermediateState(float(s["epsilon"]), float(s.get("mu_fj", 1.0)), float(s.get("mu_ji", 1.0)))
            for s in data["intermediates"]
        )
        return cls(
            epsilon_i=float(data.get("epsilon_i", 0.0)),
            intermediates=states,
            epsilon_f=float(data["epsilon_f"]),
        )


@dataclass(frozen=True)
class PumpConfig:
    """Pump setting, described by the central photon frequency omega_0 (eV)."""

    omega0: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError(f"omega0 must be positive, got {self.omega0}")

    @property
    def omega_p(self) -> float:
        return 2.0 * self.omega0

    @property
    def wavelength_nm(self) -> float:
        return math.pi * CONSTANTS.hbar_c / self.omega0

    @classmethod
    def from_wavelength(cls, lambda_p: float, constants: PhysicalConstants = CONSTANTS) -> "PumpConfig":
        return cls(center_frequency(lambda_p, constants))

    def to_dict(self) -> Dict[str, float]:
        return {"omega0": self.omega0}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PumpConfig":
        if "omega0" in data:
            return cls(float(data["omega0"]))
        return cls.from_wavelength(float(data["wavelength_nm"]))


@dataclass(frozen=True)
class DetuningSet:
    """Detunings Delta_j (eV) and transition amplitudes A_j = mu_fj mu_ji / Delta_j."""

    deltas: Tuple[float, ...]
    amplitudes: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))
        if len(self.deltas) != len(self.amplitudes):
            raise DomainError("deltas and amplitudes must have the same length")
        for j, d in enumerate(self.deltas):
            if d == 0.0:
                raise VirtualStateError(j, d, 0.0)

    @classmethod
    def from_deltas(
        cls, deltas: Sequence[float], mu_products: Optional[Sequence[float]] = None
    ) -> "DetuningSet":
        deltas = [float(d) for d in deltas]
        if mu_products is None:
            mu_products = [1.0] * len(deltas)
        for j, d in enumerate(deltas):
            if d == 0.0:
                raise VirtualStateError(j, d, 0.0)
        return cls(tuple(deltas), tuple(m / d for m, d in zip(mu_products, deltas)))

    @property
    def n(self) -> int:
        return len(self.deltas)

    @property
    def delta_array(self) -> np.ndarray:
        return np.asarray(self.deltas, dtype=float)

    @property
    def amplitude_array(self) -> np.ndarray:
        return np.asarray(self.amplitudes, dtype=float)


@dataclass(frozen=True)
class PredictedFrequencies:
    """Multiset of spectral peak positions (eV) tagged by family."""

    frequencies: np.ndarray
    families: Tuple[str, ...]
    sources: Tuple[Tuple[int, ...], ...] = field(default=())

    def nonzero(self) -> np.ndarray:
        return self.frequencies[self.frequencies != 0.0]

    def distinct(self, atol: float = 1e-12) -> np.ndarray:
        """Sorted nonzero frequencies with coincident entries merged."""
        values = np.sort(self.nonzero())
        if values.size == 0:
            return values
        keep = np.concatenate(([True], np.diff(values) > atol))
        return values[keep]

    def positive(self, atol: float = 1e-12) -> np.ndarray:
        values = self.distinct(atol)
        return values[values > 0]

    def __len__(self) -> int:
        return int(self.frequencies.size)


class EntanglementTime(NamedTuple):
    value: float
    sign: int


def center_frequency(lambda_p: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Central photon angular frequency omega_0 = pi*hbar*c / lambda_p in eV."""
    if not lambda_p > 0:
        raise DomainError(f"pump wavelength must be positive, got {lambda_p} nm")
    return math.pi * constants.hbar_c / lambda_p


def check_resonance(system: LevelSystem, pump: PumpConfig, tolerance: float = RESONANCE_TOL_EV) -> None:
    mismatch = system.epsilon_f - system.epsilon_i - pump.omega_p
    if abs(mismatch) > tolerance:
        raise ResonanceError(
            f"two-photon resonance violated: eps_f - eps_i - omega_p = {mismatch:.6f} eV "
            f"(tolerance {tolerance} eV)"
        )


def detunings(
    system: LevelSystem,
    pump: PumpConfig,
    min_detuning: float = MIN_DETUNING_EV,
    resonance_tol: float = RESONANCE_TOL_EV,
) -> DetuningSet:
    """Delta_j = eps_j - eps_i - omega_0 and A_j = mu_fj mu_ji / Delta_j."""
    check_resonance(system, pump, resonance_tol)
    deltas = system.energies - system.epsilon_i - pump.omega0
    for j, d in enumerate(deltas):
        if abs(d) < min_detuning:
            raise VirtualStateError(j, float(d), min_detuning)
    logger.debug("detunings at omega0=%.4f eV: %s", pump.omega0, np.round(deltas, 4).tolist())
    return DetuningSet.from_deltas(deltas, system.mu_products)


def energies_from_detunings(d: DetuningSet, pump: PumpConfig, epsilon_i: float = 0.0) -> np.ndarray:
    return d.delta_array + pump.omega0 + epsilon_i


def predicted_frequencies(d: DetuningSet) -> PredictedFrequencies:
    """All peak positions of the delay-scan spectrum.

    {0} U {+-Delta_j} U {+-(Delta_j - Delta_k), j<k} U {+-(Delta_j + Delta_k), j<=k}.
    With collision-free detunings the nonzero entries number 2(N+1)N.
    """
    deltas = d.delta_array
    n = deltas.size
    values: List[float] = [0.0]
    families: List[str] = [FAMILY_DC]
    sources: List[Tuple[int, ...]] = [()]

    def add(value: float, family: str, source: Tuple[int, ...]):
        values.extend((value, -value))
        families.extend((family, family))
        sources.extend((source, source))

    for j in range(n):
        add(deltas[j], FAMILY_SINGLE, (j,))
    for j in range(n):
        for k in range(j + 1, n):
            add(deltas[j] - deltas[k], FAMILY_DIFFERENCE, (j, k))
    for j in range(n):
        for k in range(j, n):
            add(deltas[j] + deltas[k], FAMILY_SUM, (j, k))

    order = np.argsort(values, kind="stable")
    return PredictedFrequencies(
        frequencies=np.asarray(values, dtype=float)[order],
        families=tuple(families[i] for i in order),
        sources=tuple(sources[i] for i in order),
    )


def min_peak_separation(d: DetuningSet) -> float:
    """Smallest gap between distinct positive peak positions (including DC)."""
    freqs = predicted_frequencies(d).frequencies
    positive = np.sort(freqs[freqs > 0])
    # A +-pair that collapsed onto DC leaves fewer than N(N+1) positive entries.
    if positive.size < d.n * (d.n + 1):
        return 0.0
    return float(np.min(np.diff(np.concatenate(([0.0], positive)))))


def entanglement_time_from_crystal(l: float, n_s: float, n_i: float) -> EntanglementTime:
    """T_e = l (N_s - N_i) / 2 for a crystal of length l.

    `l` and the inverse group velocities must use consistent units
    (e.g. nm and fs/nm give fs). The magnitude is returned with its sign.
    """
    if not l > 0:
        raise DomainError(f"crystal length must be positive, got {l}")
    value = l * (n_s - n_i) / 2.0
    if value == 0.0:
        warnings.warn(
            "N_s equals N_i: zero entanglement time (degenerate source)",
            DegenerateSourceWarning,
            stacklevel=2,
        )
        return EntanglementTime(0.0, 0)
    return EntanglementTime(abs(value), 1 if value > 0 else -1)


def entanglement_time_from_bandwidth(
    delta_omega: float,
    convention: str = "planck",
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """T_e = pi / Delta_omega converted to fs.

    convention="planck" converts the bandwidth with h (reproduces the
    ~1745 fs quoted for 7.4 meV); convention="reduced" converts with hbar,
    which is the dimensionally literal reading (~279 fs).
    """
    if not delta_omega > 0:
        raise DomainError(f"bandwidth must be positive, got {delta_omega} eV")
    if convention == "planck":
        return math.pi * constants.h / delta_omega
    if convention == "reduced":
        return math.pi * constants.hbar / delta_omega
    raise DomainError(f"unknown entanglement-time convention {convention!r}")


def entanglement_time_conventions(delta_omega: float) -> Dict[str, float]:
    """Both readings of T_e = pi/Delta_omega, for side-by-side reporting."""
    return {
        "planck": entanglement_time_from_bandwidth(delta_omega, "planck"),
        "reduced": entanglement_time_from_bandwidth(delta_omega, "reduced"),
    }


def random_level_system(
    rng: np.random.Generator,
    n_states: int,
    band: Tuple[float, float] = (0.5, 2.6),
    pumps: Sequence[PumpConfig] = (),
    min_spacing: float = 0.02,
    min_detuning: float = 0.05,
    min_separation: float = 0.0,
    mu: float = 1.0,
    max_tries: int = 10000,
) -> LevelSystem:
    """Draw a non-degenerate system whose states stay virtual at every pump.

    Draws are rejected when two energies lie closer than `min_spacing`, when a
    state is within `min_detuning` of any omega_0, or when two predicted peaks
    of any pump setting lie closer than `min_separation`.
    """
    if n_states < 1:
        raise DomainError("n_states must be at least 1")
    lo, hi = band
    for _ in range(max_tries):
        energies = np.sort(rng.uniform(lo, hi, size=n_states))
        if n_states > 1 and np.min(np.diff(energies)) < min_spacing:
            continue
        if any(np.min(np.abs(energies - p.omega0)) < min_detuning for p in pumps):
            continue
        if min_separation > 0 and any(
            min_peak_separation(DetuningSet.from_deltas(energies - p.omega0)) <= min_separation
            for p in pumps
        ):
            continue
        epsilon_f = 2.0 * pumps[0].omega0 if pumps else 2.0 * hi
        return LevelSystem.from_energies(energies, epsilon_f=epsilon_f, mu=mu)
    raise DomainError(f"could not draw a valid {n_states}-state system in {max_tries} tries")
