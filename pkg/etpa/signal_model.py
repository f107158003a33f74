"""
Closed-form forward model of the eTPA signal.

Twin-state joint spectral amplitude, the cross section s(T_e, tau) in its
modulus-squared and its expanded cosine form, the delta-like function of the
finite interaction time, the full transition probability and the
quantum-versus-classical absorption-rate split.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from etpa.errors import DomainError, OffShellError
from etpa.physics_core import (
    CONSTANTS,
    DetuningSet,
    LevelSystem,
    PhysicalConstants,
    PumpConfig,
    detunings,
    entanglement_time_from_bandwidth,
    entanglement_time_from_crystal,
    phase,
)

logger = logging.getLogger(__name__)

SHELL_TOL_EV = 1e-9


@dataclass(frozen=True)
class SourceConfig:
    """Type-II SPDC twin-photon source.

    `entanglement_time` (fs) is derived from the crystal parameters when they
    are given, otherwise from `delta_omega` under `te_convention`, unless it is
    set explicitly.
    """

    omega0: float
    delta_omega: float
    entanglement_time: Optional[float] = None
    tau: float = 0.0
    photon_flux: float = 0.0
    crystal_length: Optional[float] = None
    n_s: Optional[float] = None
    n_i: Optional[float] = None
    te_convention: str = "planck"

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError(f"omega0 must be positive, got {self.omega0}")
        if not self.delta_omega > 0:
            raise DomainError(f"delta_omega must be positive, got {self.delta_omega}")
        crystal = (self.crystal_length, self.n_s, self.n_i)
        has_crystal = all(v is not None for v in crystal)
        if any(v is not None for v in crystal) and not has_crystal:
            raise DomainError("crystal_length, n_s and n_i must be given together")

        t_e = self.entanglement_time
        if has_crystal:
            from_crystal = entanglement_time_from_crystal(self.crystal_length, self.n_s, self.n_i).value
            if t_e is None:
                t_e = from_crystal
            elif abs(t_e - from_crystal) > 1e-9 * max(abs(t_e), abs(from_crystal)):
                raise DomainError(
                    f"entanglement time {t_e} fs disagrees with crystal value {from_crystal} fs"
                )
        elif t_e is None:
            t_e = entanglement_time_from_bandwidth(self.delta_omega, self.te_convention)
        if not t_e > 0:
            raise DomainError(f"entanglement time must be positive, got {t_e} fs")
        object.__setattr__(self, "entanglement_time", float(t_e))

    @property
    def pump(self) -> PumpConfig:
        return PumpConfig(self.omega0)

    @property
    def omega_p(self) -> float:
        return 2.0 * self.omega0


@dataclass(frozen=True)
class InteractionWindow:
    """Elapsed interaction time t (fs) of the finite-time delta function."""

    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError(f"interaction time must be positive, got {self.t} fs")

    @property
    def width(self) -> float:
        """Width 4/(pi t) of the delta-like function, in eV."""
        return 4.0 * CONSTANTS.hbar / (math.pi * self.t)


class AbsorptionRate(NamedTuple):
    total: float
    quantum: float
    classical: float
    crossover_flux: Optional[float]


def _as_output(value: np.ndarray, scalar: bool):
    return float(value.reshape(-1)[0]) if scalar else value


def joint_spectral_amplitude(
    src: SourceConfig,
    omega_s,
    omega_i,
    shell_tol: float = SHELL_TOL_EV,
    constants: PhysicalConstants = CONSTANTS,
):
    """Twin-state amplitude on the energy-conservation shell omega_s + omega_i = omega_p.

    The pump delta function is a shell constraint: off-shell frequencies are
    rejected rather than evaluated.
    """
    ws = np.asarray(omega_s, dtype=float)
    wi = np.asarray(omega_i, dtype=float)
    off = np.abs(ws + wi - src.omega_p)
    if np.any(off > shell_tol):
        raise OffShellError(
            f"omega_s + omega_i deviates from omega_p = {src.omega_p:.6f} eV by "
            f"up to {float(np.max(off)):.3e} eV"
        )
    t_e = src.entanglement_time
    arg = phase(ws - wi, t_e / 2.0, constants)
    amplitude = math.sqrt(t_e / math.sqrt(math.pi)) * np.sinc(arg / math.pi)
    value = amplitude * np.exp(1j * phase(ws, src.tau, constants))
    if np.ndim(value) == 0:
        return complex(value)
    return value


def cross_section(d: DetuningSet, T_e, tau, constants: PhysicalConstants = CONSTANTS):
    """s(T_e, tau) = |sum_j A_j (2 - exp(-i D_j (T_e + tau)) - exp(-i D_j (T_e - tau)))|^2.

    `tau` (and `T_e`) may be arrays; the result broadcasts over them.
    """
    t_e = np.asarray(T_e, dtype=float)
    taus = np.asarray(tau, dtype=float)
    scalar = t_e.ndim == 0 and taus.ndim == 0
    t_e, taus = np.broadcast_arrays(t_e, taus)
    shape = taus.shape
    t_e = t_e.reshape(1, -1)
    taus = taus.reshape(1, -1)

    deltas = d.delta_array[:, None]
    brackets = (
        2.0
        - np.exp(-1j * phase(deltas, t_e + taus, constants))
        - np.exp(-1j * phase(deltas, t_e - taus, constants))
    )
    total = d.amplitude_array @ brackets
    s = (total.real ** 2 + total.imag ** 2).reshape(shape)
    return _as_output(s, scalar)


def cross_section_expanded(d: DetuningSet, T_e, tau, constants: PhysicalConstants = CONSTANTS):
    """Expanded double sum over (j, k), diagonal included.

    Each term is A_j A_k* (4 - 2e^{-iD_jT}[e^{iD_j tau} + c.c.]
    - 2e^{iD_kT}[e^{iD_k tau} + c.c.]
    + e^{-i(D_j - D_k)T}([e^{i(D_j - D_k)tau} + c.c.] + [e^{i(D_j + D_k)tau} + c.c.])).
    Kept independent of `cross_section` so either can check the other.
    """
    t_e = np.asarray(T_e, dtype=float)
    taus = np.asarray(tau, dtype=float)
    scalar = t_e.ndim == 0 and taus.ndim == 0
    t_e, taus = np.broadcast_arrays(t_e, taus)
    shape = taus.shape
    t_e = t_e.reshape(-1)
    taus = taus.reshape(-1)

    deltas = d.delta_array
    amps = d.amplitude_array.astype(complex)
    total = np.zeros(taus.shape, dtype=complex)
    for j in range(d.n):
        for k in range(d.n):
            dj, dk = deltas[j], deltas[k]
            cc_j = 2.0 * np.cos(phase(dj, taus, constants))
            cc_k = 2.0 * np.cos(phase(dk, taus, constants))
            cc_diff = 2.0 * np.cos(phase(dj - dk, taus, constants))
            cc_sum = 2.0 * np.cos(phase(dj + dk, taus, constants))
            term = (
                4.0
                - 2.0 * np.exp(-1j * phase(dj, t_e, constants)) * cc_j
                - 2.0 * np.exp(1j * phase(dk, t_e, constants)) * cc_k
                + np.exp(-1j * phase(dj - dk, t_e, constants)) * (cc_diff + cc_sum)
            )
            total += amps[j] * np.conj(amps[k]) * term
    s = total.real.reshape(shape)
    return _as_output(s, scalar)


def sinc_delta(x, w: InteractionWindow, constants: PhysicalConstants = CONSTANTS):
    """Finite-time delta function 2 sin^2(x t / 2hbar) / (pi t x^2 / hbar^2), per eV.

    Written as t/(2 pi hbar) * sinc^2 so x = 0 takes its analytic limit.
    """
    u = phase(np.asarray(x, dtype=float), w.t / 2.0, constants)
    value = w.t / (2.0 * math.pi * constants.hbar) * np.sinc(u / math.pi) ** 2
    if np.ndim(value) == 0:
        return float(value)
    return value


def transition_probability(
    sys: LevelSystem,
    src: SourceConfig,
    consts: PhysicalConstants,
    w: InteractionWindow,
    tau,
):
    """Two-photon transition probability P_fi in relative units.

    prefactor omega_p^2 / (4 hbar^2 sqrt(pi) eps0^2 A^2 T_e) times
    2 pi t delta_t(eps_f - eps_i - omega_p) s(T_e, tau).
    """
    mismatch = sys.epsilon_f - sys.epsilon_i - src.omega_p
    if abs(mismatch) > w.width:
        logger.debug("evaluating P_fi %.3e eV off resonance (width %.3e eV)", mismatch, w.width)
    t_e = src.entanglement_time
    prefactor = src.omega_p ** 2 / (
        4.0 * consts.hbar ** 2 * math.sqrt(math.pi) * consts.eps0 ** 2 * consts.beam_area ** 2 * t_e
    )
    d = detunings(sys, src.pump, resonance_tol=math.inf)
    s = cross_section(d, t_e, tau, consts)
    return prefactor * 2.0 * math.pi * w.t * sinc_delta(mismatch, w, consts) * s


def absorption_rate(phi: float, sigma_e: float, delta_r: float) -> AbsorptionRate:
    """R = sigma_e Phi + delta_r Phi^2, split into its quantum and classical parts."""
    if phi < 0 or sigma_e < 0 or delta_r < 0:
        raise DomainError("flux and cross sections must be non-negative")
    quantum = sigma_e * phi
    classical = delta_r * phi ** 2
    crossover = sigma_e / delta_r if delta_r > 0 else None
    return AbsorptionRate(quantum + classical, quantum, classical, crossover)
