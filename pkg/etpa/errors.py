"""
Exception types raised by the eTPA toolkit.

Every failure in the simulate -> transform -> analyze pipeline maps to one of
these classes so the CLI and the HTTP service can translate them into exit
codes and status codes without inspecting messages.
"""

from typing import List, Optional


class EtpaError(Exception):
    """Base class for all toolkit errors."""


class DomainError(EtpaError, ValueError):
    """An argument lies outside the physical domain of an operation."""


class ResonanceError(DomainError):
    """The two-photon resonance condition eps_f - eps_i = omega_p is violated."""


class VirtualStateError(DomainError):
    """An intermediate state sits too close to omega_0 to be treated as virtual."""

    def __init__(self, index: int, delta: float, threshold: float):
        self.index = index
        self.delta = delta
        self.threshold = threshold
        super().__init__(
            f"virtual-state violation: intermediate state {index} has detuning "
            f"{delta * 1e3:.3f} meV (guard {threshold * 1e3:.3f} meV); "
            "the perturbative model does not apply to a resonant state"
        )


class OffShellError(DomainError):
    """Signal and idler frequencies do not add up to the pump frequency."""


class InsufficientScanRangeError(DomainError):
    """The delay grid holds too few samples for a meaningful DFT."""


class NonUniformGridError(DomainError):
    """Delay samples are not uniformly spaced."""


class DegenerateConfigurationError(DomainError):
    """Scans cannot be correlated (identical pump frequencies, too few scans)."""


class SearchBudgetError(EtpaError):
    """The combinatorial educated-guess search exceeds its subset budget."""


class ConfigError(EtpaError, ValueError):
    """An experiment configuration could not be parsed or validated."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        self.diagnostics = list(diagnostics or [])
        detail = "; ".join(self.diagnostics)
        super().__init__(f"{message}: {detail}" if detail else message)


class DegenerateSourceWarning(UserWarning):
    """Entanglement time evaluates to zero (equal group velocities)."""
