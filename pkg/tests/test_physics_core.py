"""
Tests for the physics core: units, detunings and predicted peak frequencies.
"""

import json
import os
import sys
import warnings

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from etpa.errors import DegenerateSourceWarning, DomainError, ResonanceError, VirtualStateError
from etpa.physics_core import (
    CONSTANTS,
    DetuningSet,
    LevelSystem,
    PhysicalConstants,
    PumpConfig,
    center_frequency,
    detunings,
    energies_from_detunings,
    entanglement_time_conventions,
    entanglement_time_from_bandwidth,
    entanglement_time_from_crystal,
    predicted_frequencies,
    random_level_system,
)
from example_systems import TWO_STATE_ENERGIES, OMEGA0_405, system_for


def test_constants():
    assert abs(CONSTANTS.hbar * CONSTANTS.c / 197.3269 - 1.0) < 1e-4
    with pytest.raises(DomainError):
        PhysicalConstants(c=300.5)


def test_center_frequency():
    assert center_frequency(405.0) == pytest.approx(1.5306, abs=1e-4)
    assert center_frequency(455.9) == pytest.approx(1.3598, abs=1e-4)
    assert center_frequency(1e12) < 1e-8
    with pytest.raises(DomainError):
        center_frequency(0.0)
    assert PumpConfig.from_wavelength(405.0).wavelength_nm == pytest.approx(405.0)


def test_pump_config_json():
    pump = PumpConfig(1.36)
    assert json.loads(json.dumps(pump.to_dict())) == {"omega0": 1.36}
    assert PumpConfig.from_dict(json.loads(json.dumps(pump.to_dict()))) == pump
    assert PumpConfig.from_dict({"wavelength_nm": 405.0}).omega0 == pytest.approx(OMEGA0_405)
    with pytest.raises(DomainError):
        PumpConfig.from_dict({"omega0": -1.0})


def test_detunings_two_state():
    pump = PumpConfig(1.53)
    d = detunings(system_for(TWO_STATE_ENERGIES, 1.53), pump)
    assert d.deltas[0] == pytest.approx(-0.67)
    assert d.deltas[1] == pytest.approx(0.14)
    assert d.amplitudes[0] == pytest.approx(1.0 / -0.67)


def test_detunings_reject_resonant_state():
    system = system_for((0.86, 1.53), 1.53)
    with pytest.raises(VirtualStateError) as info:
        detunings(system, PumpConfig(1.53))
    assert "virtual-state violation" in str(info.value)
    assert info.value.index == 1


def test_detunings_require_two_photon_resonance():
    system = LevelSystem.from_energies(TWO_STATE_ENERGIES, epsilon_f=3.5)
    with pytest.raises(ResonanceError):
        detunings(system, PumpConfig(1.53))
    bound = system.resonant_with(PumpConfig(1.53))
    assert bound.epsilon_f == pytest.approx(3.06)
    assert detunings(bound, PumpConfig(1.53)).n == 2


def test_level_system_validation():
    with pytest.raises(DomainError):
        LevelSystem.from_energies([], epsilon_f=3.0)
    with pytest.raises(DomainError):
        LevelSystem.from_energies([1.0, 1.0], epsilon_f=3.0)
    with pytest.raises(DomainError):
        LevelSystem.from_energies([1.0], epsilon_f=-1.0)
    system = system_for(TWO_STATE_ENERGIES, 1.53)
    assert LevelSystem.from_dict(system.to_dict()) == system


def test_predicted_frequencies_single_state():
    pf = predicted_frequencies(DetuningSet.from_deltas([0.5]))
    assert sorted(pf.frequencies.tolist()) == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert pf.distinct().size == 4


def test_predicted_frequencies_two_state():
    pf = predicted_frequencies(DetuningSet.from_deltas([-0.67, 0.14]))
    expected = np.array([0.67, 0.14, 0.81, 1.34, 0.28, 0.53])
    positive = pf.positive()
    assert positive.size == 6
    assert np.allclose(np.sort(positive), np.sort(expected))
    assert np.allclose(pf.frequencies, -pf.frequencies[::-1])


def test_peak_count_law():
    rng = np.random.default_rng(3)
    for n in range(1, 7):
        for _ in range(20):
            system = random_level_system(rng, n, pumps=[PumpConfig(OMEGA0_405)], min_separation=1e-6)
            d = detunings(system, PumpConfig(OMEGA0_405))
            assert predicted_frequencies(d).distinct().size == 2 * (n + 1) * n


def test_detuning_round_trip_and_amplitude_sign():
    rng = np.random.default_rng(11)
    pump = PumpConfig(1.45)
    system = random_level_system(rng, 4, pumps=[pump])
    system = LevelSystem(
        system.epsilon_i,
        tuple((s.epsilon, 1.0, -2.0 if k % 2 else 1.5) for k, s in enumerate(system.intermediates)),
        system.epsilon_f,
    )
    d = detunings(system, pump)
    assert np.allclose(energies_from_detunings(d, pump), system.energies, rtol=0, atol=1e-14)
    for a, delta, mu in zip(d.amplitudes, d.deltas, system.mu_products):
        assert np.sign(a) == np.sign(mu) * np.sign(delta)


def test_entanglement_time_from_bandwidth():
    planck = entanglement_time_from_bandwidth(0.0074)
    assert abs(planck / 1745.0 - 1.0) < 0.01
    assert entanglement_time_from_bandwidth(0.0074, "reduced") == pytest.approx(279.4, abs=0.1)
    assert entanglement_time_from_bandwidth(0.0148) == pytest.approx(planck / 2)
    assert set(entanglement_time_conventions(0.0074)) == {"planck", "reduced"}
    with pytest.raises(DomainError):
        entanglement_time_from_bandwidth(0.0)
    with pytest.raises(DomainError):
        entanglement_time_from_bandwidth(0.0074, "angular")


def test_entanglement_time_from_crystal():
    assert entanglement_time_from_crystal(2.0, 4.0, 1.0).value == pytest.approx(3.0)
    assert entanglement_time_from_crystal(4.0, 4.0, 1.0).value == pytest.approx(6.0)
    flipped = entanglement_time_from_crystal(2.0, 1.0, 4.0)
    assert flipped.value == pytest.approx(3.0) and flipped.sign == -1
    with pytest.warns(DegenerateSourceWarning):
        assert entanglement_time_from_crystal(2.0, 1.5, 1.5).value == 0.0
    with pytest.raises(DomainError):
        entanglement_time_from_crystal(0.0, 2.0, 1.0)


if __name__ == "__main__":
    warnings.simplefilter("default")
    sys.exit(pytest.main([__file__, "-v"]))
