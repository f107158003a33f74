"""
Tests for delay grids, trace synthesis and DFT spectra.
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from etpa.errors import DomainError, InsufficientScanRangeError, NonUniformGridError
from etpa.physics_core import HBAR_EV_FS, phase
from etpa.scan_engine import (
    DelayGrid,
    DelayTrace,
    NoiseSpec,
    analysed_samples,
    frequency_resolution,
    make_grid,
    mirror_step,
    resolution_report,
    simulate_trace,
    spectrum,
)
from etpa.signal_model import SourceConfig
from example_systems import TWO_STATE_ENERGIES, OMEGA0_405, system_for


def _two_state_trace(noise=None):
    src = SourceConfig(omega0=OMEGA0_405, delta_omega=0.0074)
    grid = make_grid(0.3, src.entanglement_time, 0.99)
    return simulate_trace(system_for(TWO_STATE_ENERGIES, OMEGA0_405), src, grid, noise)


def test_make_grid():
    grid = make_grid(0.3, 1745.0, 0.99)
    assert grid.tau_max == pytest.approx(1727.4)
    assert len(grid) == 11517
    assert grid.is_symmetric() and grid.is_uniform()
    assert np.array_equal(grid.samples, -grid.samples[::-1])
    assert len(grid) == round((grid.tau_max - grid.tau_min) / grid.delta_tau) + 1

    full = make_grid(0.3, 30.0, 1.0)
    assert full.tau_max < 30.0

    with pytest.raises(InsufficientScanRangeError):
        make_grid(0.3, 1745.0, 2.0 / 1745.0)
    with pytest.raises(DomainError):
        make_grid(0.0, 1745.0, 0.99)
    with pytest.raises(DomainError):
        make_grid(0.3, 1745.0, 1.5)


def test_mirror_step():
    assert mirror_step(0.3) == pytest.approx(44.97, abs=0.01)
    assert abs(mirror_step(0.3) - 45.0) < 0.1
    assert mirror_step(0.6) == pytest.approx(89.94, abs=0.01)
    with pytest.raises(DomainError):
        mirror_step(0.0)


def test_frequency_resolution():
    grid = DelayGrid(0.3, np.linspace(-1727.4, 1727.4, 11517))
    assert frequency_resolution(grid) == pytest.approx(1.197e-3, rel=1e-3)
    wide = DelayGrid(0.6, np.linspace(-3454.8, 3454.8, 11517))
    assert frequency_resolution(wide) == pytest.approx(frequency_resolution(grid) / 2)

    report = resolution_report(grid, 0.0074)
    assert report.bound_violated is True
    assert report.omega_max == pytest.approx(math.pi * HBAR_EV_FS / 0.3)
    assert resolution_report(grid, 0.074).bound_violated is False
    assert report.outside_bandwidth(0.67) and not report.outside_bandwidth(0.005)


def test_noiseless_trace_is_even():
    trace = _two_state_trace()
    assert trace.omega0 == OMEGA0_405
    assert np.all(trace.values >= 0)
    assert np.allclose(trace.values, trace.values[::-1], rtol=1e-9, atol=1e-10 * trace.values.max())


def test_trace_rejects_grid_beyond_entanglement_time():
    src = SourceConfig(omega0=OMEGA0_405, delta_omega=0.0074)
    grid = DelayGrid(0.3, np.arange(-6000, 6001) * 0.3)
    with pytest.raises(DomainError):
        simulate_trace(system_for(TWO_STATE_ENERGIES, OMEGA0_405), src, grid)


def test_noise_is_seeded():
    first = _two_state_trace(NoiseSpec(counts_budget=1e4, seed=42))
    second = _two_state_trace(NoiseSpec(counts_budget=1e4, seed=42))
    other = _two_state_trace(NoiseSpec(counts_budget=1e4, seed=43))
    assert np.array_equal(first.values, second.values)
    assert not np.array_equal(first.values, other.values)
    assert first.noise_seed == 42 and first.counts_budget == 1e4


def test_noise_vanishes_with_large_budget():
    clean = _two_state_trace().values
    errors = []
    for budget in (1e3, 1e5, 1e9):
        noisy = _two_state_trace(NoiseSpec(counts_budget=budget, seed=1)).values
        errors.append(np.linalg.norm(noisy - clean) / np.linalg.norm(clean))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-3


def test_spectrum_of_cosine():
    grid = make_grid(0.3, 1745.0, 0.99)
    values = 1.0 + np.cos(phase(0.14, grid.samples))
    sp = spectrum(DelayTrace(grid, values))
    freqs, mags = sp.positive()
    assert abs(freqs[np.argmax(mags)] - 0.14) <= sp.omega_res
    strong = sp.frequencies[sp.magnitudes > 0.5 * sp.magnitudes.max()]
    assert np.all(np.abs(np.abs(strong) - 0.14) <= 2 * sp.omega_res)
    assert np.max(np.abs(sp.frequencies)) <= sp.omega_max


def test_spectrum_of_constant():
    grid = make_grid(0.3, 100.0, 0.99)
    trace = DelayTrace(grid, np.full(len(grid), 3.0))
    raw = spectrum(trace, subtract_mean=False)
    dc = raw.dc_index
    assert raw.frequencies[dc] == 0.0
    others = np.delete(raw.magnitudes, dc)
    assert np.all(others <= 1e-12 * raw.magnitudes[dc])
    assert np.all(spectrum(trace).magnitudes < 1e-12)


def test_spectrum_parseval_and_symmetry():
    trace = _two_state_trace()
    for window in (None, "hann"):
        sp = spectrum(trace, window=window)
        x = analysed_samples(trace, window=window)
        assert np.sum(sp.magnitudes ** 2) == pytest.approx(np.sum(x ** 2), rel=1e-9)
    sp = spectrum(trace)
    assert np.allclose(sp.frequencies, -sp.frequencies[::-1])
    assert np.allclose(sp.magnitudes, sp.magnitudes[::-1], rtol=1e-9, atol=1e-12 * sp.magnitudes.max())
    assert sp.omega_res == pytest.approx(2 * math.pi * HBAR_EV_FS / (len(trace.grid) * 0.3))


def test_spectrum_rejects_non_uniform_grid():
    samples = make_grid(0.3, 100.0, 0.99).samples.copy()
    samples[5] += 0.1
    trace = DelayTrace(DelayGrid.from_samples(samples), np.ones(samples.size))
    with pytest.raises(NonUniformGridError):
        spectrum(trace)


def test_trace_frame_round_trip():
    trace = _two_state_trace(NoiseSpec(counts_budget=1e6, seed=9))
    restored = DelayTrace.from_frame(trace.to_frame(), trace.metadata())
    assert np.array_equal(restored.values, trace.values)
    assert restored.noise_seed == 9 and restored.omega0 == trace.omega0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
