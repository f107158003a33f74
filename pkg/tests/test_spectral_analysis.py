"""
Tests for peak detection, pair matching, family classification, educated
guessing and energy extraction.
"""

import logging
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from etpa.errors import DegenerateConfigurationError, DomainError, SearchBudgetError
from etpa.physics_core import PumpConfig, detunings, phase, predicted_frequencies
from etpa.scan_engine import DelayTrace, Spectrum, make_grid, spectrum
from etpa.spectral_analysis import (
    LABEL_INVARIANT,
    LABEL_SINGLE,
    LABEL_SUM,
    LABEL_UNCLASSIFIED,
    ExtractionResult,
    Peak,
    PeakSet,
    RecoveredEnergy,
    classify_families,
    detect_peaks,
    educated_guess,
    extract_energies,
    guess_budget,
    pair_match,
    score_recovery,
)
from example_systems import (
    TWO_STATE_ENERGIES,
    FIVE_STATE_ENERGIES,
    TWO_PUMPS,
    OMEGA0_405,
    OMEGA_RES,
    THREE_PUMPS,
    close_to_any,
    noiseless_spectrum,
    synthetic_scan,
    system_for,
)


def test_detect_peaks_single_cosine():
    grid = make_grid(0.3, 1745.0, 0.99)
    values = 2.0 + np.cos(phase(0.14, grid.samples))
    peaks = detect_peaks(spectrum(DelayTrace(grid, values, omega0=1.53)))
    assert len(peaks) == 2
    assert np.allclose(np.abs(peaks.frequencies), 0.14, atol=peaks.omega_res)
    assert peaks.omega0 == 1.53


def test_detect_peaks_on_flat_spectrum():
    freqs = np.linspace(-1.0, 1.0, 101)
    flat = Spectrum(freqs, np.zeros_like(freqs), omega_res=0.02, omega_max=1.05, omega0=1.53)
    peaks = detect_peaks(flat)
    assert len(peaks) == 0
    with pytest.raises(DomainError):
        detect_peaks(flat, min_prominence=1.5)


def test_peak_set_validation():
    with pytest.raises(DomainError):
        PeakSet((Peak(2.0, 1.0, 1.0),), 1.53, 0.01, omega_max=1.5)
    with pytest.raises(DomainError):
        PeakSet((Peak(0.001, 1.0, 1.0),), 1.53, 0.01, dc_exclusion=0.03)
    scan = PeakSet.from_frequencies([0.5, -0.2, 0.1], 1.53, 0.01)
    assert scan.frequencies.tolist() == [-0.2, 0.1, 0.5]
    assert scan.positive_frequencies().tolist() == [0.1, 0.5]


def test_detected_peaks_match_predictions():
    sp = noiseless_spectrum(TWO_STATE_ENERGIES, OMEGA0_405)
    peaks = detect_peaks(sp)
    predicted = predicted_frequencies(detunings(system_for(TWO_STATE_ENERGIES, OMEGA0_405), PumpConfig(OMEGA0_405)))
    assert all(close_to_any(peaks.frequencies, predicted.nonzero(), sp.omega_res))
    assert all(close_to_any(predicted.positive(), peaks.positive_frequencies(), sp.omega_res))
    assert np.all(np.abs(peaks.frequencies) >= 3 * sp.omega_res)


def test_pair_match_two_pumps():
    a = synthetic_scan(TWO_STATE_ENERGIES, TWO_PUMPS[0])
    b = synthetic_scan(TWO_STATE_ENERGIES, TWO_PUMPS[1])
    report = pair_match(a, b)
    assert len(report.matched_pairs) == 2
    assert [p.epsilon for p in report.matched_pairs] == pytest.approx(list(TWO_STATE_ENERGIES), abs=1e-9)
    assert report.matched_pairs[0].delta == pytest.approx(0.86 - TWO_PUMPS[0], abs=1e-9)
    assert len(report.unmatched) == 8
    singles = [lab for lab in report.family_labels if lab.label == LABEL_SINGLE]
    assert len(singles) == 4

    swapped = pair_match(b, a)
    assert [p.epsilon for p in swapped.matched_pairs] == pytest.approx(list(TWO_STATE_ENERGIES), abs=1e-9)
    assert set(report.to_dict()) == {"omega0", "tol", "matched_pairs", "family_labels", "unmatched"}
    assert "epsilon" in report.summary_table()


def test_pair_match_state_between_pumps():
    a = synthetic_scan([1.45], 1.53)
    b = synthetic_scan([1.45], 1.36)
    report = pair_match(a, b)
    assert [p.epsilon for p in report.matched_pairs] == pytest.approx([1.45], abs=1e-9)


def test_pair_match_degenerate_and_invariant_only():
    a = synthetic_scan(TWO_STATE_ENERGIES, OMEGA0_405)
    with pytest.raises(DegenerateConfigurationError):
        pair_match(a, a)

    # difference-family peaks do not move with omega_0 and must stay unpaired
    only_a = PeakSet.from_frequencies([0.81, -0.81], 1.53, OMEGA_RES)
    only_b = PeakSet.from_frequencies([0.81, -0.81], 1.36, OMEGA_RES)
    report = pair_match(only_a, only_b)
    assert report.matched_pairs == ()
    assert len(report.unmatched) == 2
    assert report.summary_table() == "no matched pairs"


def test_pair_match_warns_on_tight_tolerance(caplog):
    a = synthetic_scan(TWO_STATE_ENERGIES, TWO_PUMPS[0])
    b = synthetic_scan(TWO_STATE_ENERGIES, TWO_PUMPS[1])
    shifted = PeakSet.from_frequencies(b.frequencies + 3 * OMEGA_RES * np.sign(b.frequencies), 1.36, OMEGA_RES)
    with caplog.at_level(logging.WARNING, logger="etpa.spectral_analysis"):
        report = pair_match(a, shifted, tol=0.5 * OMEGA_RES)
    assert "below the bin width" in caplog.text
    assert report.matched_pairs == ()


def test_classify_families_two_states():
    scans = [synthetic_scan(TWO_STATE_ENERGIES, w) for w in THREE_PUMPS]
    result = classify_families(scans)
    for s in range(3):
        assert result.counts(s) == {LABEL_SINGLE: 2, LABEL_INVARIANT: 1, LABEL_SUM: 3, LABEL_UNCLASSIFIED: 0}
    singles = sorted(t.epsilon for t in result.trajectories if t.label == LABEL_SINGLE)
    assert singles == pytest.approx(list(TWO_STATE_ENERGIES), abs=1e-9)
    for traj in result.trajectories:
        assert abs(traj.slope - traj.law) < 1e-6


def test_classify_families_single_state():
    scans = [synthetic_scan([1.0], w) for w in TWO_PUMPS]
    result = classify_families(scans)
    for s in range(2):
        assert result.counts(s)[LABEL_SINGLE] == 1
        assert result.counts(s)[LABEL_SUM] == 1


def test_classify_families_invariant_only():
    scans = [PeakSet.from_frequencies([0.3, 0.5], w, OMEGA_RES) for w in (1.53, 1.45, 1.36)]
    result = classify_families(scans)
    assert all(lab.label == LABEL_INVARIANT for lab in result.labels)
    assert len(result.trajectories) == 2
    assert all(t.epsilon is None for t in result.trajectories)


def test_educated_guess_two_states():
    scan = synthetic_scan(TWO_STATE_ENERGIES, OMEGA0_405)
    best = educated_guess(scan, 2)[0]
    assert best.score == 1.0 and best.coverage == 1.0
    expected = sorted(abs(e - OMEGA0_405) for e in TWO_STATE_ENERGIES)
    assert sorted(abs(d) for d in best.deltas) == pytest.approx(expected, abs=1e-9)
    assert best.deltas[0] > 0


def test_educated_guess_limits():
    scan = synthetic_scan(TWO_STATE_ENERGIES, OMEGA0_405)
    assert educated_guess(scan, 0)[0].deltas == ()
    with pytest.raises(DomainError):
        educated_guess(scan, 7)

    dense = synthetic_scan(FIVE_STATE_ENERGIES, OMEGA0_405)
    m = dense.positive_frequencies().size
    assert guess_budget(m, 5) > 10_000
    with pytest.raises(SearchBudgetError) as info:
        educated_guess(dense, 5, cap=10_000)
    assert "pair_match" in str(info.value)


@pytest.mark.slow
def test_educated_guess_five_states():
    dense = synthetic_scan(FIVE_STATE_ENERGIES, OMEGA0_405)
    best = educated_guess(dense, 5)[0]
    assert best.score == 1.0 and best.coverage == 1.0
    expected = sorted(abs(e - OMEGA0_405) for e in FIVE_STATE_ENERGIES)
    assert sorted(abs(d) for d in best.deltas) == pytest.approx(expected, abs=1e-9)


def test_extract_energies_two_scans():
    scans = [synthetic_scan(TWO_STATE_ENERGIES, w) for w in TWO_PUMPS]
    result = extract_energies(scans)
    assert result.epsilons == pytest.approx(list(TWO_STATE_ENERGIES), abs=1e-9)
    assert all(e.uncertainty == pytest.approx(0.5 * OMEGA_RES) for e in result.energies)
    assert result.report is not None and result.classification is not None
    assert "pair_match" in result.to_dict()


def test_extract_energies_three_scans():
    scans = [synthetic_scan(FIVE_STATE_ENERGIES, w) for w in THREE_PUMPS]
    result = extract_energies(scans)
    assert result.epsilons == pytest.approx(list(FIVE_STATE_ENERGIES), abs=1e-9)
    assert all(e.support == 3 for e in result.energies)

    two = extract_energies([synthetic_scan(TWO_STATE_ENERGIES, w) for w in THREE_PUMPS])
    assert two.epsilons == pytest.approx(list(TWO_STATE_ENERGIES), abs=1e-9)
    assert two.diagnostics == ()


def test_extract_energies_edge_cases():
    empty = [PeakSet((), w, OMEGA_RES) for w in TWO_PUMPS]
    result = extract_energies(empty)
    assert result.energies == ()
    assert any("without positive-frequency peaks" in d for d in result.diagnostics)
    assert "no intermediate-state energies recovered" in result.summary_table()

    with pytest.raises(DegenerateConfigurationError):
        extract_energies([synthetic_scan(TWO_STATE_ENERGIES, OMEGA0_405)])


def test_extract_energies_with_raised_ground_state():
    epsilon_i = 0.1
    energies = [e + epsilon_i for e in TWO_STATE_ENERGIES]
    scans = [synthetic_scan(energies, w, epsilon_i=epsilon_i) for w in TWO_PUMPS]
    result = extract_energies(scans, epsilon_i=epsilon_i)
    assert result.epsilons == pytest.approx(energies, abs=1e-9)
    assert [p.delta for p in result.report.matched_pairs] == pytest.approx(
        [e - epsilon_i - TWO_PUMPS[0] for e in energies], abs=1e-9
    )

    three = [synthetic_scan(energies, w, epsilon_i=epsilon_i) for w in THREE_PUMPS]
    assert extract_energies(three, epsilon_i=epsilon_i).epsilons == pytest.approx(energies, abs=1e-9)


def test_score_recovery():
    result = ExtractionResult(
        (RecoveredEnergy(0.8605, 1e-3, 2), RecoveredEnergy(1.2, 1e-3, 2), RecoveredEnergy(1.6702, 1e-3, 2)),
        tol=2e-3,
    )
    score = score_recovery(result, TWO_STATE_ENERGIES, 2e-3)
    assert score.complete and score.found == 2 and score.false == 1
    assert score.mean_abs_error == pytest.approx(3.5e-4)

    missing = score_recovery(ExtractionResult((), tol=2e-3), TWO_STATE_ENERGIES, 2e-3)
    assert not missing.complete and missing.found == 0 and np.isnan(missing.mean_abs_error)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
