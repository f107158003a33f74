"""
Spectral analysis of delay-scan spectra.

Peaks are detected per scan, tracked across pump settings and sorted into
the three slope families of the peak set:

    +-Delta_j              moves with -omega_0 ("shift -omega0")
    +-(Delta_j - Delta_k)  does not move        ("invariant")
    +-(Delta_j + Delta_k)  moves with -2omega_0 ("shift -2omega0")

Intermediate-state energies follow from the first family as
eps_j = eps_i + omega_0 + Delta_j. The exhaustive "educated guess" search over peak
subsets is kept as a baseline with an explicit subset budget.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from etpa.errors import DegenerateConfigurationError, DomainError, SearchBudgetError
from etpa.scan_engine import Spectrum

logger = logging.getLogger(__name__)

DEFAULT_MIN_PROMINENCE = 0.01
DEFAULT_DC_EXCLUSION_BINS = 3
DEFAULT_TOL_BINS = 2.0
DEFAULT_GUESS_CAP = 200_000
SLOPE_TOL = 0.25

LABEL_SINGLE = "shift -omega0"
LABEL_INVARIANT = "invariant"
LABEL_SUM = "shift -2omega0"
LABEL_UNCLASSIFIED = "unclassified"

SLOPE_LAWS = (-2.0, -1.0, 0.0, 1.0, 2.0)
_LAW_LABELS = {0: LABEL_INVARIANT, 1: LABEL_SINGLE, 2: LABEL_SUM}

_GUESS_CHUNK = 4096


@dataclass(frozen=True)
class Peak:
    frequency: float
    magnitude: float
    prominence: float

    def to_dict(self) -> Dict[str, float]:
        return {"frequency": self.frequency, "magnitude": self.magnitude, "prominence": self.prominence}


@dataclass(frozen=True)
class PeakSet:
    """Peaks of one scan, sorted by frequency (eV)."""

    peaks: Tuple[Peak, ...]
    omega0: Optional[float]
    omega_res: float
    omega_max: float = math.inf
    dc_exclusion: float = 0.0

    def __post_init__(self):
        peaks = tuple(sorted(self.peaks, key=lambda p: p.frequency))
        for p in peaks:
            if abs(p.frequency) >= self.omega_max:
                raise DomainError(f"peak at {p.frequency} eV lies beyond omega_max={self.omega_max} eV")
            if abs(p.frequency) < self.dc_exclusion:
                raise DomainError(f"peak at {p.frequency} eV lies inside the DC exclusion zone")
        object.__setattr__(self, "peaks", peaks)

    @classmethod
    def from_frequencies(
        cls,
        frequencies: Sequence[float],
        omega0: Optional[float],
        omega_res: float,
        magnitudes: Optional[Sequence[float]] = None,
    ) -> "PeakSet":
        """Synthetic peak set, mostly for analysis of predicted positions."""
        if magnitudes is None:
            magnitudes = [1.0] * len(frequencies)
        peaks = tuple(Peak(float(f), float(m), float(m)) for f, m in zip(frequencies, magnitudes))
        return cls(peaks, omega0, omega_res)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([p.frequency for p in self.peaks], dtype=float)

    def positive(self) -> Tuple[Peak, ...]:
        return tuple(p for p in self.peaks if p.frequency > 0)

    def positive_frequencies(self) -> np.ndarray:
        return np.array([p.frequency for p in self.positive()], dtype=float)

    def __len__(self) -> int:
        return len(self.peaks)


@dataclass(frozen=True)
class MatchedPair:
    peak_a: Peak
    peak_b: Peak
    delta: float
    epsilon: float
    residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frequency_a": self.peak_a.frequency,
            "frequency_b": self.peak_b.frequency,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class FamilyLabel:
    scan: int
    frequency: float
    label: str
    slope: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"scan": self.scan, "frequency": self.frequency, "label": self.label, "slope": self.slope}


@dataclass(frozen=True)
class Trajectory:
    """Peaks of several scans following one slope law f = law*omega_0 + intercept."""

    law: float
    intercept: float
    slope: float
    residual: float
    members: Tuple[Tuple[int, int, int], ...]  # (scan, positive-peak index, sign)

    @property
    def label(self) -> str:
        return _LAW_LABELS[int(abs(self.law))]

    @property
    def n_scans(self) -> int:
        return len({m[0] for m in self.members})

    @property
    def epsilon(self) -> Optional[float]:
        """eps_j - eps_i carried by a single-family trajectory."""
        if self.law == -1.0:
            return self.intercept
        if self.law == 1.0:
            return -self.intercept
        return None


@dataclass(frozen=True)
class FamilyClassification:
    labels: Tuple[FamilyLabel, ...]
    trajectories: Tuple[Trajectory, ...]

    def counts(self, scan: int) -> Dict[str, int]:
        out = {LABEL_SINGLE: 0, LABEL_INVARIANT: 0, LABEL_SUM: 0, LABEL_UNCLASSIFIED: 0}
        for lab in self.labels:
            if lab.scan == scan:
                out[lab.label] += 1
        return out


@dataclass(frozen=True)
class MatchReport:
    matched_pairs: Tuple[MatchedPair, ...]
    family_labels: Tuple[FamilyLabel, ...]
    unmatched: Tuple[Tuple[int, Peak], ...]
    tol: float
    omega0: Tuple[float, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "omega0": list(self.omega0),
            "tol": self.tol,
            "matched_pairs": [p.to_dict() for p in self.matched_pairs],
            "family_labels": [lab.to_dict() for lab in self.family_labels],
            "unmatched": [{"scan": s, **p.to_dict()} for s, p in self.unmatched],
        }

    def summary_table(self) -> str:
        if not self.matched_pairs:
            return "no matched pairs"
        frame = pd.DataFrame([p.to_dict() for p in self.matched_pairs])
        return frame.to_string(index=False, float_format=lambda v: f"{v:.5f}")


@dataclass(frozen=True)
class GuessCandidate:
    deltas: Tuple[float, ...]
    score: float
    coverage: float

    def to_dict(self) -> Dict[str, Any]:
        return {"deltas": list(self.deltas), "score": self.score, "coverage": self.coverage}


@dataclass(frozen=True)
class RecoveredEnergy:
    epsilon: float
    uncertainty: float
    support: int

    def to_dict(self) -> Dict[str, Any]:
        return {"epsilon": self.epsilon, "uncertainty": self.uncertainty, "support": self.support}


@dataclass(frozen=True)
class ExtractionResult:
    energies: Tuple[RecoveredEnergy, ...]
    tol: float
    diagnostics: Tuple[str, ...] = ()
    report: Optional[MatchReport] = None
    classification: Optional[FamilyClassification] = None

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([e.epsilon for e in self.energies], dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "tol": self.tol,
            "energies": [e.to_dict() for e in self.energies],
            "diagnostics": list(self.diagnostics),
        }
        if self.report is not None:
            data["pair_match"] = self.report.to_dict()
        if self.classification is not None:
            data["family_labels"] = [lab.to_dict() for lab in self.classification.labels]
        return data

    def summary_table(self) -> str:
        if not self.energies:
            lines = ["no intermediate-state energies recovered"]
            lines.extend(f"  {d}" for d in self.diagnostics)
            return "\n".join(lines)
        frame = pd.DataFrame(
            {
                "epsilon_ev": [e.epsilon for e in self.energies],
                "uncertainty_ev": [e.uncertainty for e in self.energies],
                "support": [e.support for e in self.energies],
            }
        )
        return frame.to_string(index=False, float_format=lambda v: f"{v:.5f}")


def detect_peaks(
    sp: Spectrum,
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
    dc_exclusion: Optional[float] = None,
    omega0: Optional[float] = None,
) -> PeakSet:
    """Local maxima with prominence >= min_prominence * max, outside the DC zone.

    Positions are refined by a three-point parabola through the peak bin and
    its neighbours.
    """
    if not 0 <= min_prominence < 1:
        raise DomainError(f"min_prominence must lie in [0, 1), got {min_prominence}")
    if dc_exclusion is None:
        dc_exclusion = DEFAULT_DC_EXCLUSION_BINS * sp.omega_res
    omega0 = sp.omega0 if omega0 is None else omega0

    mags = np.asarray(sp.magnitudes, dtype=float)
    freqs = np.asarray(sp.frequencies, dtype=float)
    top = float(mags.max()) if mags.size else 0.0
    if top <= 0:
        return PeakSet((), omega0, sp.omega_res, sp.omega_max, dc_exclusion)

    indices, props = find_peaks(mags, prominence=min_prominence * top)
    bin_width = float(freqs[1] - freqs[0]) if freqs.size > 1 else sp.omega_res
    peaks: List[Peak] = []
    for i, prom in zip(indices, props["prominences"]):
        if abs(freqs[i]) < dc_exclusion:
            continue
        offset, height = 0.0, mags[i]
        if 0 < i < mags.size - 1:
            y0, y1, y2 = mags[i - 1], mags[i], mags[i + 1]
            curvature = y0 - 2.0 * y1 + y2
            if curvature != 0:
                offset = float(np.clip(0.5 * (y0 - y2) / curvature, -0.5, 0.5))
                height = y1 - 0.25 * (y0 - y2) * offset
        f = freqs[i] + offset * bin_width
        if abs(f) < dc_exclusion or abs(f) >= sp.omega_max:
            continue
        peaks.append(Peak(float(f), float(height), float(prom)))
    logger.debug("detected %d peaks (omega0=%s)", len(peaks), omega0)
    return PeakSet(tuple(peaks), omega0, sp.omega_res, sp.omega_max, dc_exclusion)


def _default_tol(scans: Sequence[PeakSet], tol_bins: float = DEFAULT_TOL_BINS) -> float:
    return tol_bins * max(s.omega_res for s in scans)


def _check_distinct_pumps(scans: Sequence[PeakSet]) -> None:
    if len(scans) < 2:
        raise DegenerateConfigurationError("at least two scans at different pump settings are required")
    omegas = [s.omega0 for s in scans]
    if any(w is None for w in omegas):
        raise DegenerateConfigurationError("every scan must carry its pump frequency omega0")
    for (i, a), (j, b) in itertools.combinations(enumerate(omegas), 2):
        if abs(a - b) < 1e-12:
            raise DegenerateConfigurationError(
                f"scans {i} and {j} share omega0={a} eV; pump frequencies must differ"
            )


def pair_match(
    a: PeakSet, b: PeakSet, tol: Optional[float] = None, epsilon_i: float = 0.0
) -> MatchReport:
    """Match +-Delta_j peaks of two scans whose separation is +-(omega0_a - omega0_b).

    Each positive peak f_a proposes eps = eps_i + omega0_a +- f_a; the partner
    must sit at |eps - eps_i - omega0_b| in scan b, which also covers a state
    lying between the two pump frequencies. Assignment is greedy by smallest
    residual, ties going to the larger summed prominence.
    """
    _check_distinct_pumps((a, b))
    if tol is None:
        tol = _default_tol((a, b))
    if tol < max(a.omega_res, b.omega_res):
        logger.warning("pair_match tolerance %.3e eV is below the bin width", tol)

    pos_a, pos_b = a.positive(), b.positive()
    fb = np.array([p.frequency for p in pos_b], dtype=float)
    candidates = []
    for ia, pa in enumerate(pos_a):
        if fb.size == 0:
            break
        for sign in (1.0, -1.0):
            eps_a = epsilon_i + a.omega0 + sign * pa.frequency
            delta_b = eps_a - epsilon_i - b.omega0
            residuals = np.abs(fb - abs(delta_b))
            for ib in np.flatnonzero(residuals <= tol):
                pb = pos_b[ib]
                eps_b = epsilon_i + b.omega0 + math.copysign(pb.frequency, delta_b)
                candidates.append(
                    (
                        float(residuals[ib]),
                        -(pa.prominence + pb.prominence),
                        0.5 * (eps_a + eps_b),
                        ia,
                        int(ib),
                        eps_a,
                    )
                )

    candidates.sort()
    used_a, used_b = set(), set()
    pairs: List[MatchedPair] = []
    for residual, _, epsilon, ia, ib, eps_a in candidates:
        if ia in used_a or ib in used_b:
            continue
        used_a.add(ia)
        used_b.add(ib)
        pairs.append(MatchedPair(pos_a[ia], pos_b[ib], eps_a - epsilon_i - a.omega0, epsilon, residual))
    pairs.sort(key=lambda p: p.epsilon)

    labels = []
    for scan, pos, used in ((0, pos_a, used_a), (1, pos_b, used_b)):
        for i, p in enumerate(pos):
            labels.append(FamilyLabel(scan, p.frequency, LABEL_SINGLE if i in used else LABEL_UNCLASSIFIED))
    unmatched = tuple((0, p) for i, p in enumerate(pos_a) if i not in used_a) + tuple(
        (1, p) for i, p in enumerate(pos_b) if i not in used_b
    )
    logger.info("pair_match: %d pairs within tol=%.3e eV", len(pairs), tol)
    return MatchReport(tuple(pairs), tuple(labels), unmatched, tol, (a.omega0, b.omega0))


def classify_families(
    scans: Sequence[PeakSet],
    tol: Optional[float] = None,
    slope_tol: float = SLOPE_TOL,
) -> FamilyClassification:
    """Link peaks across scans into trajectories and label them by slope.

    Every positive peak enters with its mirror so trajectories may cross zero
    frequency. For each slope law the intercept f - law*omega_0 is clustered
    (one peak per scan, at least two scans); the fitted slope must lie within
    `slope_tol` of the law. Trajectories are claimed greedily, longest and
    tightest first; peaks left over are unclassified.
    """
    _check_distinct_pumps(scans)
    if tol is None:
        tol = _default_tol(scans)

    points = []  # (scan, peak index, sign, omega0, signed frequency)
    for s, scan in enumerate(scans):
        for i, p in enumerate(scan.positive()):
            points.append((s, i, 1, scan.omega0, p.frequency))
            points.append((s, i, -1, scan.omega0, -p.frequency))

    proposals: Dict[Tuple[float, frozenset], Trajectory] = {}
    for law in SLOPE_LAWS:
        intercepts = np.array([f - law * w for _, _, _, w, f in points], dtype=float)
        order = np.argsort(intercepts, kind="stable")
        sorted_c = intercepts[order]
        for anchor in order:
            c0 = intercepts[anchor]
            lo = np.searchsorted(sorted_c, c0 - tol, side="left")
            hi = np.searchsorted(sorted_c, c0 + tol, side="right")
            best: Dict[int, int] = {}
            for k in order[lo:hi]:
                s = points[k][0]
                if s not in best or abs(intercepts[k] - c0) < abs(intercepts[best[s]] - c0):
                    best[s] = k
            if len(best) < 2:
                continue
            members = sorted(best.values())
            key = (law, frozenset(members))
            if key in proposals:
                continue
            omegas = np.array([points[k][3] for k in members])
            freqs = np.array([points[k][4] for k in members])
            slope = float(np.polyfit(omegas, freqs, 1)[0])
            if abs(slope - law) > slope_tol:
                continue
            cs = intercepts[members]
            proposals[key] = Trajectory(
                law=law,
                intercept=float(cs.mean()),
                slope=slope,
                residual=float(np.max(np.abs(cs - cs.mean()))),
                members=tuple((points[k][0], points[k][1], points[k][2]) for k in members),
            )

    ranked = sorted(
        proposals.values(),
        key=lambda t: (-t.n_scans, t.residual, abs(t.law), t.law, t.intercept),
    )
    claimed: Dict[Tuple[int, int], Trajectory] = {}
    accepted: List[Trajectory] = []
    for traj in ranked:
        ids = [(s, i) for s, i, _ in traj.members]
        if any(pid in claimed for pid in ids):
            continue
        for pid in ids:
            claimed[pid] = traj
        accepted.append(traj)

    labels = []
    for s, scan in enumerate(scans):
        for i, p in enumerate(scan.positive()):
            traj = claimed.get((s, i))
            if traj is None:
                labels.append(FamilyLabel(s, p.frequency, LABEL_UNCLASSIFIED))
            else:
                labels.append(FamilyLabel(s, p.frequency, traj.label, traj.slope))
    logger.info("classify_families: %d trajectories over %d scans", len(accepted), len(scans))
    return FamilyClassification(tuple(labels), tuple(accepted))


def guess_budget(n_peaks: int, n: int) -> int:
    """Number of peak subsets the educated-guess search has to visit."""
    if n < 0 or n > n_peaks:
        return 0
    return math.comb(n_peaks, n)


def _predicted_positive(deltas: np.ndarray) -> np.ndarray:
    """|Delta_j|, |Delta_j - Delta_k| (j<k), |Delta_j + Delta_k| (j<=k) per row."""
    n = deltas.shape[1]
    cols = [np.abs(deltas)]
    j, k = np.triu_indices(n, k=1)
    if j.size:
        cols.append(np.abs(deltas[:, j] - deltas[:, k]))
    j, k = np.triu_indices(n, k=0)
    cols.append(np.abs(deltas[:, j] + deltas[:, k]))
    return np.concatenate(cols, axis=1)


def educated_guess(
    p: PeakSet,
    n: int,
    tol: Optional[float] = None,
    cap: int = DEFAULT_GUESS_CAP,
    limit: int = 10,
) -> List[GuessCandidate]:
    """Rank n-subsets of positive peaks as candidate detuning sets.

    Each subset is tried with every relative sign pattern (the first detuning
    is fixed positive since the overall sign is unobservable). The score is
    the fraction of predicted positive peaks found among the observed ones;
    coverage is the fraction of observed peaks that the candidate explains.
    """
    observed = np.sort(p.positive_frequencies())
    m = observed.size
    if n < 0 or n > m:
        raise DomainError(f"cannot choose {n} detunings from {m} positive peaks")
    if n == 0:
        return [GuessCandidate((), 1.0, 0.0)]
    budget = guess_budget(m, n)
    if budget > cap:
        raise SearchBudgetError(
            f"educated guessing needs C({m},{n}) = {budget} subsets, above the cap of {cap}; "
            "use pair_match across two pump settings instead"
        )
    if tol is None:
        tol = DEFAULT_TOL_BINS * p.omega_res

    signs = np.array([(1.0,) + s for s in itertools.product((1.0, -1.0), repeat=n - 1)])
    n_signs = signs.shape[0]
    subsets = itertools.combinations(range(m), n)
    pool: List[Tuple[float, float, Tuple[float, ...]]] = []

    while True:
        chunk = np.array(list(itertools.islice(subsets, _GUESS_CHUNK)), dtype=int)
        if chunk.size == 0:
            break
        base = observed[chunk]  # (K, n)
        deltas = (base[:, None, :] * signs[None, :, :]).reshape(-1, n)
        predicted = _predicted_positive(deltas)  # (R, q)
        rows, q = predicted.shape

        idx = np.searchsorted(observed, predicted)
        lo = np.clip(idx - 1, 0, m - 1)
        hi = np.clip(idx, 0, m - 1)
        nearest = np.where(np.abs(predicted - observed[lo]) <= np.abs(predicted - observed[hi]), lo, hi)
        matched = np.abs(predicted - observed[nearest]) <= tol

        score = matched.mean(axis=1)
        covered = np.zeros((rows, m), dtype=bool)
        r = np.repeat(np.arange(rows), q).reshape(rows, q)
        covered[r[matched], nearest[matched]] = True
        coverage = covered.sum(axis=1) / m

        top = np.lexsort((-coverage, -score))[:limit]
        for t in top:
            pool.append((float(score[t]), float(coverage[t]), tuple(float(v) for v in deltas[t])))

    pool.sort(key=lambda c: (-c[0], -c[1]))
    logger.info("educated_guess: %d subsets x %d sign patterns searched", budget, n_signs)
    return [GuessCandidate(d, s, c) for s, c, d in pool[:limit]]


def _nearest(values: np.ndarray, target: float) -> Tuple[Optional[float], float]:
    if values.size == 0:
        return None, math.inf
    i = int(np.argmin(np.abs(values - target)))
    return float(values[i]), float(abs(values[i] - target))


def _consensus(
    epsilon: float,
    scans: Sequence[PeakSet],
    positives: Sequence[np.ndarray],
    tol: float,
    epsilon_i: float = 0.0,
) -> Tuple[bool, List[float], int]:
    """Evidence for an energy across scans.

    A +-Delta_j peak at |eps - eps_i - omega_0| is required in every scan. One
    scan may miss it when the 2*Delta_j partner shows up in every scan that
    can hold it.
    """
    estimates: List[float] = []
    doubles = 0
    reachable = 0
    for scan, freqs in zip(scans, positives):
        delta = epsilon - epsilon_i - scan.omega0
        hit, err = _nearest(freqs, abs(delta))
        if hit is not None and err <= tol:
            estimates.append(epsilon_i + scan.omega0 + math.copysign(hit, delta))
        target = 2.0 * abs(delta)
        if target < scan.omega_max:
            reachable += 1
            hit2, err2 = _nearest(freqs, target)
            if hit2 is not None and err2 <= tol:
                doubles += 1
    singles = len(estimates)
    ok = singles == len(scans) or (
        singles >= max(2, len(scans) - 1) and reachable > 0 and doubles == reachable
    )
    return ok, estimates, singles


def extract_energies(
    scans: Sequence[PeakSet],
    tol: Optional[float] = None,
    epsilon_i: float = 0.0,
) -> ExtractionResult:
    """Recover intermediate-state energies eps_j = eps_i + omega_0 + Delta_j.

    Two scans go through `pair_match`. With three or more scans the
    single-family trajectories of `classify_families` and every raw
    eps_i + omega_0 +- f proposal are kept only when the peaks of all scans agree;
    uncertainty is max(residual, omega_res / 2).
    """
    _check_distinct_pumps(scans)
    if tol is None:
        tol = _default_tol(scans)
    half_bin = 0.5 * max(s.omega_res for s in scans)
    diagnostics: List[str] = []
    empty_scans = [i for i, s in enumerate(scans) if not s.positive()]
    if empty_scans:
        diagnostics.append(f"scans without positive-frequency peaks: {empty_scans}")

    if len(scans) == 2:
        report = pair_match(scans[0], scans[1], tol, epsilon_i)
        found = [
            (pair.epsilon, max(pair.residual, half_bin), 2)
            for pair in report.matched_pairs
            if pair.epsilon > epsilon_i
        ]
        energies = _merge(found, tol)
        if not energies:
            diagnostics.append("no peak pairs separated by the pump-frequency difference")
        classification = classify_families(scans, tol)
        return ExtractionResult(
            tuple(energies), tol, tuple(diagnostics), report=report, classification=classification
        )

    classification = classify_families(scans, tol)
    positives = [s.positive_frequencies() for s in scans]
    proposals = [epsilon_i + t.epsilon for t in classification.trajectories if t.epsilon is not None]
    for scan, freqs in zip(scans, positives):
        for f in freqs:
            proposals.extend((epsilon_i + scan.omega0 + f, epsilon_i + scan.omega0 - f))

    found = []
    for eps in proposals:
        if eps <= epsilon_i:
            continue
        ok, estimates, singles = _consensus(eps, scans, positives, tol, epsilon_i)
        if not ok:
            continue
        refined = float(np.mean(estimates))
        spread = float(np.max(np.abs(np.asarray(estimates) - refined)))
        found.append((refined, max(spread, half_bin), singles))

    energies = _merge(found, tol)
    if not energies:
        diagnostics.append("no energy is supported consistently across the scans")
    logger.info("extract_energies: %d energies from %d scans", len(energies), len(scans))
    return ExtractionResult(tuple(energies), tol, tuple(diagnostics), classification=classification)


def _merge(found: Sequence[Tuple[float, float, int]], tol: float) -> List[RecoveredEnergy]:
    """Collapse estimates closer than tol into one energy."""
    merged: List[RecoveredEnergy] = []
    group: List[Tuple[float, float, int]] = []
    for item in sorted(found):
        if group and item[0] - group[-1][0] > tol:
            merged.append(_collapse(group))
            group = []
        group.append(item)
    if group:
        merged.append(_collapse(group))
    return merged


def _collapse(group: Sequence[Tuple[float, float, int]]) -> RecoveredEnergy:
    eps = np.array([g[0] for g in group])
    centre = float(eps.mean())
    uncertainty = max(max(g[1] for g in group), float(np.max(np.abs(eps - centre))))
    return RecoveredEnergy(centre, uncertainty, max(g[2] for g in group))


def recover(
    spectra: Sequence[Spectrum],
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
    dc_exclusion_bins: float = DEFAULT_DC_EXCLUSION_BINS,
    tol_bins: float = DEFAULT_TOL_BINS,
    epsilon_i: float = 0.0,
) -> Tuple[List[PeakSet], ExtractionResult]:
    """Detect peaks in every spectrum and extract energies from the scans."""
    scans = [detect_peaks(sp, min_prominence, dc_exclusion_bins * sp.omega_res) for sp in spectra]
    tol = tol_bins * max(sp.omega_res for sp in spectra)
    return scans, extract_energies(scans, tol, epsilon_i)


@dataclass(frozen=True)
class RecoveryScore:
    """Comparison of recovered energies with the true ones."""

    complete: bool
    found: int
    false: int
    errors: Tuple[float, ...] = field(default=())

    @property
    def mean_abs_error(self) -> float:
        return float(np.mean(self.errors)) if self.errors else math.nan


def score_recovery(result: ExtractionResult, true_energies: Sequence[float], tol: float) -> RecoveryScore:
    recovered = result.epsilons
    truth = np.asarray(true_energies, dtype=float)
    errors = []
    for e in truth:
        if recovered.size == 0:
            break
        err = float(np.min(np.abs(recovered - e)))
        if err <= tol:
            errors.append(err)
    false = sum(
        1 for r in recovered if truth.size == 0 or float(np.min(np.abs(truth - r))) > tol
    )
    return RecoveryScore(len(errors) == truth.size, len(errors), false, tuple(errors))
