"""
Output artifacts: CSV axes data, JSON reports and SVG plots.

Every file carries the config hash. Writes go to a temporary file in the
target directory and are moved into place with os.replace.
"""

import hashlib
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from etpa.config import ExperimentConfig  # noqa: E402
from etpa.physics_core import FAMILY_SINGLE, PredictedFrequencies  # noqa: E402
from etpa.scan_engine import Spectrum  # noqa: E402
from etpa.spectral_analysis import PeakSet  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def atomic_write(path: PathLike, data: Union[str, bytes]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.debug("wrote %s", path)
    return path


def _format_meta(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: PathLike, frame: pd.DataFrame, metadata: Dict[str, Any], digest: str) -> Path:
    """CSV with `# key=value` comment lines ahead of the header row."""
    lines = [f"# config_hash={digest}"]
    lines.extend(f"# {key}={_format_meta(value)}" for key, value in metadata.items())
    body = frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")
    return atomic_write(path, "\n".join(lines) + "\n" + body)


def read_csv(path: PathLike) -> Tuple[pd.DataFrame, Dict[str, str]]:
    metadata: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            metadata[key] = value
    return pd.read_csv(path, comment="#"), metadata


def write_json(path: PathLike, data: Dict[str, Any], digest: str) -> Path:
    document = {"config_hash": digest, **data}
    return atomic_write(path, json.dumps(document, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def write_text(path: PathLike, text: str, digest: str) -> Path:
    return atomic_write(path, f"config_hash: {digest}\n\n{text.rstrip()}\n")


def _save_svg(fig, path: PathLike, digest: str) -> Path:
    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": digest}):
        fig.savefig(buffer, format="svg", metadata={"Date": None, "Description": f"config_hash={digest}"})
    plt.close(fig)
    return atomic_write(path, buffer.getvalue())


def plot_spectrum(
    path: PathLike,
    sp: Spectrum,
    digest: str,
    peaks: Optional[PeakSet] = None,
    predicted: Optional[PredictedFrequencies] = None,
    title: str = "",
) -> Path:
    """Spectrum with predicted positions and detected peaks marked."""
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(sp.frequencies, sp.magnitudes, color="black", linewidth=0.8)
    if predicted is not None:
        for f, family in zip(predicted.frequencies, predicted.families):
            if f == 0.0:
                continue
            single = family == FAMILY_SINGLE
            ax.axvline(
                f,
                color="tab:red" if single else "tab:blue",
                linestyle="-" if single else ":",
                linewidth=0.8,
                alpha=0.7,
            )
    if peaks is not None and len(peaks):
        ax.scatter(
            peaks.frequencies,
            [p.magnitude for p in peaks.peaks],
            facecolors="none",
            edgecolors="tab:green",
            s=40,
            zorder=3,
        )
    ax.set_xlabel(r"$\omega$ (eV)")
    ax.set_ylabel("|DFT| (arb. units)")
    ax.set_title(title)
    fig.tight_layout()
    return _save_svg(fig, path, digest)


def plot_pump_map(path: PathLike, spectra: Sequence[Spectrum], digest: str) -> Path:
    """Spectra stacked at their pump frequency; slope families show as straight lines."""
    fig, ax = plt.subplots(figsize=(9, 5))
    omegas = sorted(sp.omega0 for sp in spectra)
    step = min(np.diff(omegas)) if len(omegas) > 1 else 0.1
    for sp in spectra:
        top = float(np.max(sp.magnitudes)) or 1.0
        ax.plot(sp.frequencies, sp.omega0 + 0.8 * step * sp.magnitudes / top, color="black", linewidth=0.6)
    ax.set_xlabel(r"$\omega$ (eV)")
    ax.set_ylabel(r"$\omega_0$ (eV)")
    fig.tight_layout()
    return _save_svg(fig, path, digest)


def plot_ensemble(path: PathLike, spectra: Sequence[Spectrum], digest: str, title: str = "") -> Path:
    """Normalised spectra of an ensemble of systems, one stacked row each."""
    fig, ax = plt.subplots(figsize=(9, 1 + 0.6 * len(spectra)))
    for row, sp in enumerate(spectra):
        top = float(np.max(sp.magnitudes)) or 1.0
        ax.plot(sp.frequencies, row + 0.9 * sp.magnitudes / top, color="black", linewidth=0.6)
    ax.set_yticks(range(len(spectra)))
    ax.set_xlabel(r"$\omega$ (eV)")
    ax.set_ylabel("system")
    ax.set_title(title)
    fig.tight_layout()
    return _save_svg(fig, path, digest)
