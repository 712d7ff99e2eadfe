"""
Plot-ready output files: fixed column order, 12 significant digits, written atomically.
"""

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np

from klein_fv.fv import FVField, charge_density

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
TIMESERIES_HEADER = ("t", "Q_total", "Q_left", "Q_right", "max_abs_psi")
SNAPSHOT_HEADER = ("x", "re_phi", "im_phi", "re_chi", "im_chi", "rho")
SWEEP_HEADER = ("V0", "R", "T", "regime", "error")


def format_number(value: float) -> str:
    """12 significant digits; independent of the locale."""
    value = float(value)
    if value == 0.0:
        # drop the sign of -0.0
        return "0"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def rounded(value: float) -> float:
    """The float that format_number prints, for JSON records."""
    return float(format_number(value))


def _jsonable(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return rounded(value) if math.isfinite(value) else str(float(value))
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


def write_atomic(path: Path, text: str) -> Path:
    """Writes to a temporary file in the target directory, then renames it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as tmp:
            tmp.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info("Wrote %s", path)
    return path


def write_json(path: Path, record: Mapping[str, Any]) -> Path:
    return write_atomic(path, json.dumps(_jsonable(record), indent=2) + "\n")


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Delimited text; floats go through format_number, None becomes an empty cell."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if cell is None else cell if isinstance(cell, str) else format_number(cell)
                         for cell in row])
    return write_atomic(path, buffer.getvalue())


def snapshot_rows(field_: FVField) -> List[Sequence[float]]:
    rho = charge_density(field_)
    x = field_.grid.points()
    return [(x[i], field_.phi[i].real, field_.phi[i].imag, field_.chi[i].real, field_.chi[i].imag, rho[i])
            for i in range(field_.grid.n_points)]


def write_snapshot(path: Path, field_: FVField) -> Path:
    return write_table(path, SNAPSHOT_HEADER, snapshot_rows(field_))


def sha256_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Config echo, version, timing, check results and a digest per output file."""

    command: str
    config: Dict[str, Any]
    version: str
    duration_s: float
    checks: Dict[str, bool] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def for_outputs(cls, command: str, config: Dict[str, Any], version: str, duration_s: float,
                    checks: Dict[str, bool], summary: Dict[str, Any], paths: Sequence[Path],
                    root: Path) -> "RunManifest":
        outputs = {Path(p).relative_to(root).as_posix(): sha256_digest(p) for p in paths}
        return cls(command, config, version, duration_s, dict(checks), dict(summary), outputs)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "version": self.version,
            "duration_s": self.duration_s,
            "passed": self.passed,
            "checks": self.checks,
            "summary": self.summary,
            "outputs": self.outputs,
            "config": self.config,
        }

    def write(self, path: Path) -> Path:
        record = _jsonable(self.to_mapping())
        # the echo keeps full precision so it re-parses to the same configuration
        record["config"] = self.config
        return write_atomic(path, json.dumps(record, indent=2) + "\n")
