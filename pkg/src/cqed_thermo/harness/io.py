"""CSV/JSON output with checksummed manifests.

Floats are written with 17 significant digits so every value round-trips
exactly. Nothing run-environment specific (threads, timings, paths) goes into
the files, which keeps them byte-identical across thread counts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

TRAJECTORY_COLUMNS = ("traj_id", "t_us", "current", "U", "W", "Q", "Sigma")
ENDPOINT_COLUMNS = ("traj_id", "n", "m", "eps_n", "eps_m", "log_pF", "log_pB", "Sigma_final")


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool,)):
        return str(int(v))
    if isinstance(v, int) or (hasattr(v, "dtype") and v.dtype.kind in "iu"):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[float | None]]]:
    """Header plus rows parsed as floats (empty cells become None)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(c) if c else None for c in row] for row in r]
    return header, rows


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _json_safe(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path: Path, data) -> None:
    Path(path).write_text(json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n")


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def trajectory_rows(records):
    for r in records:
        for i, t in enumerate(r.times):
            yield (r.traj_id, t, r.currents[i], r.energy[i], r.work[i], r.heat[i], r.sigma[i])


def endpoint_rows(records):
    for r in records:
        yield (r.traj_id, r.n, r.m, r.eps_n, r.eps_m, r.log_pF, r.log_pB, r.sigma_final)


@dataclass(frozen=True)
class OutputBundle:
    directory: Path
    checksums: dict[str, str]

    @property
    def files(self) -> list[Path]:
        return [self.directory / name for name in self.checksums]

    def verify(self) -> bool:
        return all(sha256(self.directory / n) == h for n, h in self.checksums.items())


def write_outputs(records, analyses, directory, provenance=None) -> OutputBundle:
    """Write records (if any), analysis artifacts and manifest.json.

    ``analyses`` may hold ``tables`` (file name -> (header, rows)) and a
    ``summary`` dict. The manifest carries the sha256 of every other file
    and the ``provenance`` dict.
    """
    analyses = analyses or {}
    tables, summary = analyses.get("tables"), analyses.get("summary")
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    names = []
    if records is not None:
        write_csv(out / "trajectories.csv", TRAJECTORY_COLUMNS, trajectory_rows(records))
        write_csv(out / "endpoints.csv", ENDPOINT_COLUMNS, endpoint_rows(records))
        names += ["trajectories.csv", "endpoints.csv"]
    for name, (header, rows) in (tables or {}).items():
        write_csv(out / name, header, rows)
        names.append(name)
    if summary is not None:
        write_json(out / "summary.json", summary)
        names.append("summary.json")
    checksums = {n: sha256(out / n) for n in names}
    write_json(out / "manifest.json", {"files": checksums, **(provenance or {})})
    return OutputBundle(out, checksums)
