"""JSON-lines record files, CSV summaries and run directories.

A record file holds one JSON object per line.  Floats are written with 17
significant digits so they read back bit for bit.  Lines starting with '#'
are comments; the writer ends every file with ``#END count=<n>``, so a file
cut short by a crash is recognisable by the missing trailer.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import __version__
from .errors import IncompleteFileError, MalformedRecordError
from .fluctuations import (
    RECORD_FIELDS,
    ExperimentManifest,
    FluctuationRecord,
    ReferenceTable,
    empirical_cdf_from_table,
    ks_statistic,
    moment_summary,
    normal_cdf,
)

HEADER = "# ssklab records v1"
END_PREFIX = "#END count="

_INT_FIELDS = ("n", "sample_index", "base_seed")
_STR_FIELDS = ("ensemble", "regime", "error")


def _encode_value(v) -> str:
    if isinstance(v, float):
        if not math.isfinite(v):
            return json.dumps(str(v))
        return format(v, ".17g")
    if isinstance(v, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_encode_value(x) for x in v) + "]"
    if hasattr(v, "item"):
        return _encode_value(v.item())
    return json.dumps(v)


def encode_record(rec: FluctuationRecord) -> str:
    return _encode_value(rec.to_dict())


def _decode_record(obj: dict) -> FluctuationRecord:
    known = {}
    for key in RECORD_FIELDS:
        if key not in obj:
            continue
        v = obj[key]
        if v is None or key in _STR_FIELDS:
            known[key] = v
        elif key in _INT_FIELDS:
            known[key] = int(v)
        else:
            known[key] = float(v)
    extra = {k: v for k, v in obj.items() if k not in RECORD_FIELDS}
    return FluctuationRecord(extra=extra, **known)


def write_records(path, records: Iterable[FluctuationRecord]) -> int:
    """Write records to ``path`` and return how many were written."""
    count = 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(HEADER + "\n")
            for rec in records:
                fh.write(encode_record(rec) + "\n")
                count += 1
            fh.write(f"{END_PREFIX}{count}\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write records: {exc.strerror}", str(path)) from exc
    return count


def is_complete(path) -> bool:
    """True when the file ends with a trailer whose count matches its records."""
    n_lines = 0
    last = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith(END_PREFIX):
                last = s
                continue
            last = None
            if not s.startswith("#"):
                n_lines += 1
    if last is None:
        return False
    try:
        return int(last[len(END_PREFIX):]) == n_lines
    except ValueError:
        return False


def read_records(path, require_complete: bool = False) -> list[FluctuationRecord]:
    """Inverse of :func:`write_records`.

    Unknown fields are kept in ``FluctuationRecord.extra``.  With
    ``require_complete`` a file lacking its trailer raises
    :class:`IncompleteFileError`.
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                obj = json.loads(s)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise MalformedRecordError(path, lineno, "expected a JSON object")
            missing = [k for k in ("n", "beta", "q", "sample_index") if k not in obj]
            if missing:
                raise MalformedRecordError(path, lineno, f"missing field(s) {', '.join(missing)}")
            try:
                out.append(_decode_record(obj))
            except (TypeError, ValueError) as exc:
                raise MalformedRecordError(path, lineno, str(exc)) from None
    if require_complete and not is_complete(path):
        raise IncompleteFileError(f"{path}: missing end marker, the write was interrupted")
    return out


SUMMARY_STATS = ("y_n", "x_q_scaled", "lambda1_scaled", "tw_stat")
SUMMARY_COLUMNS = (
    ("n", "beta", "q", "count", "errors")
    + tuple(f"{s}_{m}" for s in SUMMARY_STATS for m in ("mean", "var", "skew"))
    + ("ks_y_normal", "ks_x_q_normal", "ks_lambda1_table")
)


def _stat_values(rec: FluctuationRecord, name: str):
    if name == "x_q_scaled":
        if rec.x_q is None:
            return None
        return rec.x_q / math.sqrt(2.0 * math.log(rec.n) / 3.0)
    return getattr(rec, name)


def summarize(records: Iterable[FluctuationRecord], table: ReferenceTable | None = None) -> list[dict]:
    """One row of moments and KS distances per (n, beta, q) cell.

    Values are sorted before any reduction, so the rows do not depend on the
    order of the records.  Entries that cannot be computed are None.
    """
    cells: dict = {}
    for rec in records:
        cells.setdefault((rec.n, rec.beta, rec.q), []).append(rec)
    rows = []
    for key in sorted(cells):
        recs = cells[key]
        good = [r for r in recs if r.ok]
        row = dict(zip(("n", "beta", "q"), key))
        row["count"] = len(good)
        row["errors"] = len(recs) - len(good)
        for name in SUMMARY_STATS:
            vals = sorted(v for v in (_stat_values(r, name) for r in good) if v is not None)
            mean = var = skew = None
            if vals:
                mean = math.fsum(vals) / len(vals)
            if len(vals) >= 2:
                _, var, skew = moment_summary(vals)
                skew = None if math.isnan(skew) else skew
            row[f"{name}_mean"], row[f"{name}_var"], row[f"{name}_skew"] = mean, var, skew
        ys = sorted(r.y_n for r in good if r.y_n is not None)
        xs = sorted(v for v in (_stat_values(r, "x_q_scaled") for r in good) if v is not None)
        ls = sorted(r.lambda1_scaled for r in good if r.lambda1_scaled is not None)
        row["ks_y_normal"] = ks_statistic(ys, normal_cdf) if ys else None
        row["ks_x_q_normal"] = ks_statistic(xs, normal_cdf) if xs else None
        row["ks_lambda1_table"] = (
            ks_statistic(ls, lambda x: empirical_cdf_from_table(table, x)[0]) if table is not None and ls else None
        )
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_summary_csv(path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in SUMMARY_COLUMNS])


def read_summary_csv(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for raw in csv.DictReader(line for line in fh if not line.startswith("#")):
            row = {}
            for k, v in raw.items():
                if v == "":
                    row[k] = None
                elif k in ("n", "count", "errors"):
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows


@dataclass
class RunArtifact:
    """A completed experiment: manifest, records and per-cell summary."""

    manifest: ExperimentManifest
    records: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    tool_version: str = __version__

    @property
    def error_count(self) -> int:
        return sum(1 for r in self.records if not r.ok)


MANIFEST_FILE = "manifest.json"
RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.csv"


def write_run_artifact(directory, art: RunArtifact) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_records(d / RECORDS_FILE, art.records)
    write_summary_csv(d / SUMMARY_FILE, art.summary)
    meta = {
        "tool_version": art.tool_version,
        "manifest": art.manifest.to_dict(),
        "record_count": len(art.records),
        "error_count": art.error_count,
    }
    # the manifest goes last: its presence marks the run as finished
    tmp = d / (MANIFEST_FILE + ".tmp")
    tmp.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, d / MANIFEST_FILE)
    return d


def read_run_artifact(directory) -> RunArtifact:
    d = Path(directory)
    meta_path = d / MANIFEST_FILE
    if not meta_path.exists():
        raise IncompleteFileError(f"{d}: no {MANIFEST_FILE}, the run did not finish")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    records = read_records(d / RECORDS_FILE, require_complete=True)
    summary = read_summary_csv(d / SUMMARY_FILE)
    return RunArtifact(
        manifest=ExperimentManifest.from_dict(meta["manifest"]),
        records=records,
        summary=summary,
        tool_version=meta["tool_version"],
    )
