"""
Atomic writers for run outputs.

Files are written to a temporary sibling and renamed into place, so a crashed
run never leaves a truncated file behind.
"""
import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from app.models.trace import TraceRecord, trace_columns

# Mode of every output file: rw-r--r-- under the process umask, read once at import
_UMASK = os.umask(0o022)
os.umask(_UMASK)
FILE_MODE = 0o644 & ~_UMASK


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.chmod(tmp, FILE_MODE)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_to_csv(trace: Sequence[TraceRecord], n_tiers: int) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=trace_columns(n_tiers), lineterminator="\n")
    writer.writeheader()
    for record in trace:
        writer.writerow(record.as_row())
    return buffer.getvalue()


def rows_to_jsonl(rows: Iterable[Mapping]) -> str:
    return "".join(json.dumps(row) + "\n" for row in rows)


def write_run(
    out_dir: Path,
    trace: Sequence[TraceRecord],
    n_tiers: int,
    summary_json: str,
    adaptations: Sequence[Mapping] = (),
) -> None:
    """Write trace.csv, trace.jsonl, summary.json and adaptations.jsonl."""
    out_dir = Path(out_dir)
    write_atomic(out_dir / "trace.csv", trace_to_csv(trace, n_tiers))
    write_atomic(out_dir / "trace.jsonl", rows_to_jsonl(rec.as_row() for rec in trace))
    write_atomic(out_dir / "summary.json", summary_json)
    write_atomic(out_dir / "adaptations.jsonl", rows_to_jsonl(adaptations))
