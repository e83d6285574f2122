"""Machine-readable reports: one record per trial plus one summary record.

Trial record fields, in order (``REPORT_FIELDS``):

``record``                 "trial" or "summary"
``experiment``             experiment name
``protocol``               protocol under test
``seed``                   trial seed
``safety_verdict``         safe | violation | no_decision | inapplicable
``all_committed``          every honest replica decided
``committed``              decided values (JSON list)
``epochs_to_commit``       epochs (consensus) or rounds after GST (clock, BBA)
``honest_multicast_count`` logical honest multicasts in the trial
``committee_sizes``        per-phase ``[epoch, honest, total]`` (JSON list)
``corruptions``            replicas corrupted by the adversary
``attack_successes``       adversary successes counted by the module oracle
``adversary``              strategy summary (JSON object)
``metrics``                protocol-specific audit counters (JSON object)

The summary record carries ``record = "summary"`` and a ``summary``
object mapping experiment name to its summary. Wall-clock time is left
out so a report depends only on its config and seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from ..errors import ConfigurationError
from .runner import TrialResult

__all__ = ["REPORT_FIELDS", "trial_record", "emit_report", "emit_traces"]

REPORT_FIELDS = (
    "record",
    "experiment",
    "protocol",
    "seed",
    "safety_verdict",
    "all_committed",
    "committed",
    "epochs_to_commit",
    "honest_multicast_count",
    "committee_sizes",
    "corruptions",
    "attack_successes",
    "adversary",
    "metrics",
)


def _clean(value):
    """Plain JSON types; numpy scalars and non-finite floats made portable."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_clean(v) for v in items]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, bytes):
        return value.hex()
    return value


def _dumps(value) -> str:
    return json.dumps(_clean(value), sort_keys=True, separators=(",", ":"))


def trial_record(result: TrialResult) -> dict:
    rec = {"record": "trial"}
    for name in REPORT_FIELDS[1:]:
        rec[name] = _clean(getattr(result, name))
    return rec


def emit_report(results, format: str, path, summary: dict | None = None) -> Path:
    """Write ``results`` and ``summary`` to ``path`` as jsonl or csv.

    ``results`` holds TrialResult objects, or plain dicts for sweeps that
    have no trials (each dict becomes a ``record = "point"`` row whose
    columns are the dict keys in order).
    """
    if not results:
        raise ConfigurationError("emit_report needs at least one trial result")
    if format not in ("jsonl", "csv"):
        raise ConfigurationError(f"format must be 'jsonl' or 'csv', got {format!r}")
    path = Path(path)
    summary = {} if summary is None else summary
    if isinstance(results[0], TrialResult):
        fields = REPORT_FIELDS
        records = [trial_record(r) for r in results]
    else:
        records = [{"record": "point", **_clean(r)} for r in results]
        fields = tuple(records[0])
    if format == "jsonl":
        lines = [_dumps(rec) for rec in records]
        lines.append(_dumps({"record": "summary", "summary": summary}))
        text = "\n".join(lines) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields + ("summary",))
        for rec in records:
            w.writerow([_cell(rec.get(k)) for k in fields] + [""])
        w.writerow(["summary"] + [""] * (len(fields) - 1) + [_dumps(summary)])
        text = buf.getvalue()
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report: {exc.strerror}", str(path)) from exc
    return path


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (dict, list)):
        return _dumps(value)
    return str(value)


def emit_traces(results: list[TrialResult], path) -> Path | None:
    """Retained event traces, one JSON line per trial; nothing is written when none were kept."""
    kept = [r for r in results if r.trace is not None]
    if not kept:
        return None
    path = Path(path)
    lines = [_dumps({"experiment": r.experiment, "seed": r.seed, "trace": [list(e) for e in r.trace]}) for r in kept]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write traces: {exc.strerror}", str(path)) from exc
    return path
