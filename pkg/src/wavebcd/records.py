"""CSV and JSON formats for traces, profiles, heatmaps and run summaries.

Trace CSV, one row per iteration::

    iter,time_s,objective,mask,norm_b0,...,norm_bJ,eval_s,prob_b0,...,prob_bJ

``mask`` is a bitstring with block 0 first.  ``eval_s`` is the cumulative
time spent evaluating the objective (subtract it from ``time_s`` for pure
solver time).  ``prob_b*`` are empty for non-adaptive policies.

Profile CSV: ``method,beta,rho``.  Heatmap CSV: ``block,iter,frequency``.

Floats are written with ``repr`` so that parse and re-emit is lossless.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .metrics import ActivationHeatmap, ProfileCurve
from .solver import IterationRecord, RunTrace

__all__ = [
    "trace_header",
    "write_trace_csv",
    "read_trace_csv",
    "write_summary",
    "read_summary",
    "load_run",
    "write_profile_csv",
    "read_profile_csv",
    "write_heatmap_csv",
    "read_heatmap_csv",
    "fmt",
]


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def trace_header(n_blocks):
    return (
        ["iter", "time_s", "objective", "mask"]
        + [f"norm_b{i}" for i in range(n_blocks)]
        + ["eval_s"]
        + [f"prob_b{i}" for i in range(n_blocks)]
    )


def write_trace_csv(path, trace):
    n_blocks = len(trace.records[0].mask) if trace.records else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace_header(n_blocks))
        for r in trace.records:
            probs = r.probabilities if r.probabilities is not None else [None] * n_blocks
            mask = "".join("1" if b else "0" for b in r.mask)
            writer.writerow(
                [r.k, fmt(r.time_s), fmt(r.objective), mask]
                + [fmt(v) for v in r.norms]
                + [fmt(r.eval_s)]
                + [fmt(v) for v in probs]
            )


def read_trace_csv(path):
    """Parse a trace CSV into a list of :class:`IterationRecord`."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError:
        raise DataError(f"missing trace file {path}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:4] != ["iter", "time_s", "objective", "mask"]:
            raise DataError(f"{path}: unexpected trace header {header}")
        n_blocks = (len(header) - 5) // 2
        if header != trace_header(n_blocks):
            raise DataError(f"{path}: unexpected trace header {header}")
        records = []
        for row in reader:
            try:
                norms = np.array([float(v) for v in row[4 : 4 + n_blocks]])
                probs_raw = row[5 + n_blocks :]
                probs = None if all(v == "" for v in probs_raw) else np.array([float(v) for v in probs_raw])
                mask = np.array([c == "1" for c in row[3]], dtype=bool)
                records.append(
                    IterationRecord(int(row[0]), float(row[1]), float(row[4 + n_blocks]), float(row[2]), mask, norms, probs)
                )
            except (ValueError, IndexError):
                raise DataError(f"{path}: malformed row {row}") from None
    return records


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def write_summary(path, trace, psnr_db=None, extra=None):
    summary = {
        "config": trace.config,
        "status": trace.status,
        "iterations": len(trace.records),
        "initial_objective": _json_float(trace.initial_objective),
        "final_objective": _json_float(trace.final_objective),
        "psnr_db": _json_float(psnr_db),
        "total_time_s": _json_float(trace.total_time_s),
        "solver_time_s": _json_float(trace.records[-1].solver_time_s if trace.records else 0.0),
    }
    if extra:
        summary.update(extra)
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def read_summary(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError:
        raise DataError(f"missing summary file {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def load_run(csv_path):
    """Rebuild a :class:`RunTrace` (without iterates) from ``X.csv`` and ``X.json``."""
    csv_path = Path(csv_path)
    summary = read_summary(csv_path.with_suffix(".json"))
    records = read_trace_csv(csv_path)
    return RunTrace(records, None, summary.get("config", {}), float(summary["initial_objective"]), summary.get("status", ""))


def write_profile_csv(path, curves):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "beta", "rho"])
        for name, curve in curves.items():
            for b, r in zip(curve.betas, curve.rhos):
                writer.writerow([name, fmt(b), fmt(r)])


def read_profile_csv(path):
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != ["method", "beta", "rho"]:
            raise DataError(f"{path}: unexpected profile header")
        for method, beta, rho in reader:
            rows.setdefault(method, []).append((float(beta), float(rho)))
    return {
        m: ProfileCurve(m, np.array([b for b, _ in pts]), np.array([r for _, r in pts]))
        for m, pts in rows.items()
    }


def write_heatmap_csv(path, heatmap):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["block", "iter", "frequency"])
        f = heatmap.frequencies
        for i in range(f.shape[0]):
            for k in range(f.shape[1]):
                writer.writerow([i, k, fmt(f[i, k])])


def read_heatmap_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != ["block", "iter", "frequency"]:
            raise DataError(f"{path}: unexpected heatmap header")
        rows = [(int(b), int(k), float(v)) for b, k, v in reader]
    if not rows:
        raise DataError(f"{path}: empty heatmap")
    f = np.zeros((max(r[0] for r in rows) + 1, max(r[1] for r in rows) + 1))
    for b, k, v in rows:
        f[b, k] = v
    return ActivationHeatmap(f)
