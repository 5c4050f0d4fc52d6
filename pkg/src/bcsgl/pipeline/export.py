"""Persistence of run records: canonical JSON, CSV tables and a text summary."""

from __future__ import annotations

import csv
import json
import math
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

COEFF_COLUMNS = ("tc", "mu", "D", "lambda0", "lambda1", "lambda2", "lambda3", "kappa")
SWEEP_COLUMNS = (
    "h", "N", "T", "F_min", "F_normal", "deltaF", "gl_energy", "lambda0",
    "ratio", "alpha_distance", "alpha_distance_gl", "iterations", "status",
)


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def canonical_json(record):
    return json.dumps(_plain(record), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _stage_result(record, stage):
    entry = record.get("stages", {}).get(stage)
    return entry.get("result") if entry else None


def summary_text(record):
    lines = [
        f"bcsgl {record['version']}  command={record['command']}  status={record['status']}",
        f"config hash {record['config_hash']}  seed {record['seed']}",
    ]
    tc = _stage_result(record, "tc")
    if tc:
        lines.append(f"[tc]      T_c = {tc['T_c']:.12g}  (lowest eigenvalue {tc['eigenvalue']:.2e}, "
                     f"gap {tc['gap_to_next']:.4g}, s-wave minimal: {tc['sectors']['s_wave_minimal']})")
    co = _stage_result(record, "coeffs")
    if co:
        kappa = "absent" if co["kappa"] is None else f"{co['kappa']:.6g}"
        lines.append(f"[coeffs]  lambda0..3 = {co['lambda0']:.8g}, {co['lambda1']:.8g}, "
                     f"{co['lambda2']:.8g}, {co['lambda3']:.8g}  kappa {kappa}  (D = {co['D']:g})")
    gl = _stage_result(record, "gl-min")
    if gl:
        lines.append(f"[gl-min]  inf E_GL = {gl['energy']:.10g}  max|psi| = {gl['abs_psi']['max']:.6g}")
        if gl.get("critical_D") is not None:
            lines.append(f"          critical D* = {gl['critical_D']:.8g}")
        if gl.get("critical_D_bisection") is not None:
            lines.append(f"          critical D* (bisection) = {gl['critical_D_bisection']:.8g}")
    ver = _stage_result(record, "verify")
    if ver:
        if "skipped" in ver:
            lines.append(f"[verify]  skipped: {ver['skipped']}")
        if "checks" in ver:
            ch = ver["checks"]
            lines.append(f"[verify]  lattice checks at h={ch['h']:g}, N={ch['N']}: pass={ch['pass']} "
                         f"(identity residuals {ch['identity_residual_gibbs']:.1e}, "
                         f"{ch['identity_residual_perturbed']:.1e})")
        if "sweep" in ver:
            lines.append(f"[sweep]   {ver['sweep']['ratio_convention']}")
            for r in sorted(ver["sweep"]["records"], key=lambda r: -r["h"]):
                ratio = "n/a" if r["ratio"] is None else f"{r['ratio']:.6f}"
                dist = "n/a" if r["alpha_distance"] is None else f"{r['alpha_distance']:.3e}"
                lines.append(f"          h={r['h']:<8g} N={r['N']:<5d} ratio={ratio}  pair distance={dist}  "
                             f"[{r['status']}]")
    if record.get("error"):
        e = record["error"]
        lines.append(f"FAILED in stage {e['stage']}: {e['type']}: {e['message']} (exit {e['exit_code']})")
    for note in record.get("notes", []):
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def export(record, out_dir, formats="both"):
    """Write the record; returns the list of files written."""
    if formats not in ("json", "csv", "both"):
        raise ValueError(f"unknown format {formats!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if formats in ("json", "both"):
        p = out / "record.json"
        p.write_text(canonical_json(record))
        written.append(p)
        meta = {
            "written_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "platform": platform.platform(),
            "config_hash": record["config_hash"],
        }
        p = out / "meta.json"
        p.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
        written.append(p)
    if formats in ("csv", "both"):
        co = _stage_result(record, "coeffs")
        if co:
            p = out / "coefficients.csv"
            _write_csv(p, COEFF_COLUMNS, [co])
            written.append(p)
        ver = _stage_result(record, "verify")
        if ver and "sweep" in ver:
            p = out / "sweep.csv"
            rows = sorted(ver["sweep"]["records"], key=lambda r: -r["h"])
            _write_csv(p, SWEEP_COLUMNS, rows)
            written.append(p)
        gl = _stage_result(record, "gl-min")
        if gl:
            for axis, cut in sorted(gl["cuts"].items()):
                p = out / f"psi_cut_{axis}.csv"
                _write_csv(p, ("x", "abs_psi"), [{"x": x, "abs_psi": v} for x, v in zip(cut["x"], cut["abs_psi"])])
                written.append(p)
    p = out / "summary.txt"
    p.write_text(summary_text(record))
    written.append(p)
    return written
