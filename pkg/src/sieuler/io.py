"""Binary snapshot / noise-table formats and CSV writers.

Snapshot ("SIE2"), all little-endian:
    magic b"SIE2" | version u32 | N u32 | count u64 | count * (k1 i32, k2 i32, coeff f64)
records in lexicographic (k1, k2) order.

Trajectory file: magic b"SIET" | version u32 | header length u32 | UTF-8 JSON
header | (n + 1) snapshot frames.

Noise dump ("SIEW"): magic b"SIEW" | version u32 | N u32 | count u64 |
count * (k1 i32, k2 i32, n_fine u64, n_fine * f64).
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .spectral import SpectralField, l2_norm, lp_grid_norm, mode_list
from .stepper import Trajectory

FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sIIQ")
_RECORD = np.dtype([("k1", "<i4"), ("k2", "<i4"), ("coeff", "<f8")])


class FormatError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


def snapshot_bytes(xi: SpectralField) -> bytes:
    modes = mode_list(xi.N)
    rec = np.empty(len(modes), dtype=_RECORD)
    rec["k1"] = [m[0] for m in modes]
    rec["k2"] = [m[1] for m in modes]
    rec["coeff"] = [xi.coeffs[k1 + xi.N, k2 + xi.N] for k1, k2 in modes]
    return _HEAD.pack(b"SIE2", FORMAT_VERSION, xi.N, len(modes)) + rec.tobytes()


def _read_exact(f: BinaryIO, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file: wanted {n} bytes, got {len(data)}")
    return data


def read_snapshot_from(f: BinaryIO) -> SpectralField:
    magic, version, N, count = _HEAD.unpack(_read_exact(f, _HEAD.size))
    if magic != b"SIE2":
        raise FormatError(f"bad snapshot magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    rec = np.frombuffer(_read_exact(f, count * _RECORD.itemsize), dtype=_RECORD)
    if N < 1:
        raise FormatError(f"invalid truncation N={N}")
    keys = list(zip(rec["k1"].tolist(), rec["k2"].tolist()))
    if keys != sorted(keys):
        raise FormatError("snapshot records are not in lexicographic order")
    coeffs = np.zeros((2 * N + 1, 2 * N + 1))
    for (k1, k2), c in zip(keys, rec["coeff"]):
        if (k1, k2) == (0, 0) or max(abs(k1), abs(k2)) > N:
            raise FormatError(f"record mode ({k1}, {k2}) outside Lambda_{N}")
        coeffs[k1 + N, k2 + N] = c
    return SpectralField(N, coeffs)


def write_snapshot(path, xi: SpectralField) -> None:
    Path(path).write_bytes(snapshot_bytes(xi))


def read_snapshot(path) -> SpectralField:
    with open(path, "rb") as f:
        return read_snapshot_from(f)


def write_trajectory(path, traj: Trajectory) -> None:
    header = json.dumps(traj.meta, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(b"SIET" + struct.pack("<II", FORMAT_VERSION, len(header)) + header)
        for xi in traj.states:
            f.write(snapshot_bytes(xi))


def read_trajectory(path) -> tuple[dict, list[SpectralField]]:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4)
        if magic != b"SIET":
            raise FormatError(f"bad trajectory magic {magic!r}")
        version, hlen = struct.unpack("<II", _read_exact(f, 8))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported trajectory version {version}")
        meta = json.loads(_read_exact(f, hlen))
        states = [read_snapshot_from(f) for _ in range(int(meta["n"]) + 1)]
    return meta, states


# ---------------------------------------------------------------------------
# noise tables
# ---------------------------------------------------------------------------


def write_noise_table(path, table) -> None:
    N, n = table.N, table.n_fine
    modes = mode_list(N)
    fine = table.beta[0]
    with open(path, "wb") as f:
        f.write(_HEAD.pack(b"SIEW", FORMAT_VERSION, N, len(modes)))
        for k1, k2 in modes:
            f.write(struct.pack("<iiQ", k1, k2, n))
            f.write(np.ascontiguousarray(fine[:, k1 + N, k2 + N], dtype="<f8").tobytes())


def read_noise_table(path) -> tuple[int, dict]:
    """Returns (N, {mode: finest increments})."""
    out = {}
    with open(path, "rb") as f:
        magic, version, N, count = _HEAD.unpack(_read_exact(f, _HEAD.size))
        if magic != b"SIEW":
            raise FormatError(f"bad noise-table magic {magic!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported noise-table version {version}")
        for _ in range(count):
            k1, k2, n = struct.unpack("<iiQ", _read_exact(f, 16))
            out[(k1, k2)] = np.frombuffer(_read_exact(f, 8 * n), dtype="<f8").copy()
    return N, out


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def write_error_csv(path, report) -> None:
    rows = []
    for p in report.paths:
        if p.error is not None:
            continue
        for n, tau, e, eu, ep, eo in zip(report.cfg.levels, p.taus, p.sup_l2, p.sup_u_h1, p.sup_pi_h1, p.sup_obs_h1):
            rows.append([p.path_id, n, float(tau), float(e), float(eu), float(ep), float(eo)])
    header = ["path_id", "level", "tau", "sup_l2_error", "sup_u_h1_error", "sup_pi_h1_error", "sup_obs_h1_error"]
    _write_csv(path, header, rows)


def write_summary_csv(path, report) -> None:
    header = ["kind", "key", "n", "tau", "mean_sup_l2", "median_sup_l2", "max_sup_l2", "slope", "intercept", "r2"]
    rows = []
    for j, agg in enumerate(report.aggregates()):
        rows.append(["level", j, agg["n"], agg["tau"], agg["mean"], agg["median"], agg["max"], "", "", ""])
    fits = [(str(pid), fit) for pid, fit in sorted(report.fits.items())] + [("pooled", report.pooled)]
    for key, fit in fits:
        if fit is None:
            continue
        if fit.degenerate:
            rows.append(["fit", key, "", "", "", "", "", "degenerate", "", ""])
        else:
            rows.append(["fit", key, "", "", "", "", "", fit.slope, fit.intercept, fit.r2])
    _write_csv(path, header, rows)


def write_exceedance_csv(path, table) -> None:
    header = ["n", "tau", "beta", "exceed", "paths", "fraction", "ci_low", "ci_high"]
    rows = [[r["n"], float(r["tau"]), float(r["beta"]), r["exceed"], r["paths"], float(r["fraction"]), float(r["ci_low"]), float(r["ci_high"])] for r in table.rows]
    _write_csv(path, header, rows)


def write_diagnostics_csv(path, traj: Trajectory) -> None:
    header = ["step", "t", "l2", "l4", "method", "iterations", "residual"]
    x0 = traj.states[0]
    if traj.diagnostics is None:
        header = ["step", "t", "l2"]
        rows = [[i, float(t), l2_norm(x)] for i, (t, x) in enumerate(zip(traj.times, traj.states))]
        _write_csv(path, header, rows)
        return
    rows = [[0, float(traj.times[0]), l2_norm(x0), lp_grid_norm(x0, 4), "", "", ""]]
    for d in traj.diagnostics:
        rows.append([d.step, float(traj.times[d.step]), float(d.l2), float(d.l4), d.method, d.iterations, float(d.residual)])
    _write_csv(path, header, rows)
