"""Count-rate scan and g2 histogram records with their CSV formats.

ScanTrace CSV::

    # pump_power_uW: 640
    # label: NVb
    # integration_time_s: 1.0
    position_nm,rate_cps,stderr_cps
    -200,1234.5,12.1
    ...

G2Histogram CSV::

    # kind: normalized        (or: coincidences)
    tau_ns,value

Saturation curve CSV::

    # label: NVa
    pump_power_uW,rate_cps[,stderr_cps]
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class ScanTrace:
    positions: np.ndarray
    rates: np.ndarray
    stderr: np.ndarray | None = None
    pump_power: float | None = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if pos.ndim != 1 or pos.shape != rates.shape:
            raise TraceError("positions and rates must be 1-D arrays of equal length")
        if len(pos) > 1:
            step = np.diff(pos)
            if not (np.all(step > 0) or np.all(step < 0)):
                raise TraceError("positions must be strictly monotone")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "rates", rates)
        if self.stderr is not None:
            err = np.asarray(self.stderr, dtype=float)
            if err.shape != pos.shape:
                raise TraceError("stderr must match positions in length")
            object.__setattr__(self, "stderr", err)

    def __len__(self):
        return len(self.positions)

    def with_rates(self, rates, stderr=None, **kw) -> "ScanTrace":
        return replace(self, rates=rates, stderr=stderr, **kw)


@dataclass(frozen=True)
class G2Histogram:
    tau: np.ndarray
    values: np.ndarray
    kind: str = "normalized"

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if tau.shape != vals.shape or tau.ndim != 1:
            raise TraceError("tau and values must be 1-D arrays of equal length")
        if len(tau) > 1 and not np.all(np.diff(tau) > 0):
            raise TraceError("tau grid must be strictly increasing")
        if self.kind not in ("normalized", "coincidences"):
            raise TraceError(f"kind must be 'normalized' or 'coincidences', got {self.kind!r}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SaturationCurve:
    powers: np.ndarray
    rates: np.ndarray
    stderr: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        P = np.asarray(self.powers, dtype=float)
        R = np.asarray(self.rates, dtype=float)
        if P.ndim != 1 or P.shape != R.shape:
            raise TraceError("powers and rates must be 1-D arrays of equal length")
        object.__setattr__(self, "powers", P)
        object.__setattr__(self, "rates", R)
        if self.stderr is not None:
            err = np.asarray(self.stderr, dtype=float)
            if err.shape != P.shape:
                raise TraceError("stderr must match powers in length")
            object.__setattr__(self, "stderr", err)


def file_digest(path: str | Path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _split_header(text: str, path) -> tuple[dict, list[str], int]:
    meta = {}
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if not sep:
                raise TraceError(f"{path}:{i + 1}: header lines must read '# key: value'")
            meta[key.strip()] = value.strip()
            body_start = i + 1
        elif line.strip():
            break
    return meta, lines, body_start


def _parse_rows(lines, start, path, columns):
    header = lines[start].strip().split(",")
    if header[: len(columns[0])] != columns[0]:
        raise TraceError(f"{path}:{start + 1}: expected columns {','.join(columns[0])}")
    allowed = len(columns[0]) + len(columns[1])
    if len(header) > allowed or header[len(columns[0]):] != columns[1][: len(header) - len(columns[0])]:
        raise TraceError(f"{path}:{start + 1}: unexpected columns {lines[start].strip()}")
    rows = []
    for i in range(start + 1, len(lines)):
        line = lines[i].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise TraceError(f"{path}:{i + 1}: expected {len(header)} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise TraceError(f"{path}:{i + 1}: non-numeric field in {line!r}") from None
    if not rows:
        raise TraceError(f"{path}: no data rows")
    return header, np.array(rows)


def read_trace(path: str | Path) -> ScanTrace:
    path = Path(path)
    meta, lines, start = _split_header(path.read_text(), path)
    header, data = _parse_rows(lines, start, path, (["position_nm", "rate_cps"], ["stderr_cps"]))
    pump = meta.get("pump_power_uW")
    try:
        trace = ScanTrace(
            data[:, 0],
            data[:, 1],
            data[:, 2] if len(header) == 3 else None,
            float(pump) if pump not in (None, "") else None,
            meta.get("label", path.stem),
            meta,
        )
    except TraceError as exc:
        raise TraceError(f"{path}: {exc}") from None
    return trace


def format_trace(trace: ScanTrace, extra_meta: dict | None = None) -> str:
    buf = io.StringIO()
    meta = {}
    if trace.pump_power is not None:
        meta["pump_power_uW"] = _num(trace.pump_power)
    meta["label"] = trace.label
    for k, v in {**trace.meta, **(extra_meta or {})}.items():
        meta.setdefault(k, v)
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    if trace.stderr is None:
        buf.write("position_nm,rate_cps\n")
        for x, r in zip(trace.positions, trace.rates):
            buf.write(f"{_num(x)},{_num(r)}\n")
    else:
        buf.write("position_nm,rate_cps,stderr_cps\n")
        for x, r, e in zip(trace.positions, trace.rates, trace.stderr):
            buf.write(f"{_num(x)},{_num(r)},{_num(e)}\n")
    return buf.getvalue()


def write_trace(trace: ScanTrace, path: str | Path, extra_meta: dict | None = None) -> None:
    Path(path).write_text(format_trace(trace, extra_meta))


def read_g2(path: str | Path) -> G2Histogram:
    path = Path(path)
    meta, lines, start = _split_header(path.read_text(), path)
    _, data = _parse_rows(lines, start, path, (["tau_ns", "value"], []))
    try:
        return G2Histogram(data[:, 0], data[:, 1], meta.get("kind", "normalized"))
    except TraceError as exc:
        raise TraceError(f"{path}: {exc}") from None


def write_g2(hist: G2Histogram, path: str | Path) -> None:
    rows = "".join(f"{_num(t)},{_num(v)}\n" for t, v in zip(hist.tau, hist.values))
    Path(path).write_text(f"# kind: {hist.kind}\ntau_ns,value\n" + rows)


def read_saturation(path: str | Path) -> SaturationCurve:
    path = Path(path)
    meta, lines, start = _split_header(path.read_text(), path)
    header, data = _parse_rows(lines, start, path, (["pump_power_uW", "rate_cps"], ["stderr_cps"]))
    return SaturationCurve(data[:, 0], data[:, 1], data[:, 2] if len(header) == 3 else None,
                           meta.get("label", path.stem))


def write_saturation(curve: SaturationCurve, path: str | Path) -> None:
    lines = [f"# label: {curve.label}"]
    if curve.stderr is None:
        lines.append("pump_power_uW,rate_cps")
        lines += [f"{_num(p)},{_num(r)}" for p, r in zip(curve.powers, curve.rates)]
    else:
        lines.append("pump_power_uW,rate_cps,stderr_cps")
        lines += [f"{_num(p)},{_num(r)},{_num(e)}" for p, r, e in zip(curve.powers, curve.rates, curve.stderr)]
    Path(path).write_text("\n".join(lines) + "\n")


def _num(x) -> str:
    # shortest round-trip repr keeps outputs byte-stable
    return repr(float(x))
