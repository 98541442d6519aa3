"""
Binary field snapshots, NDJSON time series and restart checkpoints.

Snapshot layout (all integers unsigned 32-bit, all reals 64-bit, little endian)::

    b"AXMHD1"  version  Nr  Nz  r_max  z_len  t  nfields
    repeat nfields:
        len(name)  name (utf-8)  parity (1 byte: 0 even, 1 odd)  Nr*Nz reals, r fastest

A checkpoint is a snapshot plus a JSON sidecar holding everything else the
run loop needs to continue bit-exactly (config echo, step index, records
so far, the cumulative integrals and the blow-up guard reference).
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

import numpy as np

from .diagnostics import CumulativeIntegrals, DiagnosticRecord
from .evolve import State
from .grid_fields import CylGrid, Parity, ScalarField

MAGIC = b"AXMHD1"
VERSION = 1
_HEADER = struct.Struct("<6sIIIdddI")
_U32 = struct.Struct("<I")
_PARITY_BYTE = {Parity.EVEN: 0, Parity.ODD: 1}


class SnapshotError(ValueError):
    """Malformed or incompatible snapshot file."""


@dataclass(frozen=True, eq=False)
class Snapshot:
    grid: CylGrid
    t: float
    fields: Mapping[str, ScalarField]

    def __post_init__(self):
        for name, f in self.fields.items():
            if f.grid != self.grid:
                raise ValueError(f"field {name!r} lives on a different grid")

    @classmethod
    def from_state(cls, state: State) -> "Snapshot":
        return cls(state.grid, state.t, {"Pi": state.Pi, "Omega": state.Omega})

    def to_state(self, omega_linf0: float) -> State:
        try:
            return State(self.t, self.fields["Pi"], self.fields["Omega"], omega_linf0)
        except KeyError as exc:
            raise SnapshotError(f"snapshot lacks field {exc.args[0]!r}") from None

    def identical(self, other: "Snapshot") -> bool:
        """Bit-level equality of header and every field."""
        if self.grid != other.grid or _bits(self.t) != _bits(other.t):
            return False
        if list(self.fields) != list(other.fields):
            return False
        return all(
            a.parity is b.parity and a.values.tobytes() == b.values.tobytes()
            for a, b in zip(self.fields.values(), other.fields.values())
        )


def _bits(x: float) -> bytes:
    return struct.pack("<d", x)


def encode_snapshot(snap: Snapshot) -> bytes:
    g = snap.grid
    parts = [_HEADER.pack(MAGIC, VERSION, g.Nr, g.Nz, g.r_max, g.z_len, snap.t, len(snap.fields))]
    for name, f in snap.fields.items():
        nb = name.encode("utf-8")
        parts.append(_U32.pack(len(nb)))
        parts.append(nb)
        parts.append(bytes([_PARITY_BYTE[f.parity]]))
        parts.append(np.asarray(f.values, dtype="<f8").tobytes(order="F"))
    return b"".join(parts)


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise SnapshotError("truncated header")
    magic, version, Nr, Nz, r_max, z_len, t, nfields = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    grid = CylGrid(Nr, Nz, r_max, z_len)
    pos = _HEADER.size
    nbytes = 8 * Nr * Nz
    out: dict[str, ScalarField] = {}
    for _ in range(nfields):
        if pos + 4 > len(data):
            raise SnapshotError("truncated field record")
        (ln,) = _U32.unpack_from(data, pos)
        pos += 4
        end = pos + ln + 1 + nbytes
        if end > len(data):
            raise SnapshotError("truncated field record")
        name = data[pos : pos + ln].decode("utf-8")
        pos += ln
        pb = data[pos]
        pos += 1
        if pb not in (0, 1):
            raise SnapshotError(f"bad parity byte {pb} for field {name!r}")
        if name in out:
            raise SnapshotError(f"duplicate field {name!r}")
        vals = np.frombuffer(data, dtype="<f8", count=Nr * Nz, offset=pos).reshape((Nr, Nz), order="F")
        vals = np.ascontiguousarray(vals)
        pos += nbytes
        out[name] = ScalarField(grid, Parity.EVEN if pb == 0 else Parity.ODD, vals)
    if pos != len(data):
        raise SnapshotError(f"{len(data) - pos} trailing bytes")
    return Snapshot(grid, t, out)


def _atomic_write(path: str, data: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_snapshot(path: str, snap: Snapshot) -> None:
    _atomic_write(path, encode_snapshot(snap))


def read_snapshot(path: str) -> Snapshot:
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())


# ---------------------------------------------------------------------------
# NDJSON
# ---------------------------------------------------------------------------


def ndjson_line(obj: Mapping) -> str:
    """One compact JSON object; key order as given, floats via ``repr``."""
    return json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n"


def write_records(fh: IO[str], records: Iterable[DiagnosticRecord]) -> None:
    for rec in records:
        fh.write(ndjson_line(rec.as_dict()))


def read_records(path: str) -> list[DiagnosticRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            obj = json.loads(line)
            if list(obj) != DiagnosticRecord.keys():
                raise ValueError(f"line {n}: unexpected key order")
            out.append(DiagnosticRecord(**obj))
    return out


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


@dataclass
class Checkpoint:
    config_text: str
    step: int
    state: State
    records: list[DiagnosticRecord]
    integrals: CumulativeIntegrals
    extra: dict = field(default_factory=dict)

    def write(self, json_path: str) -> None:
        base = os.path.splitext(json_path)[0]
        snap_path = base + ".axs"
        write_snapshot(snap_path, Snapshot.from_state(self.state))
        doc = {
            "format": "axmhd-checkpoint",
            "version": VERSION,
            "snapshot": os.path.basename(snap_path),
            "step": self.step,
            "omega_linf0": self.state.omega_linf0,
            "config": self.config_text,
            "integrals": self.integrals.to_json(),
            "records": [r.as_dict() for r in self.records],
            "extra": self.extra,
        }
        _atomic_write(json_path, json.dumps(doc, indent=1, allow_nan=False).encode("utf-8"))

    @classmethod
    def read(cls, json_path: str) -> "Checkpoint":
        with open(json_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("format") != "axmhd-checkpoint":
            raise SnapshotError(f"{json_path} is not a checkpoint")
        snap = read_snapshot(os.path.join(os.path.dirname(json_path), doc["snapshot"]))
        return cls(
            doc["config"],
            int(doc["step"]),
            snap.to_state(float(doc["omega_linf0"])),
            [DiagnosticRecord(**r) for r in doc["records"]],
            CumulativeIntegrals.from_json(doc["integrals"]),
            doc.get("extra", {}),
        )
