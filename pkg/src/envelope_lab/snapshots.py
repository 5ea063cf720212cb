"""Binary snapshot dumps with a JSON sidecar.

Each record is little-endian: time (float64), n (uint32), then n complex
values stored as (real, imag) float64 pairs. Amplitude states write two
consecutive records per snapshot, psi then r. The sidecar holds the grid,
eps, scheme, field names and the sha256 of the binary file.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .solvers import AmplitudeState, KGState, NLSState, Trajectory
from .spectral import Field, TorusGrid

_HEADER = struct.Struct("<dI")


def _fields_of(state):
    if isinstance(state, KGState):
        return ("W",), (state.W,)
    if isinstance(state, AmplitudeState):
        return ("psi", "r"), (state.psi, state.r)
    if isinstance(state, NLSState):
        return ("psi",), (state.psi,)
    raise TypeError(f"cannot dump {type(state).__name__}")


def encode_record(t: float, values: np.ndarray) -> bytes:
    vals = np.ascontiguousarray(values, dtype="<c16")
    return _HEADER.pack(float(t), vals.size) + vals.tobytes()


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_trajectory(traj: Trajectory, path, scheme: str | None = None) -> tuple[Path, Path]:
    """Write ``path`` (binary records of physical values) and ``path + '.json'``."""
    path = Path(path)
    if not len(traj):
        raise ValueError("empty trajectory")
    names, first = _fields_of(traj[0])
    grid = first[0].grid
    chunks = []
    for st in traj:
        for f in _fields_of(st)[1]:
            chunks.append(encode_record(st.t, f.values))
    blob = b"".join(chunks)
    _atomic_write(path, blob)
    eps = getattr(traj[0], "eps", None)
    sidecar = {
        "format": "envelope-lab-snapshots/1",
        "state": type(traj[0]).__name__,
        "fields": list(names),
        "grid": {"length": grid.length, "n": grid.n},
        "eps": eps,
        "scheme": scheme if scheme is not None else traj.meta.get("scheme"),
        "records": len(chunks),
        "sha256": hashlib.sha256(blob).hexdigest(),
    }
    side = path.with_name(path.name + ".json")
    _atomic_write(side, (json.dumps(sidecar, indent=2, sort_keys=True) + "\n").encode())
    return path, side


def read_records(path) -> list[tuple[float, np.ndarray]]:
    data = Path(path).read_bytes()
    out, pos = [], 0
    while pos < len(data):
        if pos + _HEADER.size > len(data):
            raise ValueError(f"{path}: truncated record header at byte {pos}")
        t, n = _HEADER.unpack_from(data, pos)
        pos += _HEADER.size
        end = pos + 16 * n
        if end > len(data):
            raise ValueError(f"{path}: truncated record body at byte {pos}")
        out.append((t, np.frombuffer(data[pos:end], dtype="<c16").astype(complex)))
        pos = end
    return out


def load_trajectory(path, verify: bool = True) -> Trajectory:
    """Read a dump back into states; checks the sidecar hash when ``verify``."""
    path = Path(path)
    side = json.loads(path.with_name(path.name + ".json").read_text())
    if verify and hashlib.sha256(path.read_bytes()).hexdigest() != side["sha256"]:
        raise ValueError(f"{path}: content hash does not match its sidecar")
    grid = TorusGrid(side["grid"]["length"], side["grid"]["n"])
    recs = read_records(path)
    k = len(side["fields"])
    states = []
    for i in range(0, len(recs), k):
        t = recs[i][0]
        fields = [Field(grid, v) for _, v in recs[i:i + k]]
        if side["state"] == "KGState":
            states.append(KGState(t, fields[0], side["eps"]))
        elif side["state"] == "AmplitudeState":
            states.append(AmplitudeState(t, fields[0], fields[1], side["eps"]))
        else:
            states.append(NLSState(t, fields[0]))
    return Trajectory(states, {"scheme": side["scheme"]})


__all__ = ["dump_trajectory", "load_trajectory", "read_records", "encode_record"]
