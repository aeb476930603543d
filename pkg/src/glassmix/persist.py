"""File formats and reproducibility manifests.

CSV artifacts are RFC-4180 (CRLF, mandatory header) with '.' decimal
separator and 17-significant-digit floats, so doubles round-trip losslessly.
Energy tables serialize as little-endian float64 arrays behind an 8-byte
header carrying n as an unsigned 64-bit integer.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import SCHEMA_VERSION, __version__
from .errors import ConfigError
from .model import DisorderInstance, ModelParams, Repr, sample_disorder


def fmt_float(x: float) -> str:
    return f"{float(x):.17g}"


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Render rows to RFC-4180 CSV text; floats get 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(payload: dict) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Disorder instance files


def instance_payload(inst: DisorderInstance, embed_couplings: bool = False) -> dict:
    payload = {
        "schema": SCHEMA_VERSION,
        "n": inst.n,
        "p": inst.p,
        "seed": inst.seed,
        "repr": inst.repr.value,
    }
    if embed_couplings:
        payload["couplings"] = [fmt_float(g) for g in inst.couplings]
    return payload


def instance_from_payload(payload: dict) -> DisorderInstance:
    try:
        params = ModelParams(n=int(payload["n"]), p=int(payload["p"]))
        repr_tag = Repr(payload["repr"])
        seed = int(payload["seed"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed instance payload: {exc}") from exc
    inst = sample_disorder(params, seed, repr=repr_tag)
    if "couplings" in payload:
        stored = np.array([float(g) for g in payload["couplings"]])
        if stored.shape != inst.couplings.shape or not np.array_equal(stored, inst.couplings):
            raise ConfigError("embedded couplings disagree with regeneration from seed")
    return inst


def save_instance(path: Path, inst: DisorderInstance, embed_couplings: bool = False):
    Path(path).write_text(json_text(instance_payload(inst, embed_couplings)))


def load_instance(path: Path) -> DisorderInstance:
    return instance_from_payload(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Energy table binary format


def energy_table_bytes(n: int, table: np.ndarray) -> bytes:
    if table.size != (1 << n):
        raise ConfigError(f"table size {table.size} is not 2^{n}")
    header = struct.pack("<Q", n)
    return header + np.ascontiguousarray(table, dtype="<f8").tobytes()


def energy_table_from_bytes(blob: bytes) -> tuple[int, np.ndarray]:
    if len(blob) < 8:
        raise ConfigError("energy table blob shorter than its header")
    (n,) = struct.unpack("<Q", blob[:8])
    table = np.frombuffer(blob[8:], dtype="<f8")
    if table.size != (1 << n):
        raise ConfigError(f"expected {1 << n} doubles, found {table.size}")
    return int(n), table.astype(np.float64)


# ---------------------------------------------------------------------------
# Run manifests


@dataclass
class RunManifest:
    command: str
    config_hash: str
    master_seed: int
    tool_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    status: str = "incomplete"
    output_paths: list = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
            "status": self.status,
            "output_paths": list(self.output_paths),
        }

    def write(self, path: Path):
        Path(path).write_text(json_text(self.to_payload()))
