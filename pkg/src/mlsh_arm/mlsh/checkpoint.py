"""Checkpoint files: a JSON header followed by raw little-endian float64 blobs.

Layout::

    b"MLSHCKPT" | u32 version | u64 header length | header JSON | payload

The header holds the experiment description, the policy architecture, and
for every stored vector its name, segment layout and offset into the
payload. Keys are sorted and separators fixed, so equal contents give equal
bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..numerics import ParamVector, Segment
from .policies import PolicyArch, PolicySet

MAGIC = b"MLSHCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _blob_entry(name: str, vec: ParamVector, offset: int) -> dict:
    return {"name": name, "offset": offset, "length": len(vec),
            "layout": [[seg.name, list(seg.shape)] for seg in vec.layout]}


def dumps(experiment: dict, policies: PolicySet, masters: dict[int, ParamVector]) -> bytes:
    vectors = [("theta", policies.theta)]
    vectors += [(f"phi.{k}", p) for k, p in enumerate(policies.phi)]
    vectors += [(f"master.{tid}", masters[tid]) for tid in sorted(masters)]
    blobs, offset = [], 0
    for name, vec in vectors:
        blobs.append(_blob_entry(name, vec, offset))
        offset += len(vec)
    arch = asdict(policies.arch)
    arch["hidden"] = list(arch["hidden"])
    header = json.dumps({"experiment": experiment, "arch": arch, "blobs": blobs},
                        sort_keys=True, separators=(",", ":")).encode()
    payload = b"".join(np.asarray(vec.values, dtype="<f8").tobytes() for _, vec in vectors)
    return MAGIC + struct.pack("<IQ", VERSION, len(header)) + header + payload


def loads(data: bytes) -> tuple[dict, PolicySet, dict[int, ParamVector]]:
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    pos = len(MAGIC)
    version, header_len = struct.unpack_from("<IQ", data, pos)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos += struct.calcsize("<IQ")
    header = json.loads(data[pos:pos + header_len])
    payload = np.frombuffer(data, dtype="<f8", offset=pos + header_len)
    vectors = {}
    for blob in header["blobs"]:
        layout = [Segment(name, tuple(shape)) for name, shape in blob["layout"]]
        values = payload[blob["offset"]:blob["offset"] + blob["length"]].astype(np.float64)
        if len(values) != blob["length"]:
            raise CheckpointError(f"truncated payload for '{blob['name']}'")
        vectors[blob["name"]] = ParamVector(values, layout)
    arch_d = header["arch"]
    arch_d["hidden"] = tuple(arch_d["hidden"])
    arch = PolicyArch(**arch_d)
    phi = [vectors[f"phi.{k}"] for k in range(arch.num_subpolicies)]
    masters = {int(name.split(".", 1)[1]): vec for name, vec in vectors.items()
               if name.startswith("master.")}
    return header["experiment"], PolicySet(arch, vectors["theta"], phi), masters


def save_checkpoint(path, experiment: dict, policies: PolicySet,
                    masters: dict[int, ParamVector]) -> None:
    Path(path).write_bytes(dumps(experiment, policies, masters))


def load_checkpoint(path) -> tuple[dict, PolicySet, dict[int, ParamVector]]:
    return loads(Path(path).read_bytes())
