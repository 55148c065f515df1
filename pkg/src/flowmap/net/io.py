"""Model persistence: self-describing binary FMAP files.

Layout: magic `FMAP`, format version (u32 LE), header length (u32 LE),
JSON header padded to an 8-byte boundary, then raw little-endian
float64 tensor payloads at the offsets the header's manifest declares
(all 8-byte aligned). Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..fields import DomainBounds
from .model import Linear, MlpArch, MlpModel, Normalization

MAGIC = b"FMAP"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def save_model(model: MlpModel, path) -> int:
    """Write the model; returns the file size in bytes."""
    layers = []
    payload_parts = []
    offset = 0
    for stack_name, stack in zip(("pos", "cyc", "dec"), model.stacks()):
        for i, lay in enumerate(stack):
            w = np.ascontiguousarray(lay.weight, dtype=np.float64)
            b = np.ascontiguousarray(lay.bias, dtype=np.float64)
            layers.append(
                {
                    "stack": stack_name,
                    "index": i,
                    "w0": lay.w0,
                    "activation": lay.activation,
                    "weight_shape": list(w.shape),
                    "weight_offset": offset,
                    "bias_shape": list(b.shape),
                    "bias_offset": offset + w.nbytes,
                }
            )
            payload_parts.append(w.tobytes())
            payload_parts.append(b.tobytes())
            offset += w.nbytes + b.nbytes
    header = {
        "arch": {
            "dim": model.arch.dim,
            "latent_dim": model.arch.latent_dim,
            "enc_pos_layers": model.arch.enc_pos_layers,
            "enc_cycle_layers": model.arch.enc_cycle_layers,
            "dec_layers": model.arch.dec_layers,
            "activation": model.arch.activation,
            "sine_w0": model.arch.sine_w0,
        },
        "norm": {
            "lo": model.norm.lo.tolist(),
            "hi": model.norm.hi.tolist(),
            "n_cycles": model.norm.n_cycles,
        },
        "method": model.method,
        "samples_per_map": model.samples_per_map,
        "layers": layers,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    pad = (8 - (12 + len(header_bytes)) % 8) % 8
    header_bytes += b" " * pad
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for part in payload_parts:
            fh.write(part)
        return fh.tell()


def load_model(path) -> MlpModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ModelFormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 12:
        raise ModelFormatError(f"{path}: truncated preamble")
    version, header_len = struct.unpack("<II", blob[4:12])
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version}")
    if len(blob) < 12 + header_len:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: unparseable header: {exc}") from exc
    payload = blob[12 + header_len :]

    def read_tensor(offset, shape):
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(payload):
            raise ModelFormatError(f"{path}: tensor at offset {offset} shape {shape} past end of file")
        return np.frombuffer(payload[offset:end], dtype="<f8").reshape(shape).copy()

    stacks = {"pos": [], "cyc": [], "dec": []}
    for entry in header["layers"]:
        lay = Linear(
            weight=read_tensor(entry["weight_offset"], entry["weight_shape"]),
            bias=read_tensor(entry["bias_offset"], entry["bias_shape"]),
            w0=float(entry["w0"]),
            activation=entry["activation"],
        )
        if lay.bias.shape != (lay.weight.shape[1],):
            raise ModelFormatError(f"{path}: bias/weight shape mismatch in {entry['stack']}.{entry['index']}")
        stacks[entry["stack"]].append(lay)
    for name, stack in stacks.items():
        if not stack:
            raise ModelFormatError(f"{path}: missing {name} stack")
    for a, b in zip(stacks["pos"][:-1], stacks["pos"][1:]):
        if a.fan_out != b.fan_in:
            raise ModelFormatError(f"{path}: pos stack shapes do not chain")
    arch = MlpArch(**header["arch"])
    norm = Normalization(
        lo=np.asarray(header["norm"]["lo"], dtype=np.float64),
        hi=np.asarray(header["norm"]["hi"], dtype=np.float64),
        n_cycles=int(header["norm"]["n_cycles"]),
    )
    if stacks["pos"][-1].fan_out + stacks["cyc"][-1].fan_out != stacks["dec"][0].fan_in:
        raise ModelFormatError(f"{path}: latent width does not match decoder input")
    return MlpModel(
        arch=arch,
        pos_stack=stacks["pos"],
        cycle_stack=stacks["cyc"],
        dec_stack=stacks["dec"],
        norm=norm,
        method=header["method"],
        samples_per_map=int(header["samples_per_map"]),
    )


def model_domain(model: MlpModel) -> DomainBounds:
    return DomainBounds(model.norm.lo.copy(), model.norm.hi.copy())
