"""Bit-packed model file and delay-map image export.

Layout (all integers unsigned 32-bit big-endian)::

    b"WSNN" | version | n_in | n_out | max_delay | bits
    delays     n_out * n_in values, `bits` each, row-major, MSB first,
               zero-padded once at the end to a whole byte
    theta      n_out float32 big-endian
    assignment n_out bytes, digit 0-9 or 255 for unassigned
    config     u32 length + UTF-8 JSON
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .config import NetworkConfig
from .delays import DelayMatrix, bit_width
from .engine import Network
from .readout import UNASSIGNED, Assignment

MAGIC = b"WSNN"
VERSION = 1
HEADER = struct.Struct(">4s5I")
UNASSIGNED_BYTE = 255


class ModelFormatError(ValueError):
    pass


class BadMagic(ModelFormatError):
    pass


class VersionMismatch(ModelFormatError):
    pass


class SizeMismatch(ModelFormatError):
    pass


class DelayOutOfRange(ModelFormatError):
    pass


CHUNK = 1 << 18  # values per packing chunk; a multiple of 8 keeps chunks byte-aligned


def pack_bits(values: np.ndarray, bits: int) -> bytes:
    values = np.asarray(values, dtype=np.uint32).ravel()
    shifts = np.arange(bits - 1, -1, -1, dtype=np.uint32)
    bitstream = np.concatenate([((values[i:i + CHUNK, None] >> shifts) & 1).astype(np.uint8).ravel()
                                for i in range(0, len(values), CHUNK)] or [np.empty(0, np.uint8)])
    return np.packbits(bitstream).tobytes()


def unpack_bits(data: bytes, count: int, bits: int) -> np.ndarray:
    flat = np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=count * bits).reshape(count, bits)
    weights = (1 << np.arange(bits - 1, -1, -1)).astype(np.int64)
    out = np.empty(count, dtype=np.int64)
    for i in range(0, count, CHUNK):
        out[i:i + CHUNK] = flat[i:i + CHUNK].astype(np.int64) @ weights
    return out


def payload_size(n_out: int, n_in: int, max_delay: int) -> int:
    return -(-n_out * n_in * bit_width(max_delay) // 8)


def expected_size(n_out: int, n_in: int, max_delay: int, config_bytes: int) -> int:
    return HEADER.size + payload_size(n_out, n_in, max_delay) + 5 * n_out + 4 + config_bytes


def model_bytes(net: Network) -> bytes:
    d = net.delays.quantized()
    n_out, n_in = d.shape
    max_delay = net.delays.max_delay
    bits = bit_width(max_delay)
    if net.assignment is None:
        labels = np.full(n_out, UNASSIGNED_BYTE, dtype=np.uint8)
    else:
        lab = net.assignment.label_of
        labels = np.where(lab == UNASSIGNED, UNASSIGNED_BYTE, lab).astype(np.uint8)
    config = net.config.to_json().encode("utf-8")
    return b"".join([
        HEADER.pack(MAGIC, VERSION, n_in, n_out, max_delay, bits),
        pack_bits(d, bits),
        net.theta.astype(">f4").tobytes(),
        labels.tobytes(),
        struct.pack(">I", len(config)),
        config,
    ])


def parse_model(data: bytes) -> Network:
    if len(data) < HEADER.size or data[:4] != MAGIC:
        raise BadMagic("not a WSNN model file")
    _, version, n_in, n_out, max_delay, bits = HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionMismatch(f"model format version {version}, expected {VERSION}")
    if max_delay < 1 or bits != bit_width(max_delay):
        raise ModelFormatError(f"bit width {bits} inconsistent with max_delay {max_delay}")
    off = HEADER.size
    n_payload = payload_size(n_out, n_in, max_delay)
    trailer_at = off + n_payload + 5 * n_out
    if len(data) < trailer_at + 4:
        raise SizeMismatch(f"file has {len(data)} bytes, header needs at least {trailer_at + 4}")
    (config_len,) = struct.unpack_from(">I", data, trailer_at)
    want = expected_size(n_out, n_in, max_delay, config_len)
    if len(data) != want:
        raise SizeMismatch(f"file has {len(data)} bytes, layout implies {want}")

    d = unpack_bits(data[off:off + n_payload], n_out * n_in, bits).reshape(n_out, n_in)
    if d.max(initial=0) > max_delay:
        raise DelayOutOfRange(f"stored delay {d.max()} exceeds max_delay {max_delay}")
    off += n_payload
    theta = np.frombuffer(data, dtype=">f4", count=n_out, offset=off).astype(np.float64)
    off += 4 * n_out
    raw_labels = np.frombuffer(data, dtype=np.uint8, count=n_out, offset=off)
    off += n_out + 4
    config = NetworkConfig.from_dict(json.loads(data[off:off + config_len].decode("utf-8")))
    if (config.n_neurons, config.n_inputs, config.max_delay) != (n_out, n_in, max_delay):
        raise ModelFormatError("config trailer disagrees with the header")

    assignment = None
    if (raw_labels != UNASSIGNED_BYTE).any():
        if raw_labels[raw_labels != UNASSIGNED_BYTE].max() > 9:
            raise ModelFormatError("assignment byte outside 0-9/255")
        assignment = Assignment.from_labels(np.where(raw_labels == UNASSIGNED_BYTE, UNASSIGNED, raw_labels.astype(np.int64)))
    return Network(config, DelayMatrix.from_quantized(d, max_delay), theta, assignment)


def save(net: Network, path) -> int:
    data = model_bytes(net)
    Path(path).write_bytes(data)
    return len(data)


def load(path) -> Network:
    return parse_model(Path(path).read_bytes())


def pgm_bytes(pixels: np.ndarray) -> bytes:
    rows, cols = pixels.shape
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + pixels.astype(np.uint8).tobytes()


def delay_map_pixels(d_row: np.ndarray, max_delay: int, shape=(28, 28)) -> np.ndarray:
    """Grey levels where short delays are dark and ``max_delay`` is white."""
    return np.floor(255.0 * np.asarray(d_row) / max_delay + 0.5).astype(np.uint8).reshape(shape)


def export_delay_maps(net: Network, directory) -> list[Path]:
    if net.config.n_inputs != 784:
        raise ValueError("delay maps need 784 inputs (28x28)")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    d = net.delays.quantized()
    width = len(str(len(d) - 1))
    paths = []
    for j, row in enumerate(d):
        path = directory / f"neuron_{j:0{width}d}.pgm"
        path.write_bytes(pgm_bytes(delay_map_pixels(row, net.delays.max_delay)))
        paths.append(path)
    return paths
