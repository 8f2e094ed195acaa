"""Binary frames for cached dense operators.

Layout (big-endian header, little-endian payload):

    'S' 'O' | version (1) | crc (2) | n_sites (1) | sites (n_sites) | payload_length (4) | payload

The CRC-16/CCITT-FALSE covers the header fields after the CRC plus the SHA-256 of the
payload, so a frame is checked without running the CRC over megabytes of matrix data.
The payload is the row-major matrix as '<c16'.
"""
from __future__ import annotations

import hashlib
import struct
from typing import Optional, Tuple

import numpy as np
from pycrc.algorithms import Crc

from ..lab.linalg import DenseOperator

FRAME_SYNC_1 = 0x53  # 'S'
FRAME_SYNC_2 = 0x4F  # 'O'
FRAME_VERSION = 1
HEADER_FIXED = 6  # sync(2) + version(1) + crc(2) + n_sites(1)
PAYLOAD_DTYPE = np.dtype("<c16")

ERR_SHORT = -1
ERR_SYNC = -2
ERR_VERSION = -3
ERR_CRC = -4
ERR_SHAPE = -5

_CRC16 = Crc(width=16, poly=0x1021, reflect_in=False, xor_in=0x0000, reflect_out=False, xor_out=0x0000)

__all__ = ["OperatorFrame", "compute_crc", "operator_encode", "operator_decode"]


def compute_crc(fields: bytes, payload: bytes) -> int:
    """CRC-16/CCITT-FALSE over the header fields and the payload digest."""
    return _CRC16.table_driven(fields + hashlib.sha256(payload).digest())


def _fields(version: int, sites: Tuple[int, ...], payload_length: int) -> bytes:
    return struct.pack(f">BB{len(sites)}BI", version, len(sites), *sites, payload_length)


class OperatorFrame:
    """Parsed operator frame."""

    def __init__(self, buffer: bytes):
        if len(buffer) < HEADER_FIXED:
            raise ValueError("Frame too short")
        self.sync1, self.sync2, self.version = buffer[0], buffer[1], buffer[2]
        self.crc = struct.unpack(">H", buffer[3:5])[0]
        n_sites = buffer[5]
        end = HEADER_FIXED + n_sites + 4
        if len(buffer) < end:
            raise ValueError("Frame too short")
        self.sites = tuple(buffer[HEADER_FIXED:HEADER_FIXED + n_sites])
        self.payload_length = struct.unpack(">I", buffer[end - 4:end])[0]
        if len(buffer) != end + self.payload_length:
            raise ValueError("Length mismatch")
        self.payload = buffer[end:]

    def validate_header(self) -> bool:
        return self.sync1 == FRAME_SYNC_1 and self.sync2 == FRAME_SYNC_2

    def validate_version(self) -> bool:
        return self.version == FRAME_VERSION

    def validate_crc(self) -> bool:
        return self.crc == compute_crc(_fields(self.version, self.sites, self.payload_length), self.payload)

    def operator(self) -> DenseOperator:
        dim = 2 ** len(self.sites)
        m = np.frombuffer(self.payload, dtype=PAYLOAD_DTYPE)
        if m.size != dim * dim:
            raise ValueError("Payload does not match the site count")
        return DenseOperator(self.sites, m.reshape(dim, dim).astype(complex))


def operator_decode(buffer: bytes) -> Tuple[Optional[DenseOperator], int]:
    """Decode a complete frame. Returns (DenseOperator|None, err_code)."""
    try:
        frame = OperatorFrame(buffer)
    except Exception:
        return None, ERR_SHORT
    if not frame.validate_header():
        return None, ERR_SYNC
    if not frame.validate_version():
        return None, ERR_VERSION
    if not frame.validate_crc():
        return None, ERR_CRC
    try:
        return frame.operator(), 0
    except Exception:
        return None, ERR_SHAPE


def operator_encode(op: DenseOperator) -> bytes:
    """Build a complete frame."""
    payload = np.ascontiguousarray(op.matrix, dtype=PAYLOAD_DTYPE).tobytes()
    fields = _fields(FRAME_VERSION, tuple(op.sites), len(payload))
    crc = compute_crc(fields, payload)
    head = struct.pack(">BBBH", FRAME_SYNC_1, FRAME_SYNC_2, FRAME_VERSION, crc)
    return head + fields[1:] + payload
