"""Association-fingerprint stream cipher between a vehicle and an AN.

The shared secret material has two parts: a session key handed out at session
start, and a time-dynamic fingerprint, the sliding window of the vehicle's
recent AP association vectors, which both endpoints can derive on their own.
Keystream blocks come from HMAC-SHA256 in counter mode keyed on the session
key and bound to the fingerprint digest, so the stream drifts with mobility.
An in-band digest check detects window divergence (MAI can corrupt one
side's view) and triggers re-keying from the AN's master key.

Security claims here are functional (roundtrip, sensitivity, recovery), not
cryptanalytic.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

from vecsim.predictor import AssociationVector
from vecsim.rng import RngStream

KEY_BYTES = 32
BLOCK_BYTES = 32     # HMAC-SHA256 output


@dataclass(frozen=True)
class Fingerprint:
    """Sliding window of the last W association vectors, canonically ordered."""

    vehicle_id: int
    window: tuple[AssociationVector, ...]

    def canonical_bytes(self) -> bytes:
        # slot-ascending, bits in AP-id order; length prefixes keep it injective
        parts = [struct.pack(">I", len(self.window))]
        for vec in sorted(self.window, key=lambda v: v.slot):
            parts.append(struct.pack(">qI", vec.slot, len(vec.bits)))
            parts.append(bytes(vec.bits))
        return b"".join(parts)

    def digest(self) -> bytes:
        return hashlib.sha256(self.canonical_bytes()).digest()


@dataclass
class CipherState:
    """One endpoint's half of a session. The key must never reach any output file."""

    key: bytes
    counter: int = 0
    last_verified_digest: bytes | None = None

    def __post_init__(self):
        if len(self.key) != KEY_BYTES:
            raise ValueError(f"session key must be {KEY_BYTES} bytes")
        if self.counter < 0:
            raise ValueError("counter cannot be negative")


def start_session(vehicle_id: int, an_id: int, rng: RngStream) -> tuple[CipherState, CipherState]:
    """AN draws a starting key; both sides begin with identical state, counter 0.

    Authentication and the key transport are assumed (out of model); the two
    returned states are the vehicle copy and the AN copy.
    """
    key = rng.bytes(KEY_BYTES)
    return CipherState(key=key), CipherState(key=key)


def keystream_block(state: CipherState, fp: Fingerprint, n_bits: int) -> tuple[bytes, CipherState]:
    """Counter-mode keystream of ceil(n_bits / 8) bytes, trailing bits zeroed.

    Each 32-byte block is HMAC(key, counter || fingerprint digest); the
    counter advances by the number of blocks consumed.
    """
    if n_bits < 1:
        raise ValueError("keystream length must be >= 1 bit")
    n_bytes = (n_bits + 7) // 8
    fp_digest = fp.digest()
    blocks = []
    counter = state.counter
    while sum(len(b) for b in blocks) < n_bytes:
        msg = struct.pack(">Q", counter) + fp_digest
        blocks.append(hmac.new(state.key, msg, hashlib.sha256).digest())
        counter += 1
    stream = b"".join(blocks)[:n_bytes]
    stream = _mask_tail(stream, n_bits)
    return stream, CipherState(key=state.key, counter=counter, last_verified_digest=state.last_verified_digest)


def _mask_tail(data: bytes, n_bits: int) -> bytes:
    extra = len(data) * 8 - n_bits
    if extra == 0:
        return data
    head, last = data[:-1], data[-1]
    return head + bytes([last & (0xFF << extra) & 0xFF])


def crypt(state: CipherState, fp: Fingerprint, message: bytes, n_bits: int) -> tuple[bytes, CipherState]:
    """Encrypt or decrypt (same XOR) an n_bits message packed MSB-first in bytes."""
    if n_bits < 1:
        raise ValueError("message length must be >= 1 bit")
    if len(message) != (n_bits + 7) // 8:
        raise ValueError("message byte length must match the stated bit length")
    stream, new_state = keystream_block(state, fp, n_bits)
    body = bytes(m ^ s for m, s in zip(_mask_tail(message, n_bits), stream))
    return body, new_state


def integrity_tag(fp: Fingerprint, counter: int) -> bytes:
    """The in-band check value: digest of fingerprint material plus counter."""
    return hashlib.sha256(fp.canonical_bytes() + struct.pack(">Q", counter)).digest()


def verify_key(an_fp: Fingerprint, vehicle_check: bytes, state: CipherState) -> bool:
    """True when the AN-side fingerprint reproduces the vehicle's check value."""
    return hmac.compare_digest(integrity_tag(an_fp, state.counter), vehicle_check)


def deterministic_message(vehicle_id: int, slot: int, n_bits: int) -> bytes:
    """Reproducible per-(vehicle, slot) payload for loopback checks."""
    n_bytes = (n_bits + 7) // 8
    seed = struct.pack(">qq", vehicle_id, slot)
    out = b""
    counter = 0
    while len(out) < n_bytes:
        out += hashlib.sha256(seed + struct.pack(">I", counter)).digest()
        counter += 1
    return _mask_tail(out[:n_bytes], n_bits)


def master_key_for(vehicle_id: int, rng: RngStream) -> bytes:
    return rng.substream(f"master/{vehicle_id}").bytes(KEY_BYTES)


def resync_session(master_key: bytes, an_record: Fingerprint, generation: int) -> tuple[CipherState, CipherState]:
    """Re-key both endpoints from the AN's master key and its own association record.

    The vehicle is assumed to adopt the AN-side window out of band (the control
    plane knows the plausible AP set); the caller aligns the windows.
    """
    material = struct.pack(">Q", generation) + an_record.digest()
    key = hmac.new(master_key, b"resync" + material, hashlib.sha256).digest()
    return CipherState(key=key), CipherState(key=key)
