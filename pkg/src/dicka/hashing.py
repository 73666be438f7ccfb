"""Toeplitz two-universal hashing over GF(2).

Used for privacy amplification and for error-correction verification.  A
seed is the diagonal of a Toeplitz matrix T with T[j, i] =
diagonal_bits[j - i + in_len - 1]; the hash of an input is the GF(2)
matrix-vector product.

Bit strings are numpy uint8 arrays (helpers accept '01' strings too).  Hex
serialization packs bits little-endian within each byte: bit i of the
string is bit i % 8 of byte i // 8.  Hex digits are lowercase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import LengthMismatchError

BitsLike = Union[str, Sequence[int], np.ndarray]


def as_bits(bits: BitsLike) -> np.ndarray:
    """Coerce a '01' string or integer sequence to a uint8 bit array."""
    if isinstance(bits, str):
        if any(ch not in "01" for ch in bits):
            raise ValueError(f"not a bit string: {bits!r}")
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or (arr.size and arr.max() > 1):
        raise ValueError("bits must be a one-dimensional array of 0/1")
    return arr


def bits_to_hex(bits: BitsLike) -> str:
    arr = as_bits(bits)
    if arr.size == 0:
        return ""
    return np.packbits(arr, bitorder="little").tobytes().hex()


def hex_to_bits(hexstr: str, n_bits: int) -> np.ndarray:
    if n_bits == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    if bits.size < n_bits or bits[n_bits:].any():
        raise LengthMismatchError(f"hex string does not encode {n_bits} bits")
    return bits[:n_bits].copy()


@dataclass(frozen=True)
class ToeplitzSeed:
    """Diagonal description of an out_len x in_len Toeplitz matrix over GF(2)."""

    in_len: int
    out_len: int
    diagonal_bits: np.ndarray

    def __post_init__(self) -> None:
        if self.in_len < 1:
            raise LengthMismatchError("in_len must be positive")
        if not 0 <= self.out_len <= self.in_len:
            raise LengthMismatchError("out_len must lie in [0, in_len]")
        bits = as_bits(self.diagonal_bits)
        expected = self.in_len + self.out_len - 1
        if bits.size != expected:
            raise LengthMismatchError(
                f"diagonal needs {expected} bits, got {bits.size}"
            )
        object.__setattr__(self, "diagonal_bits", bits)

    def matrix(self) -> np.ndarray:
        """Dense uint8 matrix with T[j, i] = diagonal_bits[j - i + in_len - 1]."""
        if self.out_len == 0:
            return np.zeros((0, self.in_len), dtype=np.uint8)
        # row j equals reversed(diagonal)[out_len-1-j : out_len-1-j+in_len]
        rows = sliding_window_view(self.diagonal_bits[::-1], self.in_len)
        return rows[::-1]


def random_seed(in_len: int, out_len: int, rng: np.random.Generator) -> ToeplitzSeed:
    """Draw a fresh seed with uniformly random diagonal bits."""
    n_bits = in_len + out_len - 1
    return ToeplitzSeed(in_len, out_len, rng.integers(0, 2, size=n_bits, dtype=np.uint8))


def toeplitz_hash(seed: ToeplitzSeed, input: BitsLike) -> np.ndarray:
    """GF(2) product T @ input; output has out_len bits."""
    bits = as_bits(input)
    if bits.size != seed.in_len:
        raise LengthMismatchError(f"input has {bits.size} bits, seed expects {seed.in_len}")
    if seed.out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    acc = seed.matrix().astype(np.int64) @ bits.astype(np.int64)
    return (acc & 1).astype(np.uint8)


def verify_hash(seed: ToeplitzSeed, candidate: BitsLike, tag: BitsLike) -> bool:
    """True iff the candidate hashes to the given tag under the seed."""
    tag_bits = as_bits(tag)
    if tag_bits.size != seed.out_len:
        raise LengthMismatchError(f"tag has {tag_bits.size} bits, seed expects {seed.out_len}")
    return bool(np.array_equal(toeplitz_hash(seed, candidate), tag_bits))
