"""Toeplitz hashing over GF(2) for correctness checks and privacy amplification.

A hash is the binary Toeplitz matrix ``T[i, j] = d[i - j + in_len - 1]``
applied to the input bit vector, where ``d`` is a uniformly random bit
string of length ``in_len + out_len - 1`` drawn from a 64-bit seed.  The
family is universal_2: any two distinct inputs collide with probability at
most ``2^-out_len`` over the choice of ``d``, and hashing is GF(2)-linear.

Bit strings are numpy uint8 arrays of 0/1; the serialized byte form packs
bits little-endian within each byte.  Hash objects are immutable after
sampling and hashing is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _gf2_toeplitz_apply(diagonals: np.ndarray, x: np.ndarray, out_len: int) -> np.ndarray:
    """Toeplitz matrix-vector product over GF(2) via integer convolution.

    ``y[i] = sum_j d[i - j + n - 1] x[j] mod 2`` is a window of the full
    convolution of ``d`` and ``x``.  Computed with an FFT for speed; the
    integer counts are bounded by ``len(x)``, far inside the exactly
    representable range, so rounding back to integers is exact.
    """
    n = len(x)
    full = len(diagonals) + n - 1
    size = 1 << (full - 1).bit_length()
    fd = np.fft.rfft(diagonals.astype(np.float64), size)
    fx = np.fft.rfft(x.astype(np.float64), size)
    conv = np.fft.irfft(fd * fx, size)[: full]
    counts = np.rint(conv[n - 1 : n - 1 + out_len]).astype(np.int64)
    return (counts & 1).astype(np.uint8)


@dataclass
class ToeplitzHash:
    """One member of the Toeplitz universal_2 family, reproducible from its seed."""

    in_len: int
    out_len: int
    diagonals: np.ndarray
    seed: int

    @classmethod
    def sample(cls, in_len: int, out_len: int, seed: int) -> "ToeplitzHash":
        """Draw the diagonals uniformly from a 64-bit seed; deterministic in seed."""
        if out_len <= 0 or out_len > in_len:
            raise ValueError("need 0 < out_len <= in_len")
        seed = int(seed)
        rng = np.random.default_rng(seed)
        diagonals = rng.integers(0, 2, size=in_len + out_len - 1, dtype=np.uint8)
        return cls(in_len=in_len, out_len=out_len, diagonals=diagonals, seed=seed)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Hash a bit vector of length ``in_len`` down to ``out_len`` bits."""
        x = np.asarray(x, dtype=np.uint8)
        if x.shape != (self.in_len,):
            raise ValueError(f"input must have length {self.in_len}, got {x.shape}")
        return _gf2_toeplitz_apply(self.diagonals, x, self.out_len)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    def to_json(self) -> dict:
        """Serializable description; the diagonals regrow from the seed."""
        return {"seed": self.seed, "in_len": self.in_len, "out_len": self.out_len}

    @classmethod
    def from_json(cls, data: dict) -> "ToeplitzHash":
        return cls.sample(data["in_len"], data["out_len"], data["seed"])


def pack_bits(bits: np.ndarray) -> bytes:
    """Pack a 0/1 vector into bytes, little-endian bit order within each byte."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def unpack_bits(data: bytes, n_bits: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if n_bits > len(bits):
        raise ValueError("byte string too short for requested bit count")
    return bits[:n_bits].copy()


__all__ = ["ToeplitzHash", "pack_bits", "unpack_bits"]
