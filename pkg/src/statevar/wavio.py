"""Mono WAV input/output (PCM16 or IEEE float32 in, float32 out)."""

from __future__ import annotations

import struct
import warnings
from typing import Tuple

import numpy as np
from scipy.io import wavfile


class WavFormatError(ValueError):
    pass


def read_wav(path) -> Tuple[np.ndarray, int]:
    """Return ``(samples, rate)`` with samples as float64.

    16-bit data is scaled by 1/32768. Anything other than a mono PCM16 or
    float32 file raises :class:`WavFormatError`.
    """
    try:
        with warnings.catch_warnings():
            # scipy warns on unknown chunks; they are harmless here
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    # scipy surfaces truncated or chunk-less files through assorted exceptions
    except (ValueError, EOFError, OSError, struct.error, IndexError, UnboundLocalError) as exc:
        raise WavFormatError(f"{path}: not a readable WAV file ({exc})") from exc
    if data.ndim != 1:
        raise WavFormatError(f"{path}: expected mono, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0, int(rate)
    if data.dtype == np.float32:
        return data.astype(np.float64), int(rate)
    raise WavFormatError(f"{path}: unsupported sample format {data.dtype}")


def write_wav(path, samples, rate: int) -> None:
    """Write ``samples`` as a mono 32-bit float WAV."""
    data = np.asarray(samples, dtype=np.float32)
    if data.ndim != 1:
        raise ValueError("only mono output is supported")
    wavfile.write(path, int(rate), data)
