"""Closed-form responses, measured spectra and peak location.

Biquads are stored a0-normalized: ``H(z) = (b0 + b1 z^-1 + b2 z^-2) /
(1 + a1 z^-1 + a2 z^-2)``. Angular frequencies ``omega`` are in radians per
sample unless a function says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from .filters import (
    FilterParams,
    InstabilityError,
    Topology,
    new_state,
    process_block,
)

__all__ = [
    "BiquadCoeffs",
    "ResponseCurve",
    "analog_tf",
    "chamberlin_biquad",
    "improved_biquad",
    "leaky_biquad",
    "topology_biquad",
    "eval_tf",
    "direct_form_filter",
    "butterworth_power_spectrum",
    "impulse_response",
    "dft_magnitude",
    "peak_frequency",
    "closed_form_curve",
]

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class BiquadCoeffs:
    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    @property
    def b(self) -> np.ndarray:
        return np.array([self.b0, self.b1, self.b2])

    @property
    def a(self) -> np.ndarray:
        return np.array([1.0, self.a1, self.a2])

    def is_stable(self) -> bool:
        """Triangle test: both poles strictly inside the unit circle."""
        return abs(self.a2) < 1.0 and abs(self.a1) < 1.0 + self.a2

    def poles(self) -> np.ndarray:
        return np.roots(self.a)

    def pole_radius(self) -> float:
        p = self.poles()
        return float(np.max(np.abs(p))) if p.size else 0.0

    def __add__(self, other: "BiquadCoeffs") -> "BiquadCoeffs":
        if (self.a1, self.a2) != (other.a1, other.a2):
            raise ValueError("can only add responses with a shared denominator")
        return BiquadCoeffs(self.b0 + other.b0, self.b1 + other.b1,
                            self.b2 + other.b2, self.a1, self.a2)

    def scaled(self, gain: float) -> "BiquadCoeffs":
        return BiquadCoeffs(gain * self.b0, gain * self.b1, gain * self.b2,
                            self.a1, self.a2)

    def delayed(self) -> "BiquadCoeffs":
        """Multiply by ``z^-1``; needs ``b2 == 0``."""
        if self.b2 != 0.0:
            raise ValueError("delaying would exceed second order")
        return BiquadCoeffs(0.0, self.b0, self.b1, self.a1, self.a2)


@dataclass(frozen=True)
class ResponseCurve:
    freqs: np.ndarray
    mag: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.float64)
        mag = np.asarray(self.mag, dtype=np.float64)
        phase = np.asarray(self.phase, dtype=np.float64)
        if not (freqs.shape == mag.shape == phase.shape) or freqs.ndim != 1:
            raise ValueError("freqs, mag and phase must be 1-D arrays of equal length")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise ValueError("freqs must be strictly increasing")
        if np.any(mag < 0):
            raise ValueError("magnitudes must be non-negative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "mag", mag)
        object.__setattr__(self, "phase", phase)

    def __len__(self) -> int:
        return self.freqs.size

    @property
    def mag_db(self) -> np.ndarray:
        return to_db(self.mag)


def to_db(mag: ArrayLike, floor_db: float = -300.0) -> np.ndarray:
    mag = np.asarray(mag, dtype=np.float64)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    return np.maximum(db, floor_db)


# -- s-domain ---------------------------------------------------------------

def analog_tf(k: float, q: float, omega: ArrayLike, output: str) -> np.ndarray:
    """Analog SVF response at ``s = j*omega`` (omega in rad/s)."""
    if not q > 0:
        raise ValueError(f"q must be > 0, got {q!r}")
    s = 1j * np.asarray(omega, dtype=np.float64)
    den = s * s + (k / q) * s + k * k
    if output == "hp":
        num = s * s
    elif output == "bp":
        num = k * s
    elif output == "lp":
        num = k * k + 0 * s
    else:
        raise ValueError(f"unknown output {output!r}")
    return num / den


# -- z-domain ---------------------------------------------------------------

def chamberlin_biquad(params: FilterParams, output: str) -> BiquadCoeffs:
    """Transfer function of the Chamberlin structure, re-arranged form.

    The lowpass here is that of :func:`~statevar.filters.rearranged_tick`;
    the Chamberlin tick's own lowpass stream is this delayed by one sample.
    """
    k, d = params.k, 1.0 / params.q
    a1 = -(2.0 - k * d - k * k)
    a2 = 1.0 - k * d
    if output == "hp":
        return BiquadCoeffs(1.0, -2.0, 1.0, a1, a2)
    if output == "bp":
        return BiquadCoeffs(k, -k, 0.0, a1, a2)
    if output == "lp":
        return BiquadCoeffs(k * k, 0.0, 0.0, a1, a2)
    raise ValueError(f"unknown output {output!r}")


def improved_biquad(params: FilterParams, output: str) -> BiquadCoeffs:
    k, d = params.k, 1.0 / params.q
    a0 = 1.0 + k * d + k * k
    a1 = -2.0 * (1.0 - k * k) / a0
    a2 = (1.0 - k * d + k * k) / a0
    if output == "hp":
        return BiquadCoeffs(1.0 / a0, -2.0 / a0, 1.0 / a0, a1, a2)
    if output == "bp":
        return BiquadCoeffs(k / a0, 0.0, -k / a0, a1, a2)
    if output == "lp":
        g = k * k / a0
        return BiquadCoeffs(g, 2.0 * g, g, a1, a2)
    raise ValueError(f"unknown output {output!r}")


def leaky_biquad(g: float) -> BiquadCoeffs:
    """``g (1 + z^-1) / ((1 + g) - (1 - g) z^-1)`` as a degenerate biquad."""
    if not g > 0:
        raise ValueError(f"g must be > 0, got {g!r}")
    b = g / (1.0 + g)
    return BiquadCoeffs(b, b, 0.0, -(1.0 - g) / (1.0 + g), 0.0)


def topology_biquad(
    topology: Union[Topology, str], params: FilterParams, output: str
) -> BiquadCoeffs:
    """Closed form matching the stream that ``topology`` actually emits.

    Covers the derived outputs too: band-reject is hp + lp for Chamberlin
    and improved (and ``x - s1/Q`` for the re-arranged form, which is the
    same response); allpass exists only for the improved topology.
    """
    topology = Topology(topology)
    if output not in topology.outputs:
        raise ValueError(f"{topology.value} topology has no {output!r} output")
    if topology is Topology.LEAKY:
        return leaky_biquad(params.k)
    if topology is Topology.IMPROVED:
        if output in ("hp", "bp", "lp"):
            return improved_biquad(params, output)
        rej = improved_biquad(params, "hp") + improved_biquad(params, "lp")
        if output == "br":
            return rej
        return rej + improved_biquad(params, "bp").scaled(-1.0 / params.q)
    if output == "br":
        return chamberlin_biquad(params, "hp") + chamberlin_biquad(params, "lp").delayed()
    c = chamberlin_biquad(params, output)
    if output == "lp" and topology is Topology.CHAMBERLIN:
        return c.delayed()
    return c


def eval_tf(c: BiquadCoeffs, omega: ArrayLike) -> np.ndarray:
    """Evaluate ``c`` on the unit circle. Poles on the circle give inf/nan."""
    zi = np.exp(-1j * np.asarray(omega, dtype=np.float64))
    num = c.b0 + zi * (c.b1 + zi * c.b2)
    den = 1.0 + zi * (c.a1 + zi * c.a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


def direct_form_filter(c: BiquadCoeffs, x: Sequence[float]) -> np.ndarray:
    """Filter ``x`` through ``c`` with the transposed direct form II recursion.

    Independent of the SVF ticks; used as the reference they are checked
    against.
    """
    b0, b1, b2, a1, a2 = c.b0, c.b1, c.b2, c.a1, c.a2
    x = np.asarray(x, dtype=np.float64)
    y = np.empty_like(x)
    z1 = z2 = 0.0
    for i, v in enumerate(x.tolist()):
        out = b0 * v + z1
        z1 = b1 * v - a1 * out + z2
        z2 = b2 * v - a2 * out
        y[i] = out
    return y


def butterworth_power_spectrum(n: int, omega: ArrayLike) -> np.ndarray:
    """Squared magnitude ``1 / (1 + tan^(2n)(omega/2))`` of the digital
    Butterworth lowpass with its cutoff at ``omega = pi/2``."""
    if int(n) != n or n < 1:
        raise ValueError(f"order must be a positive integer, got {n!r}")
    omega = np.asarray(omega, dtype=np.float64)
    if np.any(omega < 0) or np.any(omega >= math.pi):
        raise ValueError("omega must lie in [0, pi)")
    t = np.tan(omega / 2.0)
    return 1.0 / (1.0 + t ** (2 * int(n)))


# -- measurement ------------------------------------------------------------

def impulse_response(
    topology: Union[Topology, str],
    params: FilterParams,
    n: int,
    outputs: Optional[Iterable[str]] = None,
) -> Dict[str, np.ndarray]:
    """Impulse response of ``topology`` from zero state.

    Raises :class:`InstabilityError` if any output goes non-finite.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    x = np.zeros(n)
    x[0] = 1.0
    res = process_block(topology, new_state(topology), params, x)
    if not res.stable:
        raise InstabilityError(res.nonfinite_index)
    names = Topology(topology).outputs if outputs is None else tuple(outputs)
    return {name: res.outputs[name] for name in names}


def dft_magnitude(x: Sequence[float], fs: float, n_fft: int = 8192) -> ResponseCurve:
    """Zero-padded DFT of ``x`` on bins ``0 .. n_fft/2``."""
    x = np.asarray(x, dtype=np.float64)
    if n_fft < 1 or n_fft & (n_fft - 1):
        raise ValueError(f"n_fft must be a power of two, got {n_fft!r}")
    if x.size > n_fft:
        raise ValueError(f"signal length {x.size} exceeds n_fft={n_fft}")
    spec = np.fft.rfft(x, n_fft)
    freqs = np.arange(spec.size) * (fs / n_fft)
    return ResponseCurve(freqs, np.abs(spec), np.angle(spec))


def closed_form_curve(c: BiquadCoeffs, freqs: ArrayLike, fs: float) -> ResponseCurve:
    freqs = np.asarray(freqs, dtype=np.float64)
    h = eval_tf(c, 2.0 * math.pi * freqs / fs)
    return ResponseCurve(freqs, np.abs(h), np.angle(h))


def peak_frequency(curve: ResponseCurve) -> float:
    """Frequency of the largest magnitude, refined by a parabola through the
    log magnitudes of the peak bin and its two neighbours."""
    if len(curve) == 0:
        raise ValueError("empty response curve")
    i = int(np.argmax(curve.mag))
    if i == 0 or i == len(curve) - 1:
        return float(curve.freqs[i])
    with np.errstate(divide="ignore"):
        lm = np.log(curve.mag[i - 1:i + 2])
    if not np.all(np.isfinite(lm)):
        return float(curve.freqs[i])
    denom = lm[0] - 2.0 * lm[1] + lm[2]
    if denom >= 0:
        return float(curve.freqs[i])
    offset = 0.5 * (lm[0] - lm[2]) / denom
    f0, f1, f2 = curve.freqs[i - 1:i + 2]
    # neighbours may be unevenly spaced on a log grid
    step = (f2 - f1) if offset > 0 else (f1 - f0)
    return float(f1 + offset * step)
