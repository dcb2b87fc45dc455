"""
Per-sample state variable filters.

Three topologies share the same two-integrator structure and differ only in
where the unavoidable one-sample delay sits:

- ``chamberlin``: the classic Chamberlin form, lowpass computed first.
- ``rearranged``: both feedback paths tap the integrator states; hp/bp are
  identical to ``chamberlin`` and lp leads it by one sample.
- ``improved``: trapezoidal integrators with the delay-free loop solved
  algebraically, equivalent to the bilinear transform of the analog filter.

The ``leaky`` one-pole lowpass is the same loop-resolution trick applied to a
leaky integrator.

All arithmetic is float64 and the operation order inside each tick is fixed,
since several tests compare streams bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Union

import numpy as np

__all__ = [
    "Topology",
    "FilterParams",
    "SvfState",
    "SvfFrame",
    "LeakyState",
    "BlockResult",
    "InstabilityError",
    "k_chamberlin",
    "k_bilinear",
    "stability_limit_chamberlin",
    "chamberlin_tick",
    "rearranged_tick",
    "improved_tick",
    "leaky_lowpass_tick",
    "process_block",
    "reset",
    "new_state",
    "OUTPUTS",
    "OVERFLOW_LEVEL",
]

OUTPUTS = ("hp", "bp", "lp", "br", "ap")

# advisory flag in process_block; non-finite output is the hard failure
OVERFLOW_LEVEL = 1e6

# highest frequency accepted by the tangent map, as a fraction of fs
BILINEAR_F_LIMIT = 0.49


class Topology(str, Enum):
    CHAMBERLIN = "chamberlin"
    REARRANGED = "rearranged"
    IMPROVED = "improved"
    LEAKY = "leaky"

    @property
    def outputs(self) -> tuple:
        if self is Topology.IMPROVED:
            return OUTPUTS
        if self is Topology.LEAKY:
            return ("lp",)
        return OUTPUTS[:4]


class InstabilityError(ArithmeticError):
    """A filter output became non-finite."""

    def __init__(self, index: int, message: Optional[str] = None):
        self.index = index
        super().__init__(message or f"non-finite output at sample {index}")


@dataclass(frozen=True)
class FilterParams:
    """Frequency coefficient ``k`` and quality factor ``q``.

    ``sample_rate_hz`` is carried along for reporting; the ticks only read
    ``k`` and ``q``. For the leaky topology ``k`` is the integrator gain ``g``
    and ``q`` is ignored.
    """

    k: float
    q: float
    sample_rate_hz: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError(f"k must be finite and > 0, got {self.k!r}")
        if not (math.isfinite(self.q) and self.q > 0):
            raise ValueError(f"q must be finite and > 0, got {self.q!r}")

    @classmethod
    def chamberlin(cls, f: float, q: float, fs: float) -> "FilterParams":
        return cls(k_chamberlin(f, fs), q, fs)

    @classmethod
    def bilinear(cls, f: float, q: float, fs: float) -> "FilterParams":
        return cls(k_bilinear(f, fs), q, fs)


@dataclass(slots=True)
class SvfState:
    s1: float = 0.0  # bandpass integrator
    s2: float = 0.0  # lowpass integrator


@dataclass(slots=True)
class LeakyState:
    s: float = 0.0


@dataclass(slots=True)
class SvfFrame:
    hp: float
    bp: float
    lp: float
    br: float
    ap: Optional[float] = None


@dataclass
class BlockResult:
    """Outputs of :func:`process_block`.

    ``nonfinite_index`` is the first sample where any output stopped being
    finite; ``overflow_index`` the first where any magnitude exceeded
    :data:`OVERFLOW_LEVEL`. Both are ``None`` for a well-behaved run.
    """

    outputs: Dict[str, np.ndarray]
    nonfinite_index: Optional[int] = None
    overflow_index: Optional[int] = None

    @property
    def stable(self) -> bool:
        return self.nonfinite_index is None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.outputs[name]


# -- tuning maps ------------------------------------------------------------

def k_chamberlin(f: float, fs: float) -> float:
    """Sine tuning map ``2 sin(pi f / fs)`` used with the Chamberlin filter."""
    if not fs > 0:
        raise ValueError(f"fs must be > 0, got {fs!r}")
    if not 0 <= f < fs / 2:
        raise ValueError(f"f must satisfy 0 <= f < fs/2, got f={f!r}, fs={fs!r}")
    return 2.0 * math.sin(math.pi * f / fs)


def k_bilinear(f: float, fs: float) -> float:
    """Tangent tuning map ``tan(pi f / fs)`` for the improved filter.

    Frequencies above 0.49 fs are rejected rather than clamped.
    """
    if not fs > 0:
        raise ValueError(f"fs must be > 0, got {fs!r}")
    if not 0 <= f <= BILINEAR_F_LIMIT * fs:
        raise ValueError(
            f"f must satisfy 0 <= f <= {BILINEAR_F_LIMIT}*fs, got f={f!r}, fs={fs!r}"
        )
    return math.tan(math.pi * f / fs)


def stability_limit_chamberlin(q: float) -> float:
    """Dattorro's upper limit on K for the Chamberlin filter.

    Returns ``min(Q, 2 - 1/Q, 2Q - 1/Q, (-1/Q + sqrt(8 + 1/Q^2)) / 2)``,
    floored at zero: where the expression is negative no positive K is
    admissible.
    """
    if not (math.isfinite(q) and q > 0):
        raise ValueError(f"q must be finite and > 0, got {q!r}")
    d = 1.0 / q
    bound = min(q, 2.0 - d, 2.0 * q - d, (-d + math.sqrt(8.0 + d * d)) / 2.0)
    return max(bound, 0.0)


# -- ticks ------------------------------------------------------------------

def chamberlin_tick(state: SvfState, params: FilterParams, x: float) -> SvfFrame:
    k = params.k
    d = 1.0 / params.q
    s1 = state.s1
    lp = k * s1 + state.s2
    # same summation order as rearranged_tick so hp/bp match bit for bit
    hp = (x - d * s1) - lp
    bp = k * hp + s1
    state.s1 = bp
    state.s2 = lp
    return SvfFrame(hp, bp, lp, hp + lp)


def rearranged_tick(state: SvfState, params: FilterParams, x: float) -> SvfFrame:
    k = params.k
    d = 1.0 / params.q
    br = x - d * state.s1
    hp = br - state.s2
    bp = k * hp + state.s1
    lp = k * bp + state.s2
    state.s1 = bp
    state.s2 = lp
    return SvfFrame(hp, bp, lp, br)


def improved_tick(state: SvfState, params: FilterParams, x: float) -> SvfFrame:
    k = params.k
    d = 1.0 / params.q
    div = 1.0 + k * d + k * k
    hp = (x - (d + k) * state.s1 - state.s2) / div
    u = k * hp
    bp = u + state.s1
    state.s1 = bp + u
    u = k * bp
    lp = u + state.s2
    state.s2 = lp + u
    return SvfFrame(hp, bp, lp, hp + lp, hp + lp - d * bp)


def leaky_lowpass_tick(state: LeakyState, g: float, x: float) -> float:
    """One-pole lowpass with the delay-free loop solved; bilinear equivalent."""
    if not g > 0:
        raise ValueError(f"g must be > 0, got {g!r}")
    u = g * (x - state.s) / (1.0 + g)
    y = u + state.s
    state.s = y + u
    return y


_SVF_TICKS = {
    Topology.CHAMBERLIN: chamberlin_tick,
    Topology.REARRANGED: rearranged_tick,
    Topology.IMPROVED: improved_tick,
}


def new_state(topology: Union[Topology, str]) -> Union[SvfState, LeakyState]:
    return LeakyState() if Topology(topology) is Topology.LEAKY else SvfState()


def reset(state: Union[SvfState, LeakyState]) -> Union[SvfState, LeakyState]:
    if isinstance(state, LeakyState):
        state.s = 0.0
    else:
        state.s1 = 0.0
        state.s2 = 0.0
    return state


def process_block(
    topology: Union[Topology, str],
    state: Union[SvfState, LeakyState],
    params: FilterParams,
    x: Sequence[float],
) -> BlockResult:
    """Run ``topology`` over ``x`` one sample at a time.

    ``state`` is updated in place so consecutive calls continue seamlessly.
    Processing does not stop at the first non-finite sample; its index is
    reported in the result.
    """
    topology = Topology(topology)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("input must be one-dimensional")
    n = len(x)
    names = topology.outputs
    out = {name: np.empty(n) for name in names}

    if topology is Topology.LEAKY:
        if not isinstance(state, LeakyState):
            raise TypeError("leaky topology needs a LeakyState")
        lp = out["lp"]
        g = params.k
        for i, v in enumerate(x.tolist()):
            lp[i] = leaky_lowpass_tick(state, g, v)
    else:
        if not isinstance(state, SvfState):
            raise TypeError(f"{topology.value} topology needs an SvfState")
        tick = _SVF_TICKS[topology]
        columns = [(out[name], name) for name in names]
        for i, v in enumerate(x.tolist()):
            frame = tick(state, params, v)
            for col, name in columns:
                col[i] = getattr(frame, name)

    return BlockResult(out, *_scan(out))


def _scan(out: Dict[str, np.ndarray]):
    nonfinite = overflow = None
    for y in out.values():
        bad = np.flatnonzero(~np.isfinite(y))
        if bad.size and (nonfinite is None or bad[0] < nonfinite):
            nonfinite = int(bad[0])
        with np.errstate(invalid="ignore"):
            big = np.flatnonzero(~(np.abs(y) <= OVERFLOW_LEVEL))
        if big.size and (overflow is None or big[0] < overflow):
            overflow = int(big[0])
    return nonfinite, overflow
