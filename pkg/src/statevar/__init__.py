"""Digital state variable filters: Chamberlin, re-arranged and improved
(bilinear-equivalent) topologies, plus response analysis tools."""

from .filters import (
    BlockResult,
    FilterParams,
    InstabilityError,
    LeakyState,
    SvfFrame,
    SvfState,
    Topology,
    chamberlin_tick,
    improved_tick,
    k_bilinear,
    k_chamberlin,
    leaky_lowpass_tick,
    new_state,
    process_block,
    rearranged_tick,
    reset,
    stability_limit_chamberlin,
)
from .analysis import (
    BiquadCoeffs,
    ResponseCurve,
    analog_tf,
    butterworth_power_spectrum,
    chamberlin_biquad,
    dft_magnitude,
    direct_form_filter,
    eval_tf,
    impulse_response,
    improved_biquad,
    leaky_biquad,
    peak_frequency,
    topology_biquad,
)

__version__ = "0.1.0"
