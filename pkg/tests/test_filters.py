import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statevar import (
    FilterParams,
    LeakyState,
    SvfState,
    chamberlin_tick,
    improved_tick,
    k_bilinear,
    k_chamberlin,
    leaky_lowpass_tick,
    process_block,
    rearranged_tick,
    reset,
    stability_limit_chamberlin,
)
from statevar.filters import Topology, new_state

# mpmath at 40 digits: 2*sin(pi*5000/44100), tan(pi*5000/44100)
K_SINE_5K = 0.69741116767691394651
K_TAN_5K = 0.37205885622910269493
# mpmath: (-1/5 + sqrt(8 + 1/25)) / 2
KMAX_Q5 = 1.3177446878757825203


def true_chamberlin_limit(q):
    """Largest K keeping both Chamberlin poles inside the unit circle
    (triangle test on 1 - (2 - K/Q - K^2) z^-1 + (1 - K/Q) z^-2)."""
    d = 1.0 / q
    return min(2.0 * q, -d + math.sqrt(d * d + 4.0))


def run(tick, params, x):
    state = SvfState()
    frames = [tick(state, params, v) for v in x]
    return {name: np.array([getattr(fr, name) for fr in frames])
            for name in ("hp", "bp", "lp", "br")}


stable_kq = st.tuples(
    st.floats(0.5, 20.0),
    st.floats(0.01, 0.95),
).map(lambda t: (t[1] * true_chamberlin_limit(t[0]), t[0]))

signals = st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=200)


class TestTuningMaps:

    def test_sine_map_values(self):
        assert k_chamberlin(0, 44100) == 0.0
        assert k_chamberlin(44100 / 4, 44100) == pytest.approx(math.sqrt(2), abs=1e-15)
        assert k_chamberlin(5000, 44100) == pytest.approx(K_SINE_5K, rel=1e-14)

    def test_tangent_map_values(self):
        assert k_bilinear(0, 44100) == 0.0
        assert k_bilinear(44100 / 4, 44100) == pytest.approx(1.0, abs=1e-15)
        assert k_bilinear(5000, 44100) == pytest.approx(K_TAN_5K, rel=1e-14)

    @pytest.mark.parametrize("f, fs", [(-1, 44100), (22050, 44100), (30000, 44100), (10, 0)])
    def test_sine_map_domain(self, f, fs):
        with pytest.raises(ValueError):
            k_chamberlin(f, fs)

    @pytest.mark.parametrize("f, fs", [(-1, 44100), (0.4901 * 44100, 44100), (22050, 44100), (1, -1)])
    def test_tangent_map_domain(self, f, fs):
        with pytest.raises(ValueError):
            k_bilinear(f, fs)

    def test_tangent_map_accepts_guard_edge(self):
        assert k_bilinear(0.49 * 48000, 48000) == pytest.approx(math.tan(0.49 * math.pi))

    def test_sine_map_monotone(self):
        f = np.linspace(0, 22049, 500)
        k = [k_chamberlin(v, 44100) for v in f]
        assert np.all(np.diff(k) > 0)


class TestStabilityLimit:

    def test_values(self):
        assert stability_limit_chamberlin(1.0) == pytest.approx(1.0, abs=1e-15)
        assert stability_limit_chamberlin(5.0) == pytest.approx(KMAX_Q5, rel=1e-14)
        assert stability_limit_chamberlin(0.5) == 0.0

    @pytest.mark.parametrize("q", [0.0, -1.0, math.inf, math.nan])
    def test_domain(self, q):
        with pytest.raises(ValueError):
            stability_limit_chamberlin(q)

    @given(st.floats(0.5, 100.0))
    def test_limit_lies_inside_pole_stability_region(self, q):
        assert 0.0 <= stability_limit_chamberlin(q) <= true_chamberlin_limit(q)


class TestParams:

    @pytest.mark.parametrize("k, q", [(0, 1), (-1, 1), (1, 0), (1, -2), (math.inf, 1), (1, math.nan)])
    def test_rejects_invalid(self, k, q):
        with pytest.raises(ValueError):
            FilterParams(k, q)

    def test_constructors(self):
        p = FilterParams.bilinear(5000, 2.0, 44100)
        assert p.k == pytest.approx(K_TAN_5K) and p.q == 2.0 and p.sample_rate_hz == 44100
        assert FilterParams.chamberlin(5000, 2.0, 44100).k == pytest.approx(K_SINE_5K)


class TestTicks:

    @pytest.mark.parametrize("tick", [chamberlin_tick, rearranged_tick, improved_tick])
    def test_zero_in_zero_out(self, tick):
        fr = tick(SvfState(), FilterParams(0.5, 1.0), 0.0)
        assert (fr.hp, fr.bp, fr.lp, fr.br) == (0.0, 0.0, 0.0, 0.0)
        assert fr.ap in (None, 0.0)

    def test_chamberlin_first_step(self):
        state = SvfState()
        fr = chamberlin_tick(state, FilterParams(0.5, 1.0), 1.0)
        assert (fr.lp, fr.hp, fr.bp, fr.br) == (0.0, 1.0, 0.5, 1.0)
        assert fr.ap is None
        assert (state.s1, state.s2) == (0.5, 0.0)

    def test_chamberlin_second_step(self):
        state = SvfState()
        p = FilterParams(0.5, 1.0)
        chamberlin_tick(state, p, 1.0)
        fr = chamberlin_tick(state, p, 0.0)
        # lp = 0.5*0.5 + 0; hp = 0 - 0.5 - 0.25; bp = 0.5*hp + 0.5
        assert (fr.lp, fr.hp, fr.bp) == (0.25, -0.75, 0.125)

    def test_rearranged_first_step(self):
        fr = rearranged_tick(SvfState(), FilterParams(0.5, 1.0), 1.0)
        assert (fr.br, fr.hp, fr.bp, fr.lp) == (1.0, 1.0, 0.5, 0.25)

    def test_improved_first_step(self):
        # K=0.5, Q=1: div = 1.75
        state = SvfState()
        fr = improved_tick(state, FilterParams(0.5, 1.0), 1.0)
        hp = 1 / 1.75
        bp = 0.5 * hp
        lp = 0.5 * bp
        assert fr.hp == pytest.approx(hp, abs=1e-16)
        assert fr.bp == pytest.approx(bp, abs=1e-16)
        assert fr.lp == pytest.approx(lp, abs=1e-16)
        assert fr.br == pytest.approx(hp + lp, abs=1e-16)
        assert fr.ap == pytest.approx(hp + lp - bp, abs=1e-16)
        assert state.s1 == pytest.approx(2 * bp) and state.s2 == pytest.approx(2 * lp)

    @pytest.mark.parametrize("kq", [(0.1, 0.7), (0.5, 1.0), (1.0, 5.0), (1.2, 2.0)])
    def test_chamberlin_dc_gain(self, kq):
        x = np.zeros(20000)
        x[0] = 1.0
        lp = run(chamberlin_tick, FilterParams(*kq), x)["lp"]
        assert lp.sum() == pytest.approx(1.0, abs=1e-9)

    @given(stable_kq, signals)
    @settings(max_examples=60, deadline=None)
    def test_rearranged_matches_chamberlin(self, kq, x):
        p = FilterParams(*kq)
        ch = run(chamberlin_tick, p, x)
        re = run(rearranged_tick, p, x)
        assert np.array_equal(ch["hp"], re["hp"])
        assert np.array_equal(ch["bp"], re["bp"])
        assert np.array_equal(re["lp"][:-1], ch["lp"][1:])
        assert ch["lp"][0] == 0.0

    @given(st.floats(1e-3, 10.0), st.floats(0.5, 20.0), signals)
    @settings(max_examples=60, deadline=None)
    def test_improved_outputs_reconstruct_input(self, k, q, x):
        p = FilterParams(k, q)
        state = SvfState()
        for v in x:
            fr = improved_tick(state, p, v)
            assert fr.hp + fr.lp + fr.bp / q == pytest.approx(v, abs=1e-12)


class TestLeaky:

    def test_zero(self):
        assert leaky_lowpass_tick(LeakyState(), 0.5, 0.0) == 0.0

    @pytest.mark.parametrize("g", [0.0, -0.5])
    def test_gain_domain(self, g):
        with pytest.raises(ValueError):
            leaky_lowpass_tick(LeakyState(), g, 1.0)

    @pytest.mark.parametrize("g", [0.1, 1.0, 3.0])
    def test_step_settles_to_input(self, g):
        state = LeakyState()
        for _ in range(2000):
            y = leaky_lowpass_tick(state, g, 0.7)
        assert y == pytest.approx(0.7, abs=1e-12)

    def test_first_sample(self):
        assert leaky_lowpass_tick(LeakyState(), 1.0, 1.0) == 0.5


class TestProcessBlock:

    @pytest.mark.parametrize("topology", list(Topology))
    def test_empty(self, topology):
        res = process_block(topology, new_state(topology), FilterParams(0.3, 1.0), [])
        assert all(v.size == 0 for v in res.outputs.values())
        assert res.stable and res.overflow_index is None

    @pytest.mark.parametrize("topology", list(Topology))
    def test_split_is_seamless(self, topology):
        x = np.random.default_rng(3).uniform(-1, 1, 1000)
        p = FilterParams(0.4, 3.0)
        whole = process_block(topology, new_state(topology), p, x)
        state = new_state(topology)
        a = process_block(topology, state, p, x[:377])
        b = process_block(topology, state, p, x[377:])
        for name in topology.outputs:
            assert np.array_equal(whole[name], np.concatenate([a[name], b[name]]))

    def test_output_sets(self):
        p = FilterParams(0.3, 1.0)
        assert set(process_block("improved", SvfState(), p, [1.0]).outputs) == {"hp", "bp", "lp", "br", "ap"}
        assert set(process_block("chamberlin", SvfState(), p, [1.0]).outputs) == {"hp", "bp", "lp", "br"}
        assert set(process_block("leaky", LeakyState(), p, [1.0]).outputs) == {"lp"}

    def test_wrong_state_type(self):
        with pytest.raises(TypeError):
            process_block("leaky", SvfState(), FilterParams(0.3, 1.0), [1.0])
        with pytest.raises(TypeError):
            process_block("improved", LeakyState(), FilterParams(0.3, 1.0), [1.0])

    @pytest.mark.parametrize("q", [0.6, 1.0, 5.0])
    def test_detects_chamberlin_blowup(self, q):
        # 10% beyond where the poles leave the unit circle
        k = 1.1 * true_chamberlin_limit(q)
        x = np.zeros(65536)
        x[0] = 1.0
        res = process_block("chamberlin", SvfState(), FilterParams(k, q), x)
        assert res.overflow_index is not None
        assert res.nonfinite_index is not None
        assert res.overflow_index < res.nonfinite_index
        assert np.all(np.isfinite(res["lp"][:res.nonfinite_index]))

    def test_stable_run_not_flagged(self):
        x = np.zeros(4096)
        x[0] = 1.0
        res = process_block("improved", SvfState(), FilterParams.bilinear(21000, 0.5, 44100), x)
        assert res.stable and res.overflow_index is None


class TestReset:

    def test_zeroes_state(self):
        s = SvfState(0.3, -2.0)
        assert reset(s) is s
        assert (s.s1, s.s2) == (0.0, 0.0)
        ls = LeakyState(4.0)
        reset(ls)
        assert ls.s == 0.0

    def test_idempotent(self):
        s = reset(reset(SvfState(1.0, 2.0)))
        assert (s.s1, s.s2) == (0.0, 0.0)

    def test_reset_reproduces_fresh_impulse_response(self):
        p = FilterParams(0.7, 2.0)
        imp = np.zeros(256)
        imp[0] = 1.0
        fresh = process_block("improved", SvfState(), p, imp)
        state = SvfState()
        process_block("improved", state, p, np.random.default_rng(0).normal(size=100))
        reset(state)
        again = process_block("improved", state, p, imp)
        for name in fresh.outputs:
            assert np.array_equal(fresh[name], again[name])
