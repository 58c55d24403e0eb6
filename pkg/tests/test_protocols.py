"""Protocol families: construction, evaluation, reduction, serialization."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qoct.protocols import (
    BangSequence,
    OneParamBB,
    RabiProtocol,
    Sampled,
    TanhProtocol,
    ThirdHarmonic,
    as_sampled,
    mirrored_tanh_times,
    protocol_from_dict,
    protocol_to_dict,
    segment_durations_values,
)


class TestBangSequence:
    def test_segment_lookup(self):
        p = BangSequence(2.0, 0.5, (0.5, 1.2), (0.5, -0.5, 0.0))
        np.testing.assert_array_equal(p.u([0.1, 0.5, 0.8, 1.2, 1.9, 2.0]),
                                      [0.5, -0.5, -0.5, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(p.durations, [0.5, 0.7, 0.8])

    def test_rejects_unordered_times(self):
        with pytest.raises(ValueError):
            BangSequence(2.0, 0.5, (1.2, 0.5), (0.5, -0.5, 0.5))

    def test_rejects_out_of_range_times(self):
        with pytest.raises(ValueError):
            BangSequence(2.0, 0.5, (2.5,), (0.5, -0.5))

    def test_rejects_off_alphabet_values(self):
        with pytest.raises(ValueError):
            BangSequence(2.0, 0.5, (1.0,), (0.5, 0.3))

    def test_rejects_wrong_value_count(self):
        with pytest.raises(ValueError):
            BangSequence(2.0, 0.5, (1.0,), (0.5,))


class TestOneParamBB:
    def test_no_zero_crossing_gives_single_bang(self):
        p = OneParamBB(omega_eff=0.5, T=2.0, u_max=0.5)
        seq = p.to_bang_sequence()
        assert len(seq.switch_times) == 0
        assert seq.values == (0.5,)

    def test_even_symmetry_exact(self):
        p = OneParamBB(omega_eff=2.04, T=5.3, u_max=0.5)
        s = np.linspace(0.0, 2.6, 97)
        np.testing.assert_array_equal(p.u(p.T / 2 + s), p.u(p.T / 2 - s))

    def test_odd_parity_antisymmetric(self):
        p = OneParamBB(omega_eff=2.0, T=5.0, u_max=0.5, parity="odd")
        s = np.linspace(0.01, 2.4, 57)
        np.testing.assert_array_equal(p.u(p.T / 2 + s), -p.u(p.T / 2 - s))

    def test_bang_sequence_agrees_with_direct_evaluation(self):
        p = OneParamBB(omega_eff=2.0435, T=1.69 * np.pi, u_max=0.5, sign=-1)
        seq = p.to_bang_sequence()
        t = np.linspace(0.0, p.T, 731)
        # avoid sampling exactly on a switch
        t = t[np.min(np.abs(t[:, None] - np.asarray(seq.switch_times)[None, :]),
                     axis=1) > 1e-9]
        np.testing.assert_array_equal(p.u(t), seq.u(t))

    def test_middle_bangs_equal(self):
        seq = OneParamBB(omega_eff=1.99, T=3.958 * np.pi, u_max=0.2).to_bang_sequence()
        durs = seq.durations
        assert len(durs) >= 5
        np.testing.assert_allclose(durs[1:-1], np.pi / 1.99, rtol=1e-12)
        assert abs(durs[0] - durs[-1]) < 1e-12


class TestTanh:
    def test_mirror_constraint(self):
        times = mirrored_tanh_times([0.5, 1.1], 4.0)
        assert times == (0.5, 1.1, 2.9, 3.5)
        with pytest.raises(ValueError):
            mirrored_tanh_times([2.5], 4.0)

    def test_even_about_midpoint(self):
        p = TanhProtocol(u_max=0.2, T=4.0, beta=4.0,
                         times=mirrored_tanh_times([0.5, 1.1], 4.0))
        s = np.linspace(0.0, 2.0, 101)
        np.testing.assert_allclose(p.u(2.0 + s), p.u(2.0 - s), atol=1e-14)

    def test_sharp_limit_matches_bang_sequence(self):
        times = mirrored_tanh_times([0.5, 1.1], 4.0)
        p = TanhProtocol(u_max=0.2, T=4.0, beta=1e6, times=times)
        seq = BangSequence(4.0, 0.2, times, (-0.2, 0.2, -0.2, 0.2, -0.2))
        t = np.linspace(0.0, 4.0, 801)
        away = np.min(np.abs(t[:, None] - np.asarray(times)[None, :]), axis=1) > 1e-4
        assert np.max(np.abs(p.u(t[away]) - seq.u(t[away]))) < 1e-4

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.05, 0.45), min_size=2, max_size=4, unique=True))
    def test_amplitude_bound_for_separated_times(self, fracs):
        # times separated by at least a tanh width stay within the bound
        T = 6.0
        first = np.sort(np.asarray(fracs)) * T / 2
        if np.min(np.diff(np.concatenate([first, [T / 2]]))) < 0.3:
            return
        p = TanhProtocol(u_max=0.2, T=T, beta=4.0,
                         times=mirrored_tanh_times(first, T))
        t = np.linspace(0.0, T, 4001)
        assert np.max(np.abs(p.u(t))) <= 0.2 + 1e-12


class TestThirdHarmonic:
    def test_ratio_bounds(self):
        with pytest.raises(ValueError):
            ThirdHarmonic(u_max=0.2, T=5.0, omega=2.0, ratio=-0.2)
        with pytest.raises(ValueError):
            ThirdHarmonic(u_max=0.2, T=5.0, omega=2.0, ratio=1.1)

    def test_zero_ratio_reduces_to_cosine(self):
        p = ThirdHarmonic(u_max=0.2, T=5.0, omega=2.1, ratio=0.0)
        t = np.linspace(0.0, 5.0, 100)
        np.testing.assert_allclose(p.u(t), 0.2 * np.cos(2.1 * (t - 2.5)), atol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-0.125, 1.0), st.floats(1.5, 2.5))
    def test_amplitude_bound_over_ratio_range(self, R, w):
        p = ThirdHarmonic(u_max=0.2, T=8.0, omega=w, ratio=R)
        t = np.linspace(0.0, 8.0, 4001)
        assert np.max(np.abs(p.u(t))) <= 0.2 + 1e-9


class TestSampledAndReduction:
    def test_cell_lookup(self):
        p = Sampled(T=1.0, u_max=1.0, values=np.array([0.1, -0.2, 0.3, -0.4]))
        np.testing.assert_array_equal(p.u([0.0, 0.2, 0.3, 0.6, 0.99]),
                                      [0.1, 0.1, -0.2, 0.3, -0.4])
        assert p.dt == 0.25

    def test_values_frozen(self):
        p = Sampled(T=1.0, u_max=1.0, values=np.array([0.1, 0.2]))
        with pytest.raises(ValueError):
            p.values[0] = 9.0

    def test_as_sampled_respects_amplitude(self):
        p = RabiProtocol(u_max=0.3, T=np.pi / 0.3)
        s = as_sampled(p)
        assert np.max(np.abs(s.values)) <= 0.3 + 1e-12

    def test_segments_of_bang(self):
        p = BangSequence(2.0, 0.5, (0.4,), (0.5, -0.5))
        durs, vals = segment_durations_values(p)
        np.testing.assert_allclose(durs, [0.4, 1.6])
        np.testing.assert_array_equal(vals, [0.5, -0.5])


class TestSerialization:
    @pytest.mark.parametrize("proto", [
        BangSequence(2.0, 0.5, (0.5, 1.2), (0.5, -0.5, 0.0)),
        RabiProtocol(u_max=0.2, T=np.pi / 0.2),
        OneParamBB(omega_eff=2.04, T=5.3, u_max=0.5, sign=-1, parity="odd"),
        TanhProtocol(u_max=0.2, T=4.0, beta=4.0,
                     times=mirrored_tanh_times([0.5, 1.1], 4.0)),
        ThirdHarmonic(u_max=0.2, T=5.0, omega=2.02, ratio=-0.11),
        Sampled(T=1.0, u_max=0.4, values=np.array([0.1, -0.2, 0.3])),
    ])
    def test_round_trip(self, proto):
        d = protocol_to_dict(proto)
        back = protocol_from_dict(d)
        t = np.linspace(0.0, proto.T * (1 - 1e-12), 211)
        np.testing.assert_allclose(back.u(t), proto.u(t), atol=1e-12)
        assert back.T == proto.T and back.u_max == proto.u_max

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            protocol_from_dict({"variant": "Nope", "T": 1.0, "u_max": 1.0, "params": {}})
