import numpy as np
import pytest

from csdp.errors import ConfigError, InputError
from csdp.lif import (LayerWiring, adapt_threshold, compute_current,
                      emit_spikes, encode_bernoulli, hollow_lateral,
                      integrate_voltage, update_trace)


def wiring_for(rng, size=5, below=4, above=3, classes=2):
    return LayerWiring(
        w=rng.uniform(-1, 1, (size, below)),
        v=rng.uniform(-1, 1, (size, above)),
        m=rng.uniform(0, 1, (size, size)),
        b=rng.uniform(-1, 1, (size, classes)),
    )


class TestComputeCurrent:
    def test_all_zero_inputs_give_zero_current(self, rng):
        w = wiring_for(rng)
        j = compute_current(np.zeros(4), np.zeros(3), np.zeros(5), np.zeros(2),
                            w, 0.1, 0.035)
        assert np.all(j == 0)

    def test_single_synapse_hand_value(self):
        w = LayerWiring(w=np.array([[0.5]]), m=np.zeros((1, 1)))
        j = compute_current(np.array([1.0]), None, np.array([0.0]), None,
                            w, 0.1, 0.035)
        assert np.allclose(j, [0.05])

    def test_single_neuron_lateral_never_contributes(self):
        w = LayerWiring(w=np.zeros((1, 1)), m=np.ones((1, 1)))
        j = compute_current(np.zeros(1), None, np.array([1.0]), None,
                            w, 0.1, 0.035)
        assert np.all(j == 0)

    def test_terms_compose(self, rng):
        w = wiring_for(rng)
        s_below = rng.integers(0, 2, 4).astype(float)
        s_above = rng.integers(0, 2, 3).astype(float)
        s_self = rng.integers(0, 2, 5).astype(float)
        s_label = rng.integers(0, 2, 2).astype(float)
        j = compute_current(s_below, s_above, s_self, s_label, w, 0.1, 0.035)
        expected = 0.1 * w.w @ s_below + 0.1 * w.v @ s_above \
            - 0.035 * hollow_lateral(w.m) @ s_self + 0.1 * w.b @ s_label
        assert np.allclose(j, expected)

    def test_diagonal_of_lateral_is_inert(self, rng):
        w = wiring_for(rng)
        s_self = rng.integers(0, 2, 5).astype(float)
        j1 = compute_current(np.zeros(4), None, s_self, None, w, 0.1, 0.035)
        np.fill_diagonal(w.m, 123.0)
        j2 = compute_current(np.zeros(4), None, s_self, None, w, 0.1, 0.035)
        assert np.array_equal(j1, j2)

    def test_shape_mismatch_raises(self, rng):
        w = wiring_for(rng)
        with pytest.raises(ConfigError):
            compute_current(np.zeros(9), None, np.zeros(5), None, w, 0.1, 0.035)
        with pytest.raises(ConfigError):
            compute_current(np.zeros(4), np.zeros(9), np.zeros(5), None, w, 0.1, 0.035)

    def test_negative_resistance_raises(self, rng):
        w = wiring_for(rng)
        with pytest.raises(ConfigError):
            compute_current(np.zeros(4), None, np.zeros(5), None, w, -0.1, 0.035)

    def test_batched_matches_per_row(self, rng):
        w = wiring_for(rng)
        sb = rng.integers(0, 2, (7, 4)).astype(float)
        sa = rng.integers(0, 2, (7, 3)).astype(float)
        ss = rng.integers(0, 2, (7, 5)).astype(float)
        sl = rng.integers(0, 2, (7, 2)).astype(float)
        j = compute_current(sb, sa, ss, sl, w, 0.1, 0.035)
        for r in range(7):
            row = compute_current(sb[r], sa[r], ss[r], sl[r], w, 0.1, 0.035)
            assert np.allclose(j[r], row, atol=1e-12)


class TestIntegrateVoltage:
    def test_hand_value(self):
        assert np.isclose(integrate_voltage(np.array(0.0), np.array(1.0), 3, 100),
                          0.03)

    def test_fixed_point(self, rng):
        v = rng.normal(size=6)
        assert np.allclose(integrate_voltage(v, v, 3, 100), v)

    def test_pure_leak(self):
        assert np.isclose(integrate_voltage(np.array(0.1), np.array(0.0), 3, 100),
                          0.097)

    def test_linearity(self, rng):
        v = rng.normal(size=8)
        j = rng.normal(size=8)
        for a in (0.25, 2.0, -3.0):
            assert np.allclose(integrate_voltage(a * v, a * j, 3, 100),
                               a * integrate_voltage(v, j, 3, 100))

    def test_invalid_constants(self):
        with pytest.raises(ConfigError):
            integrate_voltage(np.zeros(2), np.zeros(2), 0, 100)


class TestEmitSpikes:
    def test_hand_case_with_reset(self):
        s, v = emit_spikes(np.array([0.06, 0.05]), 0.055)
        assert np.array_equal(s, [1.0, 0.0])
        assert np.allclose(v, [0.0, 0.05])

    def test_subthreshold_passthrough(self):
        s, v = emit_spikes(np.zeros(4), 0.0)
        assert np.all(s == 0) and np.all(v == 0)

    def test_boundary_is_strict(self):
        s, _ = emit_spikes(np.array([0.055]), 0.055)
        assert s[0] == 0

    def test_depolarization_invariant(self, rng):
        for _ in range(50):
            v_hat = rng.normal(scale=0.1, size=30)
            thr = abs(rng.normal(scale=0.05))
            s, v = emit_spikes(v_hat, thr)
            assert set(np.unique(s)) <= {0.0, 1.0}
            assert np.all(v * s == 0)


class TestAdaptThreshold:
    def test_one_spike_is_fixed_point(self):
        assert adapt_threshold(0.055, 1, 0.001) == pytest.approx(0.055)

    def test_hand_value(self):
        assert adapt_threshold(0.055, 3, 0.001) == pytest.approx(0.057)

    def test_clamped_at_zero(self):
        assert adapt_threshold(0.0005, 0, 0.001) == 0.0

    def test_never_negative(self, rng):
        thr = 0.055
        for _ in range(1000):
            thr = adapt_threshold(thr, int(rng.integers(0, 5)), 0.001)
            assert thr >= 0


class TestUpdateTrace:
    def test_zero_case(self):
        assert np.all(update_trace(np.zeros(3), np.zeros(3), 3, 13, 0.05) == 0)

    def test_hand_value(self):
        z = update_trace(np.array(0.0), np.array(1.0), 3, 13, 0.05)
        assert np.isclose(z, (3 / 13) * 0.05)
        assert np.isclose(z, 0.011538461538461539)

    def test_gamma_is_fixed_point(self):
        z = update_trace(np.array(0.05), np.array(1.0), 3, 13, 0.05)
        assert np.isclose(z, 0.05)

    def test_bounded_by_gamma(self, rng):
        z = np.zeros(20)
        for _ in range(500):
            s = rng.integers(0, 2, 20).astype(float)
            z = update_trace(z, s, 3, 13, 0.05)
            assert np.all(z >= 0) and np.all(z <= 0.05 + 1e-12)


class TestEncodeBernoulli:
    def test_degenerate_probabilities(self, rng):
        x = np.array([0.0, 1.0] * 10)
        for _ in range(20):
            s = encode_bernoulli(x, rng)
            assert np.array_equal(s[0::2], np.zeros(10))
            assert np.array_equal(s[1::2], np.ones(10))

    def test_mean_concentrates(self):
        rng = np.random.default_rng(5)
        draws = np.array([encode_bernoulli(np.array([0.5]), rng)[0]
                          for _ in range(10000)])
        assert 0.48 <= draws.mean() <= 0.52

    def test_statistical_encoding_three_sigma(self, rng):
        x = rng.random(30)
        t = 4000
        total = np.zeros(30)
        for _ in range(t):
            total += encode_bernoulli(x, rng)
        sigma = np.sqrt(np.maximum(x * (1 - x), 1e-12) / t)
        assert np.all(np.abs(total / t - x) <= 3.5 * sigma + 1e-9)

    def test_deterministic_under_fixed_seed(self):
        x = np.linspace(0, 1, 50)
        a = encode_bernoulli(x, np.random.default_rng(42))
        b = encode_bernoulli(x, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_out_of_range_rejected(self, rng):
        with pytest.raises(InputError):
            encode_bernoulli(np.array([1.2]), rng)
        with pytest.raises(InputError):
            encode_bernoulli(np.array([-0.1]), rng)


def test_threshold_homeostasis_small_layer(rng):
    """Sustained random drive settles near one spike per step."""
    size, below = 40, 30
    wiring = LayerWiring(w=rng.uniform(-1, 1, (size, below)).astype(np.float32),
                         m=rng.uniform(0, 1, (size, size)).astype(np.float32))
    v = np.zeros(size, dtype=np.float32)
    s = np.zeros(size, dtype=np.float32)
    thr = 0.055
    counts = []
    x = rng.random(below)
    for t in range(500):
        s_in = encode_bernoulli(x, rng)
        j = compute_current(s_in, None, s, None, wiring, 0.1, 0.035)
        v_hat = integrate_voltage(v, j, 3, 100)
        s, v = emit_spikes(v_hat, thr)
        thr = adapt_threshold(thr, s.sum(), 0.001)
        counts.append(s.sum())
    assert 0.5 <= np.mean(counts[250:]) <= 2.0
