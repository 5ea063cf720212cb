import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envelope_lab.propagators import (
    WavePacketParams, WrapAroundError, decay_probe, evolve_linear, kg_physical, kg_rescaled,
    linear_deviation, p_symbol, schrodinger, schrodinger_symbol, symbol_consistency_constant, translation,
)
from envelope_lab.spectral import Field, TorusGrid, lp_project, norm

G = TorusGrid.from_periods(8, 128)
FLOWS = [kg_rescaled(0.5), kg_rescaled(1 / 64), schrodinger(), kg_physical(), translation(0.7)]


def p_mp(xi, eps):
    # the defining formula cancels about 2|log10(eps xi)| digits
    z = abs(eps * xi)
    dps = 40 + (int(-2 * math.log10(z)) if 0 < z < 1 else 0)
    with mp.workdps(dps):
        xi, eps = mp.mpf(xi), mp.mpf(eps)
        val = (mp.sqrt(1 + (1 + eps * xi) ** 2) - mp.sqrt(2) - eps * xi / mp.sqrt(2)) / eps ** 2
        return float(val)


def random_field(seed):
    rng = np.random.default_rng(seed)
    return Field(G, rng.standard_normal(G.n) + 1j * rng.standard_normal(G.n))


class TestParams:
    def test_fixed_carrier(self):
        p = WavePacketParams(0.25)
        assert p.omega == pytest.approx(math.sqrt(2))
        assert p.group_velocity == pytest.approx(1 / math.sqrt(2))

    @pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
    def test_eps_range(self, eps):
        with pytest.raises(ValueError):
            WavePacketParams(eps)

    def test_carrier_is_fixed(self):
        with pytest.raises(ValueError):
            WavePacketParams(0.5, k=2.0)


class TestSymbols:
    @pytest.mark.parametrize("eps", [1.0, 0.5, 1e-3, 1e-8])
    def test_vanishes_at_zero(self, eps):
        assert p_symbol(0.0, eps) == 0.0

    def test_reference_value(self):
        # 50-digit evaluation of the defining formula
        assert p_mp(2, 0.5) == pytest.approx(0.45899053576, abs=1e-11)
        assert p_symbol(2.0, 0.5) == pytest.approx(p_mp(2, 0.5), rel=1e-14)

    def test_small_eps_limit(self):
        assert p_symbol(1.0, 1e-3) == pytest.approx(0.17668834, abs=1e-8)
        assert abs(p_symbol(1.0, 1e-3) - 1 / (4 * math.sqrt(2))) < 1e-3

    @given(st.floats(-50, 50), st.sampled_from([1.0, 0.5, 0.1, 1e-3, 1e-6, 1e-9]))
    @settings(max_examples=200, deadline=None)
    def test_matches_multiprecision(self, xi, eps):
        ref = p_mp(xi, eps)
        assert p_symbol(xi, eps) == pytest.approx(ref, rel=1e-12, abs=1e-300)

    def test_schrodinger_symbol(self):
        assert schrodinger_symbol(0.0) == 0.0
        assert schrodinger_symbol(2.0) == pytest.approx(0.70710678, abs=1e-8)
        xi = np.linspace(-5, 5, 11)
        assert np.array_equal(schrodinger_symbol(xi), schrodinger_symbol(-xi))

    def test_consistency_constant(self):
        C = symbol_consistency_constant([2.0 ** -j for j in range(1, 7)])
        assert 0 < C <= 1

    def test_second_difference_positive(self):
        for eps in (0.5, 0.125, 1 / 64):
            xi = G.xi[np.argsort(G.xi)]
            xi = xi[np.abs(1 + eps * xi) <= 10]
            p = p_symbol(xi, eps)
            assert np.all(p[2:] - 2 * p[1:-1] + p[:-2] > 0)


class TestEvolve:
    def test_single_mode_phase(self):
        f = Field.mode(G, 2.0)
        out = evolve_linear(f, 0.3, kg_rescaled(0.5))
        assert out.spectrum[16] == pytest.approx(np.exp(-0.3j * p_symbol(2.0, 0.5)), abs=1e-15)

    def test_half_period_translation_twice(self):
        f = random_field(1)
        a = translation(G.length / 2)
        g = evolve_linear(evolve_linear(f, 1.0, a), 1.0, a)
        assert np.abs(g.values - f.values).max() <= 1e-12 * np.abs(f.values).max()

    def test_translation_moves_profile(self):
        f = Field.from_function(G, lambda x: np.exp(-(((x - 22) / 3) ** 2)))
        g = evolve_linear(f, 2.0, translation(1.5))
        want = np.exp(-(((G.x - 25) / 3) ** 2))
        assert np.abs(g.values - want).max() < 1e-12

    @pytest.mark.parametrize("flow", FLOWS, ids=lambda f: f.kind)
    def test_group_law_and_unitarity(self, flow):
        f = random_field(2)
        a = evolve_linear(evolve_linear(f, 0.37, flow), 1.9, flow)
        b = evolve_linear(f, 2.27, flow)
        assert np.abs(a.spectrum - b.spectrum).max() <= 1e-12 * np.abs(b.spectrum).max()
        assert norm(b) == pytest.approx(norm(f), rel=1e-12)

    @given(st.floats(-1e3, 1e3), st.integers(0, 100))
    @settings(max_examples=40, deadline=None)
    def test_unitarity_any_time(self, t, seed):
        f = random_field(seed)
        for flow in FLOWS:
            assert norm(evolve_linear(f, t, flow)) == pytest.approx(norm(f), rel=1e-12)

    @pytest.mark.parametrize("N", [0.5, 2.0])
    @pytest.mark.parametrize("sharp", [True, False])
    def test_commutes_with_projection(self, N, sharp):
        f = random_field(3)
        flow = kg_rescaled(0.25)
        a = evolve_linear(lp_project(f, N, "band", sharp=sharp), 1.3, flow)
        b = lp_project(evolve_linear(f, 1.3, flow), N, "band", sharp=sharp)
        # both are diagonal: only the order of two floating multiplications differs
        assert np.allclose(a.spectrum, b.spectrum, rtol=4 * np.finfo(float).eps, atol=0)

    def test_rejects_non_finite_time(self):
        with pytest.raises(ValueError):
            evolve_linear(random_field(0), float("nan"), schrodinger())

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            kg_rescaled(0.0)


class TestLinearDeviation:
    def test_single_mode(self):
        g = TorusGrid.from_periods(1, 16)
        u0 = Field.mode(g, 2.0, 1 / math.sqrt(g.length))
        theta = p_symbol(2.0, 0.5) - schrodinger_symbol(2.0)
        expect = 2 * abs(math.sin(theta / 2))
        assert expect == pytest.approx(0.24748030, abs=1e-8)
        assert linear_deviation(u0, 0.5, 1.0, samples=4097) == pytest.approx(expect, abs=1e-10)

    def test_zero_mode_only(self):
        g = TorusGrid.from_periods(1, 16)
        u0 = Field(g, np.full(16, 2.0))
        assert linear_deviation(u0, 0.3) == 0.0

    def test_gaussian_decreases_with_eps(self):
        u0 = Field.from_function(G, lambda x: np.exp(-((x - 25) ** 2)))
        vals = [linear_deviation(u0, 2.0 ** -j) for j in range(2, 7)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            linear_deviation(random_field(0), 0.5, t_window=0)
        with pytest.raises(ValueError):
            linear_deviation(random_field(0), 0.5, samples=1)


class TestDecay:
    def test_early_time_approaches_initial_sup(self):
        times = [1e-6]
        g = TorusGrid.from_periods(64, 4096)
        from envelope_lab.propagators import near_delta
        from envelope_lab.spectral import lp_symbol
        u0 = near_delta(g, 1.0, 0.5 * g.length)
        sup0 = np.abs(np.fft.ifft(lp_symbol(g.xi, 1.0, "band", sharp=False) * u0.spectrum) * g.n).max()
        assert decay_probe(1.0, 0.25, times, grid=g)[0] == pytest.approx(sup0, rel=1e-6)

    def test_translation_invariant(self):
        g = TorusGrid.from_periods(64, 4096)
        a = decay_probe(1.0, 0.25, [10.0, 20.0], grid=g, x0=150.0)
        b = decay_probe(1.0, 0.25, [10.0, 20.0], grid=g, x0=150.0 + 7 * g.dx)
        assert np.allclose(a, b, rtol=1e-12)

    def test_half_power_decay(self):
        from envelope_lab.experiments.report import fit_slope
        times = np.geomspace(1e2, 1e4, 17)
        vals = decay_probe(1.0, 0.25, times)
        slope, _ = fit_slope(zip(times, vals))
        assert abs(slope + 0.5) <= 0.05

    def test_wrap_around_is_reported(self):
        g = TorusGrid.from_periods(2, 256)
        with pytest.raises(WrapAroundError) as info:
            decay_probe(1.0, 0.25, [1.0, 50.0, 100.0], grid=g)
        assert info.value.time in (1.0, 50.0)

    def test_times_validation(self):
        with pytest.raises(ValueError):
            decay_probe(1.0, 0.25, [2.0, 1.0])
