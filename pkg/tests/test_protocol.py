import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kzising.errors import DegeneracyError, DomainError
from kzising.protocol import (
    ChainSpec, Halt, RampProtocol, bdg_matrix, default_chain_size, dephasing_length,
    dephasing_time, dispersion, field_at, kz_scales, lz_probability, lz_rate,
    momentum_grid, positive_momenta, static_mode,
)

taus = st.floats(0.5, 1e4)


class TestChain:
    @pytest.mark.parametrize("N", [3, 2, 0, 7])
    def test_rejects_bad_sizes(self, N):
        with pytest.raises(DomainError):
            ChainSpec(N)

    def test_grid_n4(self):
        k = momentum_grid(ChainSpec(4))
        np.testing.assert_allclose(k, [-3 * np.pi / 4, -np.pi / 4, np.pi / 4, 3 * np.pi / 4])

    def test_smallest_positive_n8(self):
        assert positive_momenta(ChainSpec(8))[0] == pytest.approx(np.pi / 8, abs=1e-15)

    @given(st.integers(2, 3000).map(lambda m: 2 * m))
    def test_grid_symmetric(self, N):
        k = momentum_grid(ChainSpec(N))
        assert k.size == N
        assert np.all(np.diff(k) > 0)
        np.testing.assert_array_equal(k, -k[::-1])
        assert abs(k.sum()) < 1e-9
        assert np.all(np.abs(k) > 0) and np.all(np.abs(k) < np.pi)
        # half-integer multiples of 2 pi / N
        m = k * N / (2 * np.pi)
        np.testing.assert_allclose(m - np.floor(m), 0.5, atol=1e-9)

    def test_default_chain_size(self):
        assert default_chain_size(8) == 2000
        N = default_chain_size(128)
        assert N % 2 == 0 and N >= 40 * 32 * np.pi


class TestRamp:
    def test_endpoints(self):
        pr = RampProtocol(4.0)
        assert field_at(pr, -40.0) == 10.0
        assert field_at(pr, 0.0) == 0.0
        assert pr.t_critical == -4.0

    def test_mid_halt(self):
        pr = RampProtocol(4.0, halt=Halt(0.5, 3.0))
        assert field_at(pr, pr.t_start + 38 + 1.5) == 0.5
        assert pr.t_end == 3.0

    def test_out_of_domain_names_interval(self):
        pr = RampProtocol(4.0)
        with pytest.raises(DomainError, match=r"\[-40.0, 0.0\]"):
            field_at(pr, 1.0)

    @pytest.mark.parametrize("kw", [dict(tau_q=0), dict(tau_q=1, g0=1.0)])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            RampProtocol(**kw)

    @pytest.mark.parametrize("gw,tw", [(0.0, 1), (1.0, 1), (0.5, -1)])
    def test_bad_halt(self, gw, tw):
        with pytest.raises(DomainError):
            Halt(gw, tw)

    @given(taus.filter(lambda t: t < 100), st.floats(0.05, 0.95), st.floats(0, 50))
    def test_piecewise_linear_non_increasing(self, tau, gw, tw):
        pr = RampProtocol(tau, halt=Halt(gw, tw))
        t = np.linspace(pr.t_start, pr.t_end, 401)
        g = np.array([field_at(pr, x) for x in t])
        assert g[0] == pr.g0 and g[-1] == 0.0
        assert np.all(np.diff(g) <= 1e-12)
        # continuous at breakpoints
        for a, b in zip(pr.segments, pr.segments[1:]):
            assert a.t1 == b.t0 and a.g1 == b.g0
        for s in pr.segments:
            if s.g0 != s.g1:
                assert s.slope == pytest.approx(-1.0 / tau)


class TestStatic:
    def test_dispersion_examples(self):
        assert np.allclose(dispersion(0.0, np.linspace(-3, 3, 7)), 2.0)
        assert dispersion(1.0, 0.0) == 0.0
        assert dispersion(2.0, np.pi / 2) == pytest.approx(2 * math.sqrt(5))

    @given(st.floats(-5, 5), st.floats(-np.pi, np.pi))
    def test_dispersion_even(self, g, k):
        assert dispersion(g, k) == dispersion(g, -k)
        assert dispersion(g, k) >= 0

    def test_static_mode_limits(self):
        U, V = static_mode(1e6, 0.3)
        assert U == pytest.approx(1.0) and abs(V) < 1e-6
        U, V = static_mode(0.0, np.pi / 2)
        assert U == pytest.approx(1 / math.sqrt(2), abs=1e-15)
        assert V == pytest.approx(1 / math.sqrt(2), abs=1e-15)

    def test_static_mode_degenerate(self):
        with pytest.raises(DegeneracyError):
            static_mode(1.0, 0.0)

    def test_residual_random(self):
        rng = np.random.default_rng(7)
        g = rng.uniform(-3, 3, 1000)
        k = rng.uniform(-np.pi, np.pi, 1000)
        U, V = static_mode(g, k)
        assert np.all(U >= 0)
        np.testing.assert_allclose(U ** 2 + V ** 2, 1.0, atol=1e-14)
        for gi, ki, u, v in zip(g, k, U, V):
            H = bdg_matrix(gi, ki)
            res = H @ np.array([u, v]) - dispersion(gi, ki) * np.array([u, v])
            assert np.linalg.norm(res) <= 1e-12


class TestScales:
    def test_examples(self):
        sc = kz_scales(RampProtocol(128.0))
        assert sc.xi_hat == pytest.approx(32 * math.pi, rel=1e-15)
        assert sc.l == pytest.approx(153.9, rel=1e-3)
        assert dephasing_time(4.0, 0.5) == pytest.approx(8 * math.pi / 3)
        sc4 = kz_scales(RampProtocol(4.0, halt=Halt(0.5, 1.0)))
        assert sc4.t_D == pytest.approx(8.378, abs=1e-3)

    @given(taus)
    def test_xi_n_identity(self, tau):
        sc = kz_scales(RampProtocol(tau))
        assert sc.xi_hat * sc.n == pytest.approx(1.0, abs=1e-15)
        assert sc.l >= sc.xi_hat

    @given(taus, st.floats(0.01, 0.99))
    def test_lw_reduces_to_l(self, tau, gw):
        assert dephasing_length(tau, gw, 0.0) == dephasing_length(tau)
        sc = kz_scales(RampProtocol(tau, halt=Halt(gw, 0.0)))
        assert sc.l_w == sc.l

    @given(st.floats(1, 500), st.floats(0.05, 0.95))
    def test_lw_increasing_and_linear(self, tau, gw):
        tw = np.geomspace(0.1, 1e9, 40) * tau
        lw = np.array([dephasing_length(tau, gw, t) for t in tw])
        assert np.all(np.diff(lw) > 0)
        xi = 2 * math.pi * math.sqrt(2 * tau)
        slope = xi * 6 * gw / abs(1 - gw) / (4 * math.pi * tau)
        assert lw[-1] / tw[-1] == pytest.approx(slope, rel=1e-6)

    def test_rescaled_keeps_ratios(self):
        sc = kz_scales(RampProtocol(32.0, halt=Halt(0.5, 10.0)))
        r = sc.rescaled(0.9 * sc.n)
        assert r.xi_hat * r.n == pytest.approx(1.0)
        assert r.l / r.xi_hat == pytest.approx(sc.l / sc.xi_hat)
        assert r.l_w / r.xi_hat == pytest.approx(sc.l_w / sc.xi_hat)


class TestLandauZener:
    def test_rate(self):
        assert lz_rate(1.0, np.pi / 2) == pytest.approx(0.25)

    def test_gaussian_example(self):
        full, gauss = lz_probability(RampProtocol(8.0), 0.1)
        assert gauss == pytest.approx(math.exp(-0.5027), abs=1e-4)
        assert gauss == pytest.approx(0.6049, abs=1e-4)

    def test_small_k_limit(self):
        full, gauss = lz_probability(RampProtocol(8.0), 1e-9)
        assert full == pytest.approx(1.0) and gauss == pytest.approx(1.0)

    @given(taus, st.floats(-np.pi, np.pi))
    def test_range_and_first_order_agreement(self, tau, k):
        full, gauss = lz_probability(RampProtocol(tau), k)
        assert 0 <= full <= 1 and 0 <= gauss <= 1
        # exponents agree to first order in k^2
        assert abs(np.sin(k) ** 2 - k ** 2) <= k ** 4 / 3 + 1e-15
