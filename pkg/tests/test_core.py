import math

import numpy as np
import pytest

from bbmburgers import (
    ConfigError,
    Field,
    derivative,
    from_spectral,
    lp_norm,
    make_grid,
    to_spectral,
)
from bbmburgers.core import smoothstep, smoothstep_deriv, tail_taper
from conftest import band_limited


class TestMakeGrid:
    def test_small_grid_arithmetic(self):
        g = make_grid(16.0, 64)
        assert g.dx == 0.5
        assert g.dx * g.n_points == 2.0 * g.half_width
        # wavenumbers are multiples of pi/16
        ratios = g.xi / (np.pi / 16.0)
        assert np.allclose(ratios, np.round(ratios), atol=1e-12)

    def test_production_grid_spacing(self):
        g = make_grid(400.0, 16384)
        assert abs(g.dx - 0.048828125) < 1e-12

    @pytest.mark.parametrize("L,N", [(16.0, 63), (16.0, 100), (-1.0, 64), (0.0, 64), (16.0, 8)])
    def test_rejects_bad_arguments(self, L, N):
        with pytest.raises(ConfigError):
            make_grid(L, N)

    def test_wavenumbers_antisymmetric_except_nyquist(self):
        g = make_grid(16.0, 64)
        for k in range(1, g.n_points // 2):
            assert g.xi[k] == -g.xi[-k]
        assert g.xi[g.n_points // 2] < 0  # lone Nyquist mode


class TestTransforms:
    def test_cosine_has_two_modes(self):
        g = make_grid(16.0, 64)
        f = Field(g, np.cos(np.pi * g.x / g.half_width))
        F = to_spectral(f)
        nz = np.abs(F.coefficients) > 1e-9 * g.n_points
        assert nz.sum() == 2
        assert set(np.round(g.xi[nz] / (np.pi / 16.0)).astype(int)) == {1, -1}

    def test_zero_field(self, grid40):
        F = to_spectral(Field(grid40, np.zeros(grid40.n_points)))
        assert np.all(F.coefficients == 0)

    def test_roundtrip_random(self, grid40, rng):
        f = Field(grid40, rng.standard_normal(grid40.n_points))
        back = from_spectral(to_spectral(f))
        assert np.abs(back.values - f.values).max() <= 1e-12 * np.abs(f.values).max()

    def test_parseval(self, grid40, rng):
        f = band_limited(grid40, rng)
        F = to_spectral(f)
        lhs = lp_norm(f, 2) ** 2
        rhs = grid40.dx / grid40.n_points * float((np.abs(F.coefficients) ** 2).sum())
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, lhs)

    def test_conjugate_symmetry(self, grid40, rng):
        f = Field(grid40, rng.standard_normal(grid40.n_points))
        c = to_spectral(f).coefficients
        scale = np.abs(c).max()
        for k in range(1, grid40.n_points // 2):
            assert abs(c[k] - np.conj(c[-k])) <= 1e-12 * scale

    def test_non_finite_rejected(self, grid40):
        v = np.zeros(grid40.n_points)
        v[3] = np.nan
        with pytest.raises(Exception):
            Field(grid40, v)


class TestDerivative:
    def test_sine(self):
        g = make_grid(16.0, 512)
        k = np.pi / g.half_width
        f = Field(g, np.sin(k * g.x))
        out = derivative(f, 1)
        assert np.abs(out.values - k * np.cos(k * g.x)).max() < 1e-10

    def test_constant(self, grid40):
        f = Field(grid40, np.full(grid40.n_points, 3.7))
        for l in (1, 2, 3):
            assert np.abs(derivative(f, l).values).max() < 1e-12

    def test_gaussian_second_derivative(self):
        g = make_grid(40.0, 2048)
        f = Field(g, np.exp(-g.x**2 / 4.0))
        exact = (g.x**2 / 4.0 - 0.5) * np.exp(-g.x**2 / 4.0)
        assert np.abs(derivative(f, 2).values - exact).max() < 1e-8

    def test_composition(self, grid40, rng):
        f = band_limited(grid40, rng)
        twice = derivative(derivative(f, 1), 1)
        once = derivative(f, 2)
        scale = max(1.0, np.abs(once.values).max())
        assert np.abs(twice.values - once.values).max() <= 1e-10 * scale

    def test_negative_order_rejected(self, grid40):
        f = Field(grid40, np.zeros(grid40.n_points))
        with pytest.raises(ConfigError):
            derivative(f, -1)


class TestNorms:
    def test_box_l1(self):
        g = make_grid(16.0, 256)
        vals = np.where(np.abs(g.x) <= 1.0, 1.0, 0.0)
        assert abs(lp_norm(Field(g, vals), 1) - 2.0) <= g.dx

    def test_zero(self, grid40):
        f = Field(grid40, np.zeros(grid40.n_points))
        assert lp_norm(f, 1) == lp_norm(f, 2) == lp_norm(f, np.inf) == 0.0

    def test_gaussian_l2(self):
        # ||e^{-x^2}||_2 = (pi/2)^{1/4}, frozen from the analytic integral
        g = make_grid(40.0, 4096)
        f = Field(g, np.exp(-g.x**2))
        assert abs(lp_norm(f, 2) - (math.pi / 2.0) ** 0.25) < 1e-6

    def test_monotone_under_domination(self, grid40, rng):
        small = np.abs(rng.standard_normal(grid40.n_points))
        big = small + np.abs(rng.standard_normal(grid40.n_points))
        fs, fb = Field(grid40, small), Field(grid40, big)
        for p in (1, 2, np.inf):
            assert lp_norm(fs, p) <= lp_norm(fb, p)

    def test_unknown_p_rejected(self, grid40):
        with pytest.raises(ConfigError):
            lp_norm(Field(grid40, np.zeros(grid40.n_points)), 3)


class TestCutoffs:
    def test_smoothstep_endpoints(self):
        s = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
        out = smoothstep(s)
        assert out[0] == 0.0 and out[1] == 0.0
        assert out[3] == 1.0 and out[4] == 1.0
        assert 0.0 < out[2] < 1.0

    def test_smoothstep_monotone(self):
        s = np.linspace(-0.5, 1.5, 401)
        assert np.all(np.diff(smoothstep(s)) >= 0)

    def test_smoothstep_deriv_matches_fd(self):
        s = np.linspace(0.05, 0.95, 91)
        h = 1e-6
        fd = (smoothstep(s + h) - smoothstep(s - h)) / (2 * h)
        assert np.abs(smoothstep_deriv(s) - fd).max() < 1e-6

    def test_taper_flat_and_zero(self, grid40):
        t = tail_taper(grid40)
        flat = np.abs(grid40.x) <= 0.8 * grid40.half_width
        assert np.all(t[flat] == 1.0)
        assert t[0] == 0.0  # x = -L
