import numpy as np
import pytest

from fracphase.grid import Grid, GridError, make_grid


@pytest.fixture
def g():
    return make_grid(32, 32, np.pi, np.pi)


def field(g, mx, my):
    return np.sin(mx * 2.0 * np.pi / g.lx * g.x) * np.cos(my * 2.0 * np.pi / g.ly * g.y)


class TestConstruction:
    def test_rejects_odd_sizes(self):
        with pytest.raises(GridError):
            make_grid(31, 32, np.pi, np.pi)

    def test_rejects_tiny_grid(self):
        with pytest.raises(GridError):
            make_grid(2, 32, np.pi, np.pi)

    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(GridError):
            make_grid(8, 8, 0.0, np.pi)

    def test_coordinates_cover_half_open_box(self, g):
        assert g.x[0, 0] == 0.0
        assert g.x[-1, 0] == pytest.approx(g.lx - g.lx / g.nx)
        assert g.x.shape == (32, 32)

    def test_shape_check(self, g):
        with pytest.raises(GridError):
            g.laplacian(np.zeros((8, 8)))


class TestLaplacian:
    def test_single_mode_eigenfunction(self, g):
        # lap sin(2x)cos(4y) = -(4 + 16) sin(2x)cos(4y) on [0, pi]^2
        f = np.sin(2.0 * g.x) * np.cos(4.0 * g.y)
        assert np.allclose(g.laplacian(f), -20.0 * f, atol=1e-11)

    def test_constant_maps_to_zero(self, g):
        assert np.max(np.abs(g.laplacian(np.full((32, 32), 3.7)))) < 1e-12

    def test_linearity(self, g):
        a, b = field(g, 1, 2), field(g, 3, 1)
        lhs = g.laplacian(2.0 * a - 0.5 * b)
        rhs = 2.0 * g.laplacian(a) - 0.5 * g.laplacian(b)
        assert np.allclose(lhs, rhs, atol=1e-11)

    def test_matches_finite_difference(self):
        # independent oracle: 4th-order central differences on a fine grid
        g = make_grid(128, 128, np.pi, np.pi)
        f = np.exp(np.sin(2.0 * g.x)) * np.cos(2.0 * g.y)
        h = g.lx / g.nx

        def d2(arr, axis):
            return (
                -np.roll(arr, 2, axis) + 16 * np.roll(arr, 1, axis)
                - 30 * arr
                + 16 * np.roll(arr, -1, axis) - np.roll(arr, -2, axis)
            ) / (12 * h * h)

        fd = d2(f, 0) + d2(f, 1)
        # bound is the FD oracle's own 4th-order truncation at this h
        assert np.max(np.abs(g.laplacian(f) - fd)) < 5e-5


class TestInverseLaplacian:
    def test_roundtrip_on_meanfree_field(self, g):
        f = field(g, 2, 3)
        w = g.inv_neg_laplacian_meanfree(f)
        assert np.allclose(-g.laplacian(w), f, atol=1e-11)
        assert abs(g.mean(w)) < 1e-13

    def test_mean_is_projected_out(self, g):
        f = field(g, 1, 1) + 5.0
        w = g.inv_neg_laplacian_meanfree(f)
        assert np.allclose(-g.laplacian(w), f - g.mean(f), atol=1e-11)


class TestGradient:
    def test_single_mode(self, g):
        f = np.sin(4.0 * g.x)
        fx, fy = g.grad(f)
        assert np.allclose(fx, 4.0 * np.cos(4.0 * g.x), atol=1e-11)
        assert np.max(np.abs(fy)) < 1e-11

    def test_gradient_of_real_field_is_real_at_nyquist(self, g):
        # pure Nyquist mode: derivative must be zeroed, not complex garbage
        f = np.cos(g.nx // 2 * 2.0 * g.x)  # not exactly Nyquist; use index form
        f = np.cos(np.pi * np.arange(g.nx))[:, None] * np.ones((1, g.ny))
        fx, fy = g.grad(f)
        assert np.max(np.abs(fx)) < 1e-12
        assert np.max(np.abs(fy)) < 1e-12


class TestIntegrals:
    def test_integrate_constant(self, g):
        assert g.integrate(np.full((32, 32), 2.0)) == pytest.approx(2.0 * np.pi**2)

    def test_integrate_pure_mode_vanishes(self, g):
        assert abs(g.integrate(field(g, 2, 1))) < 1e-12

    def test_mean(self, g):
        assert g.mean(field(g, 1, 2) + 0.25) == pytest.approx(0.25, abs=1e-13)

    def test_grad_sq_integral_against_quadrature(self, g):
        # int |grad sin(2x)cos(2y)|^2 over [0,pi]^2 = 4 pi^2 / 2 ... compute
        # directly from the pointwise gradient instead
        f = np.sin(2.0 * g.x) * np.cos(2.0 * g.y) + 0.3 * np.sin(4.0 * g.y)
        fx, fy = g.grad(f)
        direct = g.integrate(fx**2 + fy**2)
        assert g.grad_sq_integral(f) == pytest.approx(direct, rel=1e-12)

    def test_grad_sq_integral_closed_form(self, g):
        # |grad sin(2x)cos(2y)|^2 integrates to 8 * (pi^2/4) * 2 / 2 = 2 pi^2
        f = np.sin(2.0 * g.x) * np.cos(2.0 * g.y)
        assert g.grad_sq_integral(f) == pytest.approx(2.0 * np.pi**2, rel=1e-12)


class TestParsevalConsistency:
    def test_laplacian_integration_by_parts(self, g):
        # int f (-lap f) = int |grad f|^2 for periodic fields
        rng = np.random.default_rng(7)
        fhat = np.zeros((g.nx, g.ny), dtype=complex)
        f = rng.standard_normal((g.nx, g.ny))
        f -= f.mean()
        lhs = g.integrate(f * -g.laplacian(f))
        assert lhs == pytest.approx(g.grad_sq_integral(f), rel=1e-11)
