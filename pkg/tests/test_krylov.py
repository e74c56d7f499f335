import numpy as np
import pytest

from fracphase.grid import make_grid
from fracphase.krylov import LinearOp, make_preconditioner, solve
from fracphase.stepper import ModelParams, scheme_operator


@pytest.fixture
def g():
    return make_grid(16, 16, np.pi, np.pi)


def random_field(g, seed=0):
    return np.random.default_rng(seed).standard_normal((g.nx, g.ny))


class TestSolve:
    def test_identity_operator(self, g):
        op = LinearOp(apply=lambda v: v)
        rhs = random_field(g)
        x, stats = solve(op, None, rhs, np.zeros_like(rhs))
        assert stats.converged
        assert np.allclose(x, rhs, atol=1e-10)

    def test_zero_rhs_shortcut(self, g):
        op = LinearOp(apply=lambda v: 2.0 * v)
        x, stats = solve(op, None, np.zeros((g.nx, g.ny)), random_field(g))
        assert stats.converged
        assert stats.iterations == 0
        assert np.all(x == 0.0)

    def test_spd_shifted_laplacian(self, g):
        op = LinearOp(apply=lambda v: 3.0 * v - g.laplacian(v))
        rhs = random_field(g, 1)
        x, stats = solve(op, None, rhs, np.zeros_like(rhs), tol=1e-12)
        assert stats.converged
        res = np.linalg.norm(op.apply(x) - rhs) / np.linalg.norm(rhs)
        assert res <= 1e-12

    def test_reported_residual_is_true_residual(self, g):
        op = LinearOp(apply=lambda v: 1.5 * v - g.laplacian(v))
        rhs = random_field(g, 2)
        x, stats = solve(op, None, rhs, np.zeros_like(rhs), tol=1e-10)
        res = np.linalg.norm(op.apply(x) - rhs) / np.linalg.norm(rhs)
        assert stats.final_relative_residual == pytest.approx(res, rel=1e-12)

    def test_maxit_failure_is_reported_not_raised(self, g):
        # badly scaled indefinite-ish operator, absurdly low iteration cap
        op = LinearOp(apply=lambda v: v + 1e4 * g.laplacian(g.laplacian(v)))
        rhs = random_field(g, 3)
        x, stats = solve(op, None, rhs, np.zeros_like(rhs), tol=1e-14, maxit=1)
        assert not stats.converged
        assert stats.final_relative_residual > 1e-14

    def test_invalid_args(self, g):
        op = LinearOp(apply=lambda v: v)
        rhs = random_field(g)
        with pytest.raises(ValueError):
            solve(op, None, rhs, rhs, tol=0.0)
        with pytest.raises(ValueError):
            solve(op, None, rhs, rhs, maxit=0)


class TestPreconditioner:
    def test_inverts_constant_coefficient_ac_operator(self, g):
        params = ModelParams(model="ac", alpha=0.5)
        b0 = 2.0
        # operator with r + S frozen to 0 is exactly the preconditioner symbol
        op = LinearOp(
            apply=lambda v: b0 * v
            + 0.5 * params.mobility * (-params.eps**2 * g.laplacian(v))
        )
        p = make_preconditioner(b0, params, g)
        f = random_field(g, 4)
        assert np.allclose(p.apply(op.apply(f)), f, atol=1e-11)

    def test_split_factors_compose(self, g):
        params = ModelParams(model="ch", alpha=0.5)
        p = make_preconditioner(3.0, params, g)
        f = random_field(g, 5)
        assert np.allclose(p.sqrt_apply(p.sqrt_apply(f)), p.apply(f), atol=1e-11)
        assert np.allclose(p.inv_sqrt_apply(p.sqrt_apply(f)), f, atol=1e-11)

    def test_rejects_negative_surrogate(self, g):
        params = ModelParams(model="ac", alpha=0.5)
        with pytest.raises(ValueError):
            make_preconditioner(1.0, params, g, c=-1.0)

    def test_accelerates_stiff_ch_solve(self, g):
        params = ModelParams(model="ch", alpha=0.5)
        b0 = 0.9
        rfield = np.full((g.nx, g.ny), -0.5)
        op = scheme_operator(g, params, rfield, b0)
        rhs = random_field(g, 6)
        x0 = np.zeros_like(rhs)
        _, plain = solve(op, None, rhs, x0, tol=1e-10, maxit=2000)
        p = make_preconditioner(b0, params, g)
        x, pre = solve(op, p, rhs, x0, tol=1e-10, maxit=2000)
        assert pre.converged
        assert pre.iterations < plain.iterations or not plain.converged


class TestAgainstDenseSolve:
    def test_matches_dense_direct_solve(self):
        g = make_grid(8, 8, np.pi, np.pi)
        params = ModelParams(model="ch", alpha=0.4)
        rng = np.random.default_rng(11)
        rfield = -1.0 + 0.2 * rng.standard_normal((8, 8))
        b0 = 1.3
        op = scheme_operator(g, params, rfield, b0)
        n = 64
        A = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            A[:, j] = op.apply(e.reshape(8, 8)).ravel()
        rhs = rng.standard_normal((8, 8))
        x_dense = np.linalg.solve(A, rhs.ravel()).reshape(8, 8)
        p = make_preconditioner(b0, params, g)
        x, stats = solve(op, p, rhs, np.zeros_like(rhs), tol=1e-12)
        assert stats.converged
        assert np.max(np.abs(x - x_dense)) < 1e-9
