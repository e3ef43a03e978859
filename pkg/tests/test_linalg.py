import numpy as np
import pytest

from mosdet import linalg
from mosdet.errors import DimensionMismatch, NotPositiveDefinite

import oracles


class TestCholesky:
    def test_identity(self):
        m = linalg.cholesky(np.eye(8))
        assert np.allclose(m.chol, np.eye(8), atol=1e-15)

    def test_diagonal(self):
        m = linalg.cholesky(np.diag([2.0, 2.0]))
        assert np.allclose(m.chol, np.sqrt(2.0) * np.eye(2), atol=1e-15)

    def test_reconstruction(self, rng):
        for _ in range(50):
            a = oracles.random_hpd(rng, 8)
            m = linalg.cholesky(a)
            err = np.linalg.norm(m.chol @ m.chol.conj().T - a) / np.linalg.norm(a)
            assert err <= 1e-10

    def test_rank_deficient_raises(self, rng):
        b = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
        with pytest.raises(NotPositiveDefinite):
            linalg.cholesky(b @ b.conj().T)

    def test_non_hermitian_raises(self, rng):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        with pytest.raises(ValueError):
            linalg.cholesky(a)

    def test_not_square_raises(self):
        with pytest.raises(DimensionMismatch):
            linalg.cholesky(np.ones((3, 4)))


class TestLogdet:
    def test_identity(self):
        assert linalg.logdet(linalg.cholesky(np.eye(6))) == 0.0

    def test_diagonal(self):
        m = linalg.cholesky(np.diag([2.0, 2.0]))
        assert abs(linalg.logdet(m) - 2.0 * np.log(2.0)) < 1e-14

    def test_matches_eigenvalue_oracle(self, rng):
        for _ in range(100):
            a = oracles.random_hpd(rng, 8)
            got = linalg.logdet(linalg.cholesky(a))
            want = oracles.eig_logdet(a)
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


class TestSolve:
    def test_identity(self, rng):
        b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        m = linalg.cholesky(np.eye(5))
        assert np.allclose(linalg.solve(m, b), b, atol=1e-14)

    def test_diagonal(self):
        m = linalg.cholesky(np.diag([4.0, 4.0]))
        x = linalg.solve(m, np.array([8.0, 4.0]))
        assert np.allclose(x, [2.0, 1.0], atol=1e-14)

    def test_residual(self, rng):
        for _ in range(25):
            a = oracles.random_hpd(rng, 8)
            b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            m = linalg.cholesky(a)
            x = linalg.solve(m, b)
            assert np.linalg.norm(a @ x - b) <= 1e-9 * np.linalg.norm(b)

    def test_dimension_mismatch(self):
        m = linalg.cholesky(np.eye(4))
        with pytest.raises(DimensionMismatch):
            linalg.solve(m, np.ones(5))


class TestQuadForm:
    def test_identity(self):
        v = np.ones(8, dtype=complex)
        m = linalg.cholesky(np.eye(8))
        assert abs(linalg.quad_form(m, v, v) - 8.0) < 1e-13

    def test_orthogonal(self):
        m = linalg.cholesky(np.eye(2))
        x = np.array([1.0, 0.0], dtype=complex)
        y = np.array([0.0, 1.0], dtype=complex)
        assert abs(linalg.quad_form(m, x, y)) < 1e-15

    def test_matches_explicit_inverse_2x2(self, rng):
        for _ in range(50):
            a = oracles.random_hpd(rng, 2)
            x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            want = x.conj() @ np.linalg.inv(a) @ y
            got = linalg.quad_form(linalg.cholesky(a), x, y)
            assert abs(got - want) <= 1e-10 * max(1.0, abs(want))

    def test_self_form_real_nonnegative(self, rng):
        for _ in range(100):
            a = oracles.random_hpd(rng, 6)
            x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            q = linalg.quad_form(linalg.cholesky(a), x, x)
            assert q.real >= 0.0
            assert abs(q.imag) <= 1e-10 * max(1.0, abs(q))


class TestRankOneLogdetUpdate:
    def test_zero_vector(self, rng):
        a = oracles.random_hpd(rng, 4)
        m = linalg.cholesky(a)
        assert linalg.rank_one_logdet_update(m, np.zeros(4)) == linalg.logdet(m)

    def test_identity_unit_vector(self):
        m = linalg.cholesky(np.eye(2))
        got = linalg.rank_one_logdet_update(m, np.array([1.0, 0.0]))
        assert abs(got - np.log(2.0)) < 1e-14

    def test_matches_refactorization(self, rng):
        for _ in range(200):
            a = oracles.random_hpd(rng, 8)
            x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            got = linalg.rank_one_logdet_update(linalg.cholesky(a), x)
            want = linalg.logdet(linalg.cholesky(a + np.outer(x, x.conj())))
            assert abs(got - want) <= 1e-10 * max(1.0, abs(want))


class TestSampleCn:
    def test_identity_sample_covariance(self):
        rng = np.random.default_rng(7)
        m = linalg.cholesky(np.eye(4))
        draws = linalg.sample_cn_cols(m, rng, 100_000)
        cov = draws @ draws.conj().T / draws.shape[1]
        assert np.max(np.abs(cov - np.eye(4))) < 0.05

    def test_zero_mean(self, rng):
        a = oracles.random_hpd(rng, 4)
        m = linalg.cholesky(a)
        draws = linalg.sample_cn_cols(m, np.random.default_rng(11), 100_000)
        assert np.max(np.abs(draws.mean(axis=1))) < 0.02

    def test_general_covariance(self, rng):
        a = oracles.random_hpd(rng, 3)
        m = linalg.cholesky(a)
        draws = linalg.sample_cn_cols(m, np.random.default_rng(3), 200_000)
        cov = draws @ draws.conj().T / draws.shape[1]
        assert np.linalg.norm(cov - a) / np.linalg.norm(a) < 0.02

    def test_fixed_seed_bit_identical(self, rng):
        a = oracles.random_hpd(rng, 5)
        m = linalg.cholesky(a)
        x1 = linalg.sample_cn(m, np.random.default_rng(42))
        x2 = linalg.sample_cn(m, np.random.default_rng(42))
        assert np.array_equal(x1, x2)

    def test_stream_isolation(self, rng):
        a = oracles.random_hpd(rng, 5)
        m = linalg.cholesky(a)
        # Consuming an unrelated stream must not perturb this one.
        other = np.random.default_rng(1)
        mine = np.random.default_rng(2)
        other.standard_normal(1000)
        x1 = linalg.sample_cn(m, mine)
        x2 = linalg.sample_cn(m, np.random.default_rng(2))
        assert np.array_equal(x1, x2)
