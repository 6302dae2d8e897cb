import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blindnull import kernels
from blindnull.cmatrix import (
    NotHermitianError,
    ShapeError,
    column_space_projector,
    conj_transpose,
    hermitian_eig,
    matmul,
    numeric_rank,
    pseudo_inverse,
    quadratic_form,
    singular_values,
)
from conftest import crandn


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def triple_loop(a, b):
    out = np.zeros((a.shape[0], b.shape[1]), dtype=complex)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


seeds = st.integers(0, 2**32 - 1)


class TestMatmul:
    def test_identity(self, rng):
        a = crandn(rng, 3, 3)
        assert np.array_equal(matmul(np.eye(3), a), a)

    def test_permutation(self):
        out = matmul([[0, 1], [1, 0]], [[2 + 1j], [5]])
        assert np.array_equal(out, np.array([[5], [2 + 1j]]))

    def test_against_triple_loop(self, rng):
        a, b = crandn(rng, 5, 3), crandn(rng, 3, 4)
        assert np.max(np.abs(matmul(a, b) - triple_loop(a, b))) <= 1e-12

    def test_mismatch_reports_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    @given(seeds)
    def test_associative(self, seed):
        r = np.random.default_rng(seed)
        a, b, c = crandn(r, 3, 4), crandn(r, 4, 2), crandn(r, 2, 5)
        assert rel(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-11

    @given(seeds)
    def test_adjoint_of_product(self, seed):
        r = np.random.default_rng(seed)
        a, b = crandn(r, 3, 4), crandn(r, 4, 2)
        lhs = conj_transpose(matmul(a, b))
        rhs = matmul(conj_transpose(b), conj_transpose(a))
        assert np.max(np.abs(lhs - rhs)) <= 1e-13 * max(1.0, np.abs(lhs).max())


class TestConjTranspose:
    def test_real_symmetric_fixed(self):
        a = np.array([[1.0, 2.0], [2.0, 3.0]])
        assert np.array_equal(conj_transpose(a), a)

    def test_conjugates(self):
        assert conj_transpose([[1j]])[0, 0] == -1j

    def test_involution(self, rng):
        a = crandn(rng, 3, 5)
        assert np.array_equal(conj_transpose(conj_transpose(a)), a)


class TestQuadraticForm:
    def test_identity_gives_norm(self, rng):
        x = crandn(rng, 4)
        assert quadratic_form(np.eye(4), x) == pytest.approx(np.linalg.norm(x) ** 2, rel=1e-14)

    def test_unit_vector_picks_diagonal(self, rng):
        h = crandn(rng, 2, 3)
        g = h.conj().T @ h
        for l in range(3):
            e = np.zeros(3)
            e[l] = 1
            assert quadratic_form(g, e) == pytest.approx(g[l, l], abs=1e-15)

    def test_double_loop_oracle(self, rng):
        h = crandn(rng, 4, 4)
        a = h + h.conj().T
        x = crandn(rng, 4)
        oracle = sum(np.conj(x[i]) * a[i, j] * x[j] for i in range(4) for j in range(4))
        q = quadratic_form(a, x)
        assert abs(q - oracle) <= 1e-12
        assert abs(q.imag) <= 1e-12 * np.linalg.norm(a) * np.linalg.norm(x) ** 2

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            quadratic_form(np.eye(3), np.ones(2))


def check_eig(a, eig):
    n = a.shape[0]
    v, lam = eig.vectors, eig.values
    assert np.all(np.diff(lam) <= 0)
    assert np.linalg.norm(v.conj().T @ v - np.eye(n)) <= 1e-10
    scale = max(np.linalg.norm(a), 1e-14)
    for k in range(n):
        assert np.linalg.norm(a @ v[:, k] - lam[k] * v[:, k]) <= 1e-9 * scale


class TestHermitianEig:
    def test_diagonal(self):
        eig = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(eig.values, [3, 2, 1])
        assert np.allclose(np.abs(eig.vectors), np.eye(3)[:, [0, 2, 1]])

    def test_gram_is_psd(self, rng):
        h = crandn(rng, 3, 6)
        assert hermitian_eig(h.conj().T @ h).values.min() >= -1e-10

    def test_reconstruction(self, rng):
        h = crandn(rng, 6, 6)
        a = h + h.conj().T
        eig = hermitian_eig(a)
        assert rel(eig.reconstruct(), a) <= 1e-9
        check_eig(a, eig)

    def test_matches_lapack_spectrum(self, rng):
        h = crandn(rng, 8, 8)
        a = h @ h.conj().T
        assert np.allclose(hermitian_eig(a).values, np.linalg.eigvalsh(a)[::-1], atol=1e-11 * np.linalg.norm(a))

    def test_phase_convention(self, rng):
        h = crandn(rng, 5, 5)
        v = hermitian_eig(h + h.conj().T).vectors
        for k in range(5):
            i = np.argmax(np.abs(v[:, k]))
            assert v[i, k].imag == pytest.approx(0, abs=1e-15) and v[i, k].real > 0

    def test_deterministic(self, rng):
        h = crandn(rng, 6, 6)
        a = h + h.conj().T
        e1, e2 = hermitian_eig(a), hermitian_eig(a.copy())
        assert np.array_equal(e1.values, e2.values) and np.array_equal(e1.vectors, e2.vectors)

    def test_degenerate_subspace(self):
        a = np.diag([2.0, 2.0, 0.0]).astype(complex)
        eig = hermitian_eig(a)
        top = eig.vectors[:, :2]
        assert np.allclose(top @ top.conj().T, np.diag([1, 1, 0]), atol=1e-12)

    def test_zero_matrix(self):
        eig = hermitian_eig(np.zeros((3, 3)))
        assert np.array_equal(eig.values, np.zeros(3))

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            hermitian_eig(np.ones((2, 3)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            hermitian_eig(np.array([[1, 2], [0, 1]]))

    def test_tiny_asymmetry_symmetrized(self, rng):
        h = crandn(rng, 4, 4)
        a = h + h.conj().T
        a[0, 1] += 1e-13
        check_eig(0.5 * (a + a.conj().T), hermitian_eig(a))

    @given(seeds, st.integers(1, 10))
    def test_invariants(self, seed, n):
        r = np.random.default_rng(seed)
        h = crandn(r, n, n)
        a = h + h.conj().T
        eig = hermitian_eig(a)
        check_eig(a, eig)
        assert abs(np.trace(a).real - eig.values.sum()) <= 1e-10 * max(np.linalg.norm(a), 1.0)

    def test_backends_agree(self, rng):
        h = crandn(rng, 7, 7)
        a = h + h.conj().T
        ref = a.copy()
        v_np = np.eye(7, dtype=complex)
        kernels.jacobi_sweeps_numpy(ref, v_np, 1e-12 * np.linalg.norm(a), 100)
        if kernels.jacobi_sweeps_numba is None:
            pytest.skip("numba backend disabled")
        work = a.copy()
        v_nb = np.eye(7, dtype=complex)
        kernels.jacobi_sweeps_numba(work, v_nb, 1e-12 * np.linalg.norm(a), 100)
        assert np.allclose(work.diagonal(), ref.diagonal(), atol=1e-12)
        assert np.allclose(v_nb, v_np, atol=1e-10)


def penrose_errors(a, p):
    return [
        np.linalg.norm(a @ p @ a - a),
        np.linalg.norm(p @ a @ p - p),
        np.linalg.norm((a @ p).conj().T - a @ p),
        np.linalg.norm((p @ a).conj().T - p @ a),
    ]


class TestPseudoInverse:
    def test_invertible(self, rng):
        a = crandn(rng, 4, 4)
        assert np.linalg.norm(a @ pseudo_inverse(a) - np.eye(4)) <= 1e-9

    def test_zero(self):
        assert np.array_equal(pseudo_inverse(np.zeros((3, 2))), np.zeros((2, 3)))

    @pytest.mark.parametrize("shape", [(5, 3), (3, 5)])
    def test_penrose_rank_deficient(self, rng, shape):
        a = crandn(rng, shape[0], 2) @ crandn(rng, 2, shape[1])
        assert max(penrose_errors(a, pseudo_inverse(a))) <= 1e-9

    def test_matches_numpy(self, rng):
        a = crandn(rng, 5, 3) @ np.diag([3, 1, 0]) @ crandn(rng, 3, 3)
        assert np.allclose(pseudo_inverse(a), np.linalg.pinv(a, rcond=1e-6), atol=1e-9)


class TestProjector:
    def test_unit_column(self):
        p = column_space_projector(np.array([[1], [0], [0]]))
        assert np.allclose(p, np.diag([1, 0, 0]), atol=1e-12)

    def test_full_rank_square(self, rng):
        assert np.allclose(column_space_projector(crandn(rng, 3, 3)), np.eye(3), atol=1e-9)

    def test_rank_two(self, rng):
        b = crandn(rng, 4, 2) @ crandn(rng, 2, 3)
        p = column_space_projector(b)
        assert np.linalg.norm(p - p.conj().T) <= 1e-9
        assert np.linalg.norm(p @ p - p) <= 1e-9
        assert np.linalg.norm(p @ b - b) <= 1e-9 * np.linalg.norm(b)
        assert int(np.sum(np.linalg.eigvalsh(p) > 0.5)) == 2

    def test_formula(self, rng):
        b = crandn(rng, 4, 2) @ crandn(rng, 2, 3)
        ref = b @ np.linalg.pinv(b.conj().T @ b, rcond=1e-8) @ b.conj().T
        assert np.linalg.norm(column_space_projector(b) - ref) <= 1e-9


class TestRank:
    def test_identity(self):
        assert numeric_rank(np.eye(5)) == 5

    def test_outer_product(self, rng):
        u, v = crandn(rng, 4, 1), crandn(rng, 3, 1)
        assert numeric_rank(u @ v.conj().T) == 1

    def test_zero(self):
        assert numeric_rank(np.zeros((3, 3))) == 0

    def test_random_wide_full_rank(self):
        r = np.random.default_rng(0)
        assert all(numeric_rank(crandn(r, 4, 6), 1e-8) == 4 for _ in range(200))

    def test_singular_values_accurate(self, rng):
        a = crandn(rng, 4, 6)
        assert np.allclose(singular_values(a), np.linalg.svd(a, compute_uv=False), atol=1e-13)

    @given(seeds, st.floats(1e-6, 1e6))
    def test_scale_invariant(self, seed, scale):
        r = np.random.default_rng(seed)
        a = crandn(r, 5, 2) @ crandn(r, 2, 4)
        assert numeric_rank(scale * a) == numeric_rank(a) == 2

    def test_rel_tol_domain(self):
        with pytest.raises(ValueError):
            numeric_rank(np.eye(2), 1.5)

