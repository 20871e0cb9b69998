import numpy as np
import pytest

from projvol.geometry import (
    AffineMap,
    complement_basis,
    empty_basis,
    gram_schmidt,
    is_orthonormal,
    project_point,
    symmetric_eigen,
)

SQ2 = np.sqrt(2.0)


class TestGramSchmidt:
    def test_already_orthonormal(self):
        B = gram_schmidt([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert np.allclose(B, np.eye(2))

    def test_forced_orthogonalization(self):
        B = gram_schmidt([np.array([2.0, 0.0]), np.array([1.0, 1.0])])
        assert np.allclose(B, np.eye(2), atol=1e-12)

    def test_dependent_dropped(self):
        B = gram_schmidt([np.array([1.0, 0.0]), np.array([2.0, 0.0])])
        assert B.shape == (1, 2)
        assert np.allclose(B[0], [1.0, 0.0])

    def test_empty_input(self):
        assert gram_schmidt([]).shape == (0, 0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            gram_schmidt([np.array([np.nan, 1.0])])

    def test_random_inputs_orthonormal(self, gen):
        for _ in range(50):
            d = int(gen.integers(1, 9))
            k = int(gen.integers(1, d + 3))
            B = gram_schmidt(gen.standard_normal((k, d)))
            assert is_orthonormal(B)
            assert B.shape[0] <= d


class TestComplementBasis:
    def test_single_axis(self):
        L = complement_basis(np.array([[1.0, 0.0]]), 2)
        assert L.shape == (1, 2)
        assert abs(abs(L[0, 1]) - 1.0) < 1e-12

    def test_empty_s(self):
        L = complement_basis(empty_basis(3), 3)
        assert L.shape == (3, 3)
        assert is_orthonormal(L)

    def test_diagonal(self):
        S = np.array([[1.0, 1.0]]) / SQ2
        L = complement_basis(S, 2)
        assert abs(abs(L[0] @ np.array([1.0, -1.0]) / SQ2) - 1.0) < 1e-9

    def test_full_s_gives_empty(self):
        L = complement_basis(np.eye(4), 4)
        assert L.shape == (0, 4)

    def test_union_is_full_basis(self, gen):
        for _ in range(40):
            d = int(gen.integers(1, 10))
            k = int(gen.integers(0, d + 1))
            S = gram_schmidt(gen.standard_normal((k, d))) if k else empty_basis(d)
            L = complement_basis(S, d)
            assert S.shape[0] + L.shape[0] == d
            full = np.vstack([S, L])
            assert is_orthonormal(full)
            assert np.max(np.abs(S @ L.T)) < 1e-8 if S.size and L.size else True


class TestProjectPoint:
    def test_axis(self):
        assert np.allclose(project_point([3.0, 4.0], np.array([[1.0, 0.0]])), [3.0, 0.0])

    def test_full_basis_identity(self, gen):
        x = gen.standard_normal(4)
        assert np.allclose(project_point(x, np.eye(4)), x)

    def test_orthogonal_point_goes_to_origin(self):
        L = np.array([[1.0, -1.0]]) / SQ2
        assert np.allclose(project_point([1.0, 1.0], L), [0.0, 0.0], atol=1e-12)

    def test_idempotent(self, gen):
        for _ in range(25):
            d = int(gen.integers(2, 8))
            k = int(gen.integers(1, d + 1))
            L = gram_schmidt(gen.standard_normal((k, d)))
            x = gen.standard_normal(d)
            p1 = project_point(x, L)
            assert np.allclose(project_point(p1, L), p1, atol=1e-9)


class TestSymmetricEigen:
    def test_diag(self):
        w, V = symmetric_eigen(np.diag([1.0, 4.0]))
        assert np.allclose(w, [1.0, 4.0])
        assert np.allclose(np.abs(V), np.eye(2), atol=1e-12)

    def test_identity(self):
        w, V = symmetric_eigen(np.eye(3))
        assert np.allclose(w, 1.0)
        assert is_orthonormal(V.T)

    def test_two_by_two(self):
        # oracle: direct multiplication check of the stated eigenpairs
        M = np.array([[2.0, 1.0], [1.0, 2.0]])
        for lam, v in [(1.0, np.array([1.0, -1.0]) / SQ2), (3.0, np.array([1.0, 1.0]) / SQ2)]:
            assert np.allclose(M @ v, lam * v)
        w, V = symmetric_eigen(M)
        assert np.allclose(w, [1.0, 3.0])
        assert abs(abs(V[:, 0] @ np.array([1.0, -1.0]) / SQ2) - 1.0) < 1e-9
        assert abs(abs(V[:, 1] @ np.array([1.0, 1.0]) / SQ2) - 1.0) < 1e-9

    def test_non_symmetric_rejected(self):
        with pytest.raises(ValueError):
            symmetric_eigen(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_reconstruction_random(self, gen):
        for _ in range(40):
            n = int(gen.integers(1, 12))
            M = gen.standard_normal((n, n))
            M = 0.5 * (M + M.T)
            w, V = symmetric_eigen(M)
            rec = V @ np.diag(w) @ V.T
            assert np.linalg.norm(M - rec) <= 1e-6 * (1.0 + np.linalg.norm(M))
            assert np.all(np.diff(w) >= -1e-12)
            assert np.allclose(M @ V, V @ np.diag(w), atol=1e-7 * (1 + np.abs(M).max()))


class TestAffineMap:
    def test_identity(self):
        T = AffineMap.identity(3)
        x = np.array([1.0, -2.0, 0.5])
        assert np.allclose(T.apply(x), x)
        assert np.allclose(T.invert(x), x)

    def test_roundtrip(self, gen):
        M = np.eye(2) + 0.3 * gen.standard_normal((2, 2))
        T = AffineMap(M, gen.standard_normal(2))
        x = gen.standard_normal(2)
        assert np.allclose(T.invert(T.apply(x)), x, atol=1e-10)

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            AffineMap(np.zeros((2, 2)), np.zeros(2))
