import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from posmaps.linalg import (
    BlockVector,
    SpaceLayout,
    block_join,
    block_split,
    is_psd,
    matrix_from_json,
    matrix_to_json,
    outer,
    partial_transpose,
    scalar_compression,
    transpose_entrywise,
)
from util import loop_partial_transpose, rand_complex, rand_psd, rand_unit, rng


class TestIsPsd:
    def test_identity(self):
        rep = is_psd(np.eye(3))
        assert rep.is_psd and rep.min_eig == pytest.approx(1.0)

    def test_indefinite_diagonal(self):
        rep = is_psd(np.diag([1.0, -1.0]))
        assert not rep.is_psd
        assert rep.min_eig == pytest.approx(-1.0)

    def test_rank_one_gram(self):
        u = rand_unit(rng(1), 5)
        rep = is_psd(outer(u, u))
        assert rep.is_psd
        assert abs(rep.min_eig) < 1e-12

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            is_psd(np.zeros((2, 3)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            is_psd(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestTranspose:
    def test_nilpotent(self):
        M = np.array([[0, 1], [0, 0]], dtype=complex)
        assert np.array_equal(transpose_entrywise(M), np.array([[0, 0], [1, 0]]))

    def test_hermitian_gives_conjugate(self):
        H = np.array([[1.0, 2 + 1j], [2 - 1j, 3.0]])
        assert np.allclose(transpose_entrywise(H), H.conj())

    @given(st.integers(1, 5), st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_involution(self, d, seed):
        M = rand_complex(rng(seed), d, d)
        assert np.array_equal(transpose_entrywise(transpose_entrywise(M)), M)

    @given(st.integers(1, 4), st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_product_rule(self, d, seed):
        r = rng(seed)
        A, B = rand_complex(r, d, d), rand_complex(r, d, d)
        lhs = transpose_entrywise(A @ B)
        rhs = transpose_entrywise(B) @ transpose_entrywise(A)
        assert np.allclose(lhs, rhs, atol=1e-12)


class TestPartialTranspose:
    def test_product_operator(self):
        r = rng(2)
        A, B = rand_complex(r, 2, 2), rand_complex(r, 3, 3)
        assert np.allclose(partial_transpose(np.kron(A, B), 2, 3), np.kron(A, B.T))

    @given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_involution_and_trace(self, dK, dH, seed):
        Z = rand_complex(rng(seed), dK * dH, dK * dH)
        ZG = partial_transpose(Z, dK, dH)
        assert np.array_equal(partial_transpose(ZG, dK, dH), Z)
        assert np.trace(ZG) == pytest.approx(np.trace(Z))

    def test_hermiticity_preserved(self):
        H = rand_psd(rng(3), 6)
        ZG = partial_transpose(H, 2, 3)
        assert np.allclose(ZG, ZG.conj().T)

    def test_matches_loop_implementation(self):
        Z = rand_complex(rng(4), 12, 12)
        assert np.allclose(partial_transpose(Z, 3, 4), loop_partial_transpose(Z, 3, 4))

    def test_bell_projector_min_eig(self):
        # maximally entangled 2-qubit projector: spectrum of the partial
        # transpose computed by a dense eigensolve
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        Z = outer(phi, phi)
        w = np.linalg.eigvalsh(partial_transpose(Z, 2, 2))
        assert w[0] == pytest.approx(-0.5, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            partial_transpose(np.eye(5), 2, 2)


class TestBlocks:
    def test_rank_one_block_pattern(self):
        # eta supported on block 1 plus the scalar slot
        lay = SpaceLayout(3, 2)
        r = rng(5)
        eta1 = rand_complex(r, 3)
        alpha = 0.7 - 0.2j
        eta = BlockVector(eta1, np.zeros(2), alpha)
        blocks = block_split(outer(eta.to_vector(), eta.to_vector()), lay)
        assert np.allclose(blocks[0][0], outer(eta1, eta1))
        assert np.allclose(blocks[0][2][:, 0], np.conj(alpha) * eta1)
        assert blocks[2][2][0, 0] == pytest.approx(abs(alpha) ** 2)
        for i, j in [(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)]:
            assert np.allclose(blocks[i][j], 0)

    def test_identity_blocks(self):
        lay = SpaceLayout(2, 3)
        blocks = block_split(np.eye(6), lay)
        assert np.allclose(blocks[0][0], np.eye(2))
        assert np.allclose(blocks[1][1], np.eye(3))
        assert blocks[2][2][0, 0] == 1.0

    @given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_round_trip(self, k1, k2, seed):
        lay = SpaceLayout(k1, k2)
        M = rand_complex(rng(seed), lay.total, lay.total)
        assert np.array_equal(block_join(block_split(M, lay), lay), M)

    def test_block_vector_round_trip(self):
        lay = SpaceLayout(2, 2)
        v = rand_complex(rng(6), 5)
        assert np.array_equal(BlockVector.from_vector(v, lay).to_vector(), v)


class TestScalarCompression:
    def test_identity(self):
        ys = [np.array([1.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([1.0])]
        out = scalar_compression(np.eye(6), ys)
        assert np.allclose(out, np.diag([1.0, 1.0, 1.0]))

    def test_psd_input_gives_psd_output(self):
        # randomized check of the compression direction of the block
        # positivity criterion
        r = rng(7)
        for _ in range(1000):
            M = rand_psd(r, 5)
            ys = [rand_complex(r, 2), rand_complex(r, 3)]
            out = scalar_compression(M, ys)
            assert np.linalg.eigvalsh((out + out.conj().T) / 2)[0] >= -1e-9 * max(
                1.0, np.linalg.norm(out)
            )

    def test_three_block_rank_one_compression(self):
        # compression of phi(eta eta*) for eta = eta1 + alpha e against
        # (y1, y2, e): the pattern with zero middle row/column
        lay = SpaceLayout(2, 2)
        r = rng(8)
        eta1, y1 = rand_complex(r, 2), rand_complex(r, 2)
        alpha = 1.3 + 0.4j
        eta = np.concatenate([eta1, np.zeros(2), [alpha]])
        M = outer(eta, eta)
        ys = [y1, rand_complex(r, 2), np.array([1.0])]
        out = scalar_compression(M, ys)
        assert out[0, 0] == pytest.approx(abs(y1.conj() @ eta1) ** 2)
        assert out[2, 2] == pytest.approx(abs(alpha) ** 2)
        assert abs(out[0, 1]) < 1e-12 * np.linalg.norm(M)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            scalar_compression(np.eye(4), [np.ones(2), np.ones(3)])


class TestJson:
    def test_round_trip(self):
        M = rand_complex(rng(9), 3, 4)
        assert np.allclose(matrix_from_json(matrix_to_json(M)), M)

    def test_malformed(self):
        with pytest.raises(ValueError):
            matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0]]})
