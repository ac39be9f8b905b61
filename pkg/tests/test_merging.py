import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from posmaps.gallery import GallerySpec, build, ingredients_for
from posmaps.linalg import SpaceLayout, basis_vector, outer
from posmaps.merging import (
    MergingIngredients,
    canonical_merge,
    certify_positive,
    merge,
    merged_apply,
    nu_perturb,
    params,
    scalar_compression_det,
    two_positivity_necessary,
)
from posmaps.opmaps import apply, rank_one_value, sample_unit_vectors, std_map
from util import rand_complex, rand_unit, rng


def _unit_matrix(i, j, d):
    E = np.zeros((d, d), dtype=complex)
    E[i, j] = 1.0
    return E


class TestMerge:
    def test_zero_ingredients_give_direct_sum(self):
        phi1 = std_map("ad", A=rand_complex(rng(0), 2, 2))
        phi2 = std_map("transpose", d=3)
        ing = MergingIngredients(
            phi1=phi1, phi2=phi2,
            B1=np.zeros((2, 2)), C1=np.zeros((2, 2)),
            B2=np.zeros((3, 3)), C2=np.zeros((3, 3)),
            W1=np.zeros((2, 2)), W2=np.zeros((3, 3)),
        )
        lay = SpaceLayout(2, 3)
        X = rand_complex(rng(1), 6, 6)
        Y = merged_apply(ing, X)
        s1, s2, s3 = lay.slices()
        assert np.allclose(Y[s1, s1], apply(phi1, X[s1, s1]))
        assert np.allclose(Y[s2, s2], apply(phi2, X[s2, s2]))
        assert Y[s3, s3][0, 0] == X[s3, s3][0, 0]
        Yoff = Y.copy()
        Yoff[s1, s1] = 0
        Yoff[s2, s2] = 0
        Yoff[s3, s3] = 0
        assert np.allclose(Yoff, 0)

    def test_basic_example_ingredients(self):
        ing = ingredients_for(GallerySpec("mo", {}))
        m = merge(ing)
        direct = build(GallerySpec("mo", {}))
        for i in range(3):
            for j in range(3):
                E = _unit_matrix(i, j, 3)
                assert np.allclose(apply(m, E), apply(direct, E), atol=1e-13)

    def test_identity_transpose_merging_on_rank_one(self):
        # the merged map evaluated on eta eta* has the displayed closed form
        k1, k2 = 2, 3
        ing = ingredients_for(GallerySpec("mo_general", {"k1": k1, "k2": k2}))
        r = rng(2)
        eta1, eta2 = rand_complex(r, k1), rand_complex(r, k2)
        alpha = 0.3 - 1.1j
        eta = np.concatenate([eta1, eta2, [alpha]])
        Y = merged_apply(ing, outer(eta, eta))
        lay = SpaceLayout(k1, k2)
        s1, s2, s3 = lay.slices()
        assert np.allclose(Y[s1, s1], outer(eta1, eta1) + np.linalg.norm(eta2) ** 2 * np.eye(k1))
        assert np.allclose(
            Y[s2, s2], outer(eta2.conj(), eta2.conj()) + np.linalg.norm(eta1) ** 2 * np.eye(k2)
        )
        assert np.allclose(Y[s1, s3][:, 0], np.conj(alpha) * eta1)
        assert np.allclose(Y[s2, s3][:, 0], alpha * eta2.conj())
        assert Y[s3, s3][0, 0] == pytest.approx(abs(alpha) ** 2)

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_scalar_corner_exact(self, seed):
        ing = ingredients_for(GallerySpec("gamma_family", {"k1": 2, "k2": 2, "gamma1": 1.5, "gamma2": 1.0}))
        X = rand_complex(rng(seed), 5, 5)
        assert merged_apply(ing, X)[-1, -1] == X[-1, -1]

    def test_dim_mismatch(self):
        ing = ingredients_for(GallerySpec("mo", {}))
        with pytest.raises(ValueError):
            merged_apply(ing, np.eye(4))


class TestParams:
    def test_identity_transpose_table(self):
        ing = ingredients_for(GallerySpec("mo_general", {"k1": 3, "k2": 2}))
        r = rng(3)
        e1, y1 = rand_complex(r, 3), rand_complex(r, 3)
        e2, y2 = rand_complex(r, 2), rand_complex(r, 2)
        pb = params(ing, e1, y1, e2, y2)
        assert pb.mu1 == pytest.approx(abs(y1.conj() @ e1), abs=1e-10)
        assert pb.eps1 == pytest.approx(abs(y1.conj() @ e1), abs=1e-10)
        assert pb.delta1 == pytest.approx(0.0, abs=1e-6)
        assert pb.sigma1 == pytest.approx(np.linalg.norm(e1) * np.linalg.norm(y2), abs=1e-10)
        assert pb.eps2 == pytest.approx(abs(y2.conj() @ e2.conj()), abs=1e-10)

    def test_trace_unit_table(self):
        ing = ingredients_for(GallerySpec("lambda_general", {"k1": 2, "k2": 2}))
        r = rng(4)
        e1, y1 = rand_complex(r, 2), rand_complex(r, 2)
        e2, y2 = rand_complex(r, 2), rand_complex(r, 2)
        pb = params(ing, e1, y1, e2, y2)
        want = np.sqrt(
            np.linalg.norm(e1) ** 2 * np.linalg.norm(y1) ** 2 - abs(y1.conj() @ e1) ** 2
        )
        assert pb.delta1 == pytest.approx(want, abs=1e-8)
        assert pb.mu1 == pytest.approx(np.linalg.norm(e1) * np.linalg.norm(y1), abs=1e-10)

    def test_zero_vector_collapses(self):
        ing = ingredients_for(GallerySpec("mo_general", {"k1": 2, "k2": 2}))
        pb = params(ing, np.zeros(2), rand_unit(rng(5), 2), rand_unit(rng(5), 2), rand_unit(rng(5), 2))
        assert pb.mu1 == pb.eps1 == pb.delta1 == pb.sigma1 == 0.0

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_bihomogeneity(self, seed):
        ing = ingredients_for(GallerySpec("omega_general", {"k1": 2, "k2": 2}))
        r = rng(seed)
        e1, y1, e2, y2 = (rand_unit(r, 2) for _ in range(4))
        a = complex(*r.normal(size=2))
        b = complex(*r.normal(size=2))
        pb = params(ing, e1, y1, e2, y2)
        pa = params(ing, a * e1, b * y1, e2, y2)
        for name in ("mu1", "eps1", "delta1", "sigma1"):
            assert getattr(pa, name) == pytest.approx(
                abs(a) * abs(b) * getattr(pb, name)
                if name != "sigma1"
                else abs(a) * getattr(pb, name),
                abs=1e-8,
            )


class TestCertifyPositive:
    def test_basic_example_passes(self):
        cert = certify_positive(ingredients_for(GallerySpec("mo", {})), n_samples=20000, seed=0)
        assert cert.verdict == "pass"

    def test_omega_passes_with_zero_criterion_attained(self):
        cert = certify_positive(
            ingredients_for(GallerySpec("omega_general", {"k1": 2, "k2": 2})),
            n_samples=20000,
            seed=0,
        )
        assert cert.verdict == "pass"
        assert cert.criterion_min == pytest.approx(0.0, abs=1e-6)

    def test_flat_coupling_shape_fails_with_certificate(self):
        # eps1 = eps2 = 1 with sigma = delta = 0 violates the criterion
        from posmaps.m3family import M3Params, to_ingredients

        p = M3Params(b1=1.0, b2=1.0, c1=0, c2=0, sigma1=0, sigma2=0, delta1=0, delta2=0)
        ing = to_ingredients(p)
        cert = certify_positive(ing, n_samples=5000, seed=1)
        assert cert.verdict == "fail"
        assert cert.criterion_min < -0.5
        assert cert.violating_tuple is not None
        eta, y = cert.violating_pair
        assert rank_one_value(merge(ing), eta, y) == pytest.approx(cert.violating_value, abs=1e-12)
        assert cert.violating_value < -1e-3

    def test_necessary_inequality_when_positive(self):
        # sampled necessary condition eps_i <= mu_i at many points
        ing = ingredients_for(GallerySpec("gamma_family", {"k1": 2, "k2": 3, "gamma1": 2.0, "gamma2": 1.5}))
        r = rng(6)
        n = 10000
        e1 = sample_unit_vectors(r, n, 2)
        y1 = sample_unit_vectors(r, n, 2)
        from posmaps.merging import _batch_params

        mu1, eps1, mu2, eps2, _, _ = _batch_params(
            ing, e1, y1, sample_unit_vectors(r, n, 3), sample_unit_vectors(r, n, 3)
        )
        assert float((mu1 - eps1).min()) >= -1e-9
        assert float((mu2 - eps2).min()) >= -1e-9

    def test_determinant_identity(self):
        ing = ingredients_for(GallerySpec("gamma_family", {"k1": 2, "k2": 2, "gamma1": 1.2, "gamma2": 1.8}))
        r = rng(7)
        for _ in range(20):
            e1, y1 = rand_complex(r, 2), rand_complex(r, 2)
            e2, y2 = rand_complex(r, 2), rand_complex(r, 2)
            pb = params(ing, e1, y1, e2, y2)
            det = scalar_compression_det(ing, e1, y1, e2, y2)
            assert det == pytest.approx(pb.quartic_form, abs=1e-10 * max(1.0, abs(det)))

    def test_canonical_two_positive_pair_grid(self):
        for g in (1.0, 1.5, 2.0):
            ing = ingredients_for(
                GallerySpec("gamma_family", {"k1": 2, "k2": 2, "gamma1": g, "gamma2": g})
            )
            cert = certify_positive(ing, n_samples=10000, seed=2)
            assert cert.verdict == "pass", g


class TestTwoPositivityNecessary:
    def test_basic_example_not_two_positive(self):
        rep = two_positivity_necessary(ingredients_for(GallerySpec("mo", {})), n_samples=2000, seed=0)
        assert not rep.off_ops_zero  # C2 != 0
        assert rep.certified_not_k2

    def test_cp_family_point_passes(self):
        from posmaps.m3family import M3Params, to_ingredients
        from posmaps.opmaps import sampled_k_positivity

        p = M3Params(b1=1.0, b2=1.0, c1=0, c2=0, sigma1=1.2, sigma2=1.2, delta1=1.0, delta2=1.0)
        ing = to_ingredients(p)
        rep = two_positivity_necessary(ing, n_samples=5000, seed=1)
        assert rep.off_ops_zero and rep.zui_min >= -1e-9
        assert not rep.certified_not_k2
        assert sampled_k_positivity(merge(ing), k=2, n_samples=5000, seed=1).verdict == "pass"

    def test_zero_delta_violates_inequality(self):
        from posmaps.m3family import M3Params, to_ingredients

        p = M3Params(b1=0.5, b2=0.5, c1=0, c2=0, sigma1=1.0, sigma2=1.0, delta1=0, delta2=0)
        rep = two_positivity_necessary(to_ingredients(p), n_samples=2000, seed=2)
        assert rep.off_ops_zero
        assert rep.zui_min < -1e-3
        assert rep.certified_not_k2


class TestCanonicalMerge:
    def test_conjugation_pair_recovers_operators(self):
        r = rng(8)
        A1 = rand_complex(r, 3, 2)
        A2 = rand_complex(r, 2, 2)
        ing, lam1, lam2 = canonical_merge(std_map("ad", A=A1), std_map("co_ad", A=A2))
        assert np.allclose(np.abs(ing.B1), np.abs(A1), atol=1e-10)
        assert np.allclose(np.abs(ing.C2), np.abs(A2), atol=1e-10)
        assert np.allclose(ing.C1, 0) and np.allclose(ing.B2, 0)

    def test_trace_shift_pair_explicit_operators(self):
        g1, g2, k = 1.7, 1.3, 3
        e1 = basis_vector(0, k)
        ing, lam1, lam2 = canonical_merge(
            std_map("psi_gamma", gamma=g1, d=k),
            std_map("psi_gamma_co", gamma=g2, d=k),
            xi1=e1, xi2=e1, x1=e1, x2=e1,
        )
        assert lam1 == pytest.approx(g1) and lam2 == pytest.approx(g2)
        P = outer(e1, e1)
        wantB1 = np.sqrt(g1) * P - (np.eye(k) - P) / np.sqrt(g1)
        wantC2 = np.sqrt(g2) * P - (np.eye(k) - P) / np.sqrt(g2)
        assert np.allclose(ing.B1, wantB1, atol=1e-12)
        assert np.allclose(ing.C2, wantC2, atol=1e-12)
        direct = build(GallerySpec("gamma_family", {"k1": k, "k2": k, "gamma1": g1, "gamma2": g2}))
        assert np.max(np.abs(merge(ing).choi - direct.choi)) < 1e-12

    def test_scalar_identities_give_denormalized_basic_map(self):
        one = std_map("identity", d=1)
        ing, lam1, lam2 = canonical_merge(one, one)
        assert lam1 == pytest.approx(1.0) and lam2 == pytest.approx(1.0)
        assert np.max(np.abs(merge(ing).choi - build(GallerySpec("mo_unnorm", {})).choi)) < 1e-12

    def test_functional_contracts(self):
        # omega1(X) = Tr(B1 X B1*), omega2(X) = Tr(C2 X^T C2*)
        r = rng(9)
        ing, _, _ = canonical_merge(
            std_map("ad", A=rand_complex(r, 3, 2)), std_map("co_ad", A=rand_complex(r, 2, 2))
        )
        for _ in range(5):
            X1 = rand_complex(r, 2, 2)
            X2 = rand_complex(r, 2, 2)
            assert ing.omega1(X1) == pytest.approx(
                complex(np.trace(ing.B1 @ X1 @ ing.B1.conj().T)), abs=1e-12
            )
            assert ing.omega2(X2) == pytest.approx(
                complex(np.trace(ing.C2 @ X2.T @ ing.C2.conj().T)), abs=1e-12
            )

    def test_degenerate_eigenpair_rejected(self):
        zero_ish = std_map("ad", A=np.zeros((2, 2)))
        with pytest.raises(ValueError, match="degenerate|zero"):
            canonical_merge(zero_ish, std_map("identity", d=2))

    def test_supplied_non_eigenvector_rejected(self):
        r = rng(10)
        A1 = rand_complex(r, 3, 2)
        with pytest.raises(ValueError, match="eigenvector"):
            canonical_merge(
                std_map("ad", A=A1),
                std_map("identity", d=2),
                xi1=basis_vector(0, 2),
                x1=np.ones(3),  # generically not an eigenvector of a rank-one operator
            )


class TestNuPerturb:
    def test_identity(self):
        ing = ingredients_for(GallerySpec("mo", {}))
        ing2 = nu_perturb(ing, 1.0)
        assert np.allclose(ing2.W1, ing.W1) and np.allclose(ing2.W2, ing.W2)

    def test_positivity_transfers(self):
        ing = nu_perturb(ingredients_for(GallerySpec("mo", {})), 4.0)
        assert certify_positive(ing, n_samples=10000, seed=3).verdict == "pass"

    def test_sigma_product_invariant(self):
        ing = ingredients_for(GallerySpec("omega_general", {"k1": 2, "k2": 2}))
        ing2 = nu_perturb(ing, 2.5)
        r = rng(11)
        for _ in range(10):
            e1, y1, e2, y2 = (rand_unit(r, 2) for _ in range(4))
            a = params(ing, e1, y1, e2, y2)
            b = params(ing2, e1, y1, e2, y2)
            assert a.sigma1 * a.sigma2 == pytest.approx(b.sigma1 * b.sigma2, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            nu_perturb(ingredients_for(GallerySpec("mo", {})), 0.0)
