import numpy as np
import pytest

from posmaps.gallery import (
    GallerySpec,
    build,
    ef_factors,
    ingredients_for,
    lifted_apply,
    list_names,
    mo_general_quadratic_cases,
    mo_general_quadratic_direct,
    zero_set,
)
from posmaps.linalg import BlockVector, partial_transpose
from posmaps.merging import certify_positive, merge
from posmaps.opmaps import apply, dual_pairing, rank_one_value
from util import rand_complex, rng


class TestBuild:
    def test_normalization_conjugation(self):
        # the normalized basic map is V^-1 (denormalized) V^-1 with
        # V = diag(sqrt2, sqrt2, 1)
        mo = build(GallerySpec("mo", {}))
        mu = build(GallerySpec("mo_unnorm", {}))
        V = np.diag([np.sqrt(2.0), np.sqrt(2.0), 1.0])
        Vi = np.linalg.inv(V)
        X = rand_complex(rng(0), 3, 3)
        assert np.allclose(apply(mo, X), Vi @ apply(mu, X) @ Vi.conj().T, atol=1e-12)

    def test_lambda_d_is_a_merging(self):
        for d in (3, 4, 5):
            spec = GallerySpec("lambda_d", {"d": d})
            assert np.max(np.abs(build(spec).choi - merge(ingredients_for(spec)).choi)) < 1e-12

    def test_every_merging_name_matches_its_ingredients(self):
        specs = [
            GallerySpec("mo", {}),
            GallerySpec("mo_unnorm", {}),
            GallerySpec("mo_general", {"k1": 2, "k2": 3}),
            GallerySpec("lambda_general", {"k1": 2, "k2": 2}),
            GallerySpec("omega_general", {"k1": 3, "k2": 2}),
            GallerySpec("gamma_family", {"k1": 2, "k2": 2, "gamma1": 1.5, "gamma2": 2.0}),
        ]
        r = rng(1)
        A1, A2 = rand_complex(r, 3, 2), rand_complex(r, 2, 2)
        specs.append(
            GallerySpec("block_exposed", {"A1": A1, "A2": A2, "theta1": 0.7, "theta2": -0.2, "nu": 1.4})
        )
        for spec in specs:
            err = np.max(np.abs(build(spec).choi - merge(ingredients_for(spec)).choi))
            assert err < 1e-12, spec.name

    def test_seven_by_seven_display(self):
        # independent transcription of the 7x7 matrix with its two row sums
        g = 1.6
        m = build(GallerySpec("gamma_family", {"k1": 3, "k2": 3, "gamma1": g, "gamma2": g}))
        X = rand_complex(rng(2), 7, 7)
        R = (g + 1) * (X[0, 0] + X[1, 1] + X[2, 2]) + g * X[3, 3] + (X[4, 4] + X[5, 5]) / g
        Q = g * X[0, 0] + (X[1, 1] + X[2, 2]) / g + (g + 1) * (X[3, 3] + X[4, 4] + X[5, 5])
        rg = np.sqrt(g)
        want = np.zeros((7, 7), dtype=complex)
        want[:3, :3] = -X[:3, :3]
        want[3:6, 3:6] = -X[3:6, 3:6].T
        for i in range(3):
            want[i, i] += R
            want[3 + i, 3 + i] += Q
        want[0, 6] = rg * X[0, 6]
        want[1, 6] = -X[1, 6] / rg
        want[2, 6] = -X[2, 6] / rg
        want[3, 6] = rg * X[6, 3]
        want[4, 6] = -X[6, 4] / rg
        want[5, 6] = -X[6, 5] / rg
        want[6, 0] = rg * X[6, 0]
        want[6, 1] = -X[6, 1] / rg
        want[6, 2] = -X[6, 2] / rg
        want[6, 3] = rg * X[3, 6]
        want[6, 4] = -X[4, 6] / rg
        want[6, 5] = -X[5, 6] / rg
        want[6, 6] = X[6, 6]
        assert np.allclose(apply(m, X), want, atol=1e-12)

    def test_gallery_maps_certify_positive(self):
        specs = [
            GallerySpec("mo", {}),
            GallerySpec("lambda_d", {"d": 4}),
            GallerySpec("mo_general", {"k1": 2, "k2": 2}),
            GallerySpec("lambda_general", {"k1": 2, "k2": 2}),
            GallerySpec("omega_general", {"k1": 2, "k2": 2}),
            GallerySpec("gamma_family", {"k1": 2, "k2": 2, "gamma1": 1.0, "gamma2": 2.0}),
        ]
        for spec in specs:
            cert = certify_positive(ingredients_for(spec), n_samples=8000, seed=4)
            assert cert.verdict == "pass", spec.name

    def test_invalid_names_and_params(self):
        with pytest.raises(ValueError):
            build(GallerySpec("nope", {}))
        with pytest.raises(ValueError):
            build(GallerySpec("lambda_d", {"d": 2}))
        with pytest.raises(ValueError):
            build(GallerySpec("block_exposed", {"A1": np.zeros((2, 2)), "A2": np.eye(2)}))
        assert set(list_names()) >= {"mo", "lambda_d", "gamma_family", "block_exposed"}


class TestDecompositionIdentities:
    def test_omega_equals_phi_plus_reduction_block(self):
        k1, k2 = 2, 3
        om = build(GallerySpec("omega_general", {"k1": k1, "k2": k2}))
        ph = build(GallerySpec("mo_general", {"k1": k1, "k2": k2}))

        def corr(X):
            n = k1 + k2 + 1
            Y = np.zeros((n, n), dtype=complex)
            X11 = X[:k1, :k1]
            Y[:k1, :k1] = np.trace(X11) * np.eye(k1) - X11
            return Y

        from posmaps.opmaps import choi_of

        corr_choi = choi_of(corr, k1 + k2 + 1, k1 + k2 + 1, check_linearity=False).choi
        assert np.allclose(om.choi, ph.choi + corr_choi, atol=1e-12)

    def test_lambda_equals_omega_plus_co_reduction_block(self):
        k1, k2 = 2, 2
        la = build(GallerySpec("lambda_general", {"k1": k1, "k2": k2}))
        om = build(GallerySpec("omega_general", {"k1": k1, "k2": k2}))

        def corr(X):
            n = k1 + k2 + 1
            Y = np.zeros((n, n), dtype=complex)
            X22 = X[k1:k1 + k2, k1:k1 + k2]
            Y[k1:k1 + k2, k1:k1 + k2] = np.trace(X22) * np.eye(k2) - X22.T
            return Y

        from posmaps.opmaps import choi_of

        corr_choi = choi_of(corr, k1 + k2 + 1, k1 + k2 + 1, check_linearity=False).choi
        assert np.allclose(la.choi, om.choi + corr_choi, atol=1e-12)


class TestZeroSet:
    @pytest.mark.parametrize("name", ["mo_general", "omega_general"])
    @pytest.mark.parametrize("k1,k2", [(1, 1), (2, 2), (2, 3)])
    def test_residuals_vanish(self, name, k1, k2):
        pairs = zero_set(name, {"k1": k1, "k2": k2})
        assert pairs
        m = build(GallerySpec(name, {"k1": k1, "k2": k2}))
        for pr in pairs[:: max(1, len(pairs) // 50)]:
            ev, yv = pr.eta.to_vector(), pr.y.to_vector()
            scale = max(np.linalg.norm(ev) ** 2 * np.linalg.norm(yv) ** 2, 1e-30)
            assert abs(rank_one_value(m, ev, yv)) <= 1e-9 * scale

    def test_branches_present(self):
        labels = {p.case_label for p in zero_set("mo_general", {"k1": 2, "k2": 2})}
        assert labels == {"0n0", "00n", "0nn", "n00", "nn0", "n0n", "nnn"}
        labels = {p.case_label for p in zero_set("omega_general", {"k1": 2, "k2": 2})}
        assert labels == {"0n", "n0", "nn", "extra"}

    def test_branch_instances_match_displayed_formulas(self):
        pairs = [p for p in zero_set("mo_general", {"k1": 2, "k2": 2}) if p.case_label == "nn0"]
        for p in pairs[:5]:
            ip = p.eta.eta1.conj() @ p.y.eta1
            assert ip == pytest.approx(-np.conj(p.eta.alpha) * p.y.alpha, abs=1e-10)
            assert np.allclose(p.y.eta2, 0)
        pairs = [p for p in zero_set("omega_general", {"k1": 2, "k2": 2}) if p.case_label == "extra"]
        assert pairs
        for p in pairs:
            assert np.allclose(p.eta.eta1, 0) and np.allclose(p.y.eta1, 0)
            # <conj(eta2), y2> = -alpha beta, also with the orthogonal shift
            ip = p.eta.eta2 @ p.y.eta2
            assert ip == pytest.approx(-p.eta.alpha * p.y.alpha, abs=1e-10)

    def test_unsupported_name(self):
        with pytest.raises(ValueError):
            zero_set("lambda_general", {"k1": 1, "k2": 1})

    def test_max_pairs(self):
        pairs = zero_set("mo_general", {"k1": 1, "k2": 1}, max_pairs=10)
        assert len(pairs) == 10


class TestClosedForm:
    def test_cases_equal_direct_expansion(self):
        r = rng(5)
        for k1 in (1, 2, 3):
            for k2 in (1, 2, 3):
                for _ in range(50):
                    eta = BlockVector(rand_complex(r, k1), rand_complex(r, k2), complex(*r.normal(size=2)))
                    y = BlockVector(rand_complex(r, k1), rand_complex(r, k2), complex(*r.normal(size=2)))
                    a = mo_general_quadratic_direct(eta, y)
                    b = mo_general_quadratic_cases(eta, y)
                    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))

    def test_alpha_zero_branch(self):
        r = rng(6)
        eta = BlockVector(rand_complex(r, 2), rand_complex(r, 2), 0.0)
        y = BlockVector(rand_complex(r, 2), rand_complex(r, 2), 1.0)
        assert mo_general_quadratic_cases(eta, y) == pytest.approx(
            mo_general_quadratic_direct(eta, y), abs=1e-10
        )

    def test_matches_built_map(self):
        m = build(GallerySpec("mo_general", {"k1": 2, "k2": 3}))
        r = rng(7)
        for _ in range(20):
            eta = BlockVector(rand_complex(r, 2), rand_complex(r, 3), complex(*r.normal(size=2)))
            y = BlockVector(rand_complex(r, 2), rand_complex(r, 3), complex(*r.normal(size=2)))
            direct = rank_one_value(m, eta.to_vector(), y.to_vector())
            assert mo_general_quadratic_direct(eta, y) == pytest.approx(direct, abs=1e-8)


class TestEfFactors:
    def test_trivial_reduction(self):
        E, F, red = ef_factors(np.eye(2), np.eye(2), 0.0, 0.0, 1.0)
        assert red == (2, 2, 1)
        m = build(GallerySpec("block_exposed", {"A1": np.eye(2), "A2": np.eye(2)}))
        X = rand_complex(rng(8), 5, 5)
        assert np.allclose(lifted_apply(E, F, red, X), apply(m, X), atol=1e-12)

    def test_random_full_rank_identity(self):
        r = rng(9)
        A1 = rand_complex(r, 3, 2)
        A2 = rand_complex(r, 2, 2)
        th1, th2, nu = 0.3, -1.1, 2.0
        E, F, red = ef_factors(A1, A2, th1, th2, nu)
        m = build(
            GallerySpec("block_exposed", {"A1": A1, "A2": A2, "theta1": th1, "theta2": th2, "nu": nu})
        )
        for _ in range(20):
            X = rand_complex(r, 5, 5)
            err = np.linalg.norm(lifted_apply(E, F, red, X) - apply(m, X))
            assert err <= 1e-10 * np.linalg.norm(X)

    def test_rank_one_reduction(self):
        r = rng(10)
        A1 = np.outer(rand_complex(r, 3), rand_complex(r, 2))
        A2 = rand_complex(r, 2, 2)
        _, _, red = ef_factors(A1, A2, 0.0, 0.0, 1.0)
        assert red == (1, 2, 1)

    def test_zero_operator_rejected(self):
        with pytest.raises(ValueError):
            ef_factors(np.zeros((2, 2)), np.eye(2), 0.0, 0.0, 1.0)


class TestGammaFamilyWitness:
    def test_pairing_minus_one(self):
        from posmaps.linalg import SpaceLayout
        from posmaps.witness import canonical_witness

        g1, g2 = 1.5, 2.0
        m = build(GallerySpec("gamma_family", {"k1": 3, "k2": 3, "gamma1": g1, "gamma2": g2}))
        Z = canonical_witness(g1, g2, SpaceLayout(3, 3), SpaceLayout(3, 3))
        assert dual_pairing(m, Z) == pytest.approx(-1.0, abs=1e-10)
