"""Merging two positive maps into one map on B(K1 (+) K2 (+) C).

Given maps phi_i: B(K_i) -> B(H_i), operators B_i, C_i: K_i -> H_i and
positive functionals omega_i (stored as density operators W_i with
omega_i(X) = Tr(W_i X)), the merged map acts blockwise:

    (1,1) phi_1(X_11) + omega_2(X_22) P_1        (1,3) B_1 X_13 + C_1 X_31^T
    (2,2) phi_2(X_22) + omega_1(X_11) P_2        (2,3) B_2 X_23 + C_2 X_32^T
    (3,3) X_33                                   (1,2), (2,1) zero

with the (3,1)/(3,2) rows the Hermitian mirrors and P_i the orthogonal
projection onto the range of phi_i(1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    BlockVector,
    PsdReport,
    SpaceLayout,
    as_matrix,
    as_vector,
    basis_vector,
    block_join,
    block_split,
    herm_part,
    is_psd,
    matrix_from_json,
    matrix_to_json,
    outer,
    range_projection,
)
from .opmaps import (
    LinearMapRep,
    _batch_values,
    _seesaw,
    apply,
    choi_of,
    is_psd_norm,
    rank_one_value,
    sample_unit_vectors,
)


@dataclass(frozen=True)
class MergingIngredients:
    """Everything the merging construction consumes.

    W1, W2 are the density operators of the functionals omega_i; P1, P2 are
    the cached range projections of phi_i(1) and are derived, not supplied.
    """

    phi1: LinearMapRep
    phi2: LinearMapRep
    B1: np.ndarray
    C1: np.ndarray
    B2: np.ndarray
    C2: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    P1: np.ndarray = None
    P2: np.ndarray = None

    def __post_init__(self):
        for name in ("B1", "C1", "B2", "C2", "W1", "W2"):
            object.__setattr__(self, name, as_matrix(getattr(self, name)))
        k1, l1 = self.phi1.dK, self.phi1.dH
        k2, l2 = self.phi2.dK, self.phi2.dH
        shapes = {"B1": (l1, k1), "C1": (l1, k1), "B2": (l2, k2), "C2": (l2, k2),
                  "W1": (k1, k1), "W2": (k2, k2)}
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise ValueError(f"{name} has shape {got}, expected {want}")
        if self.P1 is None:
            object.__setattr__(self, "P1", range_projection(apply(self.phi1, np.eye(k1))))
        if self.P2 is None:
            object.__setattr__(self, "P2", range_projection(apply(self.phi2, np.eye(k2))))

    @property
    def layout_K(self) -> SpaceLayout:
        return SpaceLayout(self.phi1.dK, self.phi2.dK)

    @property
    def layout_H(self) -> SpaceLayout:
        return SpaceLayout(self.phi1.dH, self.phi2.dH)

    def omega1(self, X) -> complex:
        return complex(np.trace(self.W1 @ as_matrix(X)))

    def omega2(self, X) -> complex:
        return complex(np.trace(self.W2 @ as_matrix(X)))

    def to_json(self) -> dict:
        return {
            "phi1": self.phi1.to_json(),
            "phi2": self.phi2.to_json(),
            "B1": matrix_to_json(self.B1),
            "C1": matrix_to_json(self.C1),
            "B2": matrix_to_json(self.B2),
            "C2": matrix_to_json(self.C2),
            "W1": matrix_to_json(self.W1),
            "W2": matrix_to_json(self.W2),
        }

    @classmethod
    def from_json(cls, obj) -> "MergingIngredients":
        return cls(
            phi1=LinearMapRep.from_json(obj["phi1"]),
            phi2=LinearMapRep.from_json(obj["phi2"]),
            B1=matrix_from_json(obj["B1"]),
            C1=matrix_from_json(obj["C1"]),
            B2=matrix_from_json(obj["B2"]),
            C2=matrix_from_json(obj["C2"]),
            W1=matrix_from_json(obj["W1"]),
            W2=matrix_from_json(obj["W2"]),
        )


def merged_apply(ing: MergingIngredients, X) -> np.ndarray:
    """Evaluate the merged map on one input matrix."""
    lk, lh = ing.layout_K, ing.layout_H
    Xb = block_split(X, lk)
    X11, X22 = Xb[0][0], Xb[1][1]
    x13, x23 = Xb[0][2][:, 0], Xb[1][2][:, 0]
    x31, x32 = Xb[2][0][0, :], Xb[2][1][0, :]
    x33 = Xb[2][2][0, 0]
    w1, w2 = ing.omega1(X11), ing.omega2(X22)
    d1, d2 = lh.k1, lh.k2
    Y = [[None] * 3 for _ in range(3)]
    Y[0][0] = apply(ing.phi1, X11) + w2 * ing.P1
    Y[1][1] = apply(ing.phi2, X22) + w1 * ing.P2
    Y[0][1] = np.zeros((d1, d2), dtype=complex)
    Y[1][0] = np.zeros((d2, d1), dtype=complex)
    Y[0][2] = (ing.B1 @ x13 + ing.C1 @ x31).reshape(d1, 1)
    Y[1][2] = (ing.B2 @ x23 + ing.C2 @ x32).reshape(d2, 1)
    Y[2][0] = (x31 @ ing.B1.conj().T + x13 @ ing.C1.conj().T).reshape(1, d1)
    Y[2][1] = (x32 @ ing.B2.conj().T + x23 @ ing.C2.conj().T).reshape(1, d2)
    Y[2][2] = np.array([[x33]], dtype=complex)
    return block_join(Y, lh)


def merge(ing: MergingIngredients) -> LinearMapRep:
    """The merged map as a Choi-matrix representation."""
    lk, lh = ing.layout_K, ing.layout_H
    return choi_of(lambda X: merged_apply(ing, X), lk.total, lh.total, check_linearity=False)


# --- parameter functions -----------------------------------------------------


@dataclass(frozen=True)
class ParamBundle:
    """The eight parameter values at a tuple (eta1, y1, eta2, y2).

    delta_i is sqrt(max(mu_i^2 - eps_i^2, 0)); valid_i records whether
    mu_i >= eps_i actually held (a necessary condition for positivity).
    """

    mu1: float
    mu2: float
    eps1: float
    eps2: float
    delta1: float
    delta2: float
    sigma1: float
    sigma2: float
    valid1: bool
    valid2: bool

    @property
    def criterion(self) -> float:
        """delta1*delta2 + sigma1*sigma2 - eps1*eps2 (>= 0 needed for positivity)."""
        return self.delta1 * self.delta2 + self.sigma1 * self.sigma2 - self.eps1 * self.eps2

    @property
    def quartic_form(self) -> float:
        """d1^2 s1^2 + d2^2 s2^2 + s1^2 s2^2 + d1^2 d2^2 - e1^2 e2^2.

        Equals the determinant of the 3x3 scalar compression at aligned
        phases; negative at any tuple proves non-positivity.
        """
        return (
            self.delta1**2 * self.sigma1**2
            + self.delta2**2 * self.sigma2**2
            + self.sigma1**2 * self.sigma2**2
            + self.delta1**2 * self.delta2**2
            - self.eps1**2 * self.eps2**2
        )


def params(ing: MergingIngredients, eta1, y1, eta2, y2, tol: float = DEFAULT_TOL) -> ParamBundle:
    """Evaluate mu, eps, delta, sigma at one tuple of vectors."""
    eta1, y1 = as_vector(eta1), as_vector(y1)
    eta2, y2 = as_vector(eta2), as_vector(y2)
    mu1 = np.sqrt(max(rank_one_value(ing.phi1, eta1, y1), 0.0))
    mu2 = np.sqrt(max(rank_one_value(ing.phi2, eta2, y2), 0.0))
    eps1 = abs(y1.conj() @ ing.B1 @ eta1) + abs(y1.conj() @ ing.C1 @ eta1.conj())
    eps2 = abs(y2.conj() @ ing.B2 @ eta2) + abs(y2.conj() @ ing.C2 @ eta2.conj())
    scale1 = max(mu1, eps1, 1.0)
    scale2 = max(mu2, eps2, 1.0)
    valid1 = eps1 <= mu1 + tol * scale1
    valid2 = eps2 <= mu2 + tol * scale2
    delta1 = float(np.sqrt(max(mu1 * mu1 - eps1 * eps1, 0.0)))
    delta2 = float(np.sqrt(max(mu2 * mu2 - eps2 * eps2, 0.0)))
    om1 = max(float(np.real(eta1.conj() @ ing.W1 @ eta1)), 0.0)
    om2 = max(float(np.real(eta2.conj() @ ing.W2 @ eta2)), 0.0)
    sigma1 = float(np.sqrt(om1) * np.linalg.norm(ing.P2 @ y2))
    sigma2 = float(np.sqrt(om2) * np.linalg.norm(ing.P1 @ y1))
    return ParamBundle(
        mu1=float(mu1), mu2=float(mu2), eps1=float(eps1), eps2=float(eps2),
        delta1=delta1, delta2=delta2, sigma1=sigma1, sigma2=sigma2,
        valid1=bool(valid1), valid2=bool(valid2),
    )


def _eps_batch(B, C, etas, ys):
    t1 = np.abs(np.einsum("sl,lk,sk->s", ys.conj(), B, etas))
    t2 = np.abs(np.einsum("sl,lk,sk->s", ys.conj(), C, etas.conj()))
    return t1 + t2


def _batch_params(ing, etas1, ys1, etas2, ys2):
    """Vectorized parameter values per sample: (mu1, eps1, mu2, eps2, sigma1, sigma2)."""

    def mu(phi, etas, ys):
        v = _batch_values(phi.choi, phi.dK, phi.dH, etas[:, None, :], ys[:, None, :])
        return np.sqrt(np.clip(v, 0.0, None))

    mu1 = mu(ing.phi1, etas1, ys1)
    mu2 = mu(ing.phi2, etas2, ys2)
    eps1 = _eps_batch(ing.B1, ing.C1, etas1, ys1)
    eps2 = _eps_batch(ing.B2, ing.C2, etas2, ys2)
    om1 = np.clip(np.real(np.einsum("si,ij,sj->s", etas1.conj(), ing.W1, etas1)), 0.0, None)
    om2 = np.clip(np.real(np.einsum("si,ij,sj->s", etas2.conj(), ing.W2, etas2)), 0.0, None)
    sigma1 = np.sqrt(om1) * np.linalg.norm(ys2 @ ing.P2.T, axis=1)
    sigma2 = np.sqrt(om2) * np.linalg.norm(ys1 @ ing.P1.T, axis=1)
    return mu1, eps1, mu2, eps2, sigma1, sigma2


@dataclass(frozen=True)
class PositivityCertificate:
    """Sampled positivity certificate for a merging.

    ``verdict == "pass"`` iff the omega operators are PSD and both sampled
    minima are >= -tol.  A fail verdict is a proof of non-positivity: the
    violating tuple (and the rank-one pair it came from) is included.
    """

    omega_psd: tuple[PsdReport, PsdReport]
    eps_le_mu_min: float
    criterion_min: float
    n_samples: int
    seed: int
    verdict: str
    refined_min: float
    violating_tuple: Optional[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    violating_pair: Optional[tuple[np.ndarray, np.ndarray]]
    violating_value: Optional[float]


def certify_positive(
    ing: MergingIngredients,
    n_samples: int = 100000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> PositivityCertificate:
    """Certify positivity of the merged map by sampling plus refinement.

    Checks W_i >= 0, samples unit tuples (eta1, y1, eta2, y2) recording the
    minima of (mu_i - eps_i) and of the positivity criterion, then runs one
    see-saw refinement of the rank-one form of the merged map from the
    worst tuple.  If the refinement certifies a violation, the minima are
    re-evaluated at the refined tuple (at least one goes negative, which is
    what makes the fail verdict a proof).
    """
    rng = np.random.default_rng(seed)
    w1_rep = is_psd(herm_part(ing.W1), tol)
    w2_rep = is_psd(herm_part(ing.W2), tol)
    lk, lh = ing.layout_K, ing.layout_H

    margin_min = np.inf
    crit_min = np.inf
    worst_tuple = None
    batch = 20000
    done = 0
    while done < n_samples:
        nb = min(batch, n_samples - done)
        e1 = sample_unit_vectors(rng, nb, lk.k1)
        y1 = sample_unit_vectors(rng, nb, lh.k1)
        e2 = sample_unit_vectors(rng, nb, lk.k2)
        y2 = sample_unit_vectors(rng, nb, lh.k2)
        mu1, eps1, mu2, eps2, s1, s2 = _batch_params(ing, e1, y1, e2, y2)
        d1 = np.sqrt(np.clip(mu1**2 - eps1**2, 0.0, None))
        d2 = np.sqrt(np.clip(mu2**2 - eps2**2, 0.0, None))
        crit = d1 * d2 + s1 * s2 - eps1 * eps2
        margin_min = min(margin_min, float((mu1 - eps1).min()), float((mu2 - eps2).min()))
        i = int(np.argmin(crit))
        if crit[i] < crit_min:
            crit_min = float(crit[i])
            worst_tuple = (e1[i].copy(), y1[i].copy(), e2[i].copy(), y2[i].copy())
        done += nb

    # Refinement: see-saw on <y, phi(eta eta*) y> over the full merged spaces,
    # started from the worst sampled tuple embedded with unit third components.
    m = merge(ing)
    choi4 = m.choi_blocks
    e1w, y1w, e2w, y2w = worst_tuple
    eta0 = np.concatenate([e1w, e2w, [1.0]])
    y0 = np.concatenate([y1w, y2w, [1.0]])
    eta0 /= np.linalg.norm(eta0)
    y0 /= np.linalg.norm(y0)
    w_ref, v_ref, refined = _seesaw(choi4, eta0[None, :].copy(), y0[None, :].copy())
    scale = max(is_psd_norm(m.choi), 1.0)

    # fold the refined tuple into the recorded minima; for a positive map the
    # criterion stays >= 0 there, for a non-positive one at least one
    # component goes negative, which is what makes the fail verdict a proof
    eta_v = w_ref.reshape(-1)
    y_v = v_ref.reshape(-1)
    bv_eta = BlockVector.from_vector(eta_v, lk)
    bv_y = BlockVector.from_vector(y_v, lh)
    pb = params(ing, bv_eta.eta1, bv_y.eta1, bv_eta.eta2, bv_y.eta2, tol)
    margin_min = min(margin_min, pb.mu1 - pb.eps1, pb.mu2 - pb.eps2)
    crit_min = min(crit_min, pb.criterion)

    viol_tuple = viol_pair = viol_value = None
    if refined < -tol * scale:
        viol_tuple = (bv_eta.eta1, bv_y.eta1, bv_eta.eta2, bv_y.eta2)
        viol_pair = (eta_v, y_v)
        viol_value = refined

    ok = (
        w1_rep.is_psd
        and w2_rep.is_psd
        and margin_min >= -tol
        and crit_min >= -tol
    )
    return PositivityCertificate(
        omega_psd=(w1_rep, w2_rep),
        eps_le_mu_min=float(margin_min),
        criterion_min=float(crit_min),
        n_samples=n_samples,
        seed=seed,
        verdict="pass" if ok else "fail",
        refined_min=float(refined),
        violating_tuple=viol_tuple,
        violating_pair=viol_pair,
        violating_value=viol_value,
    )


@dataclass(frozen=True)
class TwoPositivityReport:
    """Necessary conditions for 2-positivity (mirror flags for 2-copositivity)."""

    side: str  # "positive" | "copositive"
    off_ops_zero: bool  # C_i = 0 (resp. B_i = 0)
    zui_min: float  # sampled min of delta1*delta2 - eps1*eps2
    certified_not_k2: bool


def two_positivity_necessary(
    ing: MergingIngredients,
    n_samples: int = 20000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    side: str = "positive",
) -> TwoPositivityReport:
    """Necessary test: 2-positivity forces C_1 = C_2 = 0 and
    delta1*delta2 >= eps1*eps2 at every tuple (B_i = 0 for 2-copositivity).

    A failed condition certifies the map is NOT 2-(co)positive; passing is
    only consistent with it.
    """
    if side == "positive":
        off1, off2 = ing.C1, ing.C2
    elif side == "copositive":
        off1, off2 = ing.B1, ing.B2
    else:
        raise ValueError(f"side must be 'positive' or 'copositive', got {side!r}")
    scale = max(
        float(np.linalg.norm(ing.B1)), float(np.linalg.norm(ing.B2)),
        float(np.linalg.norm(ing.C1)), float(np.linalg.norm(ing.C2)), 1.0,
    )
    off_zero = (
        float(np.linalg.norm(off1)) <= tol * scale
        and float(np.linalg.norm(off2)) <= tol * scale
    )
    rng = np.random.default_rng(seed)
    lk, lh = ing.layout_K, ing.layout_H
    e1 = sample_unit_vectors(rng, n_samples, lk.k1)
    y1 = sample_unit_vectors(rng, n_samples, lh.k1)
    e2 = sample_unit_vectors(rng, n_samples, lk.k2)
    y2 = sample_unit_vectors(rng, n_samples, lh.k2)
    mu1, eps1, mu2, eps2, _, _ = _batch_params(ing, e1, y1, e2, y2)
    d1 = np.sqrt(np.clip(mu1**2 - eps1**2, 0.0, None))
    d2 = np.sqrt(np.clip(mu2**2 - eps2**2, 0.0, None))
    zui_min = float((d1 * d2 - eps1 * eps2).min())
    return TwoPositivityReport(
        side=side,
        off_ops_zero=bool(off_zero),
        zui_min=zui_min,
        certified_not_k2=bool((not off_zero) or zui_min < -tol),
    )


# --- canonical merging --------------------------------------------------------


def _auto_select_xi(phi: LinearMapRep) -> np.ndarray:
    """Deterministic source vector: the standard basis vector whose image
    rank-one has the largest leading eigenvalue (ties break to lowest index)."""
    best_j, best_lam = 0, -np.inf
    for j in range(phi.dK):
        e = basis_vector(j, phi.dK)
        lam = float(np.linalg.eigvalsh(herm_part(apply(phi, outer(e, e))))[-1])
        if lam > best_lam + 1e-12:
            best_j, best_lam = j, lam
    return basis_vector(best_j, phi.dK)


def _eigenpair(phi: LinearMapRep, xi: np.ndarray, x, tol: float):
    M = herm_part(apply(phi, outer(xi, xi)))
    if x is None:
        w, V = np.linalg.eigh(M)
        lam, xvec = float(w[-1]), V[:, -1]
    else:
        xvec = as_vector(x)
        nrm = np.linalg.norm(xvec)
        if nrm == 0:
            raise ValueError("supplied eigenvector is zero")
        xvec = xvec / nrm
        lam = float(np.real(xvec.conj() @ M @ xvec))
        resid = float(np.linalg.norm(M @ xvec - lam * xvec))
        if resid > 1e-8 * max(float(np.linalg.norm(M)), 1.0):
            raise ValueError(f"supplied vector is not an eigenvector (residual {resid:.3e})")
    if lam <= tol:
        raise ValueError(f"degenerate eigenpair: eigenvalue {lam:.3e} <= tol")
    return lam, xvec


def canonical_merge(
    phi1: LinearMapRep,
    phi2: LinearMapRep,
    xi1=None,
    xi2=None,
    x1=None,
    x2=None,
    tol: float = DEFAULT_TOL,
) -> tuple[MergingIngredients, float, float]:
    """Canonical merging ingredients from an eigenpair of each map.

    With unit xi_i and x_i such that phi_i(xi_i xi_i*) x_i = lam_i x_i,
    lam_i > 0:

        B1 eta = lam1^{-1/2} phi1(eta xi1*) x1        C1 = 0
        C2 eta = lam2^{-1/2} phi2(xi2 conj(eta)*) x2  B2 = 0
        omega1(X) = Tr(B1 X B1*)   omega2(X) = Tr(C2 X^T C2*)

    If xi_i is omitted it is auto-selected deterministically; if x_i is
    omitted the leading eigenvector of phi_i(xi_i xi_i*) is used.  Several
    eigenpairs may exist and give different (all valid) mergings, so x_i
    can be pinned explicitly.
    """
    xi1 = _auto_select_xi(phi1) if xi1 is None else as_vector(xi1)
    xi2 = _auto_select_xi(phi2) if xi2 is None else as_vector(xi2)
    for name, v, d in (("xi1", xi1, phi1.dK), ("xi2", xi2, phi2.dK)):
        if len(v) != d:
            raise ValueError(f"{name} has length {len(v)}, expected {d}")
    xi1 = xi1 / np.linalg.norm(xi1)
    xi2 = xi2 / np.linalg.norm(xi2)
    lam1, x1v = _eigenpair(phi1, xi1, x1, tol)
    lam2, x2v = _eigenpair(phi2, xi2, x2, tol)

    k1, l1 = phi1.dK, phi1.dH
    k2, l2 = phi2.dK, phi2.dH
    B1 = np.zeros((l1, k1), dtype=complex)
    for j in range(k1):
        B1[:, j] = apply(phi1, outer(basis_vector(j, k1), xi1)) @ x1v / np.sqrt(lam1)
    C2 = np.zeros((l2, k2), dtype=complex)
    for j in range(k2):
        C2[:, j] = apply(phi2, outer(xi2, basis_vector(j, k2).conj())) @ x2v / np.sqrt(lam2)
    W1 = B1.conj().T @ B1
    W2 = (C2.conj().T @ C2).T
    ing = MergingIngredients(
        phi1=phi1, phi2=phi2,
        B1=B1, C1=np.zeros((l1, k1), dtype=complex),
        B2=np.zeros((l2, k2), dtype=complex), C2=C2,
        W1=W1, W2=W2,
    )
    return ing, lam1, lam2


def nu_perturb(ing: MergingIngredients, nu: float) -> MergingIngredients:
    """Rescale the functionals to (nu omega1, nu^-1 omega2); positivity transfers
    because all products in the criterion are unchanged."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    return replace(ing, W1=nu * ing.W1, W2=ing.W2 / nu, P1=ing.P1, P2=ing.P2)


def scalar_compression_det(ing: MergingIngredients, eta1, y1, eta2, y2) -> float:
    """Determinant of the 3x3 scalar compression of phi(eta eta*) at the tuple
    with phases aligned and third components set to 1.

    Cross-check for :attr:`ParamBundle.quartic_form`.
    """
    eta1, y1 = as_vector(eta1), as_vector(y1)
    eta2, y2 = as_vector(eta2), as_vector(y2)

    def aligned(B, C, eta, y):
        t_b = y.conj() @ B @ eta
        t_c = y.conj() @ C @ eta.conj()
        ph = t_b * np.conj(t_c)
        if abs(ph) == 0.0:
            return eta
        theta = -np.angle(ph) / 2.0
        return np.exp(1j * theta) * eta

    eta1 = aligned(ing.B1, ing.C1, eta1, y1)
    eta2 = aligned(ing.B2, ing.C2, eta2, y2)
    eta = np.concatenate([eta1, eta2, [1.0]])
    y_full = [y1, y2, np.array([1.0 + 0j])]
    m = merged_apply(ing, outer(eta, eta))
    from .linalg import scalar_compression

    M = scalar_compression(m, y_full)
    return float(np.real(np.linalg.det(M)))
