"""The 3x3 specialization of merging: all spaces one-dimensional.

A map of the family is determined by complex couplings b_i, c_i and
nonnegative sigma_i, delta_i, acting as

    [ (e1^2+d1^2) x11 + s2^2 x22      0                b1 x13 + c1 x31 ]
    [ 0                (e2^2+d2^2) x22 + s1^2 x11      b2 x23 + c2 x32 ]
    [ conj(b1) x31 + conj(c1) x13     conj(b2) x32 + conj(c2) x23  x33 ]

with e_i = |b_i| + |c_i|.  Positivity is exactly s1 s2 + d1 d2 >= e1 e2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import DEFAULT_TOL, as_matrix, is_psd, partial_transpose
from .merging import MergingIngredients
from .opmaps import LinearMapRep, std_map


@dataclass(frozen=True)
class M3Params:
    b1: complex
    b2: complex
    c1: complex
    c2: complex
    sigma1: float
    sigma2: float
    delta1: float
    delta2: float

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "delta1", "delta2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    # derived quantities, recomputed on access
    @property
    def eps1(self) -> float:
        return abs(self.b1) + abs(self.c1)

    @property
    def eps2(self) -> float:
        return abs(self.b2) + abs(self.c2)

    @property
    def bvec(self) -> np.ndarray:
        return np.array([abs(self.b1), abs(self.b2)])

    @property
    def cvec(self) -> np.ndarray:
        return np.array([abs(self.c1), abs(self.c2)])

    @property
    def s1(self) -> float:
        return max(abs(self.b1), abs(self.c1))

    @property
    def s2(self) -> float:
        return max(abs(self.b2), abs(self.c2))

    @property
    def s(self) -> float:
        return max(float(np.linalg.norm(self.bvec)), float(np.linalg.norm(self.cvec)))

    @property
    def delta(self) -> float:
        return float(np.hypot(self.delta1, self.delta2))

    @property
    def eps(self) -> float:
        return float(np.hypot(self.eps1, self.eps2))

    @property
    def f1(self) -> float:
        return self.eps1**2 + self.delta1**2

    @property
    def f2(self) -> float:
        return self.eps2**2 + self.delta2**2

    @property
    def w1(self) -> float:
        return self.sigma1**2

    @property
    def w2(self) -> float:
        return self.sigma2**2

    @classmethod
    def from_json(cls, obj) -> "M3Params":
        def cplx(z):
            if isinstance(z, (list, tuple)):
                return complex(z[0], z[1])
            return complex(z)

        b = obj.get("b", [0, 0])
        c = obj.get("c", [0, 0])
        sigma = obj.get("sigma", [0, 0])
        delta = obj.get("delta", [0, 0])
        return cls(
            b1=cplx(b[0]), b2=cplx(b[1]), c1=cplx(c[0]), c2=cplx(c[1]),
            sigma1=float(sigma[0]), sigma2=float(sigma[1]),
            delta1=float(delta[0]), delta2=float(delta[1]),
        )


def to_map(p: M3Params) -> LinearMapRep:
    """Choi representation of the family map; zero-pattern is fixed, the
    nonzero slots carry f_i, sigma_i^2, b_i, c_i and the unit (3,3) corner."""
    C = np.zeros((9, 9), dtype=complex)
    C[0, 0] = p.f1
    C[1, 1] = p.w1
    C[3, 3] = p.w2
    C[4, 4] = p.f2
    C[8, 8] = 1.0
    C[0, 8], C[8, 0] = p.b1, np.conj(p.b1)
    C[4, 8], C[8, 4] = p.b2, np.conj(p.b2)
    C[2, 6], C[6, 2] = np.conj(p.c1), p.c1
    C[5, 7], C[7, 5] = np.conj(p.c2), p.c2
    return LinearMapRep(3, 3, C)


def to_ingredients(p: M3Params) -> MergingIngredients:
    """One-dimensional merging ingredients reproducing the map (requires f_i > 0
    so the range projections are the identity)."""
    phi1 = std_map("ad", A=np.array([[np.sqrt(p.f1)]]))
    phi2 = std_map("ad", A=np.array([[np.sqrt(p.f2)]]))
    return MergingIngredients(
        phi1=phi1, phi2=phi2,
        B1=[[p.b1]], C1=[[p.c1]], B2=[[p.b2]], C2=[[p.c2]],
        W1=[[p.w1]], W2=[[p.w2]],
    )


def is_positive(p: M3Params, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Closed-form positivity: margin = sigma1 sigma2 + delta1 delta2 - eps1 eps2."""
    margin = p.sigma1 * p.sigma2 + p.delta1 * p.delta2 - p.eps1 * p.eps2
    return bool(margin >= -tol), float(margin)


@dataclass(frozen=True)
class CpStatus:
    cp: bool
    ccp: bool
    two_pos: bool
    two_copos: bool
    choi_min_eig: float
    choi_gamma_min_eig: float


def cp_status(p: M3Params, tol: float = DEFAULT_TOL) -> CpStatus:
    """Complete (co)positivity flags; 2-positivity coincides with complete
    positivity in this family.

    Closed form: cp iff c1 = c2 = 0 and delta1 delta2 >= |b1 b2|; ccp is the
    mirror.  The eigenvalue of the (partially transposed) Choi matrix is
    reported alongside for cross-checking.
    """
    ok, _ = is_positive(p, tol)
    if not ok:
        raise ValueError("cp_status requires a positive map")
    m = to_map(p)
    w_choi = float(np.linalg.eigvalsh(m.choi.astype(complex)).min().real)
    w_gamma = float(np.linalg.eigvalsh(partial_transpose(m.choi, 3, 3)).min().real)
    cp = (
        abs(p.c1) <= tol
        and abs(p.c2) <= tol
        and p.delta1 * p.delta2 >= abs(p.b1) * abs(p.b2) - tol
    )
    ccp = (
        abs(p.b1) <= tol
        and abs(p.b2) <= tol
        and p.delta1 * p.delta2 >= abs(p.c1) * abs(p.c2) - tol
    )
    return CpStatus(
        cp=bool(cp), ccp=bool(ccp), two_pos=bool(cp), two_copos=bool(ccp),
        choi_min_eig=w_choi, choi_gamma_min_eig=w_gamma,
    )


# --- explicit decompositions for dependent coupling vectors --------------------


def _c_zero_parts(babs1, babs2, b1, b2, d1, d2, s1sq, s2sq):
    """Two-part split when the c couplings vanish and d1 d2 < |b1 b2|."""
    k = d1 * d2 / (babs1 * babs2)
    cp = np.zeros((9, 9), dtype=complex)
    cp[0, 0] = babs1**2 + d1**2
    cp[4, 4] = babs2**2 + d2**2
    cp[8, 8] = 1.0
    cp[0, 8], cp[8, 0] = b1, np.conj(b1)
    cp[4, 8], cp[8, 4] = b2, np.conj(b2)
    cp[0, 4] = (1 - k) * b1 * np.conj(b2)
    cp[4, 0] = np.conj(cp[0, 4])
    co = np.zeros((9, 9), dtype=complex)
    co[1, 1] = s1sq
    co[3, 3] = s2sq
    co[1, 3] = -(1 - k) * b1 * np.conj(b2)
    co[3, 1] = np.conj(co[1, 3])
    return cp, co


def decompose_dependent(
    p: M3Params, tol: float = DEFAULT_TOL
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Explicit decomposability certificate when |b| and |c| are linearly
    dependent: PSD matrices (cp_parts, ccp_parts) with

        Choi = sum(cp_parts) + sum(Gamma(part) for part in ccp_parts).

    Branches: c = 0 (two parts, or just the Choi matrix when it is already
    PSD), b = 0 (mirror), and c = kappa b with two or four parts depending
    on whether delta1 delta2 exceeds eps1 eps2.
    """
    ok, _ = is_positive(p, tol)
    if not ok:
        raise ValueError("decompose_dependent requires a positive map")
    cross = abs(abs(p.b1) * abs(p.c2) - abs(p.b2) * abs(p.c1))
    scale = float(np.linalg.norm(p.bvec) * np.linalg.norm(p.cvec)) + 1.0
    if cross > tol * scale:
        raise ValueError("coupling moduli vectors are linearly independent")
    m = to_map(p)
    choi = m.choi
    b_norm, c_norm = float(np.linalg.norm(p.bvec)), float(np.linalg.norm(p.cvec))

    if c_norm <= tol:
        if p.delta1 * p.delta2 >= abs(p.b1) * abs(p.b2) - tol:
            return [choi.copy()], []  # already completely positive
        cp, co = _c_zero_parts(
            abs(p.b1), abs(p.b2), p.b1, p.b2, p.delta1, p.delta2, p.sigma1**2, p.sigma2**2
        )
        return [cp], [co]
    if b_norm <= tol:
        if p.delta1 * p.delta2 >= abs(p.c1) * abs(p.c2) - tol:
            return [], [partial_transpose(choi, 3, 3)]  # completely copositive
        # the partially transposed Choi matrix has the c = 0 pattern with
        # couplings conj(c_i); decompose it and swap the roles back
        cp, co = _c_zero_parts(
            abs(p.c1), abs(p.c2), np.conj(p.c1), np.conj(p.c2),
            p.delta1, p.delta2, p.sigma1**2, p.sigma2**2,
        )
        return [co], [cp]

    kappa = c_norm / b_norm
    e1e2 = p.eps1 * p.eps2
    lam = np.inf if e1e2 <= tol else p.delta1 * p.delta2 / e1e2

    if lam >= 1.0:
        cp = np.zeros((9, 9), dtype=complex)
        cp[0, 0] = (1 + kappa) * abs(p.b1) ** 2 + p.delta1**2 / (1 + kappa)
        cp[4, 4] = (1 + kappa) * abs(p.b2) ** 2 + p.delta2**2 / (1 + kappa)
        cp[1, 1], cp[3, 3] = p.sigma1**2, p.sigma2**2
        cp[8, 8] = 1 / (1 + kappa)
        cp[0, 8], cp[8, 0] = p.b1, np.conj(p.b1)
        cp[4, 8], cp[8, 4] = p.b2, np.conj(p.b2)
        co = np.zeros((9, 9), dtype=complex)
        co[0, 0] = (1 + kappa) / kappa * abs(p.c1) ** 2 + kappa / (1 + kappa) * p.delta1**2
        co[4, 4] = (1 + kappa) / kappa * abs(p.c2) ** 2 + kappa / (1 + kappa) * p.delta2**2
        co[8, 8] = kappa / (1 + kappa)
        co[0, 8], co[8, 0] = np.conj(p.c1), p.c1
        co[4, 8], co[8, 4] = np.conj(p.c2), p.c2
        return [cp], [co]

    t = (1 - lam) * (1 + kappa)
    cp1 = np.zeros((9, 9), dtype=complex)
    cp1[0, 0] = (1 + kappa) * abs(p.b1) ** 2 + p.delta1**2 / (1 + kappa)
    cp1[4, 4] = (1 + kappa) * abs(p.b2) ** 2 + p.delta2**2 / (1 + kappa)
    cp1[8, 8] = 1 / (1 + kappa)
    cp1[0, 8], cp1[8, 0] = p.b1, np.conj(p.b1)
    cp1[4, 8], cp1[8, 4] = p.b2, np.conj(p.b2)
    cp1[0, 4] = t * p.b1 * np.conj(p.b2)
    cp1[4, 0] = np.conj(cp1[0, 4])
    cp2 = np.zeros((9, 9), dtype=complex)
    cp2[1, 1] = kappa / (1 + kappa) * p.sigma1**2
    cp2[3, 3] = kappa / (1 + kappa) * p.sigma2**2
    cp2[1, 3] = -t / kappa * np.conj(p.c1) * p.c2
    cp2[3, 1] = np.conj(cp2[1, 3])
    co1 = np.zeros((9, 9), dtype=complex)
    co1[0, 0] = (1 + kappa) / kappa * abs(p.c1) ** 2 + kappa / (1 + kappa) * p.delta1**2
    co1[4, 4] = (1 + kappa) / kappa * abs(p.c2) ** 2 + kappa / (1 + kappa) * p.delta2**2
    co1[8, 8] = kappa / (1 + kappa)
    co1[0, 8], co1[8, 0] = np.conj(p.c1), p.c1
    co1[4, 8], co1[8, 4] = np.conj(p.c2), p.c2
    co1[0, 4] = t / kappa * np.conj(p.c1) * p.c2
    co1[4, 0] = np.conj(co1[0, 4])
    co2 = np.zeros((9, 9), dtype=complex)
    co2[1, 1] = p.sigma1**2 / (1 + kappa)
    co2[3, 3] = p.sigma2**2 / (1 + kappa)
    co2[1, 3] = -t * p.b1 * np.conj(p.b2)
    co2[3, 1] = np.conj(co2[1, 3])
    return [cp1, cp2], [co1, co2]


def nondec_sufficient(p: M3Params, tol: float = DEFAULT_TOL):
    """Sufficient nondecomposability test s (eps^2+delta^2)^{1/2} < |b|^2 + |c|^2.

    On success also constructs the family witness and runs the full
    evaluation, returning (True, WitnessReport); otherwise (False, None).
    """
    ok, _ = is_positive(p, tol)
    if not ok:
        raise ValueError("nondec_sufficient requires a positive map")
    if np.linalg.norm(p.bvec) <= tol or np.linalg.norm(p.cvec) <= tol:
        raise ValueError("nondec_sufficient requires nonzero b and c coupling vectors")
    lhs = p.s * np.sqrt(p.eps**2 + p.delta**2)
    rhs = float(np.linalg.norm(p.bvec) ** 2 + np.linalg.norm(p.cvec) ** 2)
    if not lhs < rhs - tol:
        return False, None
    from .witness import evaluate, m3_witness

    Z = m3_witness(p)
    return True, evaluate(to_map(p), Z, tol)


def extremality(p: M3Params, tol: float = DEFAULT_TOL) -> tuple[str, list[str]]:
    """Extremality / exposedness predicate.

    The four conditions, tested on the equivalence-normalized parameters:
    (a) both coupling vectors nonzero, (b) delta1 = delta2 = 0,
    (c) sigma1 sigma2 = eps1 eps2, (d) <|b|, |c|> = 0.  All four together
    are equivalent to extremal and to exposed, so the verdict is either
    "exposed" or "neither".
    """
    ok, _ = is_positive(p, tol)
    if not ok:
        raise ValueError("extremality requires a positive map")
    q = p
    if p.eps1 > tol and p.eps2 > tol:
        q, _, _ = normalize_equivalence(p)
    failed = []
    if np.linalg.norm(q.bvec) <= tol or np.linalg.norm(q.cvec) <= tol:
        failed.append("a")
    if q.delta1 > tol or q.delta2 > tol:
        failed.append("b")
    if abs(q.sigma1 * q.sigma2 - q.eps1 * q.eps2) > tol:
        failed.append("c")
    if float(q.bvec @ q.cvec) > tol:
        failed.append("d")
    return ("exposed" if not failed else "neither"), failed


def normalize_equivalence(p: M3Params) -> tuple[M3Params, np.ndarray, np.ndarray]:
    """Diagonal equivalence Q, R making eps1 = eps2 = 1 with b_i, c_i >= 0.

    Returns (p', Q, R) with to_map(p')(X) = R to_map(p)(Q X Q*) R*.  The
    moduli are |q_i| = |r_i| = eps_i^{-1/2} and the phases rotate b_i and
    c_i onto the nonnegative reals.
    """
    if p.eps1 == 0 or p.eps2 == 0:
        raise ValueError("normalize_equivalence requires eps1, eps2 > 0")
    qs, rs = [], []
    for b, c, e in ((p.b1, p.c1, p.eps1), (p.b2, p.c2, p.eps2)):
        tb = float(np.angle(b)) if b != 0 else 0.0
        tc = float(np.angle(c)) if c != 0 else 0.0
        # the transformed couplings are r_i q_i b_i and r_i conj(q_i) c_i;
        # these phases rotate both onto the nonnegative reals
        qs.append(e**-0.5 * np.exp(1j * (tc - tb) / 2))
        rs.append(e**-0.5 * np.exp(-1j * (tb + tc) / 2))
    Q = np.diag([qs[0], qs[1], 1.0]).astype(complex)
    R = np.diag([rs[0], rs[1], 1.0]).astype(complex)
    scale = 1 / np.sqrt(p.eps1 * p.eps2)
    pn = M3Params(
        b1=abs(p.b1) / p.eps1, b2=abs(p.b2) / p.eps2,
        c1=abs(p.c1) / p.eps1, c2=abs(p.c2) / p.eps2,
        sigma1=p.sigma1 * scale, sigma2=p.sigma2 * scale,
        delta1=p.delta1 / p.eps1, delta2=p.delta2 / p.eps2,
    )
    return pn, Q, R


def apply_formula(p: M3Params, X) -> np.ndarray:
    """The displayed 3x3 action (used as an independent check of to_map)."""
    X = as_matrix(X)
    return np.array(
        [
            [
                p.f1 * X[0, 0] + p.w2 * X[1, 1],
                0.0,
                p.b1 * X[0, 2] + p.c1 * X[2, 0],
            ],
            [
                0.0,
                p.f2 * X[1, 1] + p.w1 * X[0, 0],
                p.b2 * X[1, 2] + p.c2 * X[2, 1],
            ],
            [
                np.conj(p.b1) * X[2, 0] + np.conj(p.c1) * X[0, 2],
                np.conj(p.b2) * X[2, 1] + np.conj(p.c2) * X[1, 2],
                X[2, 2],
            ],
        ],
        dtype=complex,
    )


def mo_params(normalized: bool = True) -> M3Params:
    """Parameters of the basic 3x3 example (normalized or denormalized form)."""
    if normalized:
        r = 1 / np.sqrt(2.0)
        return M3Params(b1=r, b2=0.0, c1=0.0, c2=r, sigma1=r, sigma2=r, delta1=0.0, delta2=0.0)
    return M3Params(b1=1.0, b2=0.0, c1=0.0, c2=1.0, sigma1=1.0, sigma2=1.0, delta1=0.0, delta2=0.0)


def reassembly_error(p: M3Params, cp_parts, ccp_parts) -> float:
    """Max-entry error of Choi = sum cp + sum Gamma(ccp)."""
    total = np.zeros((9, 9), dtype=complex)
    for part in cp_parts:
        total = total + as_matrix(part)
    for part in ccp_parts:
        total = total + partial_transpose(part, 3, 3)
    return float(np.max(np.abs(total - to_map(p).choi)))


def min_part_eig(parts) -> float:
    """Smallest eigenvalue across a list of (Hermitian) parts; inf when empty."""
    vals = [float(np.linalg.eigvalsh((as_matrix(q) + as_matrix(q).conj().T) / 2).min()) for q in parts]
    return min(vals) if vals else np.inf


__all__ = [
    "M3Params",
    "CpStatus",
    "to_map",
    "to_ingredients",
    "is_positive",
    "cp_status",
    "decompose_dependent",
    "nondec_sufficient",
    "extremality",
    "normalize_equivalence",
    "apply_formula",
    "mo_params",
    "reassembly_error",
    "min_part_eig",
]
