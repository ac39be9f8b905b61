"""Named constructors for the explicit maps, their zero sets, and the
embedding/compression factorization behind the exposed family.

Gallery names:

  mo             3x3 bistochastic map (the basic example)
  mo_unnorm      its denormalized variant V mo(.) V*, V = diag(sqrt2, sqrt2, 1)
  mo_general     identity/transpose merging on K1 (+) K2 (+) C         (k1, k2)
  lambda_d       the d x d one-parameter generalization                (d >= 3)
  lambda_general trace_unit/trace_unit merging                         (k1, k2)
  omega_general  trace_unit/transpose merging                          (k1, k2)
  gamma_family   canonical merging of the two psi_gamma variants
                 (k1, k2, gamma1, gamma2)
  block_exposed  A1 . A1* / A2 .^T A2* merging with phases and nu
                 (A1, A2, theta1, theta2, nu)

"exposed" for mo / mo_general / block_exposed is a certified label; the
only executable consequence shipped here is the factorization identity of
:func:`ef_factors`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    RANK_RTOL,
    BlockVector,
    SpaceLayout,
    as_matrix,
    as_vector,
    basis_vector,
    block_join,
    block_split,
    matrix_from_json,
    orthonormal_range_basis,
    outer,
    range_projection,
)
from .merging import MergingIngredients, merged_apply
from .opmaps import LinearMapRep, apply, choi_of, rank_one_value, std_map


@dataclass(frozen=True)
class GallerySpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ZeroPair:
    """A pair (eta, y) with <y, phi(eta eta*) y> = 0, tagged by branch."""

    eta: BlockVector
    y: BlockVector
    case_label: str
    residual: float


def list_names() -> list[str]:
    return [
        "mo",
        "mo_unnorm",
        "mo_general",
        "lambda_d",
        "lambda_general",
        "omega_general",
        "gamma_family",
        "block_exposed",
    ]


# --- direct block formulas ----------------------------------------------------


def _mo_apply(X):
    X = as_matrix(X)
    s = 0.5 * (X[0, 0] + X[1, 1])
    r = 1 / np.sqrt(2.0)
    return np.array(
        [
            [s, 0.0, r * X[0, 2]],
            [0.0, s, r * X[2, 1]],
            [r * X[2, 0], r * X[1, 2], X[2, 2]],
        ],
        dtype=complex,
    )


def _mo_unnorm_apply(X):
    X = as_matrix(X)
    s = X[0, 0] + X[1, 1]
    return np.array(
        [
            [s, 0.0, X[0, 2]],
            [0.0, s, X[2, 1]],
            [X[2, 0], X[1, 2], X[2, 2]],
        ],
        dtype=complex,
    )


def _three_block_apply(X, lay, f11, f22):
    """Shared scaffold for the identity/trace/transpose merging family:
    corner columns pass through, the (2,3) corner is transposed."""
    Xb = block_split(X, lay)
    k1, k2 = lay.k1, lay.k2
    Y = [[None] * 3 for _ in range(3)]
    Y[0][0] = f11(Xb[0][0], Xb[1][1])
    Y[1][1] = f22(Xb[0][0], Xb[1][1])
    Y[0][1] = np.zeros((k1, k2), dtype=complex)
    Y[1][0] = np.zeros((k2, k1), dtype=complex)
    Y[0][2] = Xb[0][2]
    Y[1][2] = Xb[2][1].T
    Y[2][0] = Xb[2][0]
    Y[2][1] = Xb[1][2].T
    Y[2][2] = Xb[2][2]
    return block_join(Y, lay)


def _mo_general_apply(X, k1, k2):
    lay = SpaceLayout(k1, k2)
    return _three_block_apply(
        X,
        lay,
        lambda X11, X22: X11 + np.trace(X22) * np.eye(k1),
        lambda X11, X22: X22.T + np.trace(X11) * np.eye(k2),
    )


def _lambda_general_apply(X, k1, k2):
    lay = SpaceLayout(k1, k2)
    return _three_block_apply(
        X,
        lay,
        lambda X11, X22: (np.trace(X11) + np.trace(X22)) * np.eye(k1),
        lambda X11, X22: (np.trace(X11) + np.trace(X22)) * np.eye(k2),
    )


def _omega_general_apply(X, k1, k2):
    lay = SpaceLayout(k1, k2)
    return _three_block_apply(
        X,
        lay,
        lambda X11, X22: (np.trace(X11) + np.trace(X22)) * np.eye(k1),
        lambda X11, X22: X22.T + np.trace(X11) * np.eye(k2),
    )


def _lambda_d_apply(X, d):
    X = as_matrix(X)
    s = np.trace(X[: d - 1, : d - 1])
    r = np.sqrt(d - 1.0)
    Y = np.zeros((d, d), dtype=complex)
    for i in range(d - 1):
        Y[i, i] = s
    for i in range(d - 2):
        Y[i, d - 1] = r * X[i, d - 1]
        Y[d - 1, i] = r * X[d - 1, i]
    Y[d - 2, d - 1] = r * X[d - 1, d - 2]
    Y[d - 1, d - 2] = r * X[d - 2, d - 1]
    Y[d - 1, d - 1] = (d - 1.0) * X[d - 1, d - 1]
    return Y / (d - 1.0)


def _gamma_family_apply(X, k1, k2, g1, g2):
    lay = SpaceLayout(k1, k2)
    Xb = block_split(X, lay)
    X11, X22 = Xb[0][0], Xb[1][1]
    x13, x23 = Xb[0][2][:, 0], Xb[1][2][:, 0]
    x31, x32 = Xb[2][0][0, :], Xb[2][1][0, :]
    iota1 = np.sqrt(g1) + 1 / np.sqrt(g1)
    iota2 = np.sqrt(g2) + 1 / np.sqrt(g2)
    r1 = (g1 + 1) * np.trace(X11) + np.trace(X22) / g2 + (g2 - 1 / g2) * X22[0, 0]
    r2 = (g2 + 1) * np.trace(X22) + np.trace(X11) / g1 + (g1 - 1 / g1) * X11[0, 0]
    e1k1 = basis_vector(0, k1)
    e1k2 = basis_vector(0, k2)
    Y = [[None] * 3 for _ in range(3)]
    Y[0][0] = r1 * np.eye(k1) - X11
    Y[1][1] = r2 * np.eye(k2) - X22.T
    Y[0][1] = np.zeros((k1, k2), dtype=complex)
    Y[1][0] = np.zeros((k2, k1), dtype=complex)
    Y[0][2] = (iota1 * x13[0] * e1k1 - x13 / np.sqrt(g1)).reshape(k1, 1)
    Y[1][2] = (iota2 * x32[0] * e1k2 - x32 / np.sqrt(g2)).reshape(k2, 1)
    Y[2][0] = (iota1 * x31[0] * e1k1 - x31 / np.sqrt(g1)).reshape(1, k1)
    Y[2][1] = (iota2 * x23[0] * e1k2 - x23 / np.sqrt(g2)).reshape(1, k2)
    Y[2][2] = Xb[2][2]
    return block_join(Y, lay)


def _block_exposed_apply(X, A1, A2, theta1, theta2, nu):
    k1, l1 = A1.shape[1], A1.shape[0]
    k2, l2 = A2.shape[1], A2.shape[0]
    lay_k = SpaceLayout(k1, k2)
    P1 = range_projection(A1 @ A1.conj().T)
    P2 = range_projection(A2 @ A2.conj().T)
    ph1, ph2 = np.exp(1j * theta1), np.exp(1j * theta2)
    Xb = block_split(X, lay_k)
    X11, X22 = Xb[0][0], Xb[1][1]
    x13, x23 = Xb[0][2][:, 0], Xb[1][2][:, 0]
    x31, x32 = Xb[2][0][0, :], Xb[2][1][0, :]
    Y = [[None] * 3 for _ in range(3)]
    Y[0][0] = A1 @ X11 @ A1.conj().T + nu * np.trace(A2 @ X22.T @ A2.conj().T) * P1
    Y[1][1] = A2 @ X22.T @ A2.conj().T + np.trace(A1 @ X11 @ A1.conj().T) / nu * P2
    Y[0][1] = np.zeros((l1, l2), dtype=complex)
    Y[1][0] = np.zeros((l2, l1), dtype=complex)
    Y[0][2] = (ph1 * (A1 @ x13)).reshape(l1, 1)
    Y[1][2] = (ph2 * (A2 @ x32)).reshape(l2, 1)
    Y[2][0] = (x31 @ A1.conj().T / ph1).reshape(1, l1)
    Y[2][1] = (x23 @ A2.conj().T / ph2).reshape(1, l2)
    Y[2][2] = Xb[2][2]
    return block_join(Y, SpaceLayout(l1, l2))


def _require(params: dict, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise ValueError(f"missing gallery params: {missing}")
    return [params[n] for n in names]


def build(spec: GallerySpec) -> LinearMapRep:
    """Construct the named map; see the module docstring for the catalogue."""
    name, p = spec.name, spec.params
    if name == "mo":
        return choi_of(_mo_apply, 3, 3, check_linearity=False)
    if name == "mo_unnorm":
        return choi_of(_mo_unnorm_apply, 3, 3, check_linearity=False)
    if name in ("mo_general", "lambda_general", "omega_general"):
        (k1, k2) = map(int, _require(p, "k1", "k2"))
        fn = {
            "mo_general": _mo_general_apply,
            "lambda_general": _lambda_general_apply,
            "omega_general": _omega_general_apply,
        }[name]
        n = k1 + k2 + 1
        return choi_of(lambda X: fn(X, k1, k2), n, n, check_linearity=False)
    if name == "lambda_d":
        d = int(*_require(p, "d"))
        if d < 3:
            raise ValueError(f"lambda_d needs d >= 3, got {d}")
        return choi_of(lambda X: _lambda_d_apply(X, d), d, d, check_linearity=False)
    if name == "gamma_family":
        k1, k2 = int(p.get("k1", 3)), int(p.get("k2", 3))
        g1, g2 = float(p.get("gamma1", 1.0)), float(p.get("gamma2", 1.0))
        if g1 <= 0 or g2 <= 0:
            raise ValueError("gamma_family needs gamma_i > 0")
        if g1 < 1 or g2 < 1:
            # nondecomposability is only claimed for gamma_i >= 1
            import warnings

            warnings.warn("gamma_family with gamma < 1 is outside the certified range")
        n = k1 + k2 + 1
        return choi_of(lambda X: _gamma_family_apply(X, k1, k2, g1, g2), n, n, check_linearity=False)
    if name == "block_exposed":
        A1, A2 = as_matrix(p["A1"]), as_matrix(p["A2"])
        if np.linalg.norm(A1) == 0 or np.linalg.norm(A2) == 0:
            raise ValueError("block_exposed needs nonzero A1, A2")
        th1, th2 = float(p.get("theta1", 0.0)), float(p.get("theta2", 0.0))
        nu = float(p.get("nu", 1.0))
        if nu <= 0:
            raise ValueError(f"nu must be positive, got {nu}")
        dK = A1.shape[1] + A2.shape[1] + 1
        dH = A1.shape[0] + A2.shape[0] + 1
        return choi_of(
            lambda X: _block_exposed_apply(X, A1, A2, th1, th2, nu), dK, dH, check_linearity=False
        )
    raise ValueError(f"unknown gallery name {spec.name!r}")


def ingredients_for(spec: GallerySpec) -> MergingIngredients:
    """The merging ingredients whose merge reproduces the named map exactly."""
    name, p = spec.name, spec.params
    if name == "mo":
        half = std_map("ad", A=np.array([[1 / np.sqrt(2.0)]]))
        r = 1 / np.sqrt(2.0)
        return MergingIngredients(
            phi1=half, phi2=half,
            B1=[[r]], C1=[[0.0]], B2=[[0.0]], C2=[[r]],
            W1=[[0.5]], W2=[[0.5]],
        )
    if name == "mo_unnorm":
        one = std_map("identity", d=1)
        return MergingIngredients(
            phi1=one, phi2=one,
            B1=[[1.0]], C1=[[0.0]], B2=[[0.0]], C2=[[1.0]],
            W1=[[1.0]], W2=[[1.0]],
        )
    if name in ("mo_general", "lambda_general", "omega_general"):
        k1, k2 = map(int, _require(p, "k1", "k2"))
        phi1 = {
            "mo_general": std_map("identity", d=k1),
            "lambda_general": std_map("trace_unit", d=k1),
            "omega_general": std_map("trace_unit", d=k1),
        }[name]
        phi2 = std_map("transpose", d=k2) if name != "lambda_general" else std_map("trace_unit", d=k2)
        return MergingIngredients(
            phi1=phi1, phi2=phi2,
            B1=np.eye(k1), C1=np.zeros((k1, k1)),
            B2=np.zeros((k2, k2)), C2=np.eye(k2),
            W1=np.eye(k1), W2=np.eye(k2),
        )
    if name == "lambda_d":
        d = int(*_require(p, "d"))
        k1 = d - 2
        c = 1.0 / (d - 1.0)
        phi1 = std_map("trace_unit", d=k1)
        phi1 = LinearMapRep(k1, k1, c * phi1.choi)
        phi2 = std_map("ad", A=np.array([[np.sqrt(c)]]))
        return MergingIngredients(
            phi1=phi1, phi2=phi2,
            B1=np.sqrt(c) * np.eye(k1), C1=np.zeros((k1, k1)),
            B2=[[0.0]], C2=[[np.sqrt(c)]],
            W1=c * np.eye(k1), W2=[[c]],
        )
    if name == "gamma_family":
        from .merging import canonical_merge

        k1, k2 = int(p.get("k1", 3)), int(p.get("k2", 3))
        g1, g2 = float(p.get("gamma1", 1.0)), float(p.get("gamma2", 1.0))
        phi1 = std_map("psi_gamma", gamma=g1, d=k1)
        phi2 = std_map("psi_gamma_co", gamma=g2, d=k2)
        e1, e2 = basis_vector(0, k1), basis_vector(0, k2)
        ing, _, _ = canonical_merge(phi1, phi2, xi1=e1, xi2=e2, x1=e1, x2=e2)
        return ing
    if name == "block_exposed":
        A1, A2 = as_matrix(p["A1"]), as_matrix(p["A2"])
        th1, th2 = float(p.get("theta1", 0.0)), float(p.get("theta2", 0.0))
        nu = float(p.get("nu", 1.0))
        phi1 = std_map("ad", A=A1)
        phi2 = std_map("co_ad", A=A2)
        return MergingIngredients(
            phi1=phi1, phi2=phi2,
            B1=np.exp(1j * th1) * A1, C1=np.zeros(A1.shape),
            B2=np.zeros(A2.shape), C2=np.exp(1j * th2) * A2,
            W1=(A1.conj().T @ A1) / nu, W2=nu * (A2.conj().T @ A2).T,
        )
    raise ValueError(f"no merging ingredients recorded for {spec.name!r}")


# --- closed-form quadratic for the identity/transpose merging ------------------


def mo_general_quadratic_direct(eta: BlockVector, y: BlockVector) -> float:
    """<y, phi(eta eta*) y> by the expanded bilinear formula."""
    a, b = eta.alpha, y.alpha
    ip1 = y.eta1.conj() @ eta.eta1
    ip2 = y.eta2.conj() @ eta.eta2.conj()
    val = (
        abs(a) ** 2 * abs(b) ** 2
        + 2 * np.real(np.conj(a) * b * ip1)
        + 2 * np.real(a * b * ip2)
        + abs(ip1) ** 2
        + np.linalg.norm(eta.eta2) ** 2 * np.linalg.norm(y.eta1) ** 2
        + abs(ip2) ** 2
        + np.linalg.norm(eta.eta1) ** 2 * np.linalg.norm(y.eta2) ** 2
    )
    return float(val)


def mo_general_quadratic_cases(eta: BlockVector, y: BlockVector) -> float:
    """<y, phi(eta eta*) y> by the two-case closed form (alpha = 0 / alpha != 0)."""
    a, b = eta.alpha, y.alpha
    ip1 = y.eta1.conj() @ eta.eta1
    ip2 = y.eta2.conj() @ eta.eta2.conj()
    if a == 0:
        return float(
            np.linalg.norm(eta.eta1) ** 2 * np.linalg.norm(y.eta2) ** 2
            + np.linalg.norm(eta.eta2) ** 2 * np.linalg.norm(y.eta1) ** 2
            + abs(ip1) ** 2
            + abs(ip2) ** 2
        )
    t = abs(a) ** 2 * np.conj(b) + np.conj(a) * ip1 + a * ip2
    cross = a * np.outer(y.eta1, eta.eta2.conj()).reshape(-1) - np.conj(a) * np.outer(
        eta.eta1, y.eta2
    ).reshape(-1)
    return float((abs(t) ** 2 + np.linalg.norm(cross) ** 2) / abs(a) ** 2)


def omega_general_quadratic(eta: BlockVector, y: BlockVector) -> float:
    """Closed form for the trace_unit/transpose merging via its decomposition
    into the identity/transpose merging plus a reduction-type block-1 term."""
    extra = np.linalg.norm(eta.eta1) ** 2 * np.linalg.norm(y.eta1) ** 2 - abs(
        y.eta1.conj() @ eta.eta1
    ) ** 2
    return mo_general_quadratic_cases(eta, y) + float(extra)


# --- zero sets -----------------------------------------------------------------


def _directions(dim: int) -> list[np.ndarray]:
    """Small deterministic set of unit directions in C^dim."""
    out = [basis_vector(i, dim) for i in range(dim)]
    if dim >= 2:
        v = np.ones(dim, dtype=complex) / np.sqrt(dim)
        out.append(v)
        w = np.ones(dim, dtype=complex)
        w[1::2] = 1j
        out.append(w / np.linalg.norm(w))
    return out


def _orth_partner(v: np.ndarray) -> np.ndarray | None:
    """A deterministic unit vector orthogonal to v, or None in dimension 1."""
    d = len(v)
    if d == 1:
        return None
    M = np.eye(d, dtype=complex) - np.outer(v, v.conj()) / (v.conj() @ v)
    for i in range(d):
        w = M @ basis_vector(i, d)
        n = np.linalg.norm(w)
        if n > 1e-8:
            return w / n
    return None


def zero_set(
    name: str,
    params: dict,
    max_pairs: int | None = None,
    n_phases: int = 8,
    radii: tuple[float, ...] = (0.5, 1.0, 2.0),
    tol: float = DEFAULT_TOL,
) -> list[ZeroPair]:
    """Deterministic lattice of zero pairs of the named map, one batch per
    classification branch.

    Supported names: ``mo_general`` and ``omega_general``.  Every emitted
    pair is validated against the direct quadratic form (residual stored),
    and against the closed-form case expression.
    """
    if name not in ("mo_general", "omega_general"):
        raise ValueError(f"zero_set supports mo_general and omega_general, got {name!r}")
    k1, k2 = int(params["k1"]), int(params["k2"])
    lay = SpaceLayout(k1, k2)
    m = build(GallerySpec(name, {"k1": k1, "k2": k2}))
    closed = mo_general_quadratic_cases if name == "mo_general" else omega_general_quadratic

    phases = np.exp(2j * np.pi * np.arange(n_phases) / n_phases)
    dirs1 = _directions(k1)
    dirs2 = _directions(k2)
    z1 = np.zeros(k1, dtype=complex)
    z2 = np.zeros(k2, dtype=complex)

    pairs: list[tuple[BlockVector, BlockVector, str]] = []

    def emit(eta1, eta2, alpha, y1, y2, beta, label):
        pairs.append((BlockVector(eta1, eta2, alpha), BlockVector(y1, y2, beta), label))

    if name == "mo_general":
        for r in radii:
            for j, ph in enumerate(phases):
                ph2 = phases[(2 * j + 1) % n_phases]
                ph3 = phases[(3 * j + 2) % n_phases]
                for d1 in dirs1:
                    o1 = _orth_partner(d1)
                    if o1 is not None:
                        emit(r * ph * d1, z2, 0.0, o1, z2, r, "0n0")
                for d2 in dirs2:
                    o2 = _orth_partner(d2.conj())
                    if o2 is not None:
                        emit(z1, r * ph * d2, 0.0, z1, o2, r, "00n")
                emit(r * ph * dirs1[0], r * dirs2[0], 0.0, z1, z2, r, "0nn")
                for d1 in dirs1:
                    emit(z1, z2, r * ph, d1, dirs2[0], 0.0, "n00")
                for d1 in dirs1:
                    a = r * ph
                    b = r
                    y1 = -np.conj(a) * b * d1  # <eta1, y1> = -conj(alpha) beta
                    o1 = _orth_partner(d1)
                    emit(d1, z2, a, y1, z2, b, "nn0")
                    if o1 is not None:
                        emit(d1, z2, a, y1 + 0.7 * r * o1, z2, b, "nn0")
                for d2 in dirs2:
                    a = r * ph
                    b = r
                    y2 = -a * b * d2.conj()  # <conj(eta2), y2> = -alpha beta
                    o2 = _orth_partner(d2.conj())
                    emit(z1, d2, a, z1, y2, b, "n0n")
                    if o2 is not None:
                        emit(z1, d2, a, z1, y2 + 0.5 * o2, b, "n0n")
                for d1, d2 in zip(dirs1, dirs2):
                    a = r * ph3
                    b = ph2.conj() * r
                    e1v, e2v = 1.2 * ph * d1, 0.8 * ph2 * d2
                    nsq = np.linalg.norm(e1v) ** 2 + np.linalg.norm(e2v) ** 2
                    emit(
                        e1v, e2v, a,
                        -np.conj(a) * b / nsq * e1v, -a * b / nsq * e2v.conj(), b,
                        "nnn",
                    )
                for d1, d2 in zip(dirs1, dirs2):
                    a = ph
                    b = r * ph3
                    e1v, e2v = r * d1, ph2 * d2
                    nsq = np.linalg.norm(e1v) ** 2 + np.linalg.norm(e2v) ** 2
                    emit(
                        e1v, e2v, a,
                        -np.conj(a) * b / nsq * e1v, -a * b / nsq * e2v.conj(), b,
                        "nnn",
                    )
    else:

        def emit_nn(e1v, e2v, a, b, label):
            # y1 = -conj(a) b eta1 / N, y2 = -a b conj(eta2) / N stays a zero
            # pair on the boundary eta2 = 0 (or eta1 = 0) as well
            nsq = np.linalg.norm(e1v) ** 2 + np.linalg.norm(e2v) ** 2
            emit(e1v, e2v, a, -np.conj(a) * b / nsq * e1v, -a * b / nsq * e2v.conj(), b, label)

        for r in radii:
            for j, ph in enumerate(phases):
                # decoupled phase companions: shared phases across the slots
                # collapse the span, so each slot walks the circle differently
                ph2 = phases[(2 * j + 1) % n_phases]
                ph3 = phases[(3 * j + 2) % n_phases]
                emit(r * ph * dirs1[0], r * dirs2[0], 0.0, z1, z2, r, "0n")
                emit(r * dirs1[-1], z2, 0.0, z1, z2, r * ph, "0n")
                for d1, d2 in zip(dirs1, dirs2):
                    emit(z1, z2, r * ph, d1, ph2 * d2, 0.0, "n0")
                    emit(z1, z2, r * ph, r * d1, z2, 0.0, "n0")
                    emit(z1, z2, r * ph, z1, r * d2, 0.0, "n0")
                for d1 in dirs1:
                    for d2 in dirs2:
                        emit_nn(ph * d1, 1.5 * ph2 * d2, r * ph3, r, "nn")
                        emit_nn(r * ph * d1, ph2 * d2, ph3, r, "nn")
                        emit_nn(ph * d1, r * ph2 * d2, 1.0, r * ph3, "nn")
                        emit_nn(r * d1, r * ph2 * d2, ph3, ph, "nn")
                    emit_nn(ph * d1, z2, r * ph2, r, "nn")
                    emit_nn(r * d1, z2, ph2, r * ph, "nn")
                for d2 in dirs2:
                    a = r * ph
                    b = -r * ph3
                    e2v = r * ph2 * d2
                    y2 = -a * b / np.linalg.norm(e2v) ** 2 * e2v.conj()
                    o2 = _orth_partner(e2v.conj())
                    emit(z1, e2v, a, z1, y2, b, "extra")
                    if o2 is not None:
                        emit(z1, e2v, a, z1, y2 + r * o2, b, "extra")
                    emit(z1, e2v, 0.0, z1, 0.9 * o2 if o2 is not None else 0 * y2, b, "extra")

    out: list[ZeroPair] = []
    for eta, y, label in pairs:
        ev, yv = eta.to_vector(), y.to_vector()
        scale = max(
            float(np.linalg.norm(ev)) ** 2 * float(np.linalg.norm(yv)) ** 2, 1e-30
        )
        res = rank_one_value(m, ev, yv)
        if abs(res) > tol * scale:
            raise AssertionError(f"branch {label} produced residual {res:.3e}")
        cf = closed(eta, y)
        if abs(cf - res) > 1e-8 * max(scale, 1.0):
            raise AssertionError(f"closed form disagrees with direct quadratic on branch {label}")
        out.append(ZeroPair(eta=eta, y=y, case_label=label, residual=float(res)))
        if max_pairs is not None and len(out) >= max_pairs:
            break
    return out


# --- embedding/compression factorization --------------------------------------


def ef_factors(
    A1, A2, theta1: float, theta2: float, nu: float, rtol: float = RANK_RTOL
) -> tuple[np.ndarray, np.ndarray, tuple[int, int, int]]:
    """Injective E, F with F phi_tilde(E* X E) F* equal to the block_exposed map.

    phi_tilde is the identity/transpose merging on the reduced layout
    (rank A1, rank conj(A2), 1).  Columns of the embeddings are orthonormal
    bases of range(A1) and range(conj(A2)).
    """
    A1, A2 = as_matrix(A1), as_matrix(A2)
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    F1 = orthonormal_range_basis(A1, rtol)
    F2 = orthonormal_range_basis(A2.conj(), rtol)
    r1, r2 = F1.shape[1], F2.shape[1]
    E1 = A1.conj().T @ F1
    E2 = A2.T @ F2
    k1, k2 = A1.shape[1], A2.shape[1]
    l1, l2 = A1.shape[0], A2.shape[0]
    E = np.zeros((k1 + k2 + 1, r1 + r2 + 1), dtype=complex)
    F = np.zeros((l1 + l2 + 1, r1 + r2 + 1), dtype=complex)
    E[:k1, :r1] = nu ** (-0.25) * E1
    E[k1 : k1 + k2, r1 : r1 + r2] = nu**0.25 * E2
    E[-1, -1] = 1.0
    F[:l1, :r1] = nu**0.25 * np.exp(1j * theta1) * F1
    F[l1 : l1 + l2, r1 : r1 + r2] = nu ** (-0.25) * np.exp(1j * theta2) * F2.conj()
    F[-1, -1] = 1.0
    for name, M in (("E", E), ("F", F)):
        smin = np.linalg.svd(M, compute_uv=False)[-1]
        if smin <= rtol:
            raise ValueError(f"{name} is not injective (min singular value {smin:.3e})")
    return E, F, (r1, r2, 1)


def lifted_apply(E: np.ndarray, F: np.ndarray, reduced: tuple[int, int, int], X) -> np.ndarray:
    """F phi_tilde(E* X E) F* for the reduced identity/transpose merging."""
    r1, r2, _ = reduced
    return F @ _mo_general_apply(E.conj().T @ as_matrix(X) @ E, r1, r2) @ F.conj().T
