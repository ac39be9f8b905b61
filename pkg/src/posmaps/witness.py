"""PPT operators detecting the constructed maps, and the spanning-rank test.

A positive map is nondecomposable iff it pairs negatively with some PPT
operator; the certificates produced here carry the PSD margins of Z and of
its partial transpose together with the pairing value, so every verdict is
auditable from the report alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    BlockVector,
    PsdReport,
    SpaceLayout,
    as_matrix,
    as_vector,
    is_psd,
    outer,
    partial_transpose,
)
from .opmaps import LinearMapRep, dual_pairing

if TYPE_CHECKING:  # only for annotations; avoids a module cycle
    from .m3family import M3Params


@dataclass(frozen=True)
class WitnessReport:
    Z: np.ndarray
    z_psd: PsdReport
    zgamma_psd: PsdReport
    pairing: float
    verdict: str  # "nondecomposable_certified" | "inconclusive"


@dataclass(frozen=True)
class PptState:
    rho: np.ndarray
    dK: int
    dH: int
    witness_name: Optional[str]
    witness_value: Optional[float]

    @property
    def has_certificate(self) -> bool:
        return self.witness_name is not None


def is_ppt(Z, dK: int, dH: int, tol: float = DEFAULT_TOL) -> tuple[PsdReport, PsdReport]:
    """PSD reports for Z and for its partial transpose."""
    A = as_matrix(Z)
    return is_psd(A, tol), is_psd(partial_transpose(A, dK, dH), tol)


def evaluate(m: LinearMapRep, Z, tol: float = DEFAULT_TOL) -> WitnessReport:
    """Full witness evaluation of a map against an operator on K (x) H.

    verdict == nondecomposable_certified iff Z and its partial transpose
    are PSD and the pairing is < -tol.
    """
    A = as_matrix(Z)
    z_rep, zg_rep = is_ppt(A, m.dK, m.dH, tol)
    val = dual_pairing(m, A, tol)
    certified = z_rep.is_psd and zg_rep.is_psd and val < -tol
    return WitnessReport(
        Z=A,
        z_psd=z_rep,
        zgamma_psd=zg_rep,
        pairing=val,
        verdict="nondecomposable_certified" if certified else "inconclusive",
    )


# --- the canonical-merging witness ---------------------------------------------


def canonical_witness(
    lam1: float,
    lam2: float,
    layout_K: SpaceLayout,
    layout_H: SpaceLayout,
    xi_pos: tuple[int, int] = (0, 0),
    x_pos: tuple[int, int] = (0, 0),
) -> np.ndarray:
    """The PPT operator pairing to -1 with any canonical merging built from
    eigenvalues lam1, lam2 at the given basis positions.

    The operator is assembled twice: from its explicit entry formula and
    from its five-term rank-one PSD decomposition (same for the partial
    transpose); the constructions must agree, which certifies PSD-ness of
    both rather than assuming it.
    """
    if lam1 <= 0 or lam2 <= 0:
        raise ValueError("eigenvalues must be positive")
    ek1 = layout_K.basis_vector(0, xi_pos[0])
    ek2 = layout_K.basis_vector(1, xi_pos[1])
    ek3 = layout_K.distinguished
    eh1 = layout_H.basis_vector(0, x_pos[0])
    eh2 = layout_H.basis_vector(1, x_pos[1])
    eh3 = layout_H.distinguished

    def P(v):
        return outer(v, v)

    Z = (
        np.kron(P(ek1), P(eh1) + P(eh3)) / lam1
        + np.kron(P(ek2), P(eh2) + P(eh3)) / lam2
        - (np.kron(outer(ek1, ek3), outer(eh1, eh3)) + np.kron(outer(ek3, ek1), outer(eh3, eh1)))
        / np.sqrt(lam1)
        - (np.kron(outer(ek2, ek3), outer(eh3, eh2)) + np.kron(outer(ek3, ek2), outer(eh2, eh3)))
        / np.sqrt(lam2)
        + np.kron(P(ek3), P(eh1) + P(eh2) + P(eh3))
    )

    r1 = np.sqrt(lam1)
    r2 = np.sqrt(lam2)
    Z_rank1 = (
        P(np.kron(ek1, eh3)) / lam1
        + P(np.kron(ek2, eh2)) / lam2
        + P(np.kron(ek3, eh1))
        + P(np.kron(ek1, eh1) / r1 - np.kron(ek3, eh3))
        + P(np.kron(ek2, eh3) / r2 - np.kron(ek3, eh2))
    )
    ZG_rank1 = (
        P(np.kron(ek1, eh1)) / lam1
        + P(np.kron(ek2, eh3)) / lam2
        + P(np.kron(ek3, eh2))
        + P(np.kron(ek1, eh3) / r1 - np.kron(ek3, eh1))
        + P(np.kron(ek2, eh2) / r2 - np.kron(ek3, eh3))
    )
    scale = max(1.0, 1.0 / lam1, 1.0 / lam2)
    if np.max(np.abs(Z - Z_rank1)) > 1e-12 * scale:
        raise AssertionError("rank-one decomposition disagrees with the entry formula")
    ZG = partial_transpose(Z, layout_K.total, layout_H.total)
    if np.max(np.abs(ZG - ZG_rank1)) > 1e-12 * scale:
        raise AssertionError("rank-one decomposition of the partial transpose disagrees")
    return Z


def omega_witness(k1: int, k2: int) -> np.ndarray:
    """PPT operator pairing to -min(k1, k2) with the trace_unit/transpose
    merging on (k1, k2); lives on K (x) K with K of dimension k1 + k2 + 1."""
    lay = SpaceLayout(k1, k2)
    n = lay.total
    eps = lay.distinguished
    k = max(k1, k2)

    def P(v):
        return outer(v, v)

    Z = np.zeros((n * n, n * n), dtype=complex)
    eye1 = sum(P(lay.basis_vector(0, i)) for i in range(k1))
    eye2 = sum(P(lay.basis_vector(1, i)) for i in range(k2))
    for i in range(k1):
        v = lay.basis_vector(0, i)
        Z += np.kron(P(v), P(v) + P(eps))
        Z -= np.kron(outer(v, eps), outer(v, eps)) + np.kron(outer(eps, v), outer(eps, v))
    for i in range(k2):
        v = lay.basis_vector(1, i)
        Z += np.kron(P(v), P(v) + P(eps))
        Z -= np.kron(outer(v, eps), outer(eps, v)) + np.kron(outer(eps, v), outer(v, eps))
    Z += np.kron(P(eps), eye1 + eye2 + k * P(eps))
    return Z


def m3_witness(p: "M3Params", gamma: Optional[float] = None) -> np.ndarray:
    """The 9x9 PPT operator of the 3x3 family.

    Pairs with the family map to gamma (eps^2+delta^2) + s^2/gamma
    - 2|b|^2 - 2|c|^2; the default gamma = s (eps^2+delta^2)^{-1/2}
    minimizes that value.
    """
    if np.linalg.norm(p.bvec) == 0 or np.linalg.norm(p.cvec) == 0:
        raise ValueError("m3_witness requires nonzero b and c coupling vectors")
    if gamma is None:
        gamma = p.s / np.sqrt(p.eps**2 + p.delta**2)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    Z = np.zeros((9, 9), dtype=complex)
    Z[0, 0] = gamma
    Z[2, 2] = 1.0
    Z[4, 4] = gamma
    Z[5, 5] = 1.0
    Z[6, 6] = p.s1**2
    Z[7, 7] = p.s2**2
    Z[8, 8] = p.s**2 / gamma
    Z[0, 8], Z[8, 0] = -np.conj(p.b1), -p.b1
    Z[4, 8], Z[8, 4] = -np.conj(p.b2), -p.b2
    Z[2, 6], Z[6, 2] = -p.c1, -np.conj(p.c1)
    Z[5, 7], Z[7, 5] = -p.c2, -np.conj(p.c2)
    return Z


def ppt_state(
    Z,
    dK: int,
    dH: int,
    candidates: Iterable[tuple[str, LinearMapRep]] = (),
    tol: float = DEFAULT_TOL,
) -> PptState:
    """Normalize a PPT-certified operator into a state and attach the first
    candidate map pairing negatively with it as the entanglement certificate.

    With no certifying candidate the state is still emitted, flagged as
    carrying no certificate.
    """
    A = as_matrix(Z)
    z_rep, zg_rep = is_ppt(A, dK, dH, tol)
    if not (z_rep.is_psd and zg_rep.is_psd):
        raise ValueError(
            f"operator is not PPT (min eigs {z_rep.min_eig:.3e}, {zg_rep.min_eig:.3e})"
        )
    tr = float(np.trace(A).real)
    if tr <= tol:
        raise ValueError(f"operator has nonpositive trace {tr:.3e}")
    rho = A / tr
    for name, m in candidates:
        val = dual_pairing(m, rho, tol)
        if val < -tol:
            return PptState(rho=rho, dK=dK, dH=dH, witness_name=name, witness_value=val)
    return PptState(rho=rho, dK=dK, dH=dH, witness_name=None, witness_value=None)


def spanning_rank(
    pairs,
    dK: int,
    dH: int,
    conjugate: bool = False,
    sv_rtol: float = 1e-8,
) -> tuple[int, bool]:
    """Numerical rank of the span of the product vectors of zero pairs.

    Each pair contributes eta (x) y (or eta (x) conj(y) under the flag; the
    two conventions can give different ranks).  spanning is rank == dK*dH,
    a sufficient condition for optimality of the map the pairs came from.
    """
    rows = []
    for pair in pairs:
        if hasattr(pair, "eta"):
            eta, y = pair.eta.to_vector(), pair.y.to_vector()
        else:
            eta, y = as_vector(pair[0]), as_vector(pair[1])
        if len(eta) != dK or len(y) != dH:
            raise ValueError(f"pair dims ({len(eta)},{len(y)}) do not match ({dK},{dH})")
        rows.append(np.kron(eta, y.conj() if conjugate else y))
    if not rows:
        raise ValueError("empty pair list")
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    rank = int(np.sum(s > sv_rtol * s[0])) if s[0] > 0 else 0
    return rank, bool(rank == dK * dH)
