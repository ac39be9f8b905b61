"""Linear maps B(K) -> B(H) represented by their Choi matrices.

The Choi matrix lives on K (x) H with K-factor-major index order,
C = sum_ij E_ij (x) phi(E_ij), so block (i, j) of C is phi(E_ij).
A map is completely positive iff its Choi matrix is PSD, and completely
copositive iff the partial transpose of the Choi matrix is PSD.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    PsdReport,
    as_matrix,
    as_vector,
    basis_vector,
    herm_part,
    is_psd,
    matrix_from_json,
    matrix_to_json,
    outer,
    partial_transpose,
)


@dataclass(frozen=True)
class LinearMapRep:
    """A linear map stored as (source dim, target dim, Choi matrix)."""

    dK: int
    dH: int
    choi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "choi", as_matrix(self.choi))
        n = self.dK * self.dH
        if self.dK < 1 or self.dH < 1 or self.choi.shape != (n, n):
            raise ValueError(
                f"Choi shape {self.choi.shape} inconsistent with dims ({self.dK}, {self.dH})"
            )

    @property
    def choi_blocks(self) -> np.ndarray:
        """View of the Choi matrix as a (dK, dH, dK, dH) tensor."""
        return self.choi.reshape(self.dK, self.dH, self.dK, self.dH)

    def to_json(self) -> dict:
        return {"dK": self.dK, "dH": self.dH, "choi": matrix_to_json(self.choi)}

    @classmethod
    def from_json(cls, obj) -> "LinearMapRep":
        return cls(int(obj["dK"]), int(obj["dH"]), matrix_from_json(obj["choi"]))


def choi_of(
    apply_fn: Callable[[np.ndarray], np.ndarray],
    dK: int,
    dH: int,
    check_linearity: bool = True,
    tol: float = 1e-10,
) -> LinearMapRep:
    """Build the Choi matrix of a matrix-to-matrix function.

    ``apply_fn`` must be linear and send dK x dK to dH x dH; linearity is
    spot-checked on random superpositions with a fixed seed.
    """
    C = np.zeros((dK * dH, dK * dH), dtype=complex)
    C4 = C.reshape(dK, dH, dK, dH)
    for i in range(dK):
        for j in range(dK):
            Y = as_matrix(apply_fn(outer(basis_vector(i, dK), basis_vector(j, dK))))
            if Y.shape != (dH, dH):
                raise ValueError(f"apply_fn returned shape {Y.shape}, expected {(dH, dH)}")
            C4[i, :, j, :] = Y
    if check_linearity:
        rng = np.random.default_rng(1234)
        for _ in range(2):
            X1 = rng.normal(size=(dK, dK)) + 1j * rng.normal(size=(dK, dK))
            X2 = rng.normal(size=(dK, dK)) + 1j * rng.normal(size=(dK, dK))
            a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
            lhs = as_matrix(apply_fn(a * X1 + b * X2))
            rhs = a * as_matrix(apply_fn(X1)) + b * as_matrix(apply_fn(X2))
            scale = max(float(np.linalg.norm(rhs)), 1.0)
            if float(np.linalg.norm(lhs - rhs)) > tol * scale:
                raise ValueError("apply_fn failed the linearity check")
    return LinearMapRep(dK, dH, C)


def apply(m: LinearMapRep, X) -> np.ndarray:
    """Apply the map to X via contraction of the Choi tensor."""
    A = as_matrix(X)
    if A.shape != (m.dK, m.dK):
        raise ValueError(f"input shape {A.shape} does not match source dim {m.dK}")
    return np.einsum("ij,iajb->ab", A, m.choi_blocks)


def dual_pairing(m: LinearMapRep, Z, tol: float = DEFAULT_TOL) -> float:
    """Pairing of the map with an operator on K (x) H: Re Tr(C^T Z).

    Z must be Hermitian of matching dims; a nonzero imaginary residue above
    tolerance is an error.
    """
    B = as_matrix(Z)
    n = m.dK * m.dH
    if B.shape != (n, n):
        raise ValueError(f"operator shape {B.shape} does not match map dims ({m.dK},{m.dH})")
    dev = float(np.linalg.norm(B - B.conj().T))
    if dev > tol * max(float(np.linalg.norm(B)), 1.0):
        raise ValueError(f"pairing operand is not Hermitian (deviation {dev:.3e})")
    val = complex(np.sum(m.choi * B))  # Tr(C^T Z) is the unconjugated entrywise sum
    scale = max(abs(val), 1.0)
    if abs(val.imag) > tol * scale:
        raise ValueError(f"pairing has imaginary residue {val.imag:.3e}")
    return float(val.real)


def compose_with_source_transpose(m: LinearMapRep) -> LinearMapRep:
    """The map X -> phi(X^T); completely positive iff phi is completely copositive."""
    return choi_of(lambda X: apply(m, as_matrix(X).T), m.dK, m.dH, check_linearity=False)


# --- standard map constructors ----------------------------------------------


def std_map(kind: str, **params) -> LinearMapRep:
    """Named constructors for the standard maps.

    kinds:
      identity(d); transpose(d); ad(A) = A X A*; co_ad(A) = A X^T A*;
      trace_unit(d) = Tr(X) 1; psi_gamma(gamma, d) = (gamma+1) Tr(X) 1 - X;
      psi_gamma_co(gamma, d) = (gamma+1) Tr(X) 1 - X^T.
    """
    if kind == "identity":
        d = int(params["d"])
        return choi_of(lambda X: X, d, d, check_linearity=False)
    if kind == "transpose":
        d = int(params["d"])
        return choi_of(lambda X: as_matrix(X).T, d, d, check_linearity=False)
    if kind == "ad":
        A = as_matrix(params["A"])
        return choi_of(lambda X: A @ X @ A.conj().T, A.shape[1], A.shape[0], check_linearity=False)
    if kind == "co_ad":
        A = as_matrix(params["A"])
        return choi_of(
            lambda X: A @ as_matrix(X).T @ A.conj().T, A.shape[1], A.shape[0], check_linearity=False
        )
    if kind == "trace_unit":
        d = int(params["d"])
        dH = int(params.get("dH", d))
        return choi_of(lambda X: np.trace(X) * np.eye(dH), d, dH, check_linearity=False)
    if kind in ("psi_gamma", "psi_gamma_co"):
        gamma = float(params["gamma"])
        d = int(params["d"])
        if gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {gamma}")
        if kind == "psi_gamma":
            fn = lambda X: (gamma + 1) * np.trace(X) * np.eye(d) - X  # noqa: E731
        else:
            fn = lambda X: (gamma + 1) * np.trace(X) * np.eye(d) - as_matrix(X).T  # noqa: E731
        return choi_of(fn, d, d, check_linearity=False)
    raise ValueError(f"unknown map kind {kind!r}")


def std_map_from_json(obj) -> LinearMapRep:
    """Constructor spec {"kind": ..., "params": {...}}; matrices in matrix JSON."""
    kind = obj["kind"]
    params = dict(obj.get("params", {}))
    if "A" in params:
        params["A"] = matrix_from_json(params["A"])
    return std_map(kind, **params)


def is_cp(m: LinearMapRep, tol: float = DEFAULT_TOL) -> PsdReport:
    """Complete positivity test: PSD check of the Choi matrix."""
    return is_psd(m.choi, tol)


def is_ccp(m: LinearMapRep, tol: float = DEFAULT_TOL) -> PsdReport:
    """Complete copositivity test: PSD check of the partially transposed Choi matrix."""
    return is_psd(partial_transpose(m.choi, m.dK, m.dH), tol)


# --- sampled k-positivity ----------------------------------------------------


@dataclass(frozen=True)
class KPositivityReport:
    k: int
    n_samples: int
    min_sampled: float
    min_value: float  # after refinement
    violating_pair: Optional[tuple[np.ndarray, np.ndarray]]
    verdict: str  # "pass" | "fail"
    seed: int


def sample_unit_vectors(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """n Haar-uniform unit vectors in C^dim (normalized complex Gaussians), rows."""
    v = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def rank_one_value(m: LinearMapRep, eta, y) -> float:
    """<y, phi(eta eta*) y> evaluated through the Choi matrix."""
    u = np.kron(as_vector(eta).conj(), as_vector(y))
    return float(np.real(u.conj() @ m.choi @ u))


def _batch_values(choi: np.ndarray, dK: int, dH: int, ws: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """<v, (id_k (x) phi)(w w*) v> for batches of block vectors.

    ws has shape (n, k, dK), vs has shape (n, k, dH).  The value equals
    u* C u for the Schmidt-rank <= k product contraction u = sum_a
    conj(w_a) (x) v_a.
    """
    U = np.einsum("sai,sax->six", ws.conj(), vs).reshape(ws.shape[0], dK * dH)
    return np.real(np.einsum("sp,pq,sq->s", U.conj(), choi, U, optimize=True))


def _seesaw(
    choi4: np.ndarray, w: np.ndarray, v: np.ndarray, max_iters: int = 200
) -> tuple[np.ndarray, np.ndarray, float]:
    """Block-coordinate minimization of <v, (id_k (x) phi)(w w*) v>.

    Each half-step is an exact smallest-eigenvalue problem: for fixed w the
    objective is a Hermitian form in v and vice versa; the value decreases
    monotonically.
    """
    k = w.shape[0]
    dK, dH = choi4.shape[0], choi4.shape[1]
    val = None
    for _ in range(max_iters):
        Mw = np.einsum("ai,bj,ixjy->axby", w, w.conj(), choi4, optimize=True)
        Mw = herm_part(Mw.reshape(k * dH, k * dH))
        evals, evecs = np.linalg.eigh(Mw)
        v = evecs[:, 0].reshape(k, dH)
        Qv = np.einsum("ax,ixjy,by->bjai", v.conj(), choi4, v, optimize=True)
        Qv = herm_part(Qv.reshape(k * dK, k * dK))
        evals, evecs = np.linalg.eigh(Qv)
        w = evecs[:, 0].reshape(k, dK)
        new_val = float(
            _batch_values(choi4.reshape(dK * dH, dK * dH), dK, dH, w[None], v[None])[0]
        )
        if val is not None and abs(val - new_val) <= 1e-15 * max(abs(val), 1.0):
            val = new_val
            break
        val = new_val
    return w, v, float(val)


def sampled_k_positivity(
    m: LinearMapRep,
    k: int,
    n_samples: int = 100000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    refine_iters: int = 200,
) -> KPositivityReport:
    """Sampled evidence for k-positivity of the map.

    Draws seeded Haar-uniform unit vectors w in C^k (x) K and v in C^k (x) H,
    evaluates <v, (id_k (x) phi)(w w*) v>, then runs a local see-saw
    refinement from the worst sample.  A ``fail`` verdict carries the
    violating pair and is a proof of non-k-positivity; ``pass`` is evidence
    only.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    choi4 = m.choi_blocks
    scale = max(float(is_psd_norm(m.choi)), 1.0)
    min_sampled = np.inf
    worst = None
    batch = 20000
    done = 0
    while done < n_samples:
        nb = min(batch, n_samples - done)
        ws = sample_unit_vectors(rng, nb, k * m.dK).reshape(nb, k, m.dK)
        vs = sample_unit_vectors(rng, nb, k * m.dH).reshape(nb, k, m.dH)
        vals = _batch_values(m.choi, m.dK, m.dH, ws, vs)
        i = int(np.argmin(vals))
        if vals[i] < min_sampled:
            min_sampled = float(vals[i])
            worst = (ws[i].copy(), vs[i].copy())
        done += nb
    w, v, refined = _seesaw(choi4, worst[0], worst[1], refine_iters)
    min_value = min(min_sampled, refined)
    if refined <= min_sampled:
        pair = (w.reshape(-1), v.reshape(-1))
    else:
        pair = (worst[0].reshape(-1), worst[1].reshape(-1))
    failed = min_value < -tol * scale
    return KPositivityReport(
        k=k,
        n_samples=n_samples,
        min_sampled=min_sampled,
        min_value=min_value,
        violating_pair=pair if failed else None,
        verdict="fail" if failed else "pass",
        seed=seed,
    )


def is_psd_norm(M: np.ndarray) -> float:
    """Largest absolute eigenvalue of the Hermitian part (scale for tolerances)."""
    w = np.linalg.eigvalsh(herm_part(M))
    return float(np.max(np.abs(w))) if w.size else 0.0
