"""Dense complex matrix kernel.

Conventions used throughout the package:

* matrices are dense ``numpy`` arrays of dtype complex, row-major;
* the antilinear involution is coordinatewise conjugation in the fixed
  standard basis, so ``conj(v)`` implements the bar operation and the
  transpose of an operator is the plain (unconjugated) matrix transpose;
* the three-block decomposition of a space is K1 (+) K2 (+) C, the third
  summand always one-dimensional, its distinguished unit vector being the
  last standard basis vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Relative PSD tolerance shared by every module.
DEFAULT_TOL = 1e-9

#: Relative eigenvalue threshold used when extracting ranges/ranks.
RANK_RTOL = 1e-10


def as_matrix(M) -> np.ndarray:
    """Coerce to a 2-d complex array, rejecting non-finite entries."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_vector(v) -> np.ndarray:
    """Coerce to a 1-d complex array."""
    a = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    return a


def herm_part(M: np.ndarray) -> np.ndarray:
    """Hermitian part (M + M*)/2; every eigensolve goes through this."""
    return (M + M.conj().T) / 2.0


def outer(x, y) -> np.ndarray:
    """Rank-one operator x y*  (maps z to <y, z> x)."""
    x = as_vector(x)
    y = as_vector(y)
    return np.outer(x, y.conj())


def basis_vector(i: int, dim: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[i] = 1.0
    return e


@dataclass(frozen=True)
class PsdReport:
    """Outcome of a PSD test: verdict plus auditable margins."""

    is_psd: bool
    min_eig: float
    norm: float  # largest |eigenvalue|


def is_psd(M, tol: float = DEFAULT_TOL) -> PsdReport:
    """Test positive semidefiniteness of a (nearly) Hermitian matrix.

    The matrix must be square and Hermitian up to ``tol * max(||M||, 1)``
    in Frobenius norm; the eigensolve runs on the symmetrized matrix.  The
    verdict is ``min_eig >= -tol * max(norm, 1)`` with ``norm`` the largest
    absolute eigenvalue.
    """
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    dev = float(np.linalg.norm(A - A.conj().T))
    if dev > tol * max(float(np.linalg.norm(A)), 1.0):
        raise ValueError(f"matrix is not Hermitian within tolerance (deviation {dev:.3e})")
    if A.shape[0] == 0:
        return PsdReport(True, 0.0, 0.0)
    w = np.linalg.eigvalsh(herm_part(A))
    min_eig = float(w[0])
    norm = float(np.max(np.abs(w)))
    return PsdReport(bool(min_eig >= -tol * max(norm, 1.0)), min_eig, norm)


def transpose_entrywise(M) -> np.ndarray:
    """Plain (unconjugated) transpose.

    Equals the involution-based operator transpose because all basis
    vectors are real under the chosen involution.
    """
    return as_matrix(M).T.copy()


def partial_transpose(Z, dK: int, dH: int) -> np.ndarray:
    """Transpose the second tensor factor of Z acting on C^dK (x) C^dH.

    The tensor index order is K-factor major: entry ((i,a),(j,b)) with
    i,j < dK and a,b < dH.  Each dH x dH block of Z is replaced by its
    entrywise transpose.
    """
    A = as_matrix(Z)
    n = dK * dH
    if A.shape != (n, n):
        raise ValueError(f"expected shape {(n, n)} for dims ({dK},{dH}), got {A.shape}")
    return A.reshape(dK, dH, dK, dH).transpose(0, 3, 2, 1).reshape(n, n).copy()


@dataclass(frozen=True)
class SpaceLayout:
    """The decomposition K = K1 (+) K2 (+) C with dims (k1, k2, 1).

    Block offsets are (0, k1, k1+k2); the distinguished real unit vector of
    the one-dimensional summand is the last standard basis vector.
    """

    k1: int
    k2: int

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError(f"block dims must be >= 1, got ({self.k1}, {self.k2})")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.k1, self.k2, 1)

    @property
    def total(self) -> int:
        return self.k1 + self.k2 + 1

    @property
    def offsets(self) -> tuple[int, int, int]:
        return (0, self.k1, self.k1 + self.k2)

    def slices(self) -> tuple[slice, slice, slice]:
        o = self.offsets
        d = self.dims
        return tuple(slice(o[i], o[i] + d[i]) for i in range(3))

    def basis_vector(self, block: int, index: int = 0) -> np.ndarray:
        if not 0 <= index < self.dims[block]:
            raise ValueError(f"index {index} out of range for block {block} of dims {self.dims}")
        return basis_vector(self.offsets[block] + index, self.total)

    @property
    def distinguished(self) -> np.ndarray:
        """The real unit vector spanning the one-dimensional summand."""
        return self.basis_vector(2, 0)


@dataclass(frozen=True)
class BlockVector:
    """A vector of K1 (+) K2 (+) C split into its three components."""

    eta1: np.ndarray
    eta2: np.ndarray
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "eta1", as_vector(self.eta1))
        object.__setattr__(self, "eta2", as_vector(self.eta2))
        object.__setattr__(self, "alpha", complex(self.alpha))

    @property
    def layout(self) -> SpaceLayout:
        return SpaceLayout(len(self.eta1), len(self.eta2))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.eta1, self.eta2, [self.alpha]])

    @classmethod
    def from_vector(cls, v, layout: SpaceLayout) -> "BlockVector":
        a = as_vector(v)
        if len(a) != layout.total:
            raise ValueError(f"vector of length {len(a)} does not match layout total {layout.total}")
        s1, s2, s3 = layout.slices()
        return cls(a[s1], a[s2], a[s3][0])

    def conj(self) -> "BlockVector":
        return BlockVector(self.eta1.conj(), self.eta2.conj(), np.conj(self.alpha))


def block_split(M, layout: SpaceLayout) -> list[list[np.ndarray]]:
    """Split a total x total matrix into its 3x3 block array."""
    A = as_matrix(M)
    n = layout.total
    if A.shape != (n, n):
        raise ValueError(f"expected shape {(n, n)}, got {A.shape}")
    sl = layout.slices()
    return [[A[sl[i], sl[j]].copy() for j in range(3)] for i in range(3)]


def block_join(blocks, layout: SpaceLayout) -> np.ndarray:
    """Inverse of :func:`block_split`."""
    n = layout.total
    A = np.zeros((n, n), dtype=complex)
    sl = layout.slices()
    d = layout.dims
    for i in range(3):
        for j in range(3):
            b = as_matrix(blocks[i][j])
            if b.shape != (d[i], d[j]):
                raise ValueError(f"block ({i},{j}) has shape {b.shape}, expected {(d[i], d[j])}")
            A[sl[i], sl[j]] = b
    return A


def scalar_compression(M, y_list) -> np.ndarray:
    """Compress a block matrix to the scalar matrix (<y_i, M_ij y_j>).

    ``y_list`` holds one vector per block; block dims are inferred from the
    vector lengths and must sum to the size of ``M``.  If M is PSD the
    result is PSD.
    """
    A = as_matrix(M)
    ys = [as_vector(y) for y in y_list]
    dims = [len(y) for y in ys]
    if sum(dims) != A.shape[0] or A.shape[0] != A.shape[1]:
        raise ValueError(f"block dims {dims} do not tile a matrix of shape {A.shape}")
    offs = np.concatenate([[0], np.cumsum(dims)])
    n = len(ys)
    out = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            blk = A[offs[i]:offs[i + 1], offs[j]:offs[j + 1]]
            out[i, j] = ys[i].conj() @ blk @ ys[j]
    return out


def range_projection(M, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthogonal projection onto the range of a Hermitian matrix.

    Eigenvalues with |w| <= rtol * max|w| are treated as zero.
    """
    A = herm_part(as_matrix(M))
    w, V = np.linalg.eigh(A)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale == 0.0:
        return np.zeros_like(A)
    keep = np.abs(w) > rtol * scale
    Vk = V[:, keep]
    return Vk @ Vk.conj().T


def orthonormal_range_basis(A, rtol: float = RANK_RTOL) -> np.ndarray:
    """Columns form an orthonormal basis of range(A) (rank via SVD threshold)."""
    B = as_matrix(A)
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("operator is numerically zero; range collapses")
    keep = s > rtol * s[0]
    return U[:, keep]


# --- JSON wire format ------------------------------------------------------
#
# {"rows": n, "cols": m, "data": [[re, im], ...]}  row-major.
# All other modules reuse this format; vectors travel as n x 1 matrices.


def matrix_to_json(M) -> dict:
    A = as_matrix(M)
    data = [[float(z.real), float(z.imag)] for z in A.reshape(-1)]
    return {"rows": int(A.shape[0]), "cols": int(A.shape[1]), "data": data}


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if rows < 0 or cols < 0 or len(data) != rows * cols:
        raise ValueError(f"matrix data length {len(data)} does not match {rows}x{cols}")
    flat = np.array([complex(re, im) for re, im in data], dtype=complex)
    A = flat.reshape(rows, cols)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def vector_to_json(v) -> dict:
    return matrix_to_json(as_vector(v).reshape(-1, 1))


def vector_from_json(obj) -> np.ndarray:
    return matrix_from_json(obj).reshape(-1)
