"""Dense complex linear algebra with one tolerance policy.

All thresholds are relative and scaled by ``max(1, norm)``.  Dimensions in
this package are small (a handful to a few dozen), so fixed relative
thresholds are safe.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotHermitian, NumericalFailure

RANK_TOL = 1e-10
PSD_TOL = 1e-10
HERMITIAN_TOL = 1e-10
KERNEL_CHECK_TOL = 1e-9

_TIE_TOL = 1e-12


def as_matrix(a, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2 or 0 in m.shape:
        raise InvalidInput(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    return m


def fro(a) -> float:
    return float(np.linalg.norm(a))


def scale(a) -> float:
    return max(1.0, fro(a))


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def outer(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def hermitian_residual(a: np.ndarray) -> float:
    return fro(a - dagger(a))


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    if a.shape[0] != a.shape[1] or hermitian_residual(a) > tol * scale(a):
        raise NotHermitian()


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Entries within a relative 1e-12 of the column maximum count as ties and
    the lowest index wins.
    """
    out = np.array(vectors, dtype=np.complex128, copy=True)
    for c in range(out.shape[1]):
        col = out[:, c]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        idx = int(np.flatnonzero(mags >= top * (1.0 - _TIE_TOL))[0])
        phase = col[idx] / mags[idx]
        col *= phase.conjugate()
        col[idx] = abs(col[idx])
    return out


@dataclass(frozen=True)
class EigDecomposition:
    eigenvalues: np.ndarray   # real, descending
    eigenvectors: np.ndarray  # orthonormal columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


@dataclass(frozen=True)
class SvdDecomposition:
    singular_values: np.ndarray  # descending, length min(rows, cols)
    left_vectors: np.ndarray     # rows x rows unitary
    right_vectors: np.ndarray    # cols x cols unitary

    def reconstruct(self) -> np.ndarray:
        k = len(self.singular_values)
        u = self.left_vectors[:, :k]
        v = self.right_vectors[:, :k]
        return (u * self.singular_values) @ dagger(v)


def hermitian_eig(a) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    a = as_matrix(a, square=True)
    check_hermitian(a)
    sym = 0.5 * (a + dagger(a))
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigh did not converge: {exc}") from exc
    order = np.argsort(-w, kind="stable")
    return EigDecomposition(w[order].copy(), fix_phases(v[:, order]))


def svd(m) -> SvdDecomposition:
    """Full SVD with the same phase convention as :func:`hermitian_eig`.

    The convention is applied to the right vectors and carried over to the
    paired left vectors, so each rank-one term is unchanged.  Unpaired
    columns are normalized on their own.
    """
    m = as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"svd did not converge: {exc}") from exc
    v = dagger(vh)
    k = len(s)
    v_fixed = fix_phases(v)
    # v_fixed[:, i] = v[:, i] * c_i with |c_i| = 1; apply the same c_i to u.
    u = u.copy()
    for i in range(k):
        j = int(np.argmax(np.abs(v[:, i])))
        if v[j, i] != 0:
            u[:, i] *= v_fixed[j, i] / v[j, i]
    if u.shape[1] > k:
        u[:, k:] = fix_phases(u[:, k:])
    return SvdDecomposition(s, u, v_fixed)


def numeric_rank(sv, tol_rel: float = RANK_TOL) -> int:
    sv = np.asarray(sv, dtype=float)
    if sv.size == 0:
        return 0
    return int(np.count_nonzero(sv > tol_rel * max(1.0, float(sv[0]))))


def kernel_basis(m, tol_rel: float = RANK_TOL) -> list[np.ndarray]:
    """Orthonormal basis of ker(M^dagger), the orthogonal complement of range(M)."""
    m = as_matrix(m)
    dec = svd(m)
    r = numeric_rank(dec.singular_values, tol_rel)
    if r >= m.shape[0]:
        return []
    ker = fix_phases(dec.left_vectors[:, r:])
    return [ker[:, c].copy() for c in range(ker.shape[1])]


def is_psd(a, tol: float = PSD_TOL) -> bool:
    a = as_matrix(a, square=True)
    check_hermitian(a)
    return bool(min_eigenvalue(a) >= -tol * scale(a))


def min_eigenvalue(a: np.ndarray) -> float:
    sym = 0.5 * (a + dagger(a))
    return float(np.linalg.eigvalsh(sym)[0])


def projector_onto(vectors) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal ``vectors``."""
    vectors = list(vectors)
    if not vectors:
        raise InvalidInput("need at least one vector")
    v = np.column_stack(vectors)
    return v @ dagger(v)
