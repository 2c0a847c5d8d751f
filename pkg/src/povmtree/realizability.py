"""Deciding whether a POVM admits a nontrivial commuting projector.

A POVM can be run as a tree of projective measurements on its own space
exactly when some projector other than 0 and I commutes with all of its
elements.  The search goes through the Hermitian commutant: any
non-scalar Hermitian X commuting with every element has eigenprojectors
that commute with every element too.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics as nx
from .core import Povm, Projector, QuantumState
from .errors import DimensionMismatch, NumericalFailure

COMMUTANT_TOL = 1e-9
COMMUTE_TOL = 1e-9
CLUSTER_GAP = 1e-8


@dataclass(frozen=True, eq=False)
class CommutantBasis:
    dim: int
    basis: tuple  # Frobenius-orthonormal Hermitian matrices

    @property
    def dimension(self) -> int:
        return len(self.basis)


@dataclass(frozen=True, eq=False)
class RealizabilityVerdict:
    realizable: bool
    projector: Optional[Projector]
    commutant_dimension: int


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Frobenius-orthonormal real basis of the d x d Hermitian matrices."""
    out = []
    for j in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[j, j] = 1.0
        out.append(e)
    s = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[j, k] = e[k, j] = s
            out.append(e)
            e = np.zeros((d, d), dtype=np.complex128)
            e[j, k] = -1j * s
            e[k, j] = 1j * s
            out.append(e)
    return out


def commutant_basis(povm: Povm, tol: float = COMMUTANT_TOL) -> CommutantBasis:
    """Basis of {X Hermitian : [X, E_k] = 0 for all k}.

    Each Hermitian basis matrix B_r is mapped to the stacked real and
    imaginary parts of its commutators with every element; the real null
    space of that linear map gives the coefficients of the commutant.
    """
    d = povm.dim
    herm = hermitian_basis(d)
    cols = []
    for b in herm:
        parts = [b @ e - e @ b for e in povm.elements]
        flat = np.concatenate([p.ravel() for p in parts])
        cols.append(np.concatenate([flat.real, flat.imag]))
    a = np.column_stack(cols)
    try:
        _, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"svd of commutation system failed: {exc}") from exc
    s_full = np.zeros(vh.shape[0])
    s_full[:len(s)] = s
    threshold = tol * max(1.0, float(s_full[0]) if s_full.size else 0.0)
    null_rows = vh[s_full <= threshold]
    basis = []
    for coeffs in null_rows:
        x = sum(c * b for c, b in zip(coeffs, herm))
        basis.append(0.5 * (x + nx.dagger(x)))
    return CommutantBasis(d, tuple(basis))


def check_condition(povm: Povm, p: Projector, tol: float = COMMUTE_TOL) -> bool:
    """True iff P commutes with every element and 0 < rank(P) < dim."""
    if p.dim != povm.dim:
        raise DimensionMismatch(f"projector dim {p.dim} vs POVM dim {povm.dim}")
    if not 0 < p.rank < povm.dim:
        return False
    pm = p.matrix
    return all(nx.fro(e @ pm - pm @ e) <= tol * nx.scale(e) for e in povm.elements)


def _distance_from_identity(x: np.ndarray) -> float:
    d = x.shape[0]
    return nx.fro(x - np.trace(x) / d * np.eye(d))


def _top_cluster(eigenvalues: np.ndarray, gap: float = CLUSTER_GAP) -> int:
    """Size of the leading cluster of descending ``eigenvalues``."""
    ref = max(1.0, float(np.max(np.abs(eigenvalues))))
    n = 1
    while n < len(eigenvalues) and eigenvalues[n - 1] - eigenvalues[n] <= gap * ref:
        n += 1
    return n


def find_commuting_projector(povm: Povm) -> RealizabilityVerdict:
    comm = commutant_basis(povm)
    if comm.dimension < 2:
        return RealizabilityVerdict(False, None, comm.dimension)
    d = povm.dim
    dist = np.array([_distance_from_identity(x) for x in comm.basis])
    # Largest distance first, lower index on ties.
    ranked = sorted(range(len(dist)), key=lambda k: (-round(dist[k], 12), k))
    for k in ranked:
        if dist[k] <= COMMUTANT_TOL:
            break
        dec = nx.hermitian_eig(comm.basis[k])
        n = _top_cluster(dec.eigenvalues)
        if n == d:
            continue
        p = Projector.from_vectors(dec.eigenvectors[:, c] for c in range(n))
        if p.rank == d:
            p = p.complement()
        if check_condition(povm, p):
            return RealizabilityVerdict(True, p, comm.dimension)
    raise NumericalFailure(
        f"commutant has dimension {comm.dimension} but no commuting projector was extracted")


def support_basis(state: QuantumState, tol: float = nx.RANK_TOL) -> list[np.ndarray]:
    """Eigenvectors of rho whose eigenvalue exceeds tol times the largest one."""
    if state.is_pure:
        return [state.vector / np.linalg.norm(state.vector)]
    dec = nx.hermitian_eig(state.density)
    top = float(dec.eigenvalues[0])
    keep = dec.eigenvalues > tol * top
    return [dec.eigenvectors[:, c].copy() for c in np.flatnonzero(keep)]


def support_intersection(rho1: QuantumState, rho2: QuantumState) -> list[np.ndarray]:
    """Orthonormal basis of supp(rho1) intersected with supp(rho2)."""
    if rho1.dim != rho2.dim:
        raise DimensionMismatch(f"state dims {rho1.dim} and {rho2.dim} differ")
    d = rho1.dim
    q1 = np.eye(d) - nx.projector_onto(support_basis(rho1))
    q2 = np.eye(d) - nx.projector_onto(support_basis(rho2))
    return nx.kernel_basis(q1 + q2)
