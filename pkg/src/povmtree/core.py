"""States, POVMs and projectors, plus the direct Born-rule oracle."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numerics as nx
from .errors import (DimensionMismatch, InvalidInput, NotAState, NotHermitian,
                     NotPsd, SumNotIdentity)

PURE_RENORM_TOL = 1e-6
STATE_TOL = 1e-10
PROB_SLACK = 1e-12
SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A pure vector or a density matrix of fixed dimension."""

    dim: int
    kind: str  # "pure" or "mixed"
    vector: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None

    @property
    def rho(self) -> np.ndarray:
        if self.density is not None:
            return self.density
        return nx.outer(self.vector)

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def promoted(self) -> "QuantumState":
        """The same state in density-matrix form."""
        if self.kind == "mixed":
            return self
        return QuantumState(self.dim, "mixed", density=self.rho)


@dataclass(frozen=True, eq=False)
class Povm:
    dim: int
    elements: tuple
    labels: tuple = field(default=())

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels",
                               tuple(str(k + 1) for k in range(len(self.elements))))

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def m(self) -> int:
        return len(self.elements)

    def permuted(self, order: Sequence[int]) -> "Povm":
        return Povm(self.dim, tuple(self.elements[k] for k in order),
                    tuple(self.labels[k] for k in order))

    def digest(self) -> str:
        return povm_digest(self.elements)


@dataclass(frozen=True, eq=False)
class Projector:
    matrix: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def complement(self) -> "Projector":
        return Projector(np.eye(self.dim) - self.matrix, self.dim - self.rank)

    @classmethod
    def from_matrix(cls, p, tol: float = 1e-9) -> "Projector":
        p = nx.as_matrix(p, square=True)
        nx.check_hermitian(p)
        p = 0.5 * (p + nx.dagger(p))
        if nx.fro(p @ p - p) > tol:
            raise InvalidInput("matrix is not idempotent")
        rank = nx.numeric_rank(np.linalg.svd(p, compute_uv=False))
        return cls(p, rank)

    @classmethod
    def from_vectors(cls, vectors) -> "Projector":
        vectors = list(vectors)
        return cls(nx.projector_onto(vectors), len(vectors))


def povm_digest(elements) -> str:
    h = hashlib.sha256()
    for e in elements:
        a = np.ascontiguousarray(e, dtype=np.complex128)
        h.update(np.asarray(a.shape, dtype=np.int64).tobytes())
        h.update(a.tobytes())
    return h.hexdigest()


def validate_povm(raw, labels: Optional[Sequence[str]] = None,
                  tol: float = nx.PSD_TOL) -> Povm:
    """Check Hermiticity, positivity and completeness of ``raw`` matrices."""
    raw = list(raw)
    if not raw:
        raise InvalidInput("a POVM needs at least one element")
    mats = [nx.as_matrix(e, square=True) for e in raw]
    d = mats[0].shape[0]
    if any(e.shape != (d, d) for e in mats):
        raise DimensionMismatch("POVM elements have unequal dimensions")
    elements = []
    for k, e in enumerate(mats):
        if nx.hermitian_residual(e) > nx.HERMITIAN_TOL * nx.scale(e):
            raise NotHermitian(index=k)
        e = 0.5 * (e + nx.dagger(e))
        lo = nx.min_eigenvalue(e)
        if lo < -tol * nx.scale(e):
            raise NotPsd(k, lo)
        elements.append(e)
    residual = nx.fro(sum(elements) - np.eye(d))
    if residual > SUM_TOL * d:
        raise SumNotIdentity(residual)
    if labels is not None and len(labels) != len(elements):
        raise InvalidInput("number of labels does not match number of elements")
    return Povm(d, tuple(elements), tuple(labels) if labels else ())


def validate_state(raw, tol: float = STATE_TOL) -> QuantumState:
    """Build a state from a 1-D amplitude vector or a 2-D density matrix."""
    a = np.array(raw, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise NotAState("non-finite entries")
    if a.ndim == 1:
        if a.size == 0:
            raise NotAState("empty vector")
        norm = float(np.linalg.norm(a))
        if abs(norm - 1.0) > PURE_RENORM_TOL:
            raise NotAState(f"norm {norm:.6g} is not 1")
        return QuantumState(a.size, "pure", vector=a / norm)
    if a.ndim == 2:
        if a.shape[0] != a.shape[1] or a.size == 0:
            raise NotAState("density matrix must be square")
        if nx.hermitian_residual(a) > tol * nx.scale(a):
            raise NotAState("not Hermitian")
        a = 0.5 * (a + nx.dagger(a))
        tr = float(np.trace(a).real)
        if abs(tr - 1.0) > tol:
            raise NotAState(f"trace {tr:.6g} is not 1")
        if nx.min_eigenvalue(a) < -tol * nx.scale(a):
            raise NotAState("not positive semidefinite")
        return QuantumState(a.shape[0], "mixed", density=a)
    raise NotAState(f"expected a vector or a matrix, got {a.ndim} dimensions")


def expectation(op: np.ndarray, state: QuantumState) -> float:
    """Real part of tr(rho op), using the vector directly for pure states."""
    if state.is_pure:
        v = state.vector
        return float(np.vdot(v, op @ v).real)
    return float(np.einsum("ij,ji->", state.density, op).real)


def clamp_probabilities(p: np.ndarray) -> np.ndarray:
    if np.any(p < -PROB_SLACK):
        raise InvalidInput(f"negative probability {p.min():.3e}")
    return np.clip(p, 0.0, 1.0)


def born_distribution(povm: Povm, state: QuantumState) -> np.ndarray:
    """Outcome probabilities tr(rho E_k)."""
    if povm.dim != state.dim:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs state dim {state.dim}")
    p = clamp_probabilities(np.array([expectation(e, state) for e in povm.elements]))
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise InvalidInput(f"probabilities sum to {p.sum():.12f}")
    return p


def basis_state(dim: int, index: int) -> QuantumState:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return QuantumState(dim, "pure", vector=v)


def maximally_mixed(dim: int) -> QuantumState:
    return QuantumState(dim, "mixed", density=np.eye(dim, dtype=np.complex128) / dim)
