"""Reference POVMs and random generators used by demos and tests."""
from __future__ import annotations

import numpy as np

from . import numerics as nx
from .core import Povm, Projector, QuantumState, validate_povm


def _ket(*amps) -> np.ndarray:
    v = np.array(amps, dtype=np.complex128)
    return v / np.linalg.norm(v)


def qutrit_povm() -> Povm:
    """E0 = 2/3 |psi0><psi0|, E1 = 5/14 |psi1><psi1|, E2 = I - E0 - E1."""
    psi0 = _ket(1, 1, 0)
    psi1 = _ket(1, 2, 0)
    e0 = (2 / 3) * nx.outer(psi0)
    e1 = (5 / 14) * nx.outer(psi1)
    e2 = np.eye(3) - e0 - e1
    return validate_povm([e0, e1, e2])


def qutrit_projector() -> Projector:
    return Projector(np.diag([1.0, 1.0, 0.0]).astype(np.complex128), 2)


def qutrit_measurement_basis() -> list[np.ndarray]:
    """The three second-stage directions of the hand-built qutrit protocol."""
    return [_ket(1, 1, 1), _ket(1, 2, -3), _ket(5, -4, -1)]


def trine_povm() -> Povm:
    kets = [_ket(np.cos(np.pi * k / 3), np.sin(np.pi * k / 3)) for k in range(3)]
    return validate_povm([(2 / 3) * nx.outer(t) for t in kets])


def sic_povm() -> Povm:
    """Qubit SIC-POVM: E_k = (I + n_k . sigma) / 4 with tetrahedral Bloch vectors."""
    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sz = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    s = 1 / np.sqrt(3)
    bloch = [(s, s, s), (s, -s, -s), (-s, s, -s), (-s, -s, s)]
    return validate_povm([(np.eye(2) + x * sx + y * sy + z * sz) / 4 for x, y, z in bloch])


def projective_povm(dim: int) -> Povm:
    out = []
    for k in range(dim):
        e = np.zeros((dim, dim), dtype=np.complex128)
        e[k, k] = 1.0
        out.append(e)
    return validate_povm(out)


def ud_states(overlapping: bool = True) -> tuple[QuantumState, QuantumState]:
    """rho1 uniform on span{0,1}; rho2 uniform on span{1,2} (or just |2> if not overlapping)."""
    rho1 = np.diag([0.5, 0.5, 0.0]).astype(np.complex128)
    rho2 = np.diag([0.0, 0.5, 0.5] if overlapping else [0.0, 0.0, 1.0]).astype(np.complex128)
    return QuantumState(3, "mixed", density=rho1), QuantumState(3, "mixed", density=rho2)


def ud_povm(a: float = 0.5, b: float = 0.5) -> Povm:
    """Inconclusive outcome first, then E1 = a|0><0| and E2 = b|2><2|."""
    e1 = np.diag([a, 0.0, 0.0]).astype(np.complex128)
    e2 = np.diag([0.0, 0.0, b]).astype(np.complex128)
    return validate_povm([np.eye(3) - e1 - e2, e1, e2], labels=["inconclusive", "rho1", "rho2"])


# ---------------------------------------------------------------- random

def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(d: int, rng: np.random.Generator) -> QuantumState:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return QuantumState(d, "pure", vector=v / np.linalg.norm(v))


def random_mixed_state(d: int, rng: np.random.Generator, rank: int | None = None) -> QuantumState:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ nx.dagger(g)
    rho = rho / np.trace(rho).real
    return QuantumState(d, "mixed", density=0.5 * (rho + nx.dagger(rho)))


def random_povm_elements(d: int, m: int, rng: np.random.Generator,
                         max_rank: int | None = None) -> list[np.ndarray]:
    """m random PSD elements on C^d summing to I, each of random rank <= max_rank."""
    max_rank = d if max_rank is None else max_rank
    ranks = [int(rng.integers(1, max_rank + 1)) for _ in range(m)]
    if sum(ranks) < d:
        ranks[-1] = d  # keep the total invertible
    raw = []
    for r in ranks:
        g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
        raw.append(g @ nx.dagger(g))
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ nx.dagger(v)
    out = []
    for a in raw:
        e = inv_sqrt @ a @ inv_sqrt
        out.append(0.5 * (e + nx.dagger(e)))
    return out


def random_realizable_povm(rng: np.random.Generator, dim: int | None = None,
                           m: int | None = None, rotate: bool = True) -> tuple[Povm, Projector]:
    """Direct sum of two random POVMs on complementary subspaces.

    Returns the POVM and the block projector onto the first summand.
    With ``rotate`` both are conjugated by a random unitary.
    """
    d = int(rng.integers(3, 7)) if dim is None else dim
    m = int(rng.integers(2, 6)) if m is None else m
    d1 = int(rng.integers(1, d))
    d2 = d - d1
    first = random_povm_elements(d1, m, rng)
    second = random_povm_elements(d2, m, rng)
    elements = []
    for a, b in zip(first, second):
        e = np.zeros((d, d), dtype=np.complex128)
        e[:d1, :d1] = a
        e[d1:, d1:] = b
        elements.append(e)
    p = np.zeros((d, d), dtype=np.complex128)
    p[:d1, :d1] = np.eye(d1)
    if rotate:
        u = random_unitary(d, rng)
        elements = [u @ e @ nx.dagger(u) for e in elements]
        p = u @ p @ nx.dagger(u)
    elements = [0.5 * (e + nx.dagger(e)) for e in elements]
    return validate_povm(elements), Projector(0.5 * (p + nx.dagger(p)), d1)
