"""Compile a realizable POVM into a binary tree of projective measurements.

The first measurement is {P, I-P}.  On each branch ``a`` the rank-one
spectral terms lambda |phi><phi| of the blocked elements E_ia are then
peeled off one at a time: every binary node measures a rank-one projector
|psi><psi| chosen so that, given the operator M accumulated so far,
M^dag |psi><psi| M equals exactly the term being realized.  A hit outputs
that term's outcome; a miss continues.  Whatever is left after the
second-to-last outcome belongs to the last outcome.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from . import numerics as nx
from .core import Povm, Projector, QuantumState
from .errors import (NotCommuting, NotRealizable, NumericalFailure,
                     PhiOutsideRange, PreconditionViolated)
from .realizability import COMMUTE_TOL, check_condition

LEMMA_PSD_TOL = 1e-9
LEMMA_RANGE_TOL = 1e-9
MU_CLAMP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralItem:
    outcome: int  # 1-based index into the POVM as given
    branch: int   # 0 for the P block, 1 for the I-P block
    index: int    # 1-based, descending weight within (outcome, branch)
    weight: float
    vector: np.ndarray

    def operator(self) -> np.ndarray:
        return self.weight * nx.outer(self.vector)


@dataclass(frozen=True, eq=False)
class LemmaFResult:
    mu: float
    theta: np.ndarray


@dataclass(frozen=True, eq=False)
class NodeMeta:
    outcome: int
    branch: int
    index: int
    weight: float
    mu: float
    phi: np.ndarray
    theta: np.ndarray
    xi: Optional[np.ndarray]


@dataclass(eq=False)
class ProtocolNode:
    kind: str  # "stage1", "binary" or "leaf"
    projector: Optional[np.ndarray] = None
    hit: Optional["ProtocolNode"] = None
    miss: Optional["ProtocolNode"] = None
    outcome: Optional[int] = None
    accumulated: Optional[np.ndarray] = None
    meta: Optional[NodeMeta] = None
    node_id: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"

    def children(self):
        if self.is_leaf:
            return ()
        return (self.hit, self.miss)


@dataclass(eq=False)
class ProtocolTree:
    dim: int
    labels: tuple
    order: tuple  # compiled order of 0-based element indices; last is realized as residual
    projector: np.ndarray
    root: ProtocolNode
    skip_stage1: bool = False
    povm_digest: str = ""
    _ids_assigned: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not self._ids_assigned:
            for n, node in enumerate(self.nodes()):
                node.node_id = n
            self._ids_assigned = True

    @property
    def m(self) -> int:
        return len(self.labels)

    def nodes(self) -> Iterator[ProtocolNode]:
        """Pre-order traversal, hit child before miss child."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.miss)
                stack.append(node.hit)

    def leaves(self) -> Iterator[ProtocolNode]:
        return (n for n in self.nodes() if n.is_leaf)

    def paths(self) -> Iterator[list]:
        """Every root-to-leaf path as a list of (node, took_hit) pairs ending at the leaf."""
        def walk(node, prefix):
            if node.is_leaf:
                yield prefix + [(node, None)]
                return
            yield from walk(node.hit, prefix + [(node, True)])
            yield from walk(node.miss, prefix + [(node, False)])
        yield from walk(self.root, [])

    def depth(self) -> int:
        """Largest number of measurements on a root-to-leaf path."""
        return max(len(p) - 1 for p in self.paths())

    def start_operator(self) -> np.ndarray:
        if self.skip_stage1:
            return np.eye(self.dim) - self.projector
        return np.eye(self.dim, dtype=np.complex128)


def _block(e: np.ndarray, p: np.ndarray, branch: int) -> np.ndarray:
    q = p if branch == 0 else np.eye(p.shape[0]) - p
    b = q @ e @ q
    return 0.5 * (b + nx.dagger(b))


def _projector_matrix(p) -> np.ndarray:
    return p.matrix if isinstance(p, Projector) else nx.as_matrix(p, square=True)


def spectral_items(e, p, i: int, tol: float = nx.RANK_TOL) -> list[SpectralItem]:
    """Rank-one terms of P E P (branch 0) and (I-P) E (I-P) (branch 1)."""
    e = nx.as_matrix(e, square=True)
    pm = _projector_matrix(p)
    if nx.fro(e @ pm - pm @ e) > COMMUTE_TOL * nx.scale(e):
        raise NotCommuting(f"element {i} does not commute with the projector")
    items = []
    for a in (0, 1):
        block = _block(e, pm, a)
        dec = nx.hermitian_eig(block)
        cut = tol * nx.scale(block)
        j = 0
        for c, lam in enumerate(dec.eigenvalues):
            if lam <= cut:
                break
            j += 1
            items.append(SpectralItem(i, a, j, float(lam), dec.eigenvectors[:, c].copy()))
    return items


def lemma1_f(m, lam: float, phi) -> LemmaFResult:
    """Given M^dag M >= lam |phi><phi|, find theta, mu >= lam with M^dag theta = sqrt(mu) phi.

    theta is the normalized image of phi under the pseudoinverse of M^dag
    and mu = 1 / <phi|(M^dag M)^+|phi>.
    """
    m = nx.as_matrix(m)
    phi = np.asarray(phi, dtype=np.complex128)
    dec = nx.svd(m)
    r = nx.numeric_rank(dec.singular_values)
    u = dec.left_vectors[:, :r]
    v = dec.right_vectors[:, :r]
    s = dec.singular_values[:r]
    coeffs = nx.dagger(v) @ phi
    if np.linalg.norm(phi - v @ coeffs) > LEMMA_RANGE_TOL:
        raise PhiOutsideRange("phi is not in the range of M^dagger")
    gram = nx.dagger(m) @ m
    slack = gram - lam * nx.outer(phi)
    if nx.min_eigenvalue(slack) < -LEMMA_PSD_TOL * nx.scale(gram):
        raise PreconditionViolated("M^dag M - lambda |phi><phi| is not positive semidefinite")
    theta = u @ (coeffs / s)
    n2 = float(np.vdot(theta, theta).real)
    mu = 1.0 / n2
    if mu < lam:
        if mu < lam - MU_CLAMP_TOL:
            raise PreconditionViolated(f"mu={mu!r} below lambda={lam!r}")
        mu = lam
    return LemmaFResult(mu, theta / np.sqrt(n2))


def block_ranks(povm: Povm, p, tol: float = nx.RANK_TOL) -> list[tuple[int, int]]:
    """(rank of P E P, rank of (I-P) E (I-P)) for each element, as counted by spectral_items."""
    out = []
    for k, e in enumerate(povm.elements):
        items = spectral_items(e, p, k + 1, tol)
        out.append((sum(1 for it in items if it.branch == 0),
                    sum(1 for it in items if it.branch == 1)))
    return out


def reorder_last_element(povm: Povm, p, skip_stage1: bool = False,
                         tol: float = nx.RANK_TOL) -> list[int]:
    """Permutation that moves the element minimizing the depth bound to the end.

    Only the choice of the last element affects the bound.  Ties keep the
    largest original index, so an already optimal order is left alone.
    """
    m = povm.m
    if m == 1:
        return [0]
    ranks = block_ranks(povm, p, tol)
    branches = (1,) if skip_stage1 else (0, 1)

    def cost(last):
        return max(sum(ranks[i][a] for i in range(m) if i != last) for a in branches)

    best = min(range(m), key=lambda k: (cost(k), -k))
    return [k for k in range(m) if k != best] + [best]


def embed_povm(povm: Povm) -> tuple[Povm, Projector]:
    """Pad every element with a zero row and column and append the new basis projector."""
    d = povm.dim
    elements = []
    for e in povm.elements:
        big = np.zeros((d + 1, d + 1), dtype=np.complex128)
        big[:d, :d] = e
        elements.append(big)
    extra = np.zeros((d + 1, d + 1), dtype=np.complex128)
    extra[d, d] = 1.0
    elements.append(extra)
    labels = tuple(povm.labels) + (_extra_label(povm.labels),)
    return Povm(d + 1, tuple(elements), labels), Projector(extra.copy(), 1)


def embed_state(state: QuantumState) -> QuantumState:
    """The same state on the space with one extra basis vector appended."""
    d = state.dim
    if state.is_pure:
        return QuantumState(d + 1, "pure", vector=np.append(state.vector, 0.0))
    rho = np.zeros((d + 1, d + 1), dtype=np.complex128)
    rho[:d, :d] = state.density
    return QuantumState(d + 1, "mixed", density=rho)


def _extra_label(labels) -> str:
    for n in itertools.count():
        name = "extra" if n == 0 else f"extra{n}"
        if name not in labels:
            return name


def _build_branch(items: Sequence[SpectralItem], m0: np.ndarray, last: int,
                  tol: float) -> ProtocolNode:
    d = m0.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    acc = m0
    head: Optional[ProtocolNode] = None
    prev: Optional[ProtocolNode] = None
    for item in items:
        res = lemma1_f(acc, item.weight, item.vector)
        ker = nx.kernel_basis(acc, tol)
        if not ker:
            raise NumericalFailure(
                f"no kernel vector available at outcome {item.outcome}, item {item.index}")
        xi = ker[0]
        ratio = min(1.0, max(0.0, item.weight / res.mu))
        psi = np.sqrt(ratio) * res.theta
        if ratio < 1.0:
            psi = psi + np.sqrt(1.0 - ratio) * xi
        psi = psi / np.linalg.norm(psi)
        proj = nx.outer(psi)
        node = ProtocolNode(
            "binary", projector=proj, accumulated=acc,
            meta=NodeMeta(item.outcome, item.branch, item.index, item.weight, res.mu,
                          item.vector, res.theta, xi))
        node.hit = ProtocolNode("leaf", outcome=item.outcome, accumulated=proj @ acc)
        if prev is None:
            head = node
        else:
            prev.miss = node
        prev = node
        acc = (eye - proj) @ acc
    tail = ProtocolNode("leaf", outcome=last, accumulated=acc)
    if prev is None:
        return tail
    prev.miss = tail
    return head


def compile_tree(povm: Povm, projector: Projector, skip_stage1: bool = False,
                 reorder: bool = True, tol: float = nx.RANK_TOL) -> ProtocolTree:
    """Build the measurement tree realizing ``povm`` given a commuting projector.

    With ``skip_stage1`` the {P, I-P} measurement is omitted and only the
    I-P branch is built; the result is valid for inputs annihilated by P.
    """
    if not check_condition(povm, projector):
        raise NotRealizable("projector does not satisfy the commutation condition")
    pm = projector.matrix
    d = povm.dim
    order = (reorder_last_element(povm, projector, skip_stage1, tol) if reorder
             else list(range(povm.m)))
    items = {0: [], 1: []}
    for k in order[:-1]:
        for it in spectral_items(povm.elements[k], pm, k + 1, tol):
            items[it.branch].append(it)
    last = order[-1] + 1
    eye = np.eye(d, dtype=np.complex128)
    if skip_stage1:
        root = _build_branch(items[1], eye - pm, last, tol)
    else:
        root = ProtocolNode("stage1", projector=pm.copy(), accumulated=eye)
        root.hit = _build_branch(items[0], pm.copy(), last, tol)
        root.miss = _build_branch(items[1], eye - pm, last, tol)
    return ProtocolTree(d, tuple(povm.labels), tuple(order), pm.copy(), root,
                        skip_stage1, povm.digest())


def recompute_accumulated(tree: ProtocolTree) -> None:
    """Fill in every node's accumulated operator from the projectors on its path."""
    eye = np.eye(tree.dim, dtype=np.complex128)

    def visit(node, acc):
        node.accumulated = acc
        if node.is_leaf:
            return
        visit(node.hit, node.projector @ acc)
        visit(node.miss, (eye - node.projector) @ acc)

    visit(tree.root, tree.start_operator())
