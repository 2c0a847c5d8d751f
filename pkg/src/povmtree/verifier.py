"""Independent checks of a compiled tree against the POVM it claims to realize.

Everything here is recomputed from the operators stored on the tree; the
compiler's own bookkeeping is never trusted.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numerics as nx
from .compiler import ProtocolTree, SpectralItem, spectral_items
from .core import Povm, Projector
from .errors import DigestMismatch, MissingOperators, OrderingMismatch


@dataclass(frozen=True)
class Tolerances:
    leaf_sum: float = 1e-8
    completeness: float = 1e-8
    node_identity: float = 1e-9
    telescoping: float = 1e-8
    decomposition: float = 1e-9


@dataclass
class VerificationReport:
    leaf_sum_residuals: list
    completeness_residual: float
    node_identity_max_residual: float
    telescoping_max_residual: float
    decomposition_residuals: list
    depth: int
    depth_bound: int
    tolerances: Tolerances = field(default_factory=Tolerances)
    pass_: bool = False

    def __post_init__(self):
        self.pass_ = self.evaluate()

    def evaluate(self) -> bool:
        t = self.tolerances
        return bool(
            max(self.leaf_sum_residuals, default=0.0) <= t.leaf_sum
            and self.completeness_residual <= t.completeness
            and self.node_identity_max_residual <= t.node_identity
            and self.telescoping_max_residual <= t.telescoping
            and max(self.decomposition_residuals, default=0.0) <= t.decomposition
            and self.depth <= self.depth_bound)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("pass_")
        return d


def _target(tree: ProtocolTree, e: np.ndarray) -> np.ndarray:
    # Without the first measurement only the range of I - P is covered.
    if tree.skip_stage1:
        q = np.eye(tree.dim) - tree.projector
        return q @ e @ q
    return e


def _require_operators(tree: ProtocolTree) -> None:
    if any(n.accumulated is None for n in tree.nodes()):
        raise MissingOperators("tree nodes carry no accumulated operators")


def _gram(m: np.ndarray) -> np.ndarray:
    return nx.dagger(m) @ m


def check_leaf_sums(tree: ProtocolTree, povm: Povm) -> np.ndarray:
    """Frobenius residual of sum over leaves(k) of M^dag M against E_k, per k."""
    if tree.povm_digest and tree.povm_digest != povm.digest():
        raise DigestMismatch("tree was not compiled from this POVM")
    _require_operators(tree)
    sums = [np.zeros((tree.dim, tree.dim), dtype=np.complex128) for _ in range(povm.m)]
    for leaf in tree.leaves():
        sums[leaf.outcome - 1] += _gram(leaf.accumulated)
    return np.array([nx.fro(s - _target(tree, e)) for s, e in zip(sums, povm.elements)])


def check_completeness(tree: ProtocolTree) -> float:
    _require_operators(tree)
    total = sum(_gram(leaf.accumulated) for leaf in tree.leaves())
    return nx.fro(total - _target(tree, np.eye(tree.dim)))


def check_node_identities(tree: ProtocolTree) -> float:
    """Largest ||M^dag |psi><psi| M - lambda |phi><phi|||_F over binary nodes."""
    worst = 0.0
    for node in tree.nodes():
        if node.kind != "binary":
            continue
        if node.accumulated is None or node.meta is None:
            raise MissingOperators(f"node {node.node_id} lacks operators or metadata")
        m = node.accumulated
        lhs = nx.dagger(m) @ node.projector @ m
        rhs = node.meta.weight * nx.outer(node.meta.phi)
        worst = max(worst, nx.fro(lhs - rhs))
    return worst


def ordered_items(tree: ProtocolTree, povm: Povm) -> list[SpectralItem]:
    """Spectral items of every element in the tree's compiled order."""
    items = []
    for k in tree.order:
        items.extend(spectral_items(povm.elements[k], tree.projector, k + 1))
    return items


def _branch_heads(tree: ProtocolTree):
    if tree.skip_stage1:
        return [(1, tree.root)]
    return [(0, tree.root.hit), (1, tree.root.miss)]


def check_telescoping(tree: ProtocolTree, items: Sequence[SpectralItem]) -> float:
    """Largest ||M^dag M - (sum of items not yet consumed)||_F along each branch.

    Checked at the head of each branch (where it says the blocked elements
    sum to P or I - P), at every binary node, and at the final leaf.
    """
    _require_operators(tree)
    worst = 0.0
    for a, head in _branch_heads(tree):
        queue = [it for it in items if it.branch == a]
        pending = [it for it in queue if it.outcome != tree.order[-1] + 1]
        ops = [it.operator() for it in queue]
        node = head
        pos = 0
        while True:
            remaining = sum(ops[pos:], np.zeros((tree.dim, tree.dim), dtype=np.complex128))
            worst = max(worst, nx.fro(_gram(node.accumulated) - remaining))
            if node.is_leaf:
                break
            if pos >= len(pending):
                raise OrderingMismatch(f"branch {a} has more nodes than items")
            it = pending[pos]
            meta = node.meta
            if meta is None or (meta.outcome, meta.branch, meta.index) != (it.outcome, it.branch, it.index):
                raise OrderingMismatch(
                    f"node {node.node_id} does not realize item "
                    f"(i={it.outcome}, a={it.branch}, j={it.index})")
            node = node.miss
            pos += 1
        if pos != len(pending):
            raise OrderingMismatch(f"branch {a} stops before all items are realized")
    return worst


def check_decomposition(povm: Povm, p) -> np.ndarray:
    """||E_k - P E_k P - (I-P) E_k (I-P)||_F for each k."""
    pm = p.matrix if isinstance(p, Projector) else np.asarray(p)
    q = np.eye(povm.dim) - pm
    return np.array([nx.fro(e - pm @ e @ pm - q @ e @ q) for e in povm.elements])


def depth_bound(povm: Povm, p, order: Sequence[int], skip_stage1: bool = False) -> int:
    """Worst-case number of measurements the protocol may need."""
    pm = p.matrix if isinstance(p, Projector) else np.asarray(p)
    q = np.eye(povm.dim) - pm

    def rank(block):
        return nx.numeric_rank(np.linalg.svd(block, compute_uv=False))

    used = [povm.elements[k] for k in order[:-1]]
    r1 = sum(rank(q @ e @ q) for e in used)
    if skip_stage1:
        return r1
    r0 = sum(rank(pm @ e @ pm) for e in used)
    return max(r0, r1) + 1


def check_depth_bound(tree: ProtocolTree, povm: Povm, p=None) -> tuple[int, int]:
    p = tree.projector if p is None else p
    return tree.depth(), depth_bound(povm, p, tree.order, tree.skip_stage1)


def verify_tree(tree: ProtocolTree, povm: Povm,
                tolerances: Optional[Tolerances] = None) -> VerificationReport:
    tolerances = tolerances or Tolerances()
    leaf = check_leaf_sums(tree, povm)
    depth, bound = check_depth_bound(tree, povm)
    return VerificationReport(
        leaf_sum_residuals=[float(x) for x in leaf],
        completeness_residual=check_completeness(tree),
        node_identity_max_residual=check_node_identities(tree),
        telescoping_max_residual=check_telescoping(tree, ordered_items(tree, povm)),
        decomposition_residuals=[float(x) for x in check_decomposition(povm, tree.projector)],
        depth=depth,
        depth_bound=bound,
        tolerances=tolerances,
    )
