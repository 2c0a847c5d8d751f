"""Running a compiled tree: exact outcome distributions and seeded shots.

Randomness is counter-based.  Shot ``s`` of a run with seed ``seed`` reads
its uniforms from the Philox stream keyed by ``seed`` starting at a fixed
offset proportional to ``s``, so any shot can be replayed alone and the
histogram does not depend on how shots are split across workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics as nx
from .compiler import ProtocolNode, ProtocolTree
from .core import QuantumState, clamp_probabilities
from .errors import DegenerateState, DimensionMismatch, InvalidInput

DIST_SUM_TOL = 1e-9
DEGENERATE_PROB = 1e-15


@dataclass(frozen=True)
class OutcomeDistribution:
    labels: tuple
    probabilities: np.ndarray  # indexed like the source POVM
    residual: float

    def as_dict(self) -> dict:
        return dict(zip(self.labels, map(float, self.probabilities)))


@dataclass(frozen=True, eq=False)
class ShotRecord:
    outcome: int                 # 1-based element index
    path: tuple                  # ((node_id, hit), ...)
    final_state: np.ndarray      # vector for pure input, density matrix otherwise


def _check_dims(tree: ProtocolTree, state: QuantumState) -> None:
    if tree.dim != state.dim:
        raise DimensionMismatch(f"tree dim {tree.dim} vs state dim {state.dim}")


def leaf_probability(leaf: ProtocolNode, state: QuantumState) -> float:
    """tr(M rho M^dag) for the leaf's accumulated operator M."""
    m = leaf.accumulated
    if m is None:
        raise InvalidInput("tree has no accumulated operators; recompute them first")
    if state.is_pure:
        w = m @ state.vector
        return float(np.vdot(w, w).real)
    return float(np.einsum("ij,jk,ik->", m, state.density, m.conj()).real)


def exact_distribution(tree: ProtocolTree, state: QuantumState) -> OutcomeDistribution:
    _check_dims(tree, state)
    p = np.zeros(tree.m)
    for leaf in tree.leaves():
        p[leaf.outcome - 1] += leaf_probability(leaf, state)
    p = clamp_probabilities(p)
    residual = 1.0 - float(p.sum())
    if tree.skip_stage1:
        # Inputs are promised to lie in the range of I - P.
        residual -= 1.0 - _weight(np.eye(tree.dim) - tree.projector, state)
    if abs(residual) > DIST_SUM_TOL:
        raise InvalidInput(f"leaf probabilities miss unit total by {residual:.3e}")
    return OutcomeDistribution(tree.labels, p, residual)


def _weight(op: np.ndarray, state: QuantumState) -> float:
    if state.is_pure:
        return float(np.vdot(state.vector, op @ state.vector).real)
    return float(np.einsum("ij,ji->", op, state.density).real)


# ---------------------------------------------------------------- shots

def _draws_per_shot(tree: ProtocolTree) -> int:
    # Two slots per level (first draw, one resample), padded to Philox blocks of 4.
    k = 2 * (tree.depth() + 1)
    return -(-k // 4) * 4


class ShotStream:
    """Uniform draws for one shot, addressed by (level, attempt)."""

    def __init__(self, seed: int, shot: int, width: int):
        bitgen = np.random.Philox(key=int(seed))
        bitgen.advance(shot * (width // 4))
        self._u = np.random.Generator(bitgen).random(width)

    def draw(self, level: int, attempt: int) -> float:
        return float(self._u[2 * level + attempt])


def _stream_block(seed: int, start: int, stop: int, width: int) -> np.ndarray:
    bitgen = np.random.Philox(key=int(seed))
    bitgen.advance(start * (width // 4))
    u = np.random.Generator(bitgen).random((stop - start) * width)
    return u.reshape(stop - start, width)


def _start_state(tree: ProtocolTree, state: QuantumState):
    if tree.skip_stage1:
        q = np.eye(tree.dim) - tree.projector
        return _project(q, state.vector if state.is_pure else state.density, state.is_pure)[1]
    return state.vector.copy() if state.is_pure else state.density.copy()


def _project(op: np.ndarray, cur: np.ndarray, pure: bool):
    """Probability of ``op`` on the normalized state ``cur`` and the collapsed state."""
    if pure:
        w = op @ cur
        p = float(np.vdot(w, w).real)
        return p, (w / np.sqrt(p) if p > 0 else w)
    w = op @ cur @ nx.dagger(op)
    p = float(np.trace(w).real)
    return p, (w / p if p > 0 else w)


def _branch(node: ProtocolNode, cur: np.ndarray, pure: bool):
    eye = np.eye(node.projector.shape[0])
    p_hit, hit_state = _project(node.projector, cur, pure)
    p_miss, miss_state = _project(eye - node.projector, cur, pure)
    total = p_hit + p_miss
    if total <= 0.0:
        raise DegenerateState(f"state vanished before node {node.node_id}")
    return p_hit / total, hit_state, p_miss / total, miss_state


def _choose(p_hit: float, p_miss: float, u0: float, u1: float, node_id: int) -> bool:
    hit = u0 < p_hit
    if (p_hit if hit else p_miss) < DEGENERATE_PROB:
        hit = u1 < p_hit
        if (p_hit if hit else p_miss) < DEGENERATE_PROB:
            raise DegenerateState(f"drew a branch of negligible probability at node {node_id}")
    return hit


def run_shot(tree: ProtocolTree, state: QuantumState, stream: ShotStream) -> ShotRecord:
    """Walk the tree once, collapsing the state after every measurement."""
    _check_dims(tree, state)
    pure = state.is_pure
    cur = _start_state(tree, state)
    node = tree.root
    path = []
    level = 0
    while not node.is_leaf:
        p_hit, hit_state, p_miss, miss_state = _branch(node, cur, pure)
        hit = _choose(p_hit, p_miss, stream.draw(level, 0), stream.draw(level, 1), node.node_id)
        path.append((node.node_id, hit))
        cur, node = (hit_state, node.hit) if hit else (miss_state, node.miss)
        level += 1
    return ShotRecord(node.outcome, tuple(path), cur)


def _count_block(tree: ProtocolTree, state: QuantumState, u: np.ndarray) -> np.ndarray:
    """Vectorized equivalent of run_shot over the rows of ``u``.

    Every shot reaching a node carries the same collapsed state, so the
    branch probabilities are computed once per node.
    """
    counts = np.zeros(tree.m, dtype=np.int64)
    pure = state.is_pure

    def visit(node, cur, rows, level):
        if rows.size == 0:
            return
        if node.is_leaf:
            counts[node.outcome - 1] += rows.size
            return
        p_hit, hit_state, p_miss, miss_state = _branch(node, cur, pure)
        u0 = u[rows, 2 * level]
        u1 = u[rows, 2 * level + 1]
        hit = u0 < p_hit
        bad = np.where(hit, p_hit, p_miss) < DEGENERATE_PROB
        if bad.any():
            hit[bad] = u1[bad] < p_hit
            if (np.where(hit[bad], p_hit, p_miss) < DEGENERATE_PROB).any():
                raise DegenerateState(
                    f"drew a branch of negligible probability at node {node.node_id}")
        visit(node.hit, hit_state, rows[hit], level + 1)
        visit(node.miss, miss_state, rows[~hit], level + 1)

    visit(tree.root, _start_state(tree, state), np.arange(u.shape[0]), 0)
    return counts


def sample_histogram(tree: ProtocolTree, state: QuantumState, shots: int, seed: int,
                     chunk_size: int = 1 << 18, workers: Optional[int] = None) -> np.ndarray:
    """Counts per outcome (indexed like the source POVM) over ``shots`` seeded shots."""
    if shots < 0:
        raise InvalidInput("shots must be nonnegative")
    _check_dims(tree, state)
    width = _draws_per_shot(tree)
    bounds = [(a, min(a + chunk_size, shots)) for a in range(0, shots, chunk_size)]

    def work(b):
        return _count_block(tree, state, _stream_block(seed, b[0], b[1], width))

    if workers and workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    return sum(parts, np.zeros(tree.m, dtype=np.int64))


def shot_stream(tree: ProtocolTree, seed: int, shot: int) -> ShotStream:
    return ShotStream(seed, shot, _draws_per_shot(tree))
