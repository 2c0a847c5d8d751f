import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from povmtree import fixtures
from povmtree import numerics as nx
from povmtree.compiler import compile_tree, embed_povm
from povmtree.core import Projector, validate_povm
from povmtree.errors import DigestMismatch, MissingOperators, OrderingMismatch
from povmtree.realizability import check_condition, find_commuting_projector
from povmtree.verifier import (Tolerances, check_decomposition, check_depth_bound,
                               check_leaf_sums, check_node_identities, check_telescoping,
                               ordered_items, verify_tree)


def test_qutrit_leaf_sums(qutrit, qutrit_tree):
    assert np.all(check_leaf_sums(qutrit_tree, qutrit) <= 1e-10)


def test_relabelled_leaf_detected(qutrit, qutrit_tree):
    qutrit_tree.root.hit.hit.outcome = 2
    res = check_leaf_sums(qutrit_tree, qutrit)
    # the moved item is (2/3)|psi0><psi0|, whose Frobenius norm is 2/3
    np.testing.assert_allclose(res[:2], [2 / 3, 2 / 3], atol=1e-12)
    assert not verify_tree(qutrit_tree, qutrit).pass_


def test_digest_mismatch(qutrit_tree):
    with pytest.raises(DigestMismatch):
        check_leaf_sums(qutrit_tree, fixtures.projective_povm(3))


def test_embedded_trine_leaf_sums():
    big, p = embed_povm(fixtures.trine_povm())
    tree = compile_tree(big, p, skip_stage1=True, reorder=False)
    res = check_leaf_sums(tree, big)
    assert len(res) == 4 and np.all(res <= 1e-10)


def test_qutrit_node_identities(qutrit_tree):
    assert check_node_identities(qutrit_tree) <= 1e-10


def test_orthogonal_psi_detected():
    povm = fixtures.projective_povm(2)
    tree = compile_tree(povm, Projector(np.diag([1.0, 0.0]).astype(complex), 1))
    node = tree.root.hit
    assert check_node_identities(tree) <= 1e-15
    node.projector = np.diag([0.0, 1.0]).astype(complex)
    assert check_node_identities(tree) == pytest.approx(node.meta.weight, abs=1e-15)


def test_node_identities_need_operators(qutrit_tree):
    qutrit_tree.root.hit.accumulated = None
    with pytest.raises(MissingOperators):
        check_node_identities(qutrit_tree)


def test_qutrit_telescoping_first_node(qutrit, qutrit_tree):
    items = ordered_items(qutrit_tree, qutrit)
    node = qutrit_tree.root.hit
    m = node.accumulated
    remaining = sum(it.operator() for it in items if it.branch == 0)
    # (2/3)|psi0><psi0| + (5/14)|psi1><psi1| + P E2 P is exactly P
    np.testing.assert_allclose(remaining, np.diag([1, 1, 0]), atol=1e-14)
    np.testing.assert_allclose(m.conj().T @ m, remaining, atol=1e-14)
    assert check_telescoping(qutrit_tree, items) <= 1e-10


def test_telescoping_root_branches(rng):
    povm, p = fixtures.random_realizable_povm(rng)
    tree = compile_tree(povm, p)
    eye = np.eye(povm.dim)
    for a, target in ((0, p.matrix), (1, eye - p.matrix)):
        block = sum(((p.matrix if a == 0 else eye - p.matrix) @ e @ (p.matrix if a == 0 else eye - p.matrix))
                    for e in povm.elements)
        assert nx.fro(block - target) <= 1e-9
    assert check_telescoping(tree, ordered_items(tree, povm)) <= 1e-8


def test_telescoping_identity_embedded():
    big, p = embed_povm(validate_povm([np.eye(2)]))
    tree = compile_tree(big, p, skip_stage1=True)
    assert check_telescoping(tree, ordered_items(tree, big)) <= 1e-12
    assert verify_tree(tree, big).pass_


def test_telescoping_ordering_mismatch(qutrit, qutrit_tree):
    items = ordered_items(qutrit_tree, qutrit)
    swapped = [items[1], items[0]] + items[2:]
    with pytest.raises(OrderingMismatch):
        check_telescoping(qutrit_tree, swapped)


def test_decomposition_examples(qutrit, qutrit_p):
    assert np.all(check_decomposition(qutrit, qutrit_p) <= 1e-12)
    trine = fixtures.trine_povm()
    res = check_decomposition(trine, np.diag([1.0, 0.0]))
    # oracle: the residual is the off-diagonal part, sqrt(2) * 2/3 * |cos t sin t|
    expected = [np.sqrt(2) * 2 / 3 * abs(np.cos(t) * np.sin(t)) for t in np.pi * np.arange(3) / 3]
    np.testing.assert_allclose(res, expected, atol=1e-14)
    assert res[1] > 0.4
    diag = validate_povm([np.diag([0.3, 0.6, 0.1]), np.diag([0.7, 0.4, 0.9])])
    assert np.all(check_decomposition(diag, np.diag([0.0, 1.0, 1.0])) == 0)


def test_depth_examples(qutrit, qutrit_tree):
    assert check_depth_bound(qutrit_tree, qutrit) == (3, 3)
    povm = fixtures.projective_povm(2)
    tree = compile_tree(povm, Projector(np.diag([1.0, 0.0]).astype(complex), 1))
    assert check_depth_bound(tree, povm) == (2, 2)
    big, p = embed_povm(fixtures.trine_povm())
    tree = compile_tree(big, p, skip_stage1=True, reorder=False)
    depth, bound = check_depth_bound(tree, big)
    assert bound == 3 and depth <= 3


def test_report_fields(qutrit, qutrit_tree):
    rep = verify_tree(qutrit_tree, qutrit)
    d = rep.to_dict()
    assert d["pass"] is True
    assert d["tolerances"]["leaf_sum"] == 1e-8
    assert d["depth"] == 3 and d["depth_bound"] == 3
    strict = verify_tree(qutrit_tree, qutrit, Tolerances(node_identity=0.0))
    assert strict.pass_ is (check_node_identities(qutrit_tree) == 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_every_compiled_tree_passes(seed):
    rng = np.random.default_rng(seed)
    povm, _ = fixtures.random_realizable_povm(rng)
    verdict = find_commuting_projector(povm)
    rep = verify_tree(compile_tree(povm, verdict.projector), povm)
    assert rep.pass_, rep.to_dict()


def test_decomposition_agrees_with_commutation(rng):
    """Both predicates agree on 1000 random (POVM, projector) pairs."""
    agree = 0
    kinds = {True: 0, False: 0}
    for n in range(1000):
        if n % 2:
            povm, p = fixtures.random_realizable_povm(rng, dim=int(rng.integers(2, 5)), m=3)
        else:
            d = int(rng.integers(2, 5))
            povm = validate_povm(fixtures.random_povm_elements(d, 3, rng))
            r = int(rng.integers(1, d))
            u = fixtures.random_unitary(d, rng)
            p = Projector.from_vectors(u[:, k] for k in range(r))
        decomp = bool(np.all(check_decomposition(povm, p) <= 1e-9))
        comm = check_condition(povm, p)
        kinds[comm] += 1
        agree += decomp == comm
    assert agree == 1000
    assert kinds[True] > 100 and kinds[False] > 100
