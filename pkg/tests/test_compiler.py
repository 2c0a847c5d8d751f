import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from povmtree import fixtures
from povmtree import numerics as nx
from povmtree.compiler import (compile_tree, embed_povm, embed_state, lemma1_f,
                               reorder_last_element, spectral_items)
from povmtree.core import Projector, basis_state, born_distribution, validate_povm
from povmtree.errors import NotCommuting, NotRealizable, PhiOutsideRange, PreconditionViolated
from povmtree.simulator import exact_distribution

PSI0 = np.array([1, 1, 0]) / np.sqrt(2)


# ---------------------------------------------------------------- spectral items

def test_items_of_e0(qutrit, qutrit_p):
    items = spectral_items(qutrit.elements[0], qutrit_p, 1)
    assert len(items) == 1
    it = items[0]
    assert (it.outcome, it.branch, it.index) == (1, 0, 1)
    assert it.weight == pytest.approx(2 / 3, abs=1e-14)
    assert abs(np.vdot(it.vector, PSI0)) == pytest.approx(1, abs=1e-14)


def test_items_of_e2(qutrit, qutrit_p):
    items = spectral_items(qutrit.elements[2], qutrit_p, 3)
    a1 = [it for it in items if it.branch == 1]
    a0 = [it for it in items if it.branch == 0]
    assert len(a1) == 1
    assert a1[0].weight == pytest.approx(1, abs=1e-14)
    np.testing.assert_allclose(np.abs(a1[0].vector), [0, 0, 1], atol=1e-14)
    p = qutrit_p.matrix
    expected = np.trace(p @ qutrit.elements[2] @ p).real  # 41/42
    assert sum(it.weight for it in a0) == pytest.approx(expected, abs=1e-13)
    assert expected == pytest.approx(41 / 42, abs=1e-14)


def test_items_of_zero(qutrit_p):
    assert spectral_items(np.zeros((3, 3)), qutrit_p, 1) == []


def test_items_require_commutation(qutrit):
    p0 = Projector(np.diag([1.0, 0, 0]).astype(complex), 1)
    with pytest.raises(NotCommuting):
        spectral_items(qutrit.elements[0], p0, 1)


def test_items_reconstruct_blocks(rng):
    povm, p = fixtures.random_realizable_povm(rng, dim=5, m=4)
    q = np.eye(5) - p.matrix
    for k, e in enumerate(povm.elements):
        items = spectral_items(e, p, k + 1)
        for a, blk in ((0, p.matrix @ e @ p.matrix), (1, q @ e @ q)):
            mine = [it for it in items if it.branch == a]
            total = sum((it.operator() for it in mine), np.zeros((5, 5), complex))
            assert nx.fro(total - blk) <= 1e-9
            assert [it.index for it in mine] == list(range(1, len(mine) + 1))
            assert all(x.weight >= y.weight for x, y in zip(mine, mine[1:]))


# ---------------------------------------------------------------- lemma 1

def test_lemma_projector():
    p = np.diag([1.0, 1.0, 0.0])
    phi = np.array([0.6, 0.8j, 0])
    res = lemma1_f(p, 1.0, phi)
    assert res.mu == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(res.theta, phi, atol=1e-14)


def test_lemma_diagonal():
    # oracle: (M^dag)^+ phi = diag(1, 2) (1,1)/sqrt(2) = (1, 2)/sqrt(2); squared norm 5/2
    m = np.diag([1.0, 0.5])
    phi = np.array([1, 1]) / np.sqrt(2)
    res = lemma1_f(m, 0.2, phi)
    assert res.mu == pytest.approx(0.4, abs=1e-14)
    np.testing.assert_allclose(res.theta, np.array([1, 2]) / np.sqrt(5), atol=1e-14)
    np.testing.assert_allclose(m.conj().T @ res.theta, np.sqrt(0.4) * phi, atol=1e-14)


def test_lemma_first_qutrit_call(qutrit_p):
    res = lemma1_f(qutrit_p.matrix, 2 / 3, PSI0)
    assert res.mu == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(res.theta, PSI0, atol=1e-14)


def test_lemma_phi_outside_range():
    with pytest.raises(PhiOutsideRange):
        lemma1_f(np.diag([1.0, 0.0]), 0.5, np.array([0.0, 1.0]))


def test_lemma_precondition_violated():
    # mu would be 0.4, so lambda = 0.5 breaks M^dag M >= lambda |phi><phi|
    with pytest.raises(PreconditionViolated):
        lemma1_f(np.diag([1.0, 0.5]), 0.5, np.array([1, 1]) / np.sqrt(2))


def test_lemma_mu_clamped_at_boundary():
    m = np.diag([1.0, 0.5])
    phi = np.array([1, 1]) / np.sqrt(2)
    res = lemma1_f(m, 0.4 + 5e-11, phi)
    assert res.mu == 0.4 + 5e-11


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lemma_contract(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 7))
    r = int(rng.integers(1, d + 1))
    m = (rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))) @ \
        (rng.standard_normal((r, d)) + 1j * rng.standard_normal((r, d)))
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    phi = m.conj().T @ x
    phi /= np.linalg.norm(phi)
    gram = m.conj().T @ m
    lam_max = 1 / np.vdot(phi, np.linalg.pinv(gram) @ phi).real
    lam = float(rng.uniform(0.01, 1.0)) * lam_max
    assert np.linalg.eigvalsh(gram - lam * np.outer(phi, phi.conj()))[0] >= -1e-9 * nx.scale(gram)
    res = lemma1_f(m, lam, phi)
    assert np.linalg.norm(m.conj().T @ res.theta - np.sqrt(res.mu) * phi) <= 1e-9
    assert res.mu >= lam - 1e-10
    assert np.linalg.norm(res.theta) == pytest.approx(1, abs=1e-12)


# ---------------------------------------------------------------- compile

def test_qutrit_first_direction(qutrit_tree):
    node = qutrit_tree.root.hit
    assert node.kind == "binary"
    phi0 = np.ones(3) / np.sqrt(3)
    np.testing.assert_allclose(node.projector, np.outer(phi0, phi0), atol=1e-14)
    np.testing.assert_allclose(node.meta.xi, [0, 0, 1], atol=1e-15)


def test_qutrit_structure(qutrit_tree):
    root = qutrit_tree.root
    assert root.kind == "stage1"
    assert root.miss.is_leaf and root.miss.outcome == 3
    assert qutrit_tree.depth() == 3
    chain = [root.hit, root.hit.miss]
    assert [n.meta.outcome for n in chain] == [1, 2]
    assert [n.hit.outcome for n in chain] == [1, 2]
    assert chain[1].miss.is_leaf and chain[1].miss.outcome == 3


def test_projective_tree():
    povm = fixtures.projective_povm(2)
    p = Projector(np.diag([1.0, 0.0]).astype(complex), 1)
    tree = compile_tree(povm, p)
    root = tree.root
    np.testing.assert_allclose(root.projector, p.matrix)
    node = root.hit
    assert node.kind == "binary"
    np.testing.assert_allclose(node.projector, np.diag([1.0, 0.0]), atol=1e-15)
    assert node.hit.outcome == 1
    assert node.miss.is_leaf and node.miss.outcome == 2
    assert nx.fro(node.miss.accumulated) < 1e-15
    assert root.miss.is_leaf and root.miss.outcome == 2
    assert tree.depth() == 2


def test_compile_rejects_bad_projector(qutrit):
    p0 = Projector(np.diag([1.0, 0, 0]).astype(complex), 1)
    with pytest.raises(NotRealizable):
        compile_tree(qutrit, p0)


def test_direct_sum_leaf_sums(rng):
    first = fixtures.random_povm_elements(2, 3, rng)
    second = fixtures.random_povm_elements(2, 3, rng)
    elements = []
    for a, b in zip(first, second):
        e = np.zeros((4, 4), complex)
        e[:2, :2] = a
        e[2:, 2:] = b
        elements.append(e)
    povm = validate_povm(elements)
    p = Projector(np.diag([1.0, 1.0, 0, 0]).astype(complex), 2)
    tree = compile_tree(povm, p)
    sums = [np.zeros((4, 4), complex) for _ in range(3)]
    for leaf in tree.leaves():
        sums[leaf.outcome - 1] += leaf.accumulated.conj().T @ leaf.accumulated
    for s, e in zip(sums, povm.elements):
        assert nx.fro(s - e) <= 1e-8
    for _ in range(10):
        st_ = fixtures.random_pure_state(4, rng)
        np.testing.assert_allclose(exact_distribution(tree, st_).probabilities,
                                   born_distribution(povm, st_), atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tree_structure_invariants(seed):
    rng = np.random.default_rng(seed)
    povm, p = fixtures.random_realizable_povm(rng)
    tree = compile_tree(povm, p)
    eye = np.eye(povm.dim)
    assert nx.fro(tree.root.hit.accumulated - p.matrix) == 0
    assert nx.fro(tree.root.miss.accumulated - (eye - p.matrix)) < 1e-15
    for node in tree.nodes():
        if node.is_leaf:
            assert 1 <= node.outcome <= povm.m
            continue
        pr = node.projector
        assert nx.fro(pr - pr.conj().T) <= 1e-9 and nx.fro(pr @ pr - pr) <= 1e-9
        if node.kind == "binary":
            assert nx.numeric_rank(np.linalg.svd(pr, compute_uv=False)) == 1
            assert node.hit.is_leaf and node.hit.outcome == node.meta.outcome
        np.testing.assert_allclose(node.hit.accumulated, pr @ node.accumulated, atol=1e-15)
        np.testing.assert_allclose(node.miss.accumulated, (eye - pr) @ node.accumulated, atol=1e-15)


# ---------------------------------------------------------------- reorder

def test_reorder_qutrit(qutrit, qutrit_p):
    # rank oracle: (rank P E P, rank (I-P) E (I-P)) = (1,0), (1,0), (1,1)
    p = qutrit_p.matrix
    q = np.eye(3) - p
    ranks = [(np.linalg.matrix_rank(p @ e @ p, tol=1e-10), np.linalg.matrix_rank(q @ e @ q, tol=1e-10))
             for e in qutrit.elements]
    assert ranks == [(1, 0), (1, 0), (1, 1)]
    bounds = [max(sum(r[a] for i, r in enumerate(ranks) if i != k) for a in (0, 1)) + 1
              for k in range(3)]
    assert bounds == [3, 3, 3]
    assert reorder_last_element(qutrit, qutrit_p) == [0, 1, 2]


def test_reorder_moves_high_rank_element():
    # block ranks (P side, I-P side): e0 (2, 2), e1 (1, 1), e2 (1, 1)
    # bounds by last element: e0 -> max(2, 2) + 1 = 3, e1 or e2 -> max(3, 3) + 1 = 4
    e0 = 0.5 * np.eye(4)
    e1 = np.diag([0.5, 0.0, 0.5, 0.0])
    e2 = np.diag([0.0, 0.5, 0.0, 0.5])
    povm = validate_povm([e0, e1, e2])
    p = Projector(np.diag([1.0, 1.0, 0, 0]).astype(complex), 2)
    assert reorder_last_element(povm, p) == [1, 2, 0]
    assert compile_tree(povm, p).depth() == 3
    assert compile_tree(povm, p, reorder=False).depth() == 4


def test_reorder_ties_keep_order():
    povm = fixtures.projective_povm(3)
    p = Projector(np.diag([1.0, 0, 0]).astype(complex), 1)
    assert reorder_last_element(povm, p) == [0, 1, 2]


def test_reorder_single_element():
    povm = validate_povm([np.eye(2)])
    p = Projector(np.diag([1.0, 0]).astype(complex), 1)
    assert reorder_last_element(povm, p) == [0]


def test_reorder_permutes_labels_not_outcomes():
    e = [np.diag([0.2, 0.3, 0.0]), np.diag([0.8, 0.7, 0.0]), np.diag([0.0, 0.0, 1.0])]
    povm = validate_povm(e[::-1])  # [|2><2|, big, small]
    p = Projector(np.diag([0.0, 0.0, 1.0]).astype(complex), 1)
    tree = compile_tree(povm, p)
    st_ = fixtures.random_pure_state(3, np.random.default_rng(1))
    np.testing.assert_allclose(exact_distribution(tree, st_).probabilities,
                               born_distribution(povm, st_), atol=1e-12)


# ---------------------------------------------------------------- embedding

def test_embed_identity():
    povm = validate_povm([np.eye(2)])
    big, p = embed_povm(povm)
    assert big.m == 2 and big.dim == 3
    np.testing.assert_array_equal(big.elements[0], np.diag([1, 1, 0]))
    np.testing.assert_array_equal(big.elements[1], np.diag([0, 0, 1]))
    np.testing.assert_array_equal(p.matrix, np.diag([0, 0, 1]))
    tree = compile_tree(big, p, skip_stage1=True)
    for k in range(2):
        dist = exact_distribution(tree, embed_state(basis_state(2, k))).probabilities
        np.testing.assert_allclose(dist, [1, 0], atol=1e-15)


@pytest.mark.parametrize("make, m", [(fixtures.trine_povm, 3), (fixtures.sic_povm, 4)])
@pytest.mark.parametrize("reorder", [True, False])
def test_embedded_reproduces_born(make, m, reorder, rng):
    povm = make()
    big, p = embed_povm(povm)
    assert big.m == m + 1 and big.dim == 3
    tree = compile_tree(big, p, skip_stage1=True, reorder=reorder)
    assert tree.root.kind != "stage1"
    for _ in range(20):
        s = fixtures.random_pure_state(2, rng)
        dist = exact_distribution(tree, embed_state(s)).probabilities
        np.testing.assert_allclose(dist[:m], born_distribution(povm, s), atol=1e-9)
        assert dist[m] <= 1e-12


def test_embedded_trine_depth_without_reorder():
    big, p = embed_povm(fixtures.trine_povm())
    tree = compile_tree(big, p, skip_stage1=True, reorder=False)
    assert tree.order[-1] == 3
    assert tree.depth() == 3
    tree = compile_tree(big, p, skip_stage1=True)
    assert tree.depth() == 2
