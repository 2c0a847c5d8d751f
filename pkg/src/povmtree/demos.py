"""End-to-end runs on the built-in fixtures, returned as plain dictionaries."""
from __future__ import annotations

import numpy as np

from . import fixtures
from . import numerics as nx
from .compiler import compile_tree, embed_povm, embed_state
from .core import Projector, basis_state, born_distribution, expectation
from .realizability import check_condition, find_commuting_projector, support_intersection
from .simulator import exact_distribution
from .verifier import verify_tree


def demo_qutrit() -> dict:
    povm = fixtures.qutrit_povm()
    p = fixtures.qutrit_projector()
    tree = compile_tree(povm, p)
    state = basis_state(3, 0)
    report = verify_tree(tree, povm)
    first = tree.root.hit
    _, vecs = np.linalg.eigh(first.projector)
    direction = nx.fix_phases(vecs[:, -1:])[:, 0]
    return {
        "demo": "qutrit",
        "state": "|0>",
        "distribution": exact_distribution(tree, state).probabilities.tolist(),
        "born": born_distribution(povm, state).tolist(),
        "expected": [1 / 3, 1 / 14, 25 / 42],
        "first_direction": [[float(z.real), float(z.imag)] for z in direction],
        "depth": tree.depth(),
        "verification": report.to_dict(),
        "pass": report.pass_,
    }


def demo_ud(overlapping: bool = True) -> dict:
    """Unambiguous discrimination of two mixed states with overlapping supports."""
    rho1, rho2 = fixtures.ud_states(overlapping)
    povm = fixtures.ud_povm()
    e0, e1, e2 = povm.elements
    out = {
        "demo": "ud",
        "tr_E1_rho2": expectation(e1, rho2),
        "tr_E2_rho1": expectation(e2, rho1),
    }
    common = support_intersection(rho1, rho2)
    if not common:
        out.update(status="N/A", intersection=[], pass_=True)
        out["pass"] = out.pop("pass_")
        return out
    psi = common[0]
    p = Projector.from_vectors([psi])
    tree = compile_tree(povm, p)
    report = verify_tree(tree, povm)
    out.update(
        status="realized",
        intersection=[[float(z.real), float(z.imag)] for z in psi],
        projector_diagonal=np.diag(p.matrix).real.tolist(),
        commutator_residuals=[nx.fro(e @ p.matrix - p.matrix @ e) for e in povm.elements],
        condition=check_condition(povm, p),
        distribution_rho1=exact_distribution(tree, rho1).probabilities.tolist(),
        distribution_rho2=exact_distribution(tree, rho2).probabilities.tolist(),
        depth=tree.depth(),
        verification=report.to_dict(),
    )
    out["pass"] = bool(report.pass_ and out["condition"]
                       and abs(out["tr_E1_rho2"]) <= 1e-12 and abs(out["tr_E2_rho1"]) <= 1e-12)
    return out


def demo_trine() -> dict:
    """The trine POVM is not realizable on a qubit but is after adding one dimension."""
    povm = fixtures.trine_povm()
    verdict = find_commuting_projector(povm)
    big, p = embed_povm(povm)
    tree = compile_tree(big, p, skip_stage1=True)
    report = verify_tree(tree, big)
    rng = np.random.default_rng(0)
    worst = 0.0
    extra = 0.0
    for _ in range(20):
        st = fixtures.random_pure_state(2, rng)
        dist = exact_distribution(tree, embed_state(st)).probabilities
        worst = max(worst, float(np.max(np.abs(dist[:3] - born_distribution(povm, st)))))
        extra = max(extra, float(dist[3]))
    return {
        "demo": "trine",
        "realizable_in_place": verdict.realizable,
        "commutant_dimension": verdict.commutant_dimension,
        "embedded_dim": big.dim,
        "depth": tree.depth(),
        "max_distribution_error": worst,
        "max_extra_probability": extra,
        "verification": report.to_dict(),
        "pass": bool(report.pass_ and not verdict.realizable and worst <= 1e-9 and extra <= 1e-12),
    }
