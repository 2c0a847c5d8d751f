"""JSON documents for POVMs, states, projectors and compiled trees.

Complex numbers are ``[re, im]`` pairs of floats and matrices are row-major
nested lists.  Python's float repr round-trips exactly, so writing and
re-reading a document reproduces every entry bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .compiler import NodeMeta, ProtocolNode, ProtocolTree, recompute_accumulated
from .core import Povm, Projector, QuantumState, validate_povm, validate_state
from .errors import InvalidInput

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}

POVM_SCHEMA = {
    "type": "object",
    "required": ["dim", "elements"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "elements": {"type": "array", "items": _MATRIX, "minItems": 1},
        "labels": {"type": "array", "items": {"type": "string"}},
    },
}

STATE_SCHEMA = {
    "type": "object",
    "required": ["dim"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "pure": _VECTOR,
        "density": _MATRIX,
    },
    "oneOf": [{"required": ["pure"]}, {"required": ["density"]}],
}

PROJECTOR_SCHEMA = {
    "type": "object",
    "required": ["dim", "matrix"],
    "properties": {"dim": {"type": "integer", "minimum": 1}, "matrix": _MATRIX},
}

TREE_SCHEMA = {
    "type": "object",
    "required": ["dim", "outcome_labels", "skip_stage1", "povm_digest", "order",
                 "projector", "root"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "outcome_labels": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "skip_stage1": {"type": "boolean"},
        "povm_digest": {"type": "string"},
        "order": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "projector": _MATRIX,
        "root": {"$ref": "#/definitions/node"},
    },
    "definitions": {
        "node": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["stage1", "binary", "leaf"]},
                "projector": _MATRIX,
                "hit": {"$ref": "#/definitions/node"},
                "miss": {"$ref": "#/definitions/node"},
                "outcome": {"type": "integer", "minimum": 1},
                "accumulated": _MATRIX,
                "meta": {
                    "type": "object",
                    "required": ["outcome", "branch", "index", "weight", "mu", "phi", "theta"],
                    "properties": {
                        "outcome": {"type": "integer"},
                        "branch": {"enum": [0, 1]},
                        "index": {"type": "integer"},
                        "weight": {"type": "number"},
                        "mu": {"type": "number"},
                        "phi": _VECTOR,
                        "theta": _VECTOR,
                        "xi": _VECTOR,
                    },
                },
            },
            "if": {"properties": {"kind": {"const": "leaf"}}},
            "then": {"required": ["outcome"]},
            "else": {"required": ["projector", "hit", "miss"]},
        }
    },
}


def _validate(doc, schema, what: str) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise InvalidInput(f"invalid {what} document: {exc.message}") from exc


def encode_vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=np.complex128)]


def encode_matrix(a) -> list:
    return [encode_vector(row) for row in np.asarray(a, dtype=np.complex128)]


def decode_vector(doc) -> np.ndarray:
    return np.array([complex(re, im) for re, im in doc], dtype=np.complex128)


def decode_matrix(doc) -> np.ndarray:
    rows = [decode_vector(r) for r in doc]
    if len({len(r) for r in rows}) != 1:
        raise InvalidInput("ragged matrix")
    return np.array(rows)


def _check_dim(a: np.ndarray, dim: int, what: str) -> np.ndarray:
    if a.shape != (dim, dim):
        raise InvalidInput(f"{what} has shape {a.shape}, expected ({dim}, {dim})")
    return a


# ---------------------------------------------------------------- POVM

def povm_to_dict(povm: Povm) -> dict:
    return {"dim": povm.dim,
            "elements": [encode_matrix(e) for e in povm.elements],
            "labels": list(povm.labels)}


def povm_from_dict(doc: dict, tol: float | None = None) -> Povm:
    _validate(doc, POVM_SCHEMA, "POVM")
    mats = [_check_dim(decode_matrix(e), doc["dim"], "POVM element") for e in doc["elements"]]
    kwargs = {} if tol is None else {"tol": tol}
    return validate_povm(mats, labels=doc.get("labels"), **kwargs)


# ---------------------------------------------------------------- states

def state_to_dict(state: QuantumState) -> dict:
    if state.is_pure:
        return {"dim": state.dim, "pure": encode_vector(state.vector)}
    return {"dim": state.dim, "density": encode_matrix(state.density)}


def state_from_dict(doc: dict) -> QuantumState:
    _validate(doc, STATE_SCHEMA, "state")
    if "pure" in doc:
        raw = decode_vector(doc["pure"])
        if raw.size != doc["dim"]:
            raise InvalidInput(f"state vector has length {raw.size}, expected {doc['dim']}")
    else:
        raw = _check_dim(decode_matrix(doc["density"]), doc["dim"], "density matrix")
    return validate_state(raw)


# ---------------------------------------------------------------- projectors

def projector_to_dict(p: Projector) -> dict:
    return {"dim": p.dim, "matrix": encode_matrix(p.matrix)}


def projector_from_dict(doc: dict) -> Projector:
    _validate(doc, PROJECTOR_SCHEMA, "projector")
    return Projector.from_matrix(_check_dim(decode_matrix(doc["matrix"]), doc["dim"], "projector"))


# ---------------------------------------------------------------- trees

def _node_to_dict(node: ProtocolNode, with_operators: bool) -> dict:
    out: dict = {"kind": node.kind}
    if node.is_leaf:
        out["outcome"] = node.outcome
    else:
        out["projector"] = encode_matrix(node.projector)
    if with_operators and node.accumulated is not None:
        out["accumulated"] = encode_matrix(node.accumulated)
    if node.meta is not None:
        meta = node.meta
        out["meta"] = {"outcome": meta.outcome, "branch": meta.branch, "index": meta.index,
                       "weight": meta.weight, "mu": meta.mu,
                       "phi": encode_vector(meta.phi), "theta": encode_vector(meta.theta)}
        if meta.xi is not None:
            out["meta"]["xi"] = encode_vector(meta.xi)
    if not node.is_leaf:
        out["hit"] = _node_to_dict(node.hit, with_operators)
        out["miss"] = _node_to_dict(node.miss, with_operators)
    return out


def tree_to_dict(tree: ProtocolTree, with_operators: bool = False) -> dict:
    return {"dim": tree.dim,
            "outcome_labels": list(tree.labels),
            "skip_stage1": tree.skip_stage1,
            "povm_digest": tree.povm_digest,
            "order": list(tree.order),
            "projector": encode_matrix(tree.projector),
            "root": _node_to_dict(tree.root, with_operators)}


def _node_from_dict(doc: dict, dim: int, m: int) -> tuple[ProtocolNode, bool]:
    node = ProtocolNode(doc["kind"])
    complete = "accumulated" in doc
    if complete:
        node.accumulated = _check_dim(decode_matrix(doc["accumulated"]), dim, "accumulated operator")
    if node.is_leaf:
        if doc["outcome"] > m:
            raise InvalidInput(f"leaf outcome {doc['outcome']} exceeds {m}")
        node.outcome = doc["outcome"]
    else:
        node.projector = _check_dim(decode_matrix(doc["projector"]), dim, "node projector")
        node.hit, c1 = _node_from_dict(doc["hit"], dim, m)
        node.miss, c2 = _node_from_dict(doc["miss"], dim, m)
        complete = complete and c1 and c2
    if "meta" in doc:
        meta = doc["meta"]
        node.meta = NodeMeta(meta["outcome"], meta["branch"], meta["index"], meta["weight"],
                             meta["mu"], decode_vector(meta["phi"]), decode_vector(meta["theta"]),
                             decode_vector(meta["xi"]) if "xi" in meta else None)
    return node, complete


def tree_from_dict(doc: dict) -> ProtocolTree:
    """Parse a tree document; accumulated operators are recomputed unless every node has one."""
    _validate(doc, TREE_SCHEMA, "tree")
    dim = doc["dim"]
    m = len(doc["outcome_labels"])
    if sorted(doc["order"]) != list(range(m)):
        raise InvalidInput("order is not a permutation of the outcomes")
    root, complete = _node_from_dict(doc["root"], dim, m)
    tree = ProtocolTree(dim, tuple(doc["outcome_labels"]), tuple(doc["order"]),
                        _check_dim(decode_matrix(doc["projector"]), dim, "projector"),
                        root, doc["skip_stage1"], doc["povm_digest"])
    if not complete:
        recompute_accumulated(tree)
    return tree


# ---------------------------------------------------------------- files

def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise InvalidInput(f"{path}: {exc.strerror}") from exc


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")
