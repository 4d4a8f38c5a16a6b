"""Space definition documents: explicit matrices or generator expressions.

A document is JSON. Either

    {"labels": [...], "dist": [[...], ...], "weights": [...]}

with ``"inf"`` allowed as a distance entry (extended spaces), or

    {"expr": "gapped_sum([(cycle(6), 0, 0.5), (dissipation(3), 0, 0.5)], 4)"}

A bare expression (a file whose text does not start with ``{``) is also
accepted. Expressions are parsed with ``ast`` and evaluated over a fixed
set of constructors; nothing else is callable.
"""
from __future__ import annotations

import ast
import json
import math
from typing import Any

import numpy as np

from . import core
from .core import ExtendedFiniteMmSpace, FiniteMmSpace, PointedSpace, WeightVector
from .errors import InvalidParameter, ResourceLimit

MAX_NODES = 200


class SpaceParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 source: str = "<expr>"):
        where = f"{source}:{line}:{column}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.msg = message
        self.line = line
        self.column = column


def _space(x, node) -> FiniteMmSpace:
    if not isinstance(x, FiniteMmSpace):
        raise _err("expected a space", node)
    return x


def _err(msg: str, node) -> SpaceParseError:
    return SpaceParseError(msg, getattr(node, "lineno", None),
                           getattr(node, "col_offset", -1) + 1 if hasattr(node, "col_offset") else None)


def _cycle(m, circumference=2 * math.pi):
    return core.cycle_space(int(m), float(circumference))


def _two_point(length, p=0.5):
    return core.two_point(float(length), (float(p), 1.0 - float(p)))


def _direct_sum(items):
    parts = [s for s, _ in items]
    return core.direct_sum(parts, [a for _, a in items])


def _gapped_sum(items, r):
    parts = [PointedSpace(s, int(b)) for s, b, _ in items]
    return core.gapped_sum(parts, [a for _, _, a in items], float(r))


def _wedge(e1, b1, e2, b2, alpha):
    return core.wedge_sum(PointedSpace(e1, int(b1)), PointedSpace(e2, int(b2)), float(alpha))


def _space_literal(dist, weights=None, labels=None):
    return from_document({"dist": dist, "weights": weights, "labels": labels})


CONSTRUCTORS = {
    "one_point": lambda: core.one_point(),
    "cycle": _cycle,
    "two_point": _two_point,
    "dissipation": lambda n: core.dissipation_space(int(n)),
    "lp_power": lambda X, p, n: core.lp_power(X, float(p), int(n)),
    "lp_product": lambda X, Y, p=2.0: core.lp_product(X, Y, float(p)),
    "direct_sum": _direct_sum,
    "gapped_sum": _gapped_sum,
    "wedge": _wedge,
    "scale": lambda X, t: core.scale(X, float(t)),
    "restrict": lambda X, subset: core.restrict_normalize(X, [int(i) for i in subset]),
    "atoms": lambda A, n: core.atoms_generator(WeightVector.atoms([float(a) for a in A]), int(n)),
    "space": _space_literal,
}
SPACE_ARGS = {  # positions that must hold spaces
    "lp_power": (0,), "lp_product": (0, 1), "wedge": (0, 2), "scale": (0,), "restrict": (0,),
}
CONSTANTS = {"inf": math.inf, "pi": math.pi}


def parse_expression(text: str, source: str = "<expr>", max_nodes: int = MAX_NODES):
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise SpaceParseError(e.msg, e.lineno, e.offset, source) from None
    size = sum(1 for _ in ast.walk(tree))
    if size > max_nodes:
        raise SpaceParseError(f"expression has {size} nodes, above the limit {max_nodes}", 1, 1, source)
    try:
        out = _eval(tree.body)
    except SpaceParseError as e:
        raise SpaceParseError(e.msg, e.line, e.column, source) from None
    except (InvalidParameter, TypeError, ValueError) as e:
        raise SpaceParseError(str(e), 1, 1, source) from None
    if not isinstance(out, FiniteMmSpace):
        raise SpaceParseError("expression does not evaluate to a space", 1, 1, source)
    return out


def _eval(node) -> Any:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Constant) and isinstance(node.value, str) and node.value.lower() == "inf":
        return math.inf
    if isinstance(node, ast.Name):
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        raise _err(f"unknown name {node.id!r}", node)
    if isinstance(node, (ast.List, ast.Tuple)):
        return [_eval(e) for e in node.elts]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
        a, b = _eval(node.left), _eval(node.right)
        if not all(isinstance(v, (int, float)) for v in (a, b)):
            raise _err("arithmetic needs numbers", node)
        op = node.op
        return a + b if isinstance(op, ast.Add) else a - b if isinstance(op, ast.Sub) \
            else a * b if isinstance(op, ast.Mult) else a / b
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name not in CONSTRUCTORS:
            raise _err(f"unknown constructor {name!r}; known: {', '.join(sorted(CONSTRUCTORS))}", node)
        args = [_eval(a) for a in node.args]
        kwargs = {k.arg: _eval(k.value) for k in node.keywords}
        for pos in SPACE_ARGS.get(name, ()):
            if pos < len(args):
                _space(args[pos], node.args[pos])
        try:
            return CONSTRUCTORS[name](*args, **kwargs)
        except TypeError as e:
            raise _err(f"{name}: {e}", node) from None
        except InvalidParameter as e:
            raise _err(f"{name}: {e}", node) from None
        except ResourceLimit as e:
            raise _err(f"{name}: {e} (expressions are limited to this size)", node) from None
    raise _err(f"unsupported syntax {type(node).__name__}", node)


def _number(v, where: str) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise InvalidParameter(f"{where}: expected a number, got {v!r}")


def from_document(doc: dict) -> FiniteMmSpace:
    if "expr" in doc:
        return parse_expression(doc["expr"])
    if "dist" not in doc:
        raise InvalidParameter("document needs 'dist' or 'expr'")
    d = np.array([[_number(v, "dist") for v in row] for row in doc["dist"]], dtype=float)
    w = doc.get("weights")
    w = None if w is None else [_number(v, "weights") for v in w]
    labels = doc.get("labels")
    cls = ExtendedFiniteMmSpace if np.isinf(d).any() or doc.get("extended") else FiniteMmSpace
    return cls(d, w, labels)


def loads(text: str, source: str = "<text>") -> FiniteMmSpace:
    stripped = text.lstrip()
    if not stripped.startswith("{"):
        return parse_expression(text, source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpaceParseError(e.msg, e.lineno, e.colno, source) from None
    if not isinstance(doc, dict):
        raise SpaceParseError("top level must be an object", 1, 1, source)
    if "expr" in doc:
        return parse_expression(doc["expr"], source)
    try:
        return from_document(doc)
    except InvalidParameter as e:
        raise SpaceParseError(str(e), None, None, source) from None


def load(path: str) -> FiniteMmSpace:
    with open(path) as fh:
        return loads(fh.read(), path)


def _label(v):
    if isinstance(v, (str, int, float)) and not isinstance(v, bool):
        return v
    if isinstance(v, (tuple, list)):
        return [_label(x) for x in v]
    return str(v)


def to_document(X: FiniteMmSpace) -> dict:
    return {
        "labels": [_label(v) for v in X.labels],
        "dist": [[v if math.isfinite(v) else "inf" for v in row] for row in X.dist.tolist()],
        "weights": np.asarray(X.weight).tolist(),
    }


def dumps(X: FiniteMmSpace) -> str:
    return json.dumps(to_document(X), indent=1)
