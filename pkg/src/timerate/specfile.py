"""Network-spec files: a YAML document describing one problem and its deadlines.

Example (the two-receiver identity / erasure broadcast)::

    nodes: 3
    input_alphabets: [2, 1, 1]
    output_alphabets: [1, 2, 3]
    channel:
      product:
        2: [[1, 0], [0, 1]]
        3: [[0.5, 0, 0.5], [0, 0.5, 0.5]]
    messages: 1
    side_info: [[1, 0, 0]]
    demands: [[0, 1, 1]]
    sigma:
      - [1, 2, 0.5]
      - [1, 3, 1]
    degraded_pairs: [[2, 3]]

Node and message numbers are 1-based. ``channel`` is either ``rows`` (one
probability vector over joint outputs per joint input) or ``product`` (one
table per receiver node, rows over joint inputs; nodes with a single output
letter may be omitted).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import SpecParseError
from .model import Channel, NetworkProblem, TimeConstraints, validate_problem

TOP_KEYS = {
    "nodes", "input_alphabets", "output_alphabets", "channel", "messages",
    "side_info", "demands", "sigma", "degraded_pairs",
}
REQUIRED = TOP_KEYS - {"degraded_pairs"}
CHANNEL_KEYS = {"rows", "product"}


@dataclass(frozen=True)
class NetworkSpec:
    problem: NetworkProblem
    sigma: TimeConstraints
    degraded_pairs: tuple[tuple[int, int], ...] = ()


def _line(node) -> int:
    return node.start_mark.line + 1


def _value(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


def _mapping(node, allowed, what):
    if not isinstance(node, yaml.MappingNode):
        raise SpecParseError(f"{what} must be a mapping", _line(node))
    out = {}
    for knode, vnode in node.value:
        key = _value(knode)
        if key not in allowed:
            raise SpecParseError(f"unknown key {key!r} in {what}", _line(knode))
        if key in out:
            raise SpecParseError(f"duplicate key {key!r} in {what}", _line(knode))
        out[key] = vnode
    return out


def _int_list(node, what, length=None):
    v = _value(node)
    if not isinstance(v, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in v):
        raise SpecParseError(f"{what} must be a list of integers", _line(node))
    if length is not None and len(v) != length:
        raise SpecParseError(f"{what} has {len(v)} entries, expected {length}", _line(node))
    return v


def _matrix(node, what):
    v = _value(node)
    if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
        raise SpecParseError(f"{what} must be a list of rows", _line(node))
    try:
        return np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise SpecParseError(f"{what} has ragged or non-numeric rows", _line(node)) from None


def parse_spec(text: str, validate: bool = True) -> NetworkSpec:
    """Parse a network-spec document; raises SpecParseError with a line number."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SpecParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                             mark.line + 1 if mark else None) from None
    if root is None:
        raise SpecParseError("empty spec file", 1)
    top = _mapping(root, TOP_KEYS, "spec")
    missing = sorted(REQUIRED - top.keys())
    if missing:
        raise SpecParseError(f"missing required keys: {', '.join(missing)}", _line(root))

    ell = _value(top["nodes"])
    if not isinstance(ell, int) or ell < 1:
        raise SpecParseError("nodes must be a positive integer", _line(top["nodes"]))
    xs = _int_list(top["input_alphabets"], "input_alphabets", ell)
    ys = _int_list(top["output_alphabets"], "output_alphabets", ell)
    if min(xs + ys) < 1:
        raise SpecParseError("alphabet sizes must be positive", _line(top["input_alphabets"]))

    ch = _mapping(top["channel"], CHANNEL_KEYS, "channel")
    if len(ch) != 1:
        raise SpecParseError("channel needs exactly one of 'rows' or 'product'", _line(top["channel"]))
    if "rows" in ch:
        channel = Channel(xs, ys, _matrix(ch["rows"], "channel rows"))
    else:
        pnode = ch["product"]
        if not isinstance(pnode, yaml.MappingNode):
            raise SpecParseError("channel product must map node numbers to tables", _line(pnode))
        tables = {}
        for knode, vnode in pnode.value:
            j = _value(knode)
            if not isinstance(j, int) or not 1 <= j <= ell:
                raise SpecParseError(f"product channel key {j!r} is not a node number", _line(knode))
            tables[j - 1] = _matrix(vnode, f"table for node {j}")
        try:
            channel = Channel.product(xs, ys, tables)
        except SpecParseError:
            raise
        except Exception as exc:
            raise SpecParseError(str(exc), _line(pnode)) from None

    k = _value(top["messages"])
    if not isinstance(k, int) or k < 1:
        raise SpecParseError("messages must be a positive integer", _line(top["messages"]))
    H = _matrix(top["side_info"], "side_info")
    S = _matrix(top["demands"], "demands")
    for name, M in (("side_info", H), ("demands", S)):
        if M.shape != (k, ell):
            raise SpecParseError(f"{name} is {M.shape}, expected {(k, ell)}", _line(top[name]))
        if not np.isin(M, (0, 1)).all():
            raise SpecParseError(f"{name} must contain only 0/1", _line(top[name]))
    problem = NetworkProblem(channel, k, H.astype(int), S.astype(int))

    snode = top["sigma"]
    if not isinstance(snode, yaml.SequenceNode):
        raise SpecParseError("sigma must be a list of [message, node, value] triples", _line(snode))
    entries = {}
    for t in snode.value:
        v = _value(t)
        ok = (isinstance(v, list) and len(v) == 3
              and all(isinstance(a, int) and not isinstance(a, bool) for a in v[:2])
              and isinstance(v[2], (int, float)) and not isinstance(v[2], bool))
        if not ok:
            raise SpecParseError(f"malformed sigma triple {v!r}", _line(t))
        i, j, val = v
        if not (1 <= i <= k and 1 <= j <= ell):
            raise SpecParseError(f"sigma triple {v!r} is out of range", _line(t))
        if (i - 1, j - 1) in entries:
            raise SpecParseError(f"duplicate sigma triple {v!r}", _line(t))
        if val <= 0:
            raise SpecParseError(f"sigma triple {v!r} has a non-positive time", _line(t))
        entries[(i - 1, j - 1)] = float(val)
    sigma = TimeConstraints(entries)

    pairs = ()
    if "degraded_pairs" in top:
        raw = _value(top["degraded_pairs"])
        if not isinstance(raw, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(a, int) and 1 <= a <= ell for a in p)
            for p in raw
        ):
            raise SpecParseError("degraded_pairs must be [stronger, weaker] node pairs",
                                 _line(top["degraded_pairs"]))
        pairs = tuple((a - 1, b - 1) for a, b in raw)

    spec = NetworkSpec(problem, sigma, pairs)
    if validate:
        report = validate_problem(problem, sigma)
        if not report.ok:
            raise SpecParseError("; ".join(report.errors), _line(root))
    return spec


def load_spec(path, validate: bool = True) -> NetworkSpec:
    return parse_spec(Path(path).read_text(), validate=validate)


def fmt_num(x) -> str:
    """Shortest round-tripping text for a float; integers stay integral."""
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def fmt_row(row) -> str:
    return "[" + ", ".join(fmt_num(v) for v in row) + "]"


def dump_spec(spec: NetworkSpec) -> str:
    """Serialize a spec with the channel written as explicit rows."""
    p = spec.problem
    ch = p.channel
    lines = [
        f"nodes: {ch.node_count}",
        f"input_alphabets: {fmt_row(ch.input_alphabets)}",
        f"output_alphabets: {fmt_row(ch.output_alphabets)}",
        "channel:",
        "  rows:",
    ]
    lines += [f"    - {fmt_row(r)}" for r in ch.transition]
    lines.append(f"messages: {p.message_count}")
    lines.append("side_info:")
    lines += [f"  - {fmt_row(r)}" for r in p.side_info]
    lines.append("demands:")
    lines += [f"  - {fmt_row(r)}" for r in p.demands]
    lines.append("sigma:")
    lines += [f"  - [{i + 1}, {j + 1}, {fmt_num(v)}]" for (i, j), v in spec.sigma.entries]
    if spec.degraded_pairs:
        lines.append("degraded_pairs:")
        lines += [f"  - [{a + 1}, {b + 1}]" for a, b in spec.degraded_pairs]
    return "\n".join(lines) + "\n"
