"""Discrete memoryless network problems and their decoding-time constraints.

Indices are 0-based in the Python API (message ``i``, node ``j``); spec files
and sub-message identifiers use 1-based numbering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError

STOCHASTIC_TOL = 1e-9

Pair = tuple[int, int]


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Channel:
    """Joint transition table ``W(y|x)`` over per-node product alphabets.

    Rows index the joint input vector and columns the joint output vector,
    both flattened in C order over nodes (node 0 is the most significant
    digit).
    """

    input_alphabets: tuple[int, ...]
    output_alphabets: tuple[int, ...]
    transition: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "input_alphabets", tuple(int(a) for a in self.input_alphabets))
        object.__setattr__(self, "output_alphabets", tuple(int(a) for a in self.output_alphabets))
        object.__setattr__(self, "transition", _frozen(self.transition, float))

    @classmethod
    def product(cls, input_alphabets, output_alphabets, receiver_tables: Mapping[int, np.ndarray]):
        """Build a channel whose outputs are conditionally independent given the input.

        ``receiver_tables[j]`` has one row per joint input and ``|Y_j|`` columns.
        Nodes missing from the mapping must have a single output letter.
        """
        n_in = prod(input_alphabets)
        factors = []
        for j, ny in enumerate(output_alphabets):
            if j in receiver_tables:
                t = np.asarray(receiver_tables[j], dtype=float)
                if t.shape != (n_in, ny):
                    raise ValidationError(
                        f"dimension mismatch: receiver table for node {j + 1} has shape "
                        f"{t.shape}, expected {(n_in, ny)}"
                    )
            elif ny == 1:
                t = np.ones((n_in, 1))
            else:
                raise ValidationError(f"dimension mismatch: no table for node {j + 1} with {ny} outputs")
            factors.append(t)
        joint = factors[0]
        for t in factors[1:]:
            joint = np.einsum("xa,xb->xab", joint, t).reshape(n_in, -1)
        return cls(tuple(input_alphabets), tuple(output_alphabets), joint)

    @property
    def node_count(self) -> int:
        return len(self.input_alphabets)

    @property
    def joint_inputs(self) -> int:
        return prod(self.input_alphabets)

    @property
    def joint_outputs(self) -> int:
        return prod(self.output_alphabets)

    def issues(self) -> list[str]:
        out = []
        if len(self.output_alphabets) != len(self.input_alphabets):
            out.append("dimension mismatch: input and output alphabet lists differ in length")
            return out
        if any(a < 1 for a in self.input_alphabets + self.output_alphabets):
            out.append("dimension mismatch: alphabet sizes must be positive")
            return out
        expected = (self.joint_inputs, self.joint_outputs)
        if self.transition.shape != expected:
            out.append(f"dimension mismatch: transition table is {self.transition.shape}, expected {expected}")
            return out
        W = self.transition
        if not np.all(np.isfinite(W)) or W.min() < 0 or W.max() > 1:
            out.append("stochasticity violation: entries outside [0, 1]")
        sums = W.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)
        for x in bad:
            out.append(f"stochasticity violation: row {x} sums to {sums[x]:.12g}")
        return out

    def input_nodes(self) -> list[int]:
        """Nodes whose input alphabet has more than one letter."""
        return [j for j, a in enumerate(self.input_alphabets) if a > 1]

    def receiver_marginal(self, j: int) -> np.ndarray:
        """``W(y_j | x)`` with rows over joint inputs."""
        W = self.transition.reshape((self.joint_inputs,) + self.output_alphabets)
        axes = tuple(1 + t for t in range(self.node_count) if t != j)
        return W.sum(axis=axes)

    def marginal_from(self, j: int, t: int | None) -> np.ndarray | None:
        """``W(y_j | x_t)`` if node j's output law depends on node t's input only.

        With ``t=None`` the output law must not depend on any input; the result
        then has a single row. Returns None when the dependence condition fails.
        """
        M = self.receiver_marginal(j).reshape(self.input_alphabets + (self.output_alphabets[j],))
        if t is None:
            flat = M.reshape(-1, M.shape[-1])
            return flat[:1].copy() if np.allclose(flat, flat[0], atol=1e-12) else None
        moved = np.moveaxis(M, t, 0).reshape(self.input_alphabets[t], -1, M.shape[-1])
        ref = moved[:, :1, :]
        if not np.allclose(moved, ref, atol=1e-12):
            return None
        return ref[:, 0, :].copy()


@dataclass(frozen=True, eq=False)
class NetworkProblem:
    """Channel together with ``k`` messages, side information ``H`` and demands ``S``."""

    channel: Channel
    message_count: int
    side_info: np.ndarray
    demands: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "side_info", _frozen(self.side_info, np.int8))
        object.__setattr__(self, "demands", _frozen(self.demands, np.int8))

    @property
    def node_count(self) -> int:
        return self.channel.node_count

    def demand_pairs(self) -> list[Pair]:
        return [tuple(map(int, p)) for p in np.argwhere(self.demands == 1)]

    def holds(self, i: int, j: int) -> bool:
        return bool(self.side_info[i, j])


@dataclass(frozen=True)
class TimeConstraints:
    """Decoding-time fractions ``sigma_ij``, one per demand pair."""

    entries: tuple[tuple[Pair, float], ...]

    def __init__(self, entries: Mapping[Pair, float] | Iterable[tuple[Pair, float]]):
        items = entries.items() if isinstance(entries, Mapping) else entries
        norm = sorted(((int(i), int(j)), float(v)) for (i, j), v in items)
        object.__setattr__(self, "entries", tuple(norm))

    def __getitem__(self, pair: Pair) -> float:
        return self.as_dict()[pair]

    def __contains__(self, pair) -> bool:
        return pair in self.as_dict()

    def __len__(self):
        return len(self.entries)

    def as_dict(self) -> dict[Pair, float]:
        return dict(self.entries)

    def scaled(self, alpha: float) -> "TimeConstraints":
        return TimeConstraints({p: alpha * v for p, v in self.entries})

    def replace(self, pair: Pair, value: float) -> "TimeConstraints":
        d = self.as_dict()
        d[pair] = float(value)
        return TimeConstraints(d)


@dataclass(frozen=True)
class TimePartition:
    """Sorted distinct decoding times and the demand pairs due at each of them.

    ``delta[l]`` for ``l < n_phases`` holds pairs due at ``times[l]``; the last
    entry holds every pair with ``s_ij = 0``.
    """

    times: tuple[float, ...]
    delta: tuple[frozenset, ...]

    @property
    def n_phases(self) -> int:
        return len(self.times)

    def phase_of(self, pair: Pair) -> int:
        """1-based phase index of a pair; ``n_phases + 1`` for non-demands."""
        for lam, members in enumerate(self.delta, start=1):
            if pair in members:
                return lam
        raise KeyError(pair)


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    trivial_demands: tuple[Pair, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_for_errors(self):
        if self.errors:
            raise ValidationError("; ".join(self.errors), self.errors)
        return self


def validate_problem(problem: NetworkProblem, sigma: TimeConstraints) -> ValidationReport:
    """Check every invariant of ``(problem, sigma)`` and collect the violations.

    Demands whose node already holds the message are reported in
    ``trivial_demands``; they are legal and count as decoded at time 0.
    """
    errors = list(problem.channel.issues())
    k, ell = problem.message_count, problem.node_count
    H, S = problem.side_info, problem.demands
    if k < 1:
        errors.append("dimension mismatch: message count must be positive")
    for name, M in (("side-info", H), ("demand", S)):
        if M.shape != (k, ell):
            errors.append(f"dimension mismatch: {name} matrix is {M.shape}, expected {(k, ell)}")
        elif not np.isin(M, (0, 1)).all():
            errors.append(f"{name} matrix must be binary")
    if errors and any(e.startswith("dimension mismatch") for e in errors):
        return ValidationReport(tuple(errors))

    for i in range(k):
        if H[i].sum() < 1:
            errors.append(f"no holder: message {i + 1} is held by no node")
        if S[i].sum() < 1:
            errors.append(f"no demander: message {i + 1} is demanded by no node")

    given = sigma.as_dict()
    for (i, j), v in sigma.entries:
        if not (0 <= i < k and 0 <= j < ell) or S[i, j] != 1:
            errors.append(f"orphan time constraint: ({i + 1}, {j + 1}) is not a demand")
        elif not np.isfinite(v) or v <= 0:
            errors.append(f"non-positive time constraint: sigma({i + 1}, {j + 1}) = {v!r}")
    for i, j in problem.demand_pairs():
        if (i, j) not in given:
            errors.append(f"missing time constraint for demand ({i + 1}, {j + 1})")

    trivial = tuple((i, j) for i, j in problem.demand_pairs() if H[i, j] == 1)
    return ValidationReport(tuple(errors), trivial)


def time_partition(sigma: TimeConstraints, demands) -> TimePartition:
    """Group demand pairs by their (exactly equal) decoding times."""
    S = np.asarray(demands)
    d = sigma.as_dict()
    times = tuple(sorted(set(d[p] for p in d)))
    index = {t: lam for lam, t in enumerate(times)}
    buckets: list[set] = [set() for _ in times]
    for p, t in d.items():
        buckets[index[t]].add(p)
    rest = frozenset((int(i), int(j)) for i, j in np.argwhere(S == 0))
    return TimePartition(times, tuple(frozenset(b) for b in buckets) + (rest,))
