"""Time expansion: sub-messages indexed by decoding schedules, and phase problems.

Each message ``m_i`` is split into sub-messages ``m_(i,a)`` where ``a_j`` is the
phase (1..L) by which node ``j`` must decode the part, or ``L+1`` when it need
not decode it at all. Phase ``l`` then becomes a classical problem whose
demands are the pairs with ``a_j = l`` and whose side information grows with
everything decoded in earlier phases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import ConstructionError, ResourceCapExceeded
from .model import NetworkProblem, TimeConstraints, TimePartition, time_partition
from .specfile import fmt_num, fmt_row

DEFAULT_SUBMESSAGE_CAP = 10**6


@dataclass(frozen=True, order=True)
class SubMessage:
    message: int
    schedule: tuple[int, ...]

    @property
    def label(self) -> str:
        return f"({self.message + 1}|{','.join(map(str, self.schedule))})"

    @classmethod
    def parse(cls, label: str) -> "SubMessage":
        body = label.strip()
        if not (body.startswith("(") and body.endswith(")") and "|" in body):
            raise ValueError(f"bad sub-message identifier {label!r}")
        i, a = body[1:-1].split("|", 1)
        return cls(int(i) - 1, tuple(int(x) for x in a.split(",")))


@dataclass(frozen=True, eq=False)
class ExpandedProblem:
    """The problem ``N_0``: same channel, messages replaced by sub-messages."""

    base: NetworkProblem
    sigma: TimeConstraints
    partition: TimePartition
    submessages: tuple[SubMessage, ...]
    S0: np.ndarray
    H0: np.ndarray
    sigma0: dict
    canonical: bool = True
    overhearing: bool = True

    @property
    def channel(self):
        return self.base.channel

    @property
    def n_phases(self) -> int:
        return self.partition.n_phases

    def index_of(self, sub: SubMessage | str) -> int:
        if isinstance(sub, str):
            sub = SubMessage.parse(sub)
        return self.submessages.index(sub)

    def tight_schedule(self, i: int) -> tuple[int, ...]:
        """The schedule that decodes all of ``m_i`` exactly at its original deadlines."""
        base, L = self.base, self.n_phases
        out = []
        for j in range(base.node_count):
            if base.demands[i, j] and not (self.canonical and base.side_info[i, j]):
                out.append(self.partition.phase_of((i, j)))
            else:
                out.append(L + 1)
        return tuple(out)

    def tight_index(self, i: int) -> int:
        return self.submessages.index(SubMessage(i, self.tight_schedule(i)))

    def is_overhearing(self, idx: int) -> bool:
        """True if the schedule asks some non-demanding, non-holding node to decode."""
        sub = self.submessages[idx]
        b = self.base
        L = self.n_phases
        return any(
            a <= L and b.demands[sub.message, j] == 0 and b.side_info[sub.message, j] == 0
            for j, a in enumerate(sub.schedule)
        )

    def message_members(self, i: int) -> list[int]:
        return [s for s, sub in enumerate(self.submessages) if sub.message == i]


@dataclass(frozen=True, eq=False)
class PhaseProblem:
    phase: int
    start: float
    end: float
    S: np.ndarray
    H: np.ndarray

    @property
    def duration(self) -> float:
        return self.end - self.start


def _choices(problem, partition, i, canonical, overhearing):
    L = partition.n_phases
    out = []
    for j in range(problem.node_count):
        held = problem.side_info[i, j] == 1
        if held and canonical:
            out.append((L + 1,))
        elif problem.demands[i, j] == 1:
            out.append(tuple(range(1, partition.phase_of((i, j)) + 1)))
        elif overhearing:
            out.append(tuple(range(1, L + 2)))
        else:
            out.append((L + 1,))
    return out


def index_set_size(problem, sigma, i, canonical=True, overhearing=True, partition=None) -> int:
    partition = partition or time_partition(sigma, problem.demands)
    return prod(len(c) for c in _choices(problem, partition, i, canonical, overhearing))


def build_index_set(problem: NetworkProblem, sigma: TimeConstraints, i: int,
                    canonical: bool = True, overhearing: bool = True,
                    partition: TimePartition | None = None) -> list[tuple[int, ...]]:
    """All admissible schedules for message ``i`` in lexicographic order."""
    partition = partition or time_partition(sigma, problem.demands)
    return list(itertools.product(*_choices(problem, partition, i, canonical, overhearing)))


def expand(problem: NetworkProblem, sigma: TimeConstraints, canonical: bool = True,
           overhearing: bool = True, cap: int = DEFAULT_SUBMESSAGE_CAP) -> ExpandedProblem:
    partition = time_partition(sigma, problem.demands)
    L = partition.n_phases
    total = sum(index_set_size(problem, sigma, i, canonical, overhearing, partition)
                for i in range(problem.message_count))
    if total > cap:
        raise ResourceCapExceeded(f"expansion needs {total} sub-messages, cap is {cap}")

    subs = []
    for i in range(problem.message_count):
        subs += [SubMessage(i, a) for a in build_index_set(problem, sigma, i, canonical, overhearing, partition)]
    ell = problem.node_count
    S0 = np.zeros((len(subs), ell), dtype=np.int8)
    H0 = np.zeros((len(subs), ell), dtype=np.int8)
    sigma0 = {}
    for s, sub in enumerate(subs):
        H0[s] = problem.side_info[sub.message]
        for j, a in enumerate(sub.schedule):
            if a <= L:
                S0[s, j] = 1
                sigma0[(s, j)] = partition.times[a - 1]
    S0.setflags(write=False)
    H0.setflags(write=False)
    return ExpandedProblem(problem, sigma, partition, tuple(subs), S0, H0, sigma0,
                           canonical, overhearing)


def phase_problems(expanded: ExpandedProblem) -> list[PhaseProblem]:
    L = expanded.n_phases
    sched = np.array([s.schedule for s in expanded.submessages], dtype=int).reshape(
        len(expanded.submessages), expanded.base.node_count)
    times = (0.0,) + expanded.partition.times
    phases = []
    H = expanded.H0.copy()
    for lam in range(1, L + 1):
        S = (sched == lam).astype(np.int8)
        Hl = H.copy()
        S.setflags(write=False)
        Hl.setflags(write=False)
        phases.append(PhaseProblem(lam, times[lam - 1], times[lam], S, Hl))
        H = np.maximum(H, S)

    total = sum((p.S.astype(int) for p in phases), np.zeros_like(expanded.S0, dtype=int))
    if not np.array_equal(total, expanded.S0):
        raise ConstructionError("phase demands do not sum to S0")
    if phases and not np.array_equal(phases[0].H, expanded.H0):
        raise ConstructionError("H_1 differs from H0")
    for a, b in zip(phases, phases[1:]):
        if not np.array_equal(b.H, np.maximum(a.H, a.S)):
            raise ConstructionError(f"side-information recursion broken at phase {b.phase}")
    return phases


def rates_to_original(expanded: ExpandedProblem, R0) -> np.ndarray:
    """Total rate per original message: the sum of its sub-message rates."""
    R0 = np.asarray(R0, dtype=float)
    if R0.shape != (len(expanded.submessages),):
        raise ValueError(f"sub-rate vector has shape {R0.shape}, expected ({len(expanded.submessages)},)")
    out = np.zeros(expanded.base.message_count)
    for s, sub in enumerate(expanded.submessages):
        out[sub.message] += R0[s]
    return out


def canonical_embedding(expanded: ExpandedProblem, R) -> np.ndarray:
    """Put each ``R_i`` on the tight schedule of message ``i``; zero elsewhere."""
    R = np.asarray(R, dtype=float)
    if R.shape != (expanded.base.message_count,):
        raise ValueError(f"rate vector has shape {R.shape}, expected ({expanded.base.message_count},)")
    R0 = np.zeros(len(expanded.submessages))
    for i, r in enumerate(R):
        R0[expanded.tight_index(i)] = r
    return R0


def canonicalize_submessages(submessages, rates, side_info, n_phases, phase_map=None):
    """Merge sub-messages that have identical effective decoding requirements.

    A coordinate held as side information is vacuous and becomes ``L+1``.
    ``phase_map`` optionally relabels schedule entries first (for instance to
    fold a refined phase split back onto the original phases); its image must
    lie in ``1..n_phases+1``. Rates of merged sub-messages are summed and the
    result is sorted lexicographically.
    """
    side_info = np.asarray(side_info)
    merged: dict[SubMessage, float] = {}
    for sub, r in zip(submessages, np.asarray(rates, dtype=float)):
        a = [phase_map[x] if phase_map else x for x in sub.schedule]
        a = tuple(n_phases + 1 if side_info[sub.message, j] else x for j, x in enumerate(a))
        key = SubMessage(sub.message, a)
        merged[key] = merged.get(key, 0.0) + float(r)
    keys = sorted(merged)
    return keys, np.array([merged[k] for k in keys])


def _channel_lines(ch) -> list[str]:
    lines = [
        f"nodes: {ch.node_count}",
        f"input_alphabets: {fmt_row(ch.input_alphabets)}",
        f"output_alphabets: {fmt_row(ch.output_alphabets)}",
        "channel:",
        "  rows:",
    ]
    return lines + [f"    - {fmt_row(r)}" for r in ch.transition]


def dump_expanded(expanded: ExpandedProblem) -> str:
    lines = _channel_lines(expanded.channel)
    lines.append(f"messages: {len(expanded.submessages)}")
    lines.append("submessages:")
    lines += [f'  - "{s.label}"' for s in expanded.submessages]
    lines.append("side_info:")
    lines += [f"  - {fmt_row(r)}" for r in expanded.H0]
    lines.append("demands:")
    lines += [f"  - {fmt_row(r)}" for r in expanded.S0]
    lines.append("sigma:")
    for (s, j), v in sorted(expanded.sigma0.items()):
        lines.append(f'  - ["{expanded.submessages[s].label}", {j + 1}, {fmt_num(v)}]')
    return "\n".join(lines) + "\n"


def dump_phase(expanded: ExpandedProblem, phase: PhaseProblem, base_ref: str = "expanded.yaml") -> str:
    lines = [
        f"base: {base_ref}",
        f"phase: {phase.phase}",
        f"start: {fmt_num(phase.start)}",
        f"end: {fmt_num(phase.end)}",
        f"duration: {fmt_num(phase.duration)}",
        "submessages:",
    ]
    lines += [f'  - "{s.label}"' for s in expanded.submessages]
    lines.append("side_info:")
    lines += [f"  - {fmt_row(r)}" for r in phase.H]
    lines.append("demands:")
    lines += [f"  - {fmt_row(r)}" for r in phase.S]
    return "\n".join(lines) + "\n"
