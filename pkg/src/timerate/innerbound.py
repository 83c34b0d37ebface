"""Inner bound on the rate slice at fixed deadlines, composed from phase oracles.

A sub-rate allocation ``R0`` is accepted when, in every phase ``l``, the rates
of the sub-messages active in that phase, divided by the phase length
``sigma_l - sigma_{l-1}``, lie in the single-phase region of ``N_l``. Summing
sub-rates per message then gives an achievable rate vector for the original
problem.

Phase dispatch. Active sub-messages are grouped by the set of nodes that still
have to decode them in the phase. Each group is served by a transmitter: an
input node that holds all of the group's sub-messages at the start of the
phase and whose input alone drives every receiver of the group. Groups that
share a transmitter form a session, and a session maps to a shipped oracle:

* one group with one receiver: point-to-point capacity;
* one group with several receivers: common-message (multicast) capacity;
* two groups with receiver sets ``{s, w}`` and ``{s}`` where ``w`` is degraded
  with respect to ``s``: superposition region (private, common);
* the same with ``s`` degraded with respect to ``w``: a single codebook for the
  weaker receiver, ``private + common <= C_s``.

Sessions with distinct transmitters do not interact, so a phase region is the
product of its session regions. Any other pattern raises
UnsupportedPhaseStructure.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import ResourceCapExceeded, UnsupportedPhaseStructure
from .expansion import ExpandedProblem, PhaseProblem, rates_to_original
from .oracles import (DegradedBroadcastOracle, MulticastOracle, OracleSettings, PointToPointOracle,
                      RegionOracle, WeakPrivateOracle)

FEAS_TOL = 1e-9
MAX_FRONTIER_MESSAGES = 3
GRID_CAP = 10**6


@dataclass(frozen=True)
class DemandGroup:
    receivers: tuple[int, ...]
    members: tuple[int, ...]


@dataclass(frozen=True)
class Session:
    transmitter: int | None
    groups: tuple[DemandGroup, ...]
    oracle: RegionOracle
    channels: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class PhaseConstraint:
    phase: int
    duration: float
    active: tuple[int, ...]
    sessions: tuple[Session, ...]


def _describe(expanded, phase, groups) -> str:
    parts = []
    for g in groups:
        labels = ",".join(expanded.submessages[s].label for s in g.members)
        parts.append(f"{{{labels}}} -> nodes {{{','.join(str(j + 1) for j in g.receivers)}}}")
    return f"phase {phase}: " + "; ".join(parts)


def _demand_groups(phase: PhaseProblem, members) -> list[DemandGroup]:
    by_set: dict[tuple, list] = {}
    for s in members:
        eff = tuple(int(j) for j in np.flatnonzero((phase.S[s] == 1) & (phase.H[s] == 0)))
        if eff:
            by_set.setdefault(eff, []).append(int(s))
    return [DemandGroup(r, tuple(sorted(m))) for r, m in sorted(by_set.items())]


def _transmitter_for(expanded, phase, group):
    ch = expanded.channel
    inputs = ch.input_nodes()
    if not inputs:
        marg = [ch.marginal_from(j, None) for j in group.receivers]
        return (None, marg) if all(m is not None for m in marg) else None
    for t in inputs:
        if not all(phase.H[s, t] for s in group.members):
            continue
        marg = [ch.marginal_from(j, t) for j in group.receivers]
        if all(m is not None for m in marg):
            return t, marg
    return None


def _session_oracle(expanded, phase, transmitter, groups, channels, settings):
    key_base = (transmitter,)
    for plugin in settings.plugins:
        oracle = plugin(Session(transmitter, tuple(groups), None, channels))
        if oracle is not None:
            return tuple(groups), oracle
    if len(groups) == 1:
        (g,) = groups
        if len(g.receivers) == 1:
            j = g.receivers[0]
            oracle = settings.cached(("p2p",) + key_base + (j,),
                                     lambda: PointToPointOracle(channels[j], j, settings.tol))
        else:
            oracle = settings.cached(
                ("multicast",) + key_base + g.receivers,
                lambda: MulticastOracle([channels[j] for j in g.receivers], g.receivers,
                                        settings.tol, settings.grid_steps))
        return (g,), oracle
    if len(groups) == 2:
        small, big = sorted(groups, key=lambda g: len(g.receivers))
        if len(big.receivers) == 2 and len(small.receivers) == 1 and set(small.receivers) < set(big.receivers):
            p = small.receivers[0]
            o = next(j for j in big.receivers if j != p)
            if settings.is_degraded(p, o, channels[p], channels[o]):
                oracle = settings.cached(
                    ("dbc",) + key_base + (p, o),
                    lambda: DegradedBroadcastOracle(channels[p], channels[o], p, o,
                                                    settings.grid_steps, settings.u_cardinality))
                return (small, big), oracle
            if settings.is_degraded(o, p, channels[o], channels[p]):
                oracle = settings.cached(
                    ("weak-private",) + key_base + (o, p),
                    lambda: WeakPrivateOracle(channels[o], channels[p], o, p, settings.tol))
                return (small, big), oracle
    return None


def phase_constraint(expanded: ExpandedProblem, phase: PhaseProblem, members,
                     settings: OracleSettings | None = None) -> PhaseConstraint:
    """Map the active part of one phase problem onto shipped oracles."""
    settings = settings or OracleSettings()
    groups = _demand_groups(phase, members)
    sessions_by_tx: dict = {}
    chans_by_tx: dict = {}
    for g in groups:
        found = _transmitter_for(expanded, phase, g)
        if found is None:
            raise UnsupportedPhaseStructure(
                "unsupported phase structure: no single holder drives the receivers of "
                + _describe(expanded, phase.phase, [g]))
        t, marg = found
        sessions_by_tx.setdefault(t, []).append(g)
        chans_by_tx.setdefault(t, {}).update(dict(zip(g.receivers, marg)))
    sessions = []
    for t in sorted(sessions_by_tx, key=lambda x: -1 if x is None else x):
        got = _session_oracle(expanded, phase, t, sessions_by_tx[t], chans_by_tx[t], settings)
        if got is None:
            raise UnsupportedPhaseStructure(
                "unsupported phase structure: " + _describe(expanded, phase.phase, sessions_by_tx[t]))
        ordered, oracle = got
        sessions.append(Session(t, ordered, oracle, chans_by_tx[t]))
    active = tuple(sorted(s for g in groups for s in g.members))
    return PhaseConstraint(phase.phase, phase.duration, active, tuple(sessions))


def build_constraints(expanded, phases, members, settings=None) -> list[PhaseConstraint]:
    settings = settings or OracleSettings()
    return [phase_constraint(expanded, p, members, settings) for p in phases]


@dataclass
class AllocationCheck:
    ok: bool
    witnesses: list = field(default_factory=list)
    violations: list = field(default_factory=list)


def _session_rates(session: Session, R0, duration):
    return np.array([sum(R0[s] for s in g.members) for g in session.groups]) / duration


def _check(constraints, R0, tol=FEAS_TOL) -> AllocationCheck:
    out = AllocationCheck(True)
    for pc in constraints:
        phase_w = []
        for sess in pc.sessions:
            r = _session_rates(sess, R0, pc.duration)
            ok, wit = sess.oracle.contains(r, tol)
            wit = dict(wit, phase=pc.phase, transmitter=None if sess.transmitter is None else sess.transmitter + 1,
                       rates=r.tolist())
            phase_w.append(wit)
            if not ok:
                out.ok = False
                out.violations.append(f"phase {pc.phase}: rates {r.tolist()} outside {sess.oracle.kind} region")
        out.witnesses.append(phase_w)
    return out


def check_allocation(expanded: ExpandedProblem, phases, R0, settings: OracleSettings | None = None,
                     tol: float = FEAS_TOL) -> AllocationCheck:
    """Does every phase accept its scaled share of ``R0``? Returns per-phase witnesses."""
    R0 = np.asarray(R0, dtype=float)
    if R0.shape != (len(expanded.submessages),):
        raise ValueError("sub-rate vector does not match the expanded problem")
    if (R0 < -tol).any():
        return AllocationCheck(False, violations=["negative sub-rate"])
    active = [int(s) for s in np.flatnonzero(R0 > 0)]
    return _check(build_constraints(expanded, phases, active, settings), R0, tol)


def admit_submessages(expanded, phases, settings, excluded=()):
    """Choose the sub-messages the search may use.

    Tight schedules go first and must be supported. Every other schedule is
    then tried in lexicographic order and kept only if all phases stay
    supported. Returns ``(admitted, rejected)`` index lists.
    """
    excluded = set(excluded)
    k = expanded.base.message_count
    tight = [expanded.tight_index(i) for i in range(k)]
    admitted = [s for s in tight if s not in excluded]
    build_constraints(expanded, phases, admitted, settings)
    rejected = []
    for s in range(len(expanded.submessages)):
        if s in tight or s in excluded:
            continue
        try:
            build_constraints(expanded, phases, admitted + [s], settings)
        except UnsupportedPhaseStructure:
            rejected.append(s)
            continue
        admitted.append(s)
    return sorted(admitted), rejected


@dataclass
class WeightedRate:
    weights: np.ndarray
    value: float
    rates: np.ndarray
    allocation: np.ndarray
    witnesses: list
    admitted: list
    rejected: list


def _lp_solve(expanded, constraints, admitted, weights, fixed):
    n = len(expanded.submessages)
    msg = np.array([sub.message for sub in expanded.submessages])
    c = -np.asarray(weights, dtype=float)[msg]
    rows, rhs = [], []
    for pc in constraints:
        for sess in pc.sessions:
            A, b = sess.oracle.halfspaces()
            M = np.zeros((len(sess.groups), n))
            for gi, g in enumerate(sess.groups):
                M[gi, list(g.members)] = 1.0
            rows.append(A @ M)
            rhs.append(pc.duration * b)
    bounds = []
    adm = set(admitted)
    for s in range(n):
        if s in fixed:
            bounds.append((fixed[s], fixed[s]))
        elif s in adm:
            bounds.append((0, None))
        else:
            bounds.append((0, 0))
    A_ub = np.vstack(rows) if rows else None
    b_ub = np.concatenate(rhs) if rhs else None
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status == 3:
        raise ValueError("unbounded: some weighted message has no demand left to constrain it")
    if res.status != 0:
        raise ValueError(f"allocation LP failed: {res.message}")
    return np.clip(res.x, 0.0, None)


def _grid_solve(expanded, constraints, admitted, weights, fixed, resolution, cap=GRID_CAP):
    n = len(expanded.submessages)
    msg = np.array([sub.message for sub in expanded.submessages])
    w = np.asarray(weights, dtype=float)[msg]
    free = [s for s in admitted if s not in fixed]
    upper = {}
    for s in free:
        caps = []
        for pc in constraints:
            for sess in pc.sessions:
                for gi, g in enumerate(sess.groups):
                    if s in g.members:
                        e = np.zeros(len(sess.groups))
                        e[gi] = 1.0
                        caps.append(pc.duration * sess.oracle.maximize(e)[0])
        if not caps:
            raise ValueError("unbounded: sub-message without any phase constraint")
        upper[s] = min(caps)
    axes = [np.arange(0.0, upper[s] + resolution / 2, resolution) for s in free]
    total = int(np.prod([len(a) for a in axes])) if axes else 1
    if total > cap:
        raise ResourceCapExceeded(f"allocation grid has {total} points, cap is {cap}")
    best, best_x = -np.inf, None
    base = np.zeros(n)
    for s, v in fixed.items():
        base[s] = v
    for combo in itertools.product(*axes):
        x = base.copy()
        x[free] = combo
        val = float(w @ x)
        if val <= best:
            continue
        if _check(constraints, x).ok:
            best, best_x = val, x
    return best_x


def max_weighted_rate(expanded: ExpandedProblem, phases, weights, settings: OracleSettings | None = None,
                      fixed: dict | None = None, resolution: float = 1e-3) -> WeightedRate:
    """Largest ``sum_i w_i R_i`` over allocations every phase oracle accepts.

    ``fixed`` pins chosen sub-rates (by index or label). With polyhedral
    oracles the search is an exact LP; otherwise a grid over sub-rates with the
    given resolution. The returned point is re-checked and carries witnesses.
    """
    settings = settings or OracleSettings()
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (expanded.base.message_count,) or (weights < 0).any() or not weights.any():
        raise ValueError("weights must be nonnegative, one per message, not all zero")
    fixed = {(expanded.index_of(k) if isinstance(k, str) else int(k)): float(v) for k, v in (fixed or {}).items()}
    zero = [s for s, v in fixed.items() if v == 0.0]
    admitted, rejected = admit_submessages(expanded, phases, settings, excluded=zero)
    fixed_nz = {s: v for s, v in fixed.items() if v != 0.0}
    for s in fixed_nz:
        if s not in admitted:
            raise UnsupportedPhaseStructure(
                f"unsupported phase structure: fixed sub-message {expanded.submessages[s].label} cannot be served")
    constraints = build_constraints(expanded, phases, admitted, settings)
    constrained = {s for pc in constraints for s in pc.active}
    for s in admitted:
        if s not in constrained and weights[expanded.submessages[s].message] > 0:
            raise ValueError(f"unbounded: {expanded.submessages[s].label} has only trivially satisfied demands")
    admitted = [s for s in admitted if s in constrained]

    polyhedral = all(sess.oracle.halfspaces() is not None for pc in constraints for sess in pc.sessions)
    if polyhedral:
        x = _lp_solve(expanded, constraints, admitted, weights, fixed)
    else:
        x = _grid_solve(expanded, constraints, admitted, weights, fixed, resolution)
    check = _check(constraints, x)
    if not check.ok:
        # LP vertices can overshoot by rounding; pull back to the feasible side
        x = x * (1 - 1e-12)
        check = _check(constraints, x)
    if not check.ok:
        raise ValueError("optimizer returned an allocation the oracles reject: " + "; ".join(check.violations))
    R = rates_to_original(expanded, x)
    return WeightedRate(weights, float(weights @ R), R, x, check.witnesses, admitted, rejected)


@dataclass
class InnerBoundRegion:
    """Achievable rate vectors: the downward-closed convex hull of ``points``."""

    points: np.ndarray
    provenance: list = field(default_factory=list)
    labels: tuple = ()

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def contains(self, R, tol: float = FEAS_TOL) -> bool:
        R = np.asarray(R, dtype=float)
        if (R < -tol).any():
            return False
        P = self.points
        m = len(P)
        res = linprog(np.zeros(m), A_ub=np.vstack([-P.T, np.ones((1, m))]),
                      b_ub=np.append(-R + tol, 1.0), bounds=[(0, None)] * m, method="highs")
        return res.status == 0

    def max_weighted(self, weights) -> float:
        return float(np.max(self.points @ np.asarray(weights, dtype=float)))

    @property
    def max_sum_rate(self) -> float:
        return self.max_weighted(np.ones(self.dim))

    def to_csv(self, expanded: ExpandedProblem | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        k = self.dim
        head = [f"R{i + 1}" for i in range(k)] + ["weights", "allocation", "witnesses"]
        w.writerow(head)
        for idx, p in enumerate(self.points):
            prov = self.provenance[idx] if idx < len(self.provenance) else {}
            alloc = prov.get("allocation")
            if alloc is not None and expanded is not None:
                alloc_txt = " ".join(f"{expanded.submessages[s].label}={v:.9g}"
                                     for s, v in enumerate(alloc) if v > 0)
            else:
                alloc_txt = ""
            w.writerow([f"{v:.9g}" for v in p]
                       + [" ".join(f"{v:.9g}" for v in prov.get("weights", [])), alloc_txt,
                          json.dumps(round_sig(prov.get("witnesses", [])), sort_keys=True)])
        return buf.getvalue()


def round_sig(obj, digits: int = 9):
    """Round every float inside nested lists/dicts to ``digits`` significant digits."""
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{digits}g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def convexify(region: InnerBoundRegion, tol: float = 1e-12) -> InnerBoundRegion:
    """Keep only the vertices of the downward-closed hull (drops dominated and face points)."""
    pts = np.asarray(region.points, dtype=float)
    prov = list(region.provenance) + [{}] * (len(pts) - len(region.provenance))
    if len(pts) == 0:
        return InnerBoundRegion(pts, [], region.labels)
    order = np.lexsort(pts.T[::-1])
    pts, prov = pts[order], [prov[i] for i in order]
    keep_p, keep_v = [], []
    for i, p in enumerate(pts):
        if any(np.allclose(p, q, atol=tol) for q in keep_p):
            continue
        keep_p.append(p)
        keep_v.append(prov[i])
    changed = True
    while changed:
        changed = False
        for i in range(len(keep_p)):
            others = [q for j, q in enumerate(keep_p) if j != i]
            if others and InnerBoundRegion(np.array(others)).contains(keep_p[i], tol=tol):
                del keep_p[i]
                del keep_v[i]
                changed = True
                break
    return InnerBoundRegion(np.array(keep_p), keep_v, region.labels)


def sweep_weights(k: int, count: int) -> list[np.ndarray]:
    """Deterministic nonnegative weight directions covering the positive orthant."""
    if k == 1:
        return [np.ones(1)]
    if k == 2:
        thetas = np.linspace(0.0, np.pi / 2, max(count, 2))
        return [np.array([np.cos(t), np.sin(t)]).round(15) for t in thetas]
    m = 1
    while len(list(itertools.combinations(range(m + k - 1), k - 1))) < count:
        m += 1
    out = []
    for bars in itertools.combinations(range(m + k - 1), k - 1):
        edges = (-1,) + bars + (m + k - 1,)
        out.append(np.array([edges[a + 1] - edges[a] - 1 for a in range(k)], dtype=float) / m)
    return out


def inner_bound_frontier(expanded: ExpandedProblem, phases, objective_count: int = 33,
                         settings: OracleSettings | None = None, fixed: dict | None = None,
                         max_messages: int = MAX_FRONTIER_MESSAGES) -> InnerBoundRegion:
    """Trace the inner bound by sweeping weight vectors, then convexify."""
    settings = settings or OracleSettings()
    k = expanded.base.message_count
    if k > max_messages:
        raise ResourceCapExceeded(f"frontier sweeps support at most {max_messages} messages, got {k}")
    pts, prov = [], []
    for w in sweep_weights(k, objective_count):
        res = max_weighted_rate(expanded, phases, w, settings, fixed)
        pts.append(res.rates)
        prov.append({"weights": w.tolist(), "allocation": res.allocation.tolist(),
                     "witnesses": res.witnesses})
    region = InnerBoundRegion(np.array(pts), prov, tuple(f"R{i + 1}" for i in range(k)))
    return convexify(region)


def summary(region: InnerBoundRegion, expanded: ExpandedProblem, best: WeightedRate | None = None,
            outer: float | None = None) -> dict:
    out = {
        "messages": expanded.base.message_count,
        "submessages": len(expanded.submessages),
        "phases": expanded.n_phases,
        "max_sum_rate": float(f"{region.max_sum_rate:.9g}"),
        "frontier_points": len(region.points),
    }
    if best is not None:
        out["weights"] = [float(f"{v:.9g}") for v in best.weights]
        out["max_weighted_rate"] = float(f"{best.value:.9g}")
        out["rates"] = [float(f"{v:.9g}") for v in best.rates]
        out["allocation"] = {expanded.submessages[s].label: float(f"{v:.9g}")
                             for s, v in enumerate(best.allocation)}
        out["rejected_submessages"] = [expanded.submessages[s].label for s in best.rejected]
        out["witnesses"] = round_sig(best.witnesses)
    if outer is not None:
        out["outer_reference"] = float(f"{outer:.9g}")
        out["gap"] = float(f"{outer - region.max_sum_rate:.9g}")
    return out
