import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import spec_path
from timerate.errors import ResourceCapExceeded, UnsupportedPhaseStructure
from timerate.expansion import canonical_embedding, expand, phase_problems, rates_to_original
from timerate.infotheory import binary_entropy, blahut_arimoto_capacity
from timerate.innerbound import (InnerBoundRegion, check_allocation, convexify, inner_bound_frontier,
                                 max_weighted_rate, sweep_weights)
from timerate.model import Channel, NetworkProblem, TimeConstraints
from timerate.oracles import DegradedBroadcastOracle, OracleSettings, PointToPointOracle, verify_witness
from timerate.specfile import load_spec


def setup(name, sigma=None, **kw):
    spec = load_spec(spec_path(name))
    e = expand(spec.problem, sigma or spec.sigma, **kw)
    return spec, e, phase_problems(e), OracleSettings(degraded_pairs=spec.degraded_pairs)


def lp_by_vertices(A, b):
    """max r1 + r2 over {A r <= b, r >= 0} by enumerating pairwise line intersections."""
    rows = list(A) + [np.array([-1.0, 0.0]), np.array([0.0, -1.0])]
    rhs = list(b) + [0.0, 0.0]
    best = -np.inf
    for (a1, b1), (a2, b2) in itertools.combinations(zip(rows, rhs), 2):
        M = np.array([a1, a2])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, [b1, b2])
        if all(r @ x <= c + 1e-12 for r, c in zip(rows, rhs)):
            best = max(best, x.sum())
    return best


def test_erasure_broadcast_optimum_matches_vertex_enumeration():
    # phase 1: 2 R11 + R12 <= 0.5 ; phase 2: R12 <= 0.25
    expected = lp_by_vertices(np.array([[2.0, 1.0], [0.0, 1.0]]), np.array([0.5, 0.25]))
    assert expected == pytest.approx(0.375)
    spec, e, ph, st_ = setup("erasure_broadcast")
    res = max_weighted_rate(e, ph, [1.0], st_)
    assert res.value == pytest.approx(expected, abs=1e-9)
    np.testing.assert_allclose(res.allocation, [0.125, 0.25], atol=1e-9)


def test_forced_zero_common_part():
    spec, e, ph, st_ = setup("erasure_broadcast")
    res = max_weighted_rate(e, ph, [1.0], st_, fixed={"(1|3,1,1)": 0.0})
    assert res.value == pytest.approx(0.25, abs=1e-9)


@pytest.mark.parametrize("r0, ok", [([0.125, 0.25], True), ([0.2, 0.25], False), ([0.0, 0.0], True)])
def test_check_allocation_examples(r0, ok):
    spec, e, ph, st_ = setup("erasure_broadcast")
    assert check_allocation(e, ph, r0, st_).ok is ok


def test_check_allocation_witnesses():
    spec, e, ph, st_ = setup("erasure_broadcast")
    chk = check_allocation(e, ph, [0.125, 0.25], st_)
    (w1,), (w2,) = chk.witnesses
    assert w1["oracle"] == "degraded-broadcast" and w1["rates"] == [0.5, 0.25]
    assert w2["oracle"] == "point-to-point" and w2["rates"] == [0.5]


def _session_channels(spec, witness):
    t = witness["transmitter"] - 1
    return {j + 1: spec.problem.channel.marginal_from(j, t) for j in range(spec.problem.node_count)
            if spec.problem.channel.marginal_from(j, t) is not None}


@pytest.mark.parametrize("name", ["erasure_broadcast", "bsc_broadcast", "two_links", "three_node_schedule"])
def test_frontier_points_carry_valid_witnesses(name):
    spec, e, ph, st_ = setup(name)
    region = inner_bound_frontier(e, ph, 9, st_)
    for point, prov in zip(region.points, region.provenance):
        alloc = np.array(prov["allocation"])
        np.testing.assert_allclose(rates_to_original(e, alloc), point, atol=1e-12)
        assert check_allocation(e, ph, alloc, st_).ok
        for phase_w in prov["witnesses"]:
            for w in phase_w:
                assert verify_witness(w, w["rates"], _session_channels(spec, w), tol=1e-9)


def test_frontier_is_single_value_for_erasure_broadcast():
    spec, e, ph, st_ = setup("erasure_broadcast")
    region = inner_bound_frontier(e, ph, 5, st_)
    np.testing.assert_allclose(region.points, [[0.375]])
    assert convexify(region).points.tolist() == region.points.tolist()


def test_independent_links_give_a_rectangle():
    spec, e, ph, st_ = setup("two_links")
    region = inner_bound_frontier(e, ph, 9, st_)
    corner = [0.8 * (1 - binary_entropy(0.11)), 0.8 * 0.7]
    assert region.contains(corner, tol=1e-9)
    assert not region.contains(np.array(corner) + [1e-6, 0])
    assert not region.contains(np.array(corner) + [0, 1e-6])


def test_unsupported_structure_is_refused():
    spec, e, ph, st_ = setup("three_receiver_unsupported")
    with pytest.raises(UnsupportedPhaseStructure, match="unsupported phase structure.*nodes \\{2,3,4\\}"):
        max_weighted_rate(e, ph, [1.0, 1.0], st_)
    with pytest.raises(UnsupportedPhaseStructure):
        check_allocation(e, ph, np.ones(len(e.submessages)) * 0.01, st_)


def test_overhearing_schedules_only_when_supported():
    spec, e, ph, st_ = setup("three_node_schedule")
    res = max_weighted_rate(e, ph, [1.0], st_)
    rejected = {e.submessages[s].label for s in res.rejected}
    assert rejected == {"(1|3,1,1,1)", "(1|3,1,1,2)", "(1|3,1,2,1)"}
    # phase 1: R_p / 0.4 + R_c / 0.32 <= 1 with R_p <= 0.4 from phase 2
    assert res.value == pytest.approx(0.48, abs=1e-9)
    e2 = expand(spec.problem, spec.sigma, overhearing=False)
    assert max_weighted_rate(e2, phase_problems(e2), [1.0], st_).value == pytest.approx(0.48, abs=1e-9)


def test_reversed_deadlines_use_the_weaker_receiver():
    # node 2 (noiseless) now has the later deadline
    spec = load_spec(spec_path("erasure_broadcast"))
    sigma = spec.sigma.replace((0, 1), 1.2)
    e = expand(spec.problem, sigma)
    res = max_weighted_rate(e, phase_problems(e), [1.0], OracleSettings(degraded_pairs=spec.degraded_pairs))
    assert res.value == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("sigma", [1.0, 0.6])
def test_single_phase_equals_scaled_oracle(sigma):
    spec = load_spec(spec_path("bsc_broadcast"))
    sig = TimeConstraints({p: sigma for p in spec.sigma.as_dict()})
    e = expand(spec.problem, sig, overhearing=False)
    ph = phase_problems(e)
    st_ = OracleSettings(degraded_pairs=spec.degraded_pairs)
    W1 = spec.problem.channel.marginal_from(1, 0)
    W2 = spec.problem.channel.marginal_from(2, 0)
    oracle = DegradedBroadcastOracle(W1, W2, 1, 2)
    for w in sweep_weights(2, 17):
        got = max_weighted_rate(e, ph, w, st_).value
        # message 1 is the common part, message 2 the private part
        want = sigma * oracle.maximize([w[1], w[0]])[0]
        assert got == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("name", ["erasure_broadcast", "bsc_broadcast", "three_node_schedule"])
@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_region_scales_with_time(name, alpha):
    spec, e, ph, st_ = setup(name)
    e2 = expand(spec.problem, spec.sigma.scaled(alpha))
    ph2 = phase_problems(e2)
    for w in sweep_weights(spec.problem.message_count, 9):
        a = max_weighted_rate(e, ph, w, st_).value
        b = max_weighted_rate(e2, ph2, w, st_).value
        assert b == pytest.approx(alpha * a, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([0.25, 0.5, 0.75, 1.0, 1.5]), st.sampled_from([0.25, 0.5, 0.75, 1.0, 1.5]),
       st.sampled_from([0.25, 0.5, 1.0]), st.booleans())
def test_monotone_in_deadlines(s1, s2, delta, first):
    spec = load_spec(spec_path("erasure_broadcast"))
    st_ = OracleSettings(degraded_pairs=spec.degraded_pairs)
    base = TimeConstraints({(0, 1): s1, (0, 2): s2})
    bigger = base.replace((0, 1) if first else (0, 2), (s1 if first else s2) + delta)
    vals = []
    for sig in (base, bigger):
        e = expand(spec.problem, sig)
        vals.append(max_weighted_rate(e, phase_problems(e), [1.0], st_).value)
    assert vals[1] >= vals[0] - 1e-9


def test_backmapped_allocations_and_tight_embeddings_lie_in_region():
    spec, e, ph, st_ = setup("bsc_broadcast")
    region = inner_bound_frontier(e, ph, 17, st_)
    for prov in region.provenance:
        assert region.contains(rates_to_original(e, np.array(prov["allocation"])))
    rng = np.random.default_rng(3)
    hits = 0
    for R in rng.uniform(0, 0.5, size=(200, 2)):
        if check_allocation(e, ph, canonical_embedding(e, R), st_).ok:
            hits += 1
            assert region.contains(R, tol=1e-9)
    assert hits > 10


def test_convexify_examples():
    two = InnerBoundRegion(np.array([[0.5, 0.0], [0.0, 0.5]]))
    assert two.contains([0.25, 0.25]) and not two.contains([0.26, 0.25])
    region = InnerBoundRegion(np.array([[0.5, 0.0], [0.0, 0.5], [0.2, 0.2], [0.25, 0.25], [0.5, 0.0]]))
    once = convexify(region)
    assert sorted(map(tuple, once.points)) == [(0.0, 0.5), (0.5, 0.0)]
    assert convexify(once).points.tolist() == once.points.tolist()


def test_weights_validation_and_unbounded():
    spec, e, ph, st_ = setup("erasure_broadcast")
    with pytest.raises(ValueError):
        max_weighted_rate(e, ph, [0.0], st_)
    with pytest.raises(ValueError):
        max_weighted_rate(e, ph, [-1.0], st_)
    # message 1 is only demanded by its own holder
    ch = Channel((2, 1), (1, 2), np.array([[1.0, 0.0], [0.0, 1.0]]))
    p = NetworkProblem(ch, 2, np.array([[1, 0], [1, 0]]), np.array([[1, 0], [0, 1]]))
    sig = TimeConstraints({(0, 0): 1.0, (1, 1): 1.0})
    ex = expand(p, sig)
    with pytest.raises(ValueError, match="unbounded"):
        max_weighted_rate(ex, phase_problems(ex), [1.0, 1.0])
    assert max_weighted_rate(ex, phase_problems(ex), [0.0, 1.0]).value == pytest.approx(1.0)


class _Curved:
    """Point-to-point oracle that hides its polytope, forcing the grid search."""

    def __init__(self, inner):
        self.inner, self.kind, self.dim = inner, "curved", 1

    def halfspaces(self):
        return None

    def contains(self, rates, tol=1e-9):
        return self.inner.contains(rates, tol)

    def maximize(self, weights):
        return self.inner.maximize(weights)


def _p2p_problem(sigma=0.5):
    from timerate.infotheory import bsc

    ch = Channel.product((2, 1), (1, 2), {1: bsc(0.11)})
    p = NetworkProblem(ch, 1, np.array([[1, 0]]), np.array([[0, 1]]))
    e = expand(p, TimeConstraints({(0, 1): sigma}))
    return e, phase_problems(e)


def test_single_phase_point_to_point_is_exact():
    e, ph = _p2p_problem(0.5)
    c = blahut_arimoto_capacity(e.channel.marginal_from(1, 0)).value
    assert max_weighted_rate(e, ph, [1.0]).value == pytest.approx(0.5 * c, abs=1e-12)


def test_plugin_oracle_and_grid_fallback():
    e, ph = _p2p_problem(0.5)
    calls = []

    def plugin(session):
        calls.append(session.transmitter)
        return _Curved(PointToPointOracle(session.channels[1], 1))

    settings_ = OracleSettings(plugins=(plugin,))
    res = max_weighted_rate(e, ph, [1.0], settings_, resolution=1e-3)
    exact = 0.5 * (1 - binary_entropy(0.11))
    assert calls and exact - 1e-3 <= res.value <= exact + 1e-12
    with pytest.raises(ResourceCapExceeded):
        from timerate import innerbound

        innerbound._grid_solve(e, innerbound.build_constraints(e, ph, [0], settings_), [0], [1.0], {},
                               1e-9, cap=1000)


def test_frontier_message_cap():
    spec, e, ph, st_ = setup("erasure_broadcast")
    with pytest.raises(ResourceCapExceeded):
        inner_bound_frontier(e, ph, 5, st_, max_messages=0)


def test_sweep_weights_cover_simplex():
    w3 = sweep_weights(3, 20)
    assert len(w3) >= 20 and all(w.sum() == pytest.approx(1.0) for w in w3)
    w2 = sweep_weights(2, 5)
    assert len(w2) == 5 and np.allclose(w2[0], [1, 0]) and np.allclose(w2[-1], [0, 1])


def test_region_csv_has_provenance():
    spec, e, ph, st_ = setup("erasure_broadcast")
    text = inner_bound_frontier(e, ph, 3, st_).to_csv(e)
    header, row = text.strip().split("\n")
    assert header == "R1,weights,allocation,witnesses"
    assert "(1|3,1,1)=0.125" in row and "degraded-broadcast" in row
