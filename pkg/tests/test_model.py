import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import random_problems, spec_path
from timerate.errors import ValidationError
from timerate.infotheory import bec
from timerate.model import Channel, NetworkProblem, TimeConstraints, time_partition, validate_problem
from timerate.specfile import dump_spec, load_spec, parse_spec


def test_erasure_broadcast_is_valid(erasure_bc):
    report = validate_problem(erasure_bc.problem, erasure_bc.sigma)
    assert report.ok
    assert report.trivial_demands == ()


def test_product_channel_marginals(erasure_bc):
    ch = erasure_bc.problem.channel
    assert ch.transition.shape == (2, 6)
    np.testing.assert_allclose(ch.marginal_from(1, 0), np.eye(2))
    np.testing.assert_allclose(ch.marginal_from(2, 0), bec(0.5))
    assert ch.input_nodes() == [0]


def test_marginal_from_detects_dependence_on_other_inputs():
    # node 3 sees x1 xor x2: it depends on both inputs, so neither alone drives it
    t = np.array([[1, 0], [0, 1], [0, 1], [1, 0]], dtype=float)
    ch = Channel.product((2, 2, 1), (1, 1, 2), {2: t})
    assert ch.marginal_from(2, 0) is None
    assert ch.marginal_from(2, 1) is None
    assert ch.marginal_from(2, None) is None


def _problem(H, S, W=None):
    ell = len(H[0])
    W = np.ones((2**ell, 1)) if W is None else W
    return NetworkProblem(Channel((2,) * ell, (1,) * ell, W), len(H), np.array(H), np.array(S))


def test_orphan_time_constraint():
    p = _problem([[1, 0]], [[0, 1]])
    report = validate_problem(p, TimeConstraints({(0, 1): 1.0, (0, 0): 0.5}))
    assert any("orphan time constraint" in e for e in report.errors)


def test_missing_and_nonpositive_constraints():
    p = _problem([[1, 0, 0]], [[0, 1, 1]])
    report = validate_problem(p, TimeConstraints({(0, 1): 0.0}))
    assert any("missing time constraint" in e for e in report.errors)
    assert any("non-positive time constraint" in e for e in report.errors)


def test_stochasticity_violation():
    W = np.array([[0.99], [1.0]])
    p = NetworkProblem(Channel((2,), (1,), W), 1, np.array([[1]]), np.array([[1]]))
    report = validate_problem(p, TimeConstraints({(0, 0): 1.0}))
    assert any("stochasticity violation" in e for e in report.errors)
    with pytest.raises(ValidationError):
        report.raise_for_errors()


def test_dimension_mismatch():
    p = NetworkProblem(Channel((2, 1), (1, 2), np.ones((2, 1))), 1, np.array([[1, 0]]), np.array([[0, 1]]))
    report = validate_problem(p, TimeConstraints({(0, 1): 1.0}))
    assert any("dimension mismatch" in e for e in report.errors)


def test_holder_and_demander_required():
    p = _problem([[0, 0]], [[0, 0]])
    report = validate_problem(p, TimeConstraints({}))
    assert any("no holder" in e for e in report.errors)
    assert any("no demander" in e for e in report.errors)


def test_trivial_demands_are_flagged():
    p = _problem([[1, 0]], [[1, 1]])
    report = validate_problem(p, TimeConstraints({(0, 0): 1.0, (0, 1): 1.0}))
    assert report.ok
    assert report.trivial_demands == ((0, 0),)


def test_time_partition_examples(erasure_bc):
    tp = time_partition(erasure_bc.sigma, erasure_bc.problem.demands)
    assert tp.times == (0.5, 1.0)
    assert tp.delta[0] == {(0, 1)} and tp.delta[1] == {(0, 2)}
    assert tp.delta[2] == {(0, 0)}


def test_time_partition_single_deadline():
    p = _problem([[1, 0, 0]], [[0, 1, 1]])
    tp = time_partition(TimeConstraints({(0, 1): 1.0, (0, 2): 1.0}), p.demands)
    assert tp.n_phases == 1 and tp.delta[0] == {(0, 1), (0, 2)}


def test_time_partition_three_node_schedule():
    spec = load_spec(spec_path("three_node_schedule"))
    tp = time_partition(spec.sigma, spec.problem.demands)
    assert tp.n_phases == 2
    assert tp.delta[2] == {(0, 0), (0, 3)}


@settings(max_examples=60, deadline=None)
@given(random_problems())
def test_partition_sizes_and_order_independence(case):
    problem, sigma = case
    tp = time_partition(sigma, problem.demands)
    k, ell = problem.demands.shape
    assert sum(len(d) for d in tp.delta) == k * ell
    reordered = TimeConstraints(list(reversed(list(sigma.as_dict().items()))))
    assert time_partition(reordered, problem.demands) == tp
    assert time_partition(sigma, problem.demands) == tp


@settings(max_examples=40, deadline=None)
@given(random_problems())
def test_serialize_parse_revalidates_identically(case):
    from timerate.specfile import NetworkSpec

    problem, sigma = case
    spec = NetworkSpec(problem, sigma, ())
    again = parse_spec(dump_spec(spec))
    assert validate_problem(again.problem, again.sigma) == validate_problem(problem, sigma)
    np.testing.assert_array_equal(again.problem.channel.transition, problem.channel.transition)
    assert again.sigma == sigma


def test_time_constraints_scaling():
    s = TimeConstraints({(0, 1): 0.5, (0, 2): 1.0})
    assert s.scaled(2.0).as_dict() == {(0, 1): 1.0, (0, 2): 2.0}
    assert s.replace((0, 1), 0.75)[(0, 1)] == 0.75
    assert list(itertools.islice(s.as_dict(), 1)) == [(0, 1)]
