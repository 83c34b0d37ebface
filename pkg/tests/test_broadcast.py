import numpy as np
import pytest

from timerate.broadcast import (RateRegion2D, SuperpositionLaw, degraded_bc_region, erasure_parameter,
                                is_erasure_degraded, superposition_rates)
from timerate.infotheory import bec, binary_entropy, bsc, identity


def conv(a, b):
    return a * (1 - b) + (1 - a) * b


def bsc_superposition_curve(p1, p2, points=4001):
    """Closed-form boundary for BSC(p1) strong / BSC(p2) weak with binary U."""
    beta = np.linspace(0, 0.5, points)
    private = np.array([binary_entropy(conv(b, p1)) - binary_entropy(p1) for b in beta])
    common = np.array([1 - binary_entropy(conv(b, p2)) for b in beta])
    return np.column_stack([private, common])


def test_identity_erasure_region_is_a_triangle():
    region = degraded_bc_region(identity(2), bec(0.5))
    np.testing.assert_allclose(region.frontier, [[0.0, 0.5], [1.0, 0.0]], atol=1e-12)
    A, b = region.halfspaces()
    # 2 r_c + r_p <= 1 up to scaling
    assert region.contains([0.5, 0.25]) and not region.contains([0.5, 0.26])


def test_bsc_region_matches_closed_form():
    region = degraded_bc_region(bsc(0.05), bsc(0.2))
    curve = RateRegion2D.from_points(bsc_superposition_curve(0.05, 0.2))
    for v in region.frontier:
        assert curve.contains(v, tol=1e-9)
    # the grid approximation is within 1e-3 of the true boundary
    for v in curve.frontier[:: max(len(curve.frontier) // 50, 1)]:
        assert region.contains(np.maximum(v - 1e-3, 0), tol=0)
    np.testing.assert_allclose(region.frontier[-1], [1 - binary_entropy(0.05), 0], atol=1e-9)
    np.testing.assert_allclose(region.frontier[0], [0, 1 - binary_entropy(0.2)], atol=1e-9)


def test_witnesses_reproduce_vertices():
    W1, W2 = bsc(0.05), bsc(0.2)
    region = degraded_bc_region(W1, W2, grid_steps=101)
    for v, law in zip(region.frontier, region.witnesses):
        assert len(law.p_u) <= 3
        np.testing.assert_allclose(superposition_rates(law, W1, W2), v, atol=1e-12)


def test_ternary_region_is_sound():
    W1 = np.array([[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9]])
    W2 = W1 @ np.array([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]])
    region = degraded_bc_region(W1, W2, grid_steps=21)
    for v, law in zip(region.frontier, region.witnesses):
        np.testing.assert_allclose(superposition_rates(law, W1, W2), v, atol=1e-12)
    assert region.frontier[:, 0].max() == pytest.approx(np.log2(3) - 0.9 * 0 - _h3(0.9, 0.05), abs=1e-6)


def _h3(a, b):
    p = np.array([a, b, 1 - a - b])
    return float(-(p * np.log2(p)).sum())


def test_region_contains_maximize_decompose():
    region = RateRegion2D.from_points([[0, 1], [0.6, 0.6], [1, 0], [0.2, 0.2]])
    assert len(region.frontier) == 3
    assert region.contains([0.3, 0.8]) and not region.contains([0.7, 0.7])
    val, k = region.maximize([1, 1])
    assert val == pytest.approx(1.2) and k == 1
    w = region.decompose([0.3, 0.8])
    assert w is not None and (region.frontier.T @ w >= [0.3 - 1e-9, 0.8 - 1e-9]).all()
    assert "r_private,r_common" in region.to_csv()


def test_erasure_degradedness():
    assert erasure_parameter(identity(2)) == 0.0
    assert erasure_parameter(bec(0.3)) == pytest.approx(0.3)
    assert erasure_parameter(bsc(0.1)) is None
    assert is_erasure_degraded(identity(2), bec(0.5))
    assert not is_erasure_degraded(bec(0.5), identity(2))
    assert not is_erasure_degraded(bsc(0.1), bsc(0.2))


def test_superposition_law_dict():
    law = SuperpositionLaw(np.array([1.0]), np.array([[0.5, 0.5]]))
    assert law.as_dict() == {"p_u": [1.0], "p_x_given_u": [[0.5, 0.5]]}
