"""Single-letter information measures and point-to-point / multicast capacities.

All quantities are in bits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.optimize import linprog

from .errors import ResourceCapExceeded
from .model import STOCHASTIC_TOL

LATTICE_CAP = 200_000


@dataclass(frozen=True)
class CapacityResult:
    value: float
    argmax: np.ndarray
    iterations: int
    gap: float
    converged: bool = True


def check_distribution(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("input distribution must be a non-empty vector")
    if p.min() < -STOCHASTIC_TOL or abs(p.sum() - 1.0) > STOCHASTIC_TOL:
        raise ValueError(f"not a probability vector: {p}")
    return np.clip(p, 0.0, None)


def _kl_rows(W, q):
    # D(W(.|x) || q) in bits for every x; +inf where W puts mass on q == 0
    # log domain, so subnormal q stays finite
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(W > 0, W * (np.log2(np.where(W > 0, W, 1.0)) - np.log2(q)[None, :]), 0.0)
    return terms.sum(axis=1)


def mutual_information(p_x, W) -> float:
    """I(X;Y) for input law ``p_x`` and channel rows ``W[x, y]``."""
    p = check_distribution(p_x)
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != p.size:
        raise ValueError(f"dimension mismatch: p has {p.size} letters, W is {W.shape}")
    q = p @ W
    d = _kl_rows(W, q)
    mask = p > 0
    return float(max(0.0, np.dot(p[mask], d[mask])))


def mutual_information_gradient(p_x, W) -> np.ndarray:
    """Partial derivatives of I(X;Y) with respect to ``p_x`` (up to the simplex constant)."""
    p = np.asarray(p_x, dtype=float)
    return _kl_rows(np.asarray(W, dtype=float), p @ W) - np.log2(np.e)


def blahut_arimoto_capacity(W, tol: float = 1e-9, max_iter: int = 100_000) -> CapacityResult:
    """Capacity of a DMC with a certified bracket ``I(p) <= C <= max_x D(W_x || pW)``."""
    W = np.asarray(W, dtype=float)
    nx = W.shape[0]
    p = np.full(nx, 1.0 / nx)
    lower = upper = 0.0
    for it in range(1, max_iter + 1):
        d = _kl_rows(W, p @ W)
        lower = float(np.dot(p, d))
        upper = float(d.max())
        if upper - lower < tol:
            return CapacityResult(max(lower, 0.0), p, it, upper - lower, True)
        p = p * np.exp2(d - upper)
        p /= p.sum()
    return CapacityResult(max(lower, 0.0), p, max_iter, upper - lower, False)


def simplex_lattice(dim: int, steps: int, cap: int = LATTICE_CAP) -> np.ndarray:
    """All distributions on ``dim`` letters with entries in multiples of 1/(steps-1)."""
    m = max(steps - 1, 1)
    if dim == 1:
        return np.ones((1, 1))
    count = comb(m + dim - 1, dim - 1)
    if count > cap:
        raise ResourceCapExceeded(f"simplex grid with {count} points exceeds cap {cap}")
    if dim == 2:
        t = np.arange(m + 1) / m
        return np.column_stack([1 - t, t])
    pts = []
    for bars in itertools.combinations(range(m + dim - 1), dim - 1):
        edges = (-1,) + bars + (m + dim - 1,)
        pts.append([edges[a + 1] - edges[a] - 1 for a in range(dim)])
    return np.array(pts, dtype=float) / m


def _tangent_bound(p, Ws, scales, offsets):
    """Upper bound on the max-min from tangents at ``p``, best over convex weights.

    For any weights ``lam`` on the simplex, ``max_p min_j f_j <= max_p sum_j
    lam_j f_j``, and concavity bounds the latter by its linearization at ``p``
    maximized over simplex vertices. The weights are chosen by a small LP.
    """
    nx = p.size
    uniform = np.full(nx, 1.0 / nx)
    pt = (1 - 1e-12) * p + 1e-12 * uniform
    f = np.array([a * mutual_information(pt, W) + b for W, a, b in zip(Ws, scales, offsets)])
    G = np.array([a * _kl_rows(W, pt @ W) for W, a in zip(Ws, scales)])
    if not np.all(np.isfinite(G)):
        return np.inf
    J = len(Ws)
    # variables (lam_1..lam_J, s): min s + sum lam_j (f_j - G_j.pt), s >= (lam^T G)_x
    c = np.append(f - G @ pt, 1.0)
    A_ub = np.hstack([G.T, -np.ones((nx, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(nx), A_eq=np.append(np.ones(J), 0.0)[None, :],
                  b_eq=[1.0], bounds=[(0, None)] * J + [(None, None)], method="highs")
    return float(res.fun) if res.status == 0 else np.inf


def maximin_concave(channels, scales, offsets, tol: float = 1e-9, max_iter: int = 500,
                    grid_steps: int = 201) -> CapacityResult:
    """Maximize ``min_j scales[j] * I(p; channels[j]) + offsets[j]`` over input laws.

    The best point of a simplex grid is polished with SLSQP; a Lagrangian
    tangent bound certifies the gap. If that bound is not tight enough, Kelley
    cutting planes take over until the bracket closes or ``max_iter`` runs out.
    """
    Ws = [np.asarray(W, dtype=float) for W in channels]
    nx = Ws[0].shape[0]
    if any(W.shape[0] != nx for W in Ws):
        raise ValueError("all receiver channels must share the input alphabet")
    scales = np.asarray(scales, dtype=float)
    offsets = np.asarray(offsets, dtype=float)

    def value(p):
        return min(a * mutual_information(p, W) + b for W, a, b in zip(Ws, scales, offsets))

    if nx == 1:
        p = np.ones(1)
        return CapacityResult(value(p), p, 0, 0.0, True)

    steps = grid_steps
    while comb(steps - 1 + nx - 1, nx - 1) > 2000 and steps > 3:
        steps = (steps + 1) // 2
    uniform = np.full(nx, 1.0 / nx)
    seeds = list(simplex_lattice(nx, steps)) + [uniform]
    vals = [value(p) for p in seeds]
    best_p = seeds[int(np.argmax(vals))]
    best = max(vals)

    polished = _slsqp_polish(best_p, Ws, scales, offsets)
    if polished is not None and value(polished) > best:
        best_p, best = polished, value(polished)
    upper = _tangent_bound(best_p, Ws, scales, offsets)
    if upper - best < tol:
        return CapacityResult(best, best_p, 1, max(upper - best, 0.0), True)

    rows, rhs = [], []

    def add_cuts(p):
        pt = (1 - 1e-7) * p + 1e-7 * uniform
        for W, a, b in zip(Ws, scales, offsets):
            g = a * _kl_rows(W, pt @ W)
            f = a * mutual_information(pt, W) + b
            # t <= f + g.(p' - pt)  ->  t - g.p' <= f - g.pt
            rows.append(np.append(-g, 1.0))
            rhs.append(f - float(g @ pt))

    for p in seeds:
        add_cuts(p)
    c = np.zeros(nx + 1)
    c[-1] = -1.0
    A_eq = np.append(np.ones(nx), 0.0)[None, :]
    bounds = [(0, None)] * nx + [(None, None)]
    for it in range(1, max_iter + 1):
        res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), A_eq=A_eq, b_eq=[1.0],
                      bounds=bounds, method="highs")
        if res.status != 0:
            break
        p = np.clip(res.x[:nx], 0, None)
        p /= p.sum()
        upper = min(upper, float(-res.fun), _tangent_bound(p, Ws, scales, offsets))
        v = value(p)
        if v > best:
            best, best_p = v, p
        if upper - best < tol:
            return CapacityResult(best, best_p, it + 1, max(upper - best, 0.0), True)
        add_cuts(p)
    return CapacityResult(best, best_p, max_iter, max(upper - best, 0.0), False)


def _slsqp_polish(p0, Ws, scales, offsets):
    from scipy.optimize import minimize

    nx = p0.size
    uniform = np.full(nx, 1.0 / nx)

    def shifted(z):
        p = np.clip(z[:nx], 0, None)
        s = p.sum()
        p = p / s if s > 0 else uniform
        return (1 - 1e-12) * p + 1e-12 * uniform

    def cons(z):
        p = shifted(z)
        return np.array([a * mutual_information(p, W) + b - z[-1]
                         for W, a, b in zip(Ws, scales, offsets)])

    def cons_jac(z):
        p = shifted(z)
        rows = [np.append(a * mutual_information_gradient(p, W), -1.0) for W, a in zip(Ws, scales)]
        return np.array(rows)

    t0 = min(a * mutual_information(p0, W) + b for W, a, b in zip(Ws, scales, offsets))
    z0 = np.append(p0, t0)
    res = minimize(
        lambda z: -z[-1], z0, jac=lambda z: np.append(np.zeros(nx), -1.0), method="SLSQP",
        bounds=[(0, 1)] * nx + [(None, None)],
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac},
                     {"type": "eq", "fun": lambda z: z[:nx].sum() - 1.0,
                      "jac": lambda z: np.append(np.ones(nx), 0.0)}],
        options={"ftol": 1e-14, "maxiter": 200},
    )
    if not np.all(np.isfinite(res.x)):
        return None
    p = np.clip(res.x[:nx], 0, None)
    return p / p.sum() if p.sum() > 0 else None


def common_message_capacity(receiver_channels, tol: float = 1e-9, max_iter: int = 500,
                            grid_steps: int = 201) -> CapacityResult:
    """``max_p min_j I(X;Y_j)``: the rate every receiver can decode in one block."""
    if len(receiver_channels) == 1:
        return blahut_arimoto_capacity(receiver_channels[0], tol=tol)
    n = len(receiver_channels)
    return maximin_concave(receiver_channels, np.ones(n), np.zeros(n), tol, max_iter, grid_steps)


def static_broadcast_result(W1, W2, sigma1: float, sigma2: float, grid_steps: int = 201,
                            tol: float = 1e-9) -> CapacityResult:
    """Largest common rate when receiver 1 decodes by ``sigma1`` and receiver 2 by ``sigma2``.

    For ``sigma1 <= sigma2`` the rate must satisfy ``R <= sigma1 I(X;Y1)`` and
    ``R <= sigma1 I(X;Y2) + (sigma2 - sigma1) C2`` for one input law; the other
    ordering is symmetric.
    """
    if sigma1 <= 0 or sigma2 <= 0:
        raise ValueError("decoding times must be positive")
    if sigma1 > sigma2:
        return static_broadcast_result(W2, W1, sigma2, sigma1, grid_steps, tol)
    c2 = blahut_arimoto_capacity(W2, tol=tol).value
    return maximin_concave([W1, W2], [sigma1, sigma1], [0.0, (sigma2 - sigma1) * c2],
                           tol=tol, grid_steps=grid_steps)


def static_broadcast_max_rate(W1, W2, sigma1: float, sigma2: float, grid_steps: int = 201,
                              tol: float = 1e-9) -> float:
    return static_broadcast_result(W1, W2, sigma1, sigma2, grid_steps, tol).value


def binary_entropy(p) -> float:
    p = float(p)
    if p <= 0 or p >= 1:
        return 0.0
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def bec(eps: float) -> np.ndarray:
    """Binary erasure channel; output letter 2 is the erasure."""
    return np.array([[1 - eps, 0.0, eps], [0.0, 1 - eps, eps]])


def identity(q: int = 2) -> np.ndarray:
    return np.eye(q)
