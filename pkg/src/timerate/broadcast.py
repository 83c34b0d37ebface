"""Superposition-coding region of a two-receiver degraded broadcast channel.

Coordinates are ``(r_private, r_common)``: the private rate goes to the
stronger receiver only, the common rate to both. For a joint law of an
auxiliary ``U`` and the input ``X``,

    r_common  <= I(U; Y_weak)
    r_private <= I(X; Y_strong | U).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .infotheory import blahut_arimoto_capacity, mutual_information, simplex_lattice


@dataclass(frozen=True)
class SuperpositionLaw:
    """Joint law of ``(U, X)`` as ``p_u`` and the rows ``p_x_given_u``."""

    p_u: np.ndarray
    p_x_given_u: np.ndarray

    def as_dict(self) -> dict:
        return {"p_u": self.p_u.tolist(), "p_x_given_u": self.p_x_given_u.tolist()}


def superposition_rates(law: SuperpositionLaw, W_strong, W_weak) -> tuple[float, float]:
    """``(I(X;Y_strong|U), I(U;Y_weak))`` for an explicit superposition law."""
    private = sum(pu * mutual_information(q, W_strong) for pu, q in zip(law.p_u, law.p_x_given_u) if pu > 0)
    u_to_y2 = law.p_x_given_u @ np.asarray(W_weak, dtype=float)
    common = mutual_information(law.p_u, u_to_y2)
    return float(private), float(common)


def _upper_chain(points: np.ndarray) -> np.ndarray:
    """Pareto vertices of the downward-closed convex hull, ``r_a`` ascending."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    pts = pts[(pts >= -1e-15).all(axis=1)].clip(min=0.0)
    if len(pts) == 0:
        return np.zeros((1, 2))
    pareto, best_b = [], -np.inf
    for p in pts[np.lexsort((-pts[:, 1], -pts[:, 0]))]:
        if p[1] > best_b:
            pareto.append(p)
            best_b = p[1]
    hull: list[np.ndarray] = []
    for p in reversed(pareto):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.array(hull)


@dataclass(frozen=True, eq=False)
class RateRegion2D:
    """Convex, downward-closed region given by its Pareto vertices.

    ``frontier`` is sorted by ``r_a`` ascending with ``r_b`` strictly
    descending; ``witnesses[k]`` is the superposition law achieving vertex k.
    """

    frontier: np.ndarray
    witnesses: tuple = ()
    labels: tuple[str, str] = ("r_private", "r_common")

    @classmethod
    def from_points(cls, points, witnesses=None, labels=("r_private", "r_common")):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        chain = _upper_chain(points)
        wit = []
        if witnesses is not None:
            for v in chain:
                k = int(np.argmin(np.abs(points - v).sum(axis=1)))
                wit.append(witnesses[k])
        return cls(chain, tuple(wit), tuple(labels))

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A, b)`` with the region equal to ``{r >= 0 : A r <= b}``."""
        F = self.frontier
        rows = [[1.0, 0.0], [0.0, 1.0]]
        rhs = [F[-1, 0], F[0, 1]]
        for p, q in zip(F, F[1:]):
            n = np.array([p[1] - q[1], q[0] - p[0]])
            rows.append(n.tolist())
            rhs.append(float(n @ p))
        return np.array(rows), np.array(rhs)

    def contains(self, r, tol: float = 1e-9) -> bool:
        r = np.asarray(r, dtype=float)
        if (r < -tol).any():
            return False
        A, b = self.halfspaces()
        scale = np.maximum(np.abs(A).sum(axis=1), 1.0)
        return bool(np.all(A @ r - b <= tol * scale))

    def maximize(self, weights) -> tuple[float, int]:
        vals = self.frontier @ np.asarray(weights, dtype=float)
        k = int(np.argmax(vals))
        return float(max(vals[k], 0.0)), k

    def decompose(self, r, tol: float = 1e-9):
        """Convex weights over the vertices whose combination dominates ``r``, or None."""
        F = self.frontier
        m = len(F)
        res = linprog(np.zeros(m), A_ub=np.vstack([-F.T, np.ones((1, m))]),
                      b_ub=np.append(-np.asarray(r, dtype=float) + tol, 1.0),
                      bounds=[(0, None)] * m, method="highs")
        return None if res.status != 0 else np.clip(res.x, 0, None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.labels[0], self.labels[1], "p_u", "p_x_given_u"])
        for k, v in enumerate(self.frontier):
            law = self.witnesses[k] if k < len(self.witnesses) else None
            w.writerow([f"{v[0]:.9g}", f"{v[1]:.9g}",
                        " ".join(f"{x:.9g}" for x in law.p_u) if law else "",
                        ";".join(" ".join(f"{x:.9g}" for x in row) for row in law.p_x_given_u) if law else ""])
        return buf.getvalue()


def _binary_envelope(q: np.ndarray, f: np.ndarray):
    """Upper concave envelope of ``f`` over the sorted 1-D grid ``q``.

    Returns envelope values at every grid point plus, per grid point, the two
    hull vertex indices and the weight on the right vertex.
    """
    hull = []
    for k in range(len(q)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (q[a] - q[o]) * (f[k] - f[o]) - (f[a] - f[o]) * (q[k] - q[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    hull = np.array(hull)
    seg = np.clip(np.searchsorted(q[hull], q, side="right") - 1, 0, len(hull) - 2) if len(hull) > 1 else None
    if seg is None:
        return f.copy(), np.zeros(len(q), int), np.zeros(len(q), int), np.zeros(len(q))
    left, right = hull[seg], hull[seg + 1]
    t = (q - q[left]) / (q[right] - q[left])
    env = (1 - t) * f[left] + t * f[right]
    return env, left, right, t


def _lattice_envelope(Q: np.ndarray, f: np.ndarray):
    """Envelope over a simplex lattice via the upper facets of a lifted hull."""
    X = np.column_stack([Q[:, :-1], f])
    try:
        hull = ConvexHull(X)
    except QhullError:
        hull = ConvexHull(X, qhull_options="QJ")
    upper = hull.equations[hull.equations[:, -2] > 1e-12]
    simplices = hull.simplices[hull.equations[:, -2] > 1e-12]
    # facet plane: n.x + c = 0, so value = -(n_coords.q + c) / n_f
    n_q, n_f, c = upper[:, :-2], upper[:, -2], upper[:, -1]
    vals = -(Q[:, :-1] @ n_q.T + c) / n_f
    best = np.argmin(vals, axis=1)
    env = vals[np.arange(len(Q)), best]

    def decompose(k):
        verts = simplices[best[k]]
        w, *_ = np.linalg.lstsq(Q[verts].T, Q[k], rcond=None)
        w = np.clip(w, 0, None)
        w = w / w.sum() if w.sum() > 0 else np.full(len(w), 1 / len(w))
        return verts, w

    return env, decompose


def degraded_bc_region(W_strong, W_weak, u_cardinality: int | None = None, grid_steps: int = 201,
                       directions: int = 91) -> RateRegion2D:
    """Pareto frontier of the superposition region by a grid over input laws.

    For each weight direction ``(a_p, a_c)`` the objective splits as
    ``a_c I(X;Y_weak) + E_U[a_p I(X;Y_strong) - a_c I(X;Y_weak)]``, so the best
    auxiliary law is read off the upper concave envelope of the bracket over
    the grid of conditional input laws. Every candidate is re-evaluated from
    its explicit joint law, so the result never overstates the region.
    """
    W1 = np.asarray(W_strong, dtype=float)
    W2 = np.asarray(W_weak, dtype=float)
    nx = W1.shape[0]
    if W2.shape[0] != nx:
        raise ValueError("both receivers must share the input alphabet")
    u_card = u_cardinality or nx + 1
    Q = simplex_lattice(nx, grid_steps)
    I1 = np.array([mutual_information(q, W1) for q in Q])
    I2 = np.array([mutual_information(q, W2) for q in Q])

    laws: list[SuperpositionLaw] = []
    c1 = blahut_arimoto_capacity(W1)
    laws.append(SuperpositionLaw(np.ones(1), c1.argmax[None, :]))
    c2 = blahut_arimoto_capacity(W2)
    support = np.flatnonzero(c2.argmax > 1e-15)
    if len(support) <= u_card:
        laws.append(SuperpositionLaw(c2.argmax[support], np.eye(nx)[support]))

    for theta in np.linspace(0.0, np.pi / 2, directions):
        a_p, a_c = np.cos(theta), np.sin(theta)
        f = a_p * I1 - a_c * I2
        if nx == 2:
            env, left, right, t = _binary_envelope(Q[:, 1], f)
            k = int(np.argmax(a_c * I2 + env))
            if left[k] == right[k] or t[k] <= 0:
                law = SuperpositionLaw(np.ones(1), Q[[left[k]]])
            elif t[k] >= 1:
                law = SuperpositionLaw(np.ones(1), Q[[right[k]]])
            else:
                law = SuperpositionLaw(np.array([1 - t[k], t[k]]), Q[[left[k], right[k]]])
        elif nx == 1:
            law = SuperpositionLaw(np.ones(1), Q[:1])
        else:
            env, decompose = _lattice_envelope(Q, f)
            k = int(np.argmax(a_c * I2 + env))
            verts, w = decompose(k)
            keep = w > 1e-15
            law = SuperpositionLaw(w[keep], Q[verts[keep]])
        if len(law.p_u) <= u_card:
            laws.append(law)

    points = np.array([superposition_rates(law, W1, W2) for law in laws])
    return RateRegion2D.from_points(points, laws)


def erasure_parameter(W, tol: float = 1e-12) -> float | None:
    """Erasure probability if ``W`` is an identity or erasure channel, else None.

    Accepted shapes: ``q x q`` identity (erasure 0) or ``q x (q+1)`` with the
    last output letter as the erasure.
    """
    W = np.asarray(W, dtype=float)
    q, ny = W.shape
    if ny == q:
        return 0.0 if np.allclose(W, np.eye(q), atol=tol) else None
    if ny == q + 1:
        eps = W[0, -1]
        target = np.hstack([(1 - eps) * np.eye(q), np.full((q, 1), eps)])
        return float(eps) if np.allclose(W, target, atol=tol) else None
    return None


def is_erasure_degraded(W_strong, W_weak) -> bool:
    """True when both are erasure-type channels and the weak one erases at least as often."""
    a, b = erasure_parameter(W_strong), erasure_parameter(W_weak)
    return a is not None and b is not None and a <= b + 1e-12 and np.shape(W_strong)[0] == np.shape(W_weak)[0]
