"""Region oracles: the single-phase (all deadlines equal) capacity regions that
the inner bound composes.

An oracle answers two questions about a region of per-channel-use rates:
``contains(rates)`` with a witness, and ``maximize(weights)``. Oracles whose
region is a polytope also expose ``halfspaces()`` so the inner bound can
solve allocations exactly by linear programming.

Plug-ins are callables ``plugin(session) -> RegionOracle | None`` passed via
``OracleSettings.plugins``; they are consulted before the shipped oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .broadcast import degraded_bc_region, is_erasure_degraded, superposition_rates
from .infotheory import blahut_arimoto_capacity, common_message_capacity


class RegionOracle(Protocol):
    kind: str
    dim: int

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray] | None: ...

    def contains(self, rates, tol: float = 1e-9) -> tuple[bool, dict]: ...

    def maximize(self, weights) -> tuple[float, np.ndarray, dict]: ...


class _ScalarOracle:
    """Region ``[0, C]`` with a fixed input law as witness."""

    dim = 1

    def __init__(self, capacity, argmax, receivers):
        self.capacity = float(capacity)
        self.argmax = np.asarray(argmax, dtype=float)
        self.receivers = tuple(receivers)

    def halfspaces(self):
        return np.ones((1, 1)), np.array([self.capacity])

    def _witness(self):
        return {"oracle": self.kind, "receivers": [j + 1 for j in self.receivers],
                "input_law": self.argmax.tolist(), "capacity": self.capacity}

    def contains(self, rates, tol=1e-9):
        r = float(np.asarray(rates, dtype=float).reshape(-1)[0])
        return (-tol <= r <= self.capacity + tol), self._witness()

    def maximize(self, weights):
        w = float(np.asarray(weights, dtype=float).reshape(-1)[0])
        point = np.array([self.capacity if w > 0 else 0.0])
        return w * point[0], point, self._witness()


class PointToPointOracle(_ScalarOracle):
    kind = "point-to-point"

    def __init__(self, W, receiver: int = 0, tol: float = 1e-9):
        self.W = np.asarray(W, dtype=float)
        res = blahut_arimoto_capacity(self.W, tol=tol)
        super().__init__(res.value, res.argmax, (receiver,))

    def channels(self):
        return [self.W]


class MulticastOracle(_ScalarOracle):
    kind = "multicast"

    def __init__(self, channels, receivers=None, tol: float = 1e-9, grid_steps: int = 201):
        self.Ws = [np.asarray(W, dtype=float) for W in channels]
        res = common_message_capacity(self.Ws, tol=tol, grid_steps=grid_steps)
        super().__init__(res.value, res.argmax, receivers or range(len(self.Ws)))

    def channels(self):
        return self.Ws


class DegradedBroadcastOracle:
    """Coordinates ``(r_private, r_common)``; private goes to the strong receiver."""

    kind = "degraded-broadcast"
    dim = 2

    def __init__(self, W_strong, W_weak, strong: int = 0, weak: int = 1,
                 grid_steps: int = 201, u_cardinality: int | None = None):
        self.W_strong = np.asarray(W_strong, dtype=float)
        self.W_weak = np.asarray(W_weak, dtype=float)
        self.receivers = (strong, weak)
        self.region = degraded_bc_region(self.W_strong, self.W_weak, u_cardinality, grid_steps)

    def halfspaces(self):
        return self.region.halfspaces()

    def _witness(self, weights):
        F = self.region.frontier
        used = [k for k, w in enumerate(weights) if w > 1e-12]
        return {
            "oracle": self.kind,
            "strong": self.receivers[0] + 1,
            "weak": self.receivers[1] + 1,
            "time_sharing": [
                {"weight": float(weights[k]), "rates": F[k].tolist(),
                 **self.region.witnesses[k].as_dict()}
                for k in used
            ],
        }

    def contains(self, rates, tol=1e-9):
        r = np.asarray(rates, dtype=float)
        if not self.region.contains(r, tol):
            return False, {"oracle": self.kind}
        w = self.region.decompose(np.maximum(r, 0.0), tol)
        if w is None:
            return False, {"oracle": self.kind}
        return True, self._witness(w)

    def maximize(self, weights):
        val, k = self.region.maximize(weights)
        w = np.zeros(len(self.region.frontier))
        w[k] = 1.0
        return val, self.region.frontier[k].copy(), self._witness(w)


class WeakPrivateOracle:
    """Nested demands where the private part goes to the degraded receiver.

    Coordinates ``(r_private, r_common)``. The stronger receiver can decode
    anything the weaker one can, so the region is ``r_private + r_common <= C_weak``.
    """

    kind = "weak-private"
    dim = 2

    def __init__(self, W_strong, W_weak, strong: int = 0, weak: int = 1, tol: float = 1e-9):
        self.W_strong = np.asarray(W_strong, dtype=float)
        self.W_weak = np.asarray(W_weak, dtype=float)
        self.receivers = (strong, weak)
        res = blahut_arimoto_capacity(self.W_weak, tol=tol)
        self.capacity = float(res.value)
        self.argmax = res.argmax

    def halfspaces(self):
        return np.array([[1.0, 1.0]]), np.array([self.capacity])

    def _witness(self):
        return {"oracle": self.kind, "strong": self.receivers[0] + 1, "weak": self.receivers[1] + 1,
                "input_law": self.argmax.tolist(), "capacity": self.capacity}

    def contains(self, rates, tol=1e-9):
        r = np.asarray(rates, dtype=float)
        return bool((r >= -tol).all() and r.sum() <= self.capacity + tol), self._witness()

    def maximize(self, weights):
        w = np.asarray(weights, dtype=float)
        k = int(np.argmax(w))
        point = np.zeros(2)
        if w[k] > 0:
            point[k] = self.capacity
        return float(w @ point), point, self._witness()


def verify_witness(witness: dict, rates, channels: dict, tol: float = 1e-9) -> bool:
    """Recompute a witness's rates from its input laws and compare with ``rates``.

    ``channels`` maps receiver numbers (1-based, as written in the witness) to
    channel tables conditioned on the session transmitter's input.
    """
    from .infotheory import mutual_information

    r = np.asarray(rates, dtype=float).reshape(-1)
    kind = witness["oracle"]
    if kind in ("point-to-point", "multicast"):
        p = np.asarray(witness["input_law"])
        achieved = min(mutual_information(p, channels[j]) for j in witness["receivers"])
        return r[0] <= achieved + tol
    if kind == "weak-private":
        p = np.asarray(witness["input_law"])
        return (r.sum() <= mutual_information(p, channels[witness["weak"]]) + tol
                and r[1] <= mutual_information(p, channels[witness["strong"]]) + tol)
    if kind == "degraded-broadcast":
        from .broadcast import SuperpositionLaw

        total = np.zeros(2)
        for part in witness["time_sharing"]:
            law = SuperpositionLaw(np.asarray(part["p_u"]), np.asarray(part["p_x_given_u"]))
            total += part["weight"] * np.array(
                superposition_rates(law, channels[witness["strong"]], channels[witness["weak"]]))
        return bool(np.all(r <= total + tol))
    raise ValueError(f"unknown oracle kind {kind!r}")


@dataclass
class OracleSettings:
    """Knobs for oracle construction, plus a cache shared by one computation."""

    grid_steps: int = 201
    u_cardinality: int | None = None
    tol: float = 1e-9
    degraded_pairs: tuple = ()
    plugins: tuple[Callable, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def is_degraded(self, strong: int, weak: int, W_strong, W_weak) -> bool:
        return (strong, weak) in set(map(tuple, self.degraded_pairs)) or is_erasure_degraded(W_strong, W_weak)

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]
