"""Two-phase systematic / random-linear code for the identity + erasure broadcast.

One message is split into a common part (decoded by both receivers at the
early deadline) and a private part (decoded by the early receiver at the early
deadline and by the late receiver at the late deadline). Symbol layout over
``D2 = ceil(sigma2 n)`` channel uses::

    [ common systematic | private systematic | parities ]  phase 1, D1 symbols
    [ parities ]                                           phase 2

Phase-1 parities protect the common part (or the private part when there is
no common part); phase-2 parities protect the private part (or the common
part when there is no private part). Parities are uniform random binary
combinations drawn once per scheme from ``code_seed``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import RateBudgetError
from . import rng
from .gf2 import pack_rows


def ceil_count(x: float) -> int:
    """Ceiling that ignores floating noise below 1e-9 (so 0.45 * 2000 is 900)."""
    return int(math.ceil(round(float(x), 9)))


@dataclass(frozen=True, eq=False)
class Demand:
    name: str
    receiver: int  # 0 = early receiver, 1 = late receiver
    deadline: int
    target: np.ndarray
    original: bool = True

    def as_dict(self) -> dict:
        return {"name": self.name, "receiver": self.receiver, "deadline": self.deadline,
                "target_bits": int(self.target.sum()), "original": self.original}


@dataclass(frozen=True, eq=False)
class CodeScheme:
    n: int
    sigma: tuple[float, float]
    r0: tuple[float, float]
    k_common: int
    k_private: int
    deadlines: tuple[int, int]
    sys_col: np.ndarray
    parity_rows: np.ndarray
    parity_index: np.ndarray
    parity_support: tuple[str, ...]
    demands: tuple[Demand, ...]
    code_seed: int
    nodes: tuple[int, int] = (2, 3)
    overflow: int = 0
    segments: tuple = field(default=())

    @property
    def k(self) -> int:
        return self.k_common + self.k_private

    @property
    def n_symbols(self) -> int:
        return int(self.sys_col.size)

    def layout(self) -> dict:
        return {
            "n": self.n,
            "message_bits": self.k,
            "common_bits": self.k_common,
            "private_bits": self.k_private,
            "deadlines": list(self.deadlines),
            "phase1_symbols": self.deadlines[0],
            "phase2_symbols": self.deadlines[1] - self.deadlines[0],
            "overflow_bits": self.overflow,
            "segments": [list(s) for s in self.segments],
            "code_seed": self.code_seed,
        }

    def same_code(self, other: "CodeScheme") -> bool:
        return (self.k_common == other.k_common and self.k_private == other.k_private
                and self.deadlines == other.deadlines
                and np.array_equal(self.sys_col, other.sys_col)
                and np.array_equal(self.parity_index, other.parity_index)
                and np.array_equal(self.parity_rows, other.parity_rows))


def build_two_phase_erasure_scheme(r0, sigma, n: int, code_seed: int = 0, allow_overflow: bool = False,
                                   nodes=(2, 3), labels=("(1|3,1,1)", "(1|3,1,2)")) -> CodeScheme:
    """Lay out the code for sub-rates ``r0 = (common, private)`` and deadlines ``sigma``.

    Raises RateBudgetError when the systematic bits do not fit in phase 1,
    unless ``allow_overflow`` moves the excess to the start of phase 2 (the
    early receiver then cannot meet its deadline).
    """
    r_c, r_p = (float(x) for x in r0)
    s1, s2 = (float(x) for x in sigma)
    if n < 1:
        raise ValueError("blocklength must be positive")
    if r_c < 0 or r_p < 0:
        raise ValueError("sub-rates must be nonnegative")
    if not 0 < s1 <= s2:
        raise ValueError("deadlines must satisfy 0 < sigma1 <= sigma2")
    kc, kp = ceil_count(r_c * n), ceil_count(r_p * n)
    d1, d2 = ceil_count(s1 * n), ceil_count(s2 * n)
    k = kc + kp
    if k > d1 and not allow_overflow:
        raise RateBudgetError(f"rate exceeds phase budget: {k} message bits, {d1} phase-1 symbols")
    if k > d2:
        raise RateBudgetError(f"rate exceeds phase budget: {k} message bits, {d2} symbols in total")

    sys_col = np.full(d2, -1, dtype=np.int64)
    sys_col[:k] = np.arange(k)
    common = np.zeros(k, dtype=bool)
    common[:kc] = True
    private = ~common
    support1 = common if kc else private
    support2 = private if kp else common
    par1 = np.arange(k, d1) if k < d1 else np.arange(0)
    par2 = np.arange(max(k, d1), d2)

    gen = rng.stream(code_seed, 0, 0, rng.DOMAIN_CODE)
    n_par = par1.size + par2.size
    bits = rng.random_bits(gen, n_par * k).reshape(n_par, k)
    bits[: par1.size] &= support1
    bits[par1.size:] &= support2
    parity_rows = pack_rows(bits)
    parity_index = np.full(d2, -1, dtype=np.int64)
    parity_index[par1] = np.arange(par1.size)
    parity_index[par2] = par1.size + np.arange(par2.size)

    lab_c, lab_p = labels
    everything = np.ones(k, dtype=np.uint8)
    demands = (
        Demand(f"m1 -> node {nodes[0]}", 0, d1, everything),
        Demand(f"m1 -> node {nodes[1]}", 1, d2, everything),
        Demand(f"{lab_c} -> node {nodes[0]}", 0, d1, common.astype(np.uint8), False),
        Demand(f"{lab_p} -> node {nodes[0]}", 0, d1, private.astype(np.uint8), False),
        Demand(f"{lab_c} -> node {nodes[1]}", 1, d1, common.astype(np.uint8), False),
        Demand(f"{lab_p} -> node {nodes[1]}", 1, d2, private.astype(np.uint8), False),
    )
    segments = []
    if kc:
        segments.append(("systematic", lab_c, 0, kc))
    if kp:
        segments.append(("systematic", lab_p, kc, k))
    if par1.size:
        segments.append(("parity", lab_c if kc else lab_p, int(par1[0]), d1))
    if par2.size:
        segments.append(("parity", lab_p if kp else lab_c, int(par2[0]), d2))
    return CodeScheme(
        n=n, sigma=(s1, s2), r0=(r_c, r_p), k_common=kc, k_private=kp, deadlines=(d1, d2),
        sys_col=sys_col, parity_rows=parity_rows, parity_index=parity_index,
        parity_support=(lab_c if kc else lab_p, lab_p if kp else lab_c), demands=demands,
        code_seed=int(code_seed), nodes=tuple(nodes), overflow=max(k - d1, 0), segments=tuple(segments),
    )
