"""Monte Carlo runs of a two-phase erasure scheme with staged deadlines."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..broadcast import erasure_parameter
from ..errors import UnsupportedChannel
from . import rng
from .gf2 import decode_demand, pack_rows, solve_tail
from .scheme import CodeScheme, build_two_phase_erasure_scheme

Z95 = 1.959963984540054


def sig9(x: float) -> float:
    return float(f"{x:.9g}")


def wilson_half_width(errors: int, trials: int, z: float = Z95) -> float:
    if trials == 0:
        return 0.0
    p = errors / trials
    return z / (1 + z * z / trials) * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))


@dataclass(frozen=True)
class SimConfig:
    n: int
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("no trials")
        if self.n < 1:
            raise ValueError("blocklength must be positive")

    def deadlines(self, sigma) -> tuple[int, ...]:
        from .scheme import ceil_count

        return tuple(ceil_count(s * self.n) for s in sigma)


@dataclass
class SimReport:
    config: SimConfig
    erasure: tuple[float, float]
    layout: dict
    demands: list[dict]
    failures: np.ndarray
    joint_failures: int
    outcomes: np.ndarray | None = field(default=None, repr=False)

    @property
    def trials(self) -> int:
        return self.config.trials

    @property
    def error_rates(self) -> np.ndarray:
        return self.failures / self.trials

    @property
    def joint_error(self) -> float:
        return self.joint_failures / self.trials

    @property
    def joint_half_width(self) -> float:
        return wilson_half_width(self.joint_failures, self.trials)

    def rows(self) -> list[dict]:
        out = []
        for d, f in zip(self.demands, self.failures):
            out.append({"demand": d["name"], "original": d["original"], "deadline": d["deadline"],
                        "errors": int(f), "trials": self.trials, "error_rate": sig9(f / self.trials),
                        "half_width_95": sig9(wilson_half_width(int(f), self.trials))})
        out.append({"demand": "joint", "original": True, "deadline": max(self.layout["deadlines"]),
                    "errors": int(self.joint_failures), "trials": self.trials,
                    "error_rate": sig9(self.joint_error), "half_width_95": sig9(self.joint_half_width)})
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.config.n, "trials": self.trials, "seed": self.config.seed,
            "erasure": [sig9(e) for e in self.erasure],
            "layout": self.layout,
            "demands": self.rows(),
            "joint_error": sig9(self.joint_error),
            "joint_half_width_95": sig9(self.joint_half_width),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()


def erasure_setup(spec) -> dict:
    """Read the identity/erasure structure the scheme needs from a network spec.

    Returns the two demanding nodes ordered by deadline, their erasure
    probabilities and deadlines. Raises UnsupportedChannel otherwise.
    """
    problem, sigma = spec.problem, spec.sigma
    if problem.message_count != 1:
        raise UnsupportedChannel("unsupported channel class: simulation handles one message")
    demanders = [j for j in range(problem.node_count) if problem.demands[0, j] and not problem.side_info[0, j]]
    if len(demanders) != 2:
        raise UnsupportedChannel("unsupported channel class: simulation needs exactly two demanding nodes")
    holders = [t for t in problem.channel.input_nodes() if problem.side_info[0, t]]
    for t in holders:
        eps = [erasure_parameter(m) if (m := problem.channel.marginal_from(j, t)) is not None else None
               for j in demanders]
        if all(e is not None for e in eps) and problem.channel.input_alphabets[t] == 2:
            order = sorted(range(2), key=lambda a: (sigma[(0, demanders[a])], a))
            return {
                "transmitter": t,
                "nodes": tuple(demanders[a] for a in order),
                "erasure": tuple(float(eps[a]) for a in order),
                "sigma": tuple(float(sigma[(0, demanders[a])]) for a in order),
            }
    raise UnsupportedChannel("unsupported channel class: receivers must see a binary holder's input "
                             "through identity or erasure channels")


def _draw(scheme: CodeScheme, erasure, seed: int, trial: int):
    msg = rng.random_bits(rng.stream(seed, trial, rng.STREAM_MESSAGE), scheme.k)
    erased = [rng.erasure_mask(rng.stream(seed, trial, rng.STREAM_ERASURE + r), scheme.n_symbols, e)
              for r, e in enumerate(erasure)]
    return msg, erased


def _run_shard(scheme: CodeScheme, erasure, seed: int, start: int, stop: int) -> np.ndarray:
    out = np.zeros((stop - start, len(scheme.demands)), dtype=np.uint8)
    for t in range(start, stop):
        msg, erased = _draw(scheme, erasure, seed, t)
        msg_packed = pack_rows(msg[None, :])[0]
        done = {}
        for d, dem in enumerate(scheme.demands):
            key = (dem.receiver, dem.deadline, dem.target.tobytes())
            if key not in done:
                done[key] = decode_demand(scheme.sys_col, scheme.parity_rows, scheme.parity_index, msg,
                                          msg_packed, erased[dem.receiver], dem.deadline, dem.target)
            out[t - start, d] = not done[key]
    return out


class AccessLog:
    """Records which symbol indices each decoder touched."""

    def __init__(self):
        self.lines: list[str] = []
        self.max_read: dict = {}

    def record(self, trial, demand, deadline, indices):
        hi = max(indices) if indices else -1
        self.lines.append(f"trial={trial} demand={demand} deadline={deadline} reads={len(indices)} max_index={hi}")
        self.max_read[(trial, demand)] = (hi, deadline)

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")

    def violations(self) -> list:
        return [k for k, (hi, dl) in self.max_read.items() if hi >= dl]


class _Received:
    # a receiver's view of the channel output that logs every index read
    def __init__(self, scheme, erased, msg, log_into):
        self.scheme, self.erased, self.msg, self.reads = scheme, erased, msg, log_into

    def __getitem__(self, i):
        self.reads.append(i)
        if self.erased[i]:
            return None
        s = self.scheme
        if s.sys_col[i] >= 0:
            return ("sys", int(s.sys_col[i]), int(self.msg[s.sys_col[i]]))
        row = s.parity_rows[s.parity_index[i]]
        bits = np.unpackbits(row.view(np.uint8), bitorder="little")[: s.k]
        return ("par", bits, int(bits @ self.msg) & 1)


def reference_decode(scheme: CodeScheme, received: _Received, deadline: int, target) -> bool:
    """Plain-Python decoder used in debug mode; same decision rule as the compiled one."""
    k = scheme.k
    known = {}
    eqs = []
    for i in range(deadline):
        sym = received[i]
        if sym is None:
            continue
        if sym[0] == "sys":
            known[sym[1]] = sym[2]
        else:
            eqs.append((sym[1], sym[2]))
    target = np.asarray(target, dtype=bool)
    unknown_nt = [c for c in range(k) if c not in known and not target[c]]
    unknown_t = [c for c in range(k) if c not in known and target[c]]
    if not unknown_t:
        return True
    if len(eqs) < len(unknown_t):
        return False
    cols = unknown_nt + unknown_t
    A = np.array([bits[cols] for bits, _ in eqs], dtype=np.uint8)
    b = np.array([(v + sum(int(bits[c]) * known[c] for c in known)) & 1 for bits, v in eqs], dtype=np.uint8)
    ok, vals = solve_tail(pack_rows(A), b, len(cols), len(unknown_nt))
    return bool(ok) and all(vals[a] == received.msg[c] for a, c in enumerate(unknown_t))


def _run_debug(scheme, erasure, seed, trials, log: AccessLog) -> np.ndarray:
    out = np.zeros((trials, len(scheme.demands)), dtype=np.uint8)
    for t in range(trials):
        msg, erased = _draw(scheme, erasure, seed, t)
        for d, dem in enumerate(scheme.demands):
            reads = []
            view = _Received(scheme, erased[dem.receiver], msg, reads)
            ok = reference_decode(scheme, view, dem.deadline, dem.target)
            log.record(t, dem.name, dem.deadline, reads)
            out[t, d] = not ok
    return out


def run_trials(scheme: CodeScheme, erasure, config: SimConfig, workers: int = 1,
               shards: int | None = None, debug_log: AccessLog | None = None) -> np.ndarray:
    """Per-trial failure flags, shape ``(trials, demands)``; independent of the shard layout."""
    if config.n != scheme.n:
        raise ValueError(f"config blocklength {config.n} does not match the scheme's {scheme.n}")
    erasure = tuple(float(e) for e in erasure)
    if debug_log is not None:
        return _run_debug(scheme, erasure, config.seed, config.trials, debug_log)
    shards = shards or max(workers, 1)
    bounds = np.linspace(0, config.trials, shards + 1).astype(int)
    jobs = [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
    if workers <= 1:
        parts = [_run_shard(scheme, erasure, config.seed, a, b) for a, b in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: _run_shard(scheme, erasure, config.seed, *j), jobs))
    return np.concatenate(parts, axis=0)


def simulate(scheme: CodeScheme, erasure, config: SimConfig, workers: int = 1, shards: int | None = None,
             debug_log: AccessLog | None = None, keep_outcomes: bool = False) -> SimReport:
    """Run ``config.trials`` trials; ``erasure`` is (early receiver, late receiver) erasure probabilities."""
    outcomes = run_trials(scheme, erasure, config, workers, shards, debug_log)
    original = np.array([d.original for d in scheme.demands])
    joint = int(outcomes[:, original].any(axis=1).sum())
    return SimReport(config, tuple(float(e) for e in erasure), scheme.layout(),
                     [d.as_dict() for d in scheme.demands], outcomes.sum(axis=0).astype(int), joint,
                     outcomes if keep_outcomes else None)


@dataclass
class ScalingReport:
    alpha: float
    n: int
    n_scaled: int
    coupled: bool
    layout_identical: bool
    trials: int
    agreement: float
    error_rates: list
    error_rates_scaled: list
    within_bands: bool

    def to_dict(self) -> dict:
        return {k: (sig9(v) if isinstance(v, float) else v) for k, v in self.__dict__.items()}


def verify_claim1_scaling(scheme: CodeScheme, config: SimConfig, alpha: float, erasure,
                          coupled: bool = True, workers: int = 1, allow_overflow: bool = False) -> ScalingReport:
    """Rebuild the scheme at rates ``alpha R``, deadlines ``alpha sigma``, blocklength ``n / alpha``.

    The rescaled code carries the same number of bits over the same symbol
    deadlines, so under coupled randomness every trial must decode identically.
    With ``coupled=False`` the rescaled run uses an unrelated seed and only the
    error rates are compared, against their 95% bands.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n2f = config.n / alpha
    n2 = int(round(n2f))
    if abs(n2f - n2) > 1e-9 or n2 < 1:
        raise ValueError(f"non-integral rescaling: n / alpha = {n2f:g}")
    scaled = build_two_phase_erasure_scheme(
        tuple(alpha * r for r in scheme.r0), tuple(alpha * s for s in scheme.sigma), n2, scheme.code_seed,
        allow_overflow=allow_overflow, nodes=scheme.nodes)
    for (a, b) in ((scheme.k, scaled.k), (scheme.deadlines, scaled.deadlines)):
        if a != b:
            raise ValueError("non-integral rescaling: bit counts or deadlines change under alpha")
    seed2 = config.seed if coupled else (config.seed ^ 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
    base = run_trials(scheme, erasure, config, workers)
    other = run_trials(scaled, erasure, SimConfig(n2, config.trials, seed2), workers)
    agreement = float(np.all(base == other, axis=1).mean())
    f1, f2 = base.sum(axis=0), other.sum(axis=0)
    within = all(abs(a - b) / config.trials <= wilson_half_width(int(a), config.trials)
                 + wilson_half_width(int(b), config.trials) + 1e-12 for a, b in zip(f1, f2))
    return ScalingReport(float(alpha), config.n, n2, coupled, scheme.same_code(scaled), config.trials,
                         agreement, [sig9(x / config.trials) for x in f1],
                         [sig9(x / config.trials) for x in f2], within)
