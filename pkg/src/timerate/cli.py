"""Command-line front end: ``timerate expand|region|simulate|replay``.

Every command writes its outputs plus a ``manifest.json`` into ``--out``.
The manifest records the resolved parameters; ``timerate replay`` re-runs a
manifest and checks that the outputs come out byte-identical.

Exit codes: 0 success, 2 validation error, 3 unsupported structure,
4 resource cap exceeded, 1 replay mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (RateBudgetError, ResourceCapExceeded, TimeRateError, UnsupportedChannel,
                     UnsupportedPhaseStructure, ValidationError)
from .expansion import DEFAULT_SUBMESSAGE_CAP, dump_expanded, dump_phase, expand, phase_problems
from .infotheory import static_broadcast_result
from .innerbound import inner_bound_frontier, max_weighted_rate, round_sig, summary
from .oracles import OracleSettings
from .specfile import fmt_num, load_spec

EXIT_OK, EXIT_MISMATCH, EXIT_VALIDATION, EXIT_UNSUPPORTED, EXIT_CAP = 0, 1, 2, 3, 4


def g9(x) -> str:
    return f"{float(x):.9g}"


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_outputs(out: Path, files: dict[str, str], command: str, spec_path: str, params: dict):
    for name, text in files.items():
        _atomic_write(out / name, text)
    manifest = {
        "tool": "timerate",
        "version": __version__,
        "command": command,
        "input": str(Path(spec_path).resolve()),
        "input_sha256": hashlib.sha256(Path(spec_path).read_bytes()).hexdigest(),
        "parameters": params,
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(files.items())},
    }
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _fixes(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ValidationError(f"--fix expects LABEL=VALUE, got {item!r}")
        label, value = item.rsplit("=", 1)
        out[label.strip()] = float(value)
    return out


# expand ---------------------------------------------------------------------

def summary_table(expanded, phases) -> str:
    lines = [f"sub-messages: {len(expanded.submessages)}", f"phases: {len(phases)}", "",
             f"{'phase':>5}  {'start':>11}  {'end':>11}  {'duration':>11}  {'active':>6}  {'demands':>7}"]
    for p in phases:
        active = int((p.S.sum(axis=1) > 0).sum())
        lines.append(f"{p.phase:>5}  {g9(p.start):>11}  {g9(p.end):>11}  {g9(p.duration):>11}  "
                     f"{active:>6}  {int(p.S.sum()):>7}")
    lines += ["", "sub-message index sets:"]
    for i in range(expanded.base.message_count):
        lines.append(f"  message {i + 1}: {len(expanded.message_members(i))}")
    return "\n".join(lines) + "\n"


def cmd_expand(args) -> dict:
    spec = load_spec(args.spec)
    expanded = expand(spec.problem, spec.sigma, canonical=not args.no_canonical,
                      overhearing=not args.no_overhearing, cap=args.cap)
    phases = phase_problems(expanded)
    files = {"expanded.yaml": dump_expanded(expanded), "summary.txt": summary_table(expanded, phases)}
    for p in phases:
        files[f"phase_{p.phase}.yaml"] = dump_phase(expanded, p)
    sys.stdout.write(files["summary.txt"])
    return {"files": files, "params": {"canonical": not args.no_canonical,
                                       "overhearing": not args.no_overhearing, "cap": args.cap}}


# region ---------------------------------------------------------------------

def _two_receivers(spec):
    problem, sigma = spec.problem, spec.sigma
    demanders = [j for j in range(problem.node_count) if problem.demands[0, j] and not problem.side_info[0, j]]
    if problem.message_count != 1 or len(demanders) != 2:
        raise UnsupportedPhaseStructure(
            "unsupported phase structure: --static-bc needs one message with two demanding nodes")
    for t in problem.channel.input_nodes():
        if not problem.side_info[0, t]:
            continue
        W = [problem.channel.marginal_from(j, t) for j in demanders]
        if all(w is not None for w in W):
            return W[0], W[1], sigma[(0, demanders[0])], sigma[(0, demanders[1])], demanders
    raise UnsupportedPhaseStructure(
        "unsupported phase structure: no holder of message 1 drives both demanding nodes alone")


def _static_bc(spec, args) -> dict:
    W1, W2, s1, s2, nodes = _two_receivers(spec)
    res = static_broadcast_result(W1, W2, s1, s2, grid_steps=args.grid, tol=args.tol)
    out = {"mode": "static-bc", "nodes": [j + 1 for j in nodes], "sigma": [float(g9(s1)), float(g9(s2))],
           "max_rate": float(g9(res.value)), "certified_gap": float(g9(res.gap)),
           "input_law": [float(g9(x)) for x in res.argmax]}
    if args.outer is not None:
        out["outer_reference"] = float(g9(args.outer))
        out["gap"] = float(g9(args.outer - res.value))
    print(f"static broadcast max rate: {g9(res.value)}")
    return out


def cmd_region(args) -> dict:
    spec = load_spec(args.spec)
    params = {"grid": args.grid, "tol": args.tol, "sweep": args.sweep, "weights": args.weights,
              "overhearing": not args.no_overhearing, "static_bc": args.static_bc, "fix": args.fix or [],
              "outer": args.outer, "u_cardinality": args.u_cardinality}
    if args.static_bc:
        return {"files": {"summary.json": json.dumps(_static_bc(spec, args), indent=2, sort_keys=True) + "\n"},
                "params": params}
    expanded = expand(spec.problem, spec.sigma, overhearing=not args.no_overhearing)
    phases = phase_problems(expanded)
    settings = OracleSettings(grid_steps=args.grid, tol=args.tol, degraded_pairs=spec.degraded_pairs,
                              u_cardinality=args.u_cardinality)
    k = spec.problem.message_count
    weights = np.array(_floats(args.weights)) if args.weights else np.ones(k)
    fixed = _fixes(args.fix)
    best = max_weighted_rate(expanded, phases, weights, settings, fixed=fixed)
    files = {}
    if k <= 3:
        region = inner_bound_frontier(expanded, phases, args.sweep, settings, fixed=fixed)
        summ = summary(region, expanded, best, args.outer)
        files["frontier.csv"] = region.to_csv(expanded)
    else:
        summ = summary_single(best, expanded, args.outer)
    files["summary.json"] = json.dumps(summ, indent=2, sort_keys=True) + "\n"
    print(f"max weighted rate: {g9(best.value)}")
    if "max_sum_rate" in summ:
        print(f"max sum rate: {g9(summ['max_sum_rate'])}")
    return {"files": files, "params": params}


def summary_single(best, expanded, outer):
    out = {"messages": expanded.base.message_count, "submessages": len(expanded.submessages),
           "phases": expanded.n_phases, "weights": [float(g9(w)) for w in best.weights],
           "max_weighted_rate": float(g9(best.value)), "rates": [float(g9(r)) for r in best.rates],
           "witnesses": round_sig(best.witnesses)}
    if outer is not None:
        out["outer_reference"] = float(g9(outer))
        out["gap"] = float(g9(outer - best.value))
    return out


# simulate -------------------------------------------------------------------

def cmd_simulate(args) -> dict:
    from .codesim import SimConfig, build_two_phase_erasure_scheme, erasure_setup, simulate, verify_claim1_scaling
    from .codesim.simulate import AccessLog

    spec = load_spec(args.spec)
    if args.trials < 1:
        raise ValidationError("no trials")
    setup = erasure_setup(spec)
    if args.allocation:
        r0 = _floats(args.allocation)
        if len(r0) != 2:
            raise ValidationError("--allocation expects COMMON,PRIVATE")
    elif args.rate is not None:
        r0 = [0.0, args.rate]
    else:
        raise ValidationError("give --rate or --allocation")
    nodes = tuple(j + 1 for j in setup["nodes"])
    labels = _scheme_labels(spec, setup)
    scheme = build_two_phase_erasure_scheme(r0, setup["sigma"], args.n, args.code_seed,
                                            allow_overflow=args.allow_overflow, nodes=nodes, labels=labels)
    config = SimConfig(args.n, args.trials, args.seed)
    log = AccessLog() if args.debug_log else None
    report = simulate(scheme, setup["erasure"], config, workers=args.workers, debug_log=log)
    files = {"report.json": report.to_json(), "report.csv": report.to_csv()}
    if log is not None:
        files["access.log"] = log.text()
    if args.alpha is not None:
        sc = verify_claim1_scaling(scheme, config, args.alpha, setup["erasure"], coupled=not args.decoupled,
                                   workers=args.workers, allow_overflow=args.allow_overflow)
        files["scaling.json"] = json.dumps(sc.to_dict(), indent=2, sort_keys=True) + "\n"
        print(f"scaling alpha={g9(args.alpha)}: agreement {g9(sc.agreement)}")
    print(f"joint error: {g9(report.joint_error)} +/- {g9(report.joint_half_width)}")
    params = {"allocation": [float(g9(r)) for r in r0], "n": args.n, "trials": args.trials, "seed": args.seed,
              "code_seed": args.code_seed, "allow_overflow": args.allow_overflow, "alpha": args.alpha,
              "decoupled": args.decoupled, "debug_log": args.debug_log}
    return {"files": files, "params": params}


def _scheme_labels(spec, setup):
    # sub-message labels in the canonical expansion of the spec
    ell = spec.problem.node_count
    early, late = setup["nodes"]
    common, private = [], []
    for j in range(ell):
        if spec.problem.side_info[0, j]:
            common.append(3)
            private.append(3)
        elif j == early:
            common.append(1)
            private.append(1)
        elif j == late:
            common.append(1)
            private.append(2)
        else:
            common.append(3)
            private.append(3)
    return f"(1|{','.join(map(str, common))})", f"(1|{','.join(map(str, private))})"


# replay ---------------------------------------------------------------------

def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest["parameters"]["argv"]
    out = Path(args.out)
    code = main(argv + ["--out", str(out)])
    if code != EXIT_OK:
        return code
    fresh = json.loads((out / "manifest.json").read_text())
    same = fresh["outputs"] == manifest["outputs"] and fresh["input_sha256"] == manifest["input_sha256"]
    print("replay: identical" if same else "replay: outputs differ")
    return EXIT_OK if same else EXIT_MISMATCH


# main -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timerate", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"timerate {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("expand", help="write the expanded problem and its phase problems")
    e.add_argument("spec")
    e.add_argument("--out", default="out")
    e.add_argument("--no-canonical", action="store_true", help="keep schedules for nodes that hold the message")
    e.add_argument("--no-overhearing", action="store_true", help="non-demanding nodes never decode")
    e.add_argument("--cap", type=int, default=DEFAULT_SUBMESSAGE_CAP, help="sub-message cap")

    r = sub.add_parser("region", help="inner bound on the rate region at the spec's deadlines")
    r.add_argument("spec")
    r.add_argument("--out", default="out")
    r.add_argument("--weights", help="comma-separated per-message weights (default all ones)")
    r.add_argument("--sweep", type=int, default=33, help="number of weight directions in the frontier sweep")
    r.add_argument("--grid", type=int, default=201, help="grid points per input-simplex axis")
    r.add_argument("--tol", type=float, default=1e-9)
    r.add_argument("--no-overhearing", action="store_true")
    r.add_argument("--static-bc", action="store_true",
                   help="exact one-message two-receiver optimum with a single codebook instead")
    r.add_argument("--fix", action="append", metavar="LABEL=VALUE", help="pin a sub-message rate, e.g. '(1|3,1,1)=0'")
    r.add_argument("--outer", type=float, help="outer reference value for the gap in the summary")
    r.add_argument("--u-cardinality", type=int, help="auxiliary alphabet size for broadcast oracles")

    s = sub.add_parser("simulate", help="Monte Carlo run of the two-phase erasure code")
    s.add_argument("spec")
    s.add_argument("--out", default="out")
    s.add_argument("--rate", type=float, help="total rate, all on the private sub-message")
    s.add_argument("--allocation", help="COMMON,PRIVATE sub-rates")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--trials", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--code-seed", type=int, default=0)
    s.add_argument("--alpha", type=float, help="also check blocklength/time rescaling by this factor")
    s.add_argument("--decoupled", action="store_true", help="use an independent seed for the rescaled run")
    s.add_argument("--allow-overflow", action="store_true",
                   help="place systematic bits that miss phase 1 at the start of phase 2")
    s.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    s.add_argument("--debug-log", action="store_true", help="decode in Python and log symbol reads")

    rp = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    rp.add_argument("manifest")
    rp.add_argument("--out", required=True)
    return p


COMMANDS = {"expand": cmd_expand, "region": cmd_region, "simulate": cmd_simulate}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        if args.command == "replay":
            return cmd_replay(args)
        result = COMMANDS[args.command](args)
        params = dict(result["params"], argv=_replay_argv(argv, args.spec))
        _write_outputs(Path(args.out), result["files"], args.command, args.spec, params)
        return EXIT_OK
    except (UnsupportedPhaseStructure, UnsupportedChannel) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ResourceCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValidationError, RateBudgetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TimeRateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def _replay_argv(argv, spec_path):
    # the invocation minus --out, with the spec path made absolute
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
        elif a == "--out":
            skip = True
        elif a.startswith("--out="):
            continue
        else:
            out.append(str(Path(spec_path).resolve()) if a == spec_path else a)
    return out


if __name__ == "__main__":
    sys.exit(main())
