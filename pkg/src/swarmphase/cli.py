"""Batch driver: scenario runs, certificate tooling, and the live service."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ScenarioViolation, StructuralError


def _cmd_run(args) -> int:
    from .scenarios import load_scenario, run_scenario, run_trial, write_outputs

    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    if args.trials is not None:
        scenario.trials = args.trials
    if args.trace:
        records = []
        for trial in range(scenario.trials):
            trace: list = []
            records.append(run_trial(scenario, trial, trace=trace))
            path = f"{args.out}/trace_{trial:04d}.ndjson"
            import os
            os.makedirs(args.out, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                for entry in trace:
                    fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
    else:
        records = run_scenario(scenario, engine=args.engine, jobs=args.jobs)
    write_outputs(records, args.out)
    converged = sum(1 for r in records if r.converged)
    print(f"{len(records)} trials, {converged} converged; outputs in {args.out}/")
    return 0


def _load_planar_config(path: str):
    from .ergodicity import PlanarConfig

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return PlanarConfig({tuple(c) for c in doc["agents"]}, tuple(doc["pinned"]))


def _cmd_reduce(args) -> int:
    from .ergodicity import reduce_to_line

    config = _load_planar_config(args.config)
    cert = reduce_to_line(config, canonical_ray=args.canonical_ray)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(cert.to_json() + "\n")
    print(f"certificate with {len(cert.moves)} moves written to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    from .ergodicity import MoveCertificate, verify_certificate

    with open(args.certificate, "r", encoding="utf-8") as fh:
        cert = MoveCertificate.from_json(fh.read())
    ok, bad_index, reason = verify_certificate(cert, detail=True)
    if ok:
        print(f"certificate ok ({len(cert.moves)} moves)")
        return 0
    print(f"certificate INVALID: {reason}" +
          ("" if bad_index is None else f" (move index {bad_index})"))
    return 1


def _cmd_serve(args) -> int:
    from .scenarios import load_scenario
    from .service import serve

    scenario = load_scenario(args.scenario)
    print(f"serving on ws://{args.host}:{args.port}/ (snapshot stride {args.stride})")
    serve(scenario, args.port, host=args.host, stride=args.stride,
          speed_ips=args.speed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim",
                                     description="stimulus-driven phase change simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", default="out")
    run.add_argument("--trace", action="store_true",
                     help="dump per-step state transitions (interpreted engine)")
    run.add_argument("--engine", choices=("kernel", "python"), default="kernel")
    run.set_defaults(func=_cmd_run)

    erg = sub.add_parser("ergodicity", help="line-reduction certificates")
    erg_sub = erg.add_subparsers(dest="erg_command", required=True)
    red = erg_sub.add_parser("reduce", help="plan a reduction to a straight line")
    red.add_argument("config", help="JSON file {\"pinned\":[q,r],\"agents\":[[q,r],...]}")
    red.add_argument("--out", default="cert.json")
    red.add_argument("--canonical-ray", type=int, default=None, choices=range(6))
    red.set_defaults(func=_cmd_reduce)
    ver = erg_sub.add_parser("verify", help="replay-check a certificate")
    ver.add_argument("certificate")
    ver.set_defaults(func=_cmd_verify)

    srv = sub.add_parser("serve", help="interactive lattice session over WebSocket")
    srv.add_argument("scenario")
    srv.add_argument("--port", type=int, default=8750)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--stride", type=int, default=1000,
                     help="snapshot broadcast interval in iterations")
    srv.add_argument("--speed", type=float, default=200_000.0,
                     help="simulation speed budget in iterations per second")
    srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioViolation, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
