"""Command line: ``stlcov compile|validate|monitor|adaptive|falsify|random|report``.

Exit codes: 0 success, 1 usage or configuration error, 2 validation failure,
3 the campaign ended with its objective unmet.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace

from . import automaton as sa
from .compiler import compile_spec
from .engine import (POLICIES, AdaptiveConfig, adaptive_testing, falsify_global,
                     random_testing)
from .predicates import PredicateError
from .pso import PsoConfig
from .signals import SignalError, read_trace_csv
from .stl.formula import FormulaError
from .stl.monitor import robustness, verdict
from .stl.parser import SpecSyntaxError, load_spec
from .sut import UnknownSystem, builtin, external

OK, USAGE, INVALID, UNMET = 0, 1, 2, 3

log = logging.getLogger("stlcov")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise UsageError(f"--sut-param expects key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


# ---------------------------------------------------------------------------

def cmd_compile(args) -> int:
    spec = load_spec(args.spec)
    A = compile_spec(spec)
    report = sa.validate(A)
    sa.save(A, args.out)
    if args.dot:
        _write(args.dot, sa.export_dot(A))
    print(f"locations: {len(A.locations)}")
    print(f"transitions: {len(A.transitions)}")
    if not report.ok:
        for w in report.witnesses:
            print(f"invalid: {w}", file=sys.stderr)
        return INVALID
    return OK


def cmd_validate(args) -> int:
    A = sa.load(args.automaton)
    report = sa.validate(A)
    print(f"deterministic: {report.deterministic}")
    print(f"complete: {report.complete}")
    print(f"all guards satisfiable: {report.all_guards_satisfiable}")
    for w in report.witnesses:
        print(f"  {w}")
    return OK if report.ok else INVALID


def cmd_monitor(args) -> int:
    spec = load_spec(args.spec)
    w = read_trace_csv(args.trace)
    missing = {v.name for v in spec.variables} - w.variables
    if missing:
        raise UsageError(f"trace lacks variables {sorted(missing)}")
    rho = robustness(spec.formula, w, 0)
    print(f"robustness: {rho:g}")
    print(f"verdict: {verdict(spec.formula, w).value}")
    return OK


def _settings(args) -> dict:
    cfg = _load_config(args.config) if args.config else {}
    for key in ("spec", "automaton", "budget", "criterion", "policy", "seed", "length",
                "max_length", "out", "dot"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if args.carry_pruning:
        cfg["carry_pruning"] = True
    if args.target:
        cfg["targets"] = args.target
    sut = dict(cfg.get("sut") or {})
    if args.sut:
        sut = {"builtin": args.sut, "params": sut.get("params", {})}
    if args.sut_cmd:
        sut = {"command": args.sut_cmd}
    if args.sut_param:
        sut.setdefault("params", {}).update(dict(_param(p) for p in args.sut_param))
    if args.sut_timeout is not None:
        sut["timeout"] = args.sut_timeout
    cfg["sut"] = sut
    pso = dict(cfg.get("pso") or {})
    if args.swarm is not None:
        pso["swarm_size"] = args.swarm
    if args.iters is not None:
        pso["max_iterations"] = args.iters
    cfg["pso"] = pso
    return cfg


def _engine_config(cfg) -> AdaptiveConfig:
    try:
        pso = PsoConfig(**cfg.get("pso", {}))
        targets = cfg.get("targets")
        return AdaptiveConfig(
            budget=cfg.get("budget", 2000), criterion=cfg.get("criterion", "location"),
            policy=cfg.get("policy", "nearest-first"), pso=pso, seed=int(cfg.get("seed", 0)),
            max_length=int(cfg.get("max_length", 64)),
            carry_pruning=bool(cfg.get("carry_pruning", False)),
            targets=tuple(targets) if targets else None)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad configuration: {exc}") from None


def _pipeline(cfg, need_spec=False):
    spec = load_spec(cfg["spec"]) if cfg.get("spec") else None
    if need_spec and spec is None:
        raise UsageError("this command needs --spec")
    if cfg.get("automaton"):
        A = sa.load(cfg["automaton"])
    elif spec is not None:
        A = compile_spec(spec)
    else:
        raise UsageError("give --spec or --automaton")
    report = sa.validate(A)
    if not report.ok:
        for w in report.witnesses:
            print(f"invalid: {w}", file=sys.stderr)
        return spec, A, None
    sut = cfg["sut"]
    if "command" in sut:
        model = external(sut["command"], A.inputs, A.outputs, float(sut.get("timeout", 10.0)))
    elif "builtin" in sut:
        model = builtin(sut["builtin"], **sut.get("params", {}))
    else:
        raise UsageError("give --sut NAME or --sut-cmd COMMAND")
    return spec, A, model


def _emit(report, cfg, A, started):
    if cfg.get("out"):
        _write(cfg["out"], json.dumps(report.to_json(), indent=2) + "\n")
    if cfg.get("dot"):
        _write(cfg["dot"], sa.export_dot(A, _annotations(report.to_json())))
    print(f"coverage: {report.coverage['percent']}% {report.criterion} "
          f"({len(report.coverage['satisfied'])}/{report.coverage['total']})")
    print(f"simulations: {report.simulations}")
    print(f"wall time: {time.monotonic() - started:.2f}s")


def cmd_adaptive(args) -> int:
    started = time.monotonic()
    cfg = _settings(args)
    config = _engine_config(cfg)
    _, A, model = _pipeline(cfg)
    if model is None:
        return INVALID
    try:
        _, _, report = adaptive_testing(A, model, config)
    finally:
        model.close()
    _emit(report, cfg, A, started)
    print(f"unreachable evidence: {report.evidence}")
    pending = set(report.coverage["satisfied"]) | set(report.evidence)
    done = len(pending) == report.coverage["total"]
    return OK if done else UNMET


def cmd_random(args) -> int:
    started = time.monotonic()
    cfg = _settings(args)
    config = _engine_config(cfg)
    _, A, model = _pipeline(cfg)
    if model is None:
        return INVALID
    try:
        report = random_testing(A, model, config, int(cfg.get("length", 3)))
    finally:
        model.close()
    _emit(report, cfg, A, started)
    return OK


def cmd_falsify(args) -> int:
    started = time.monotonic()
    cfg = _settings(args)
    config = _engine_config(cfg)
    spec, A, model = _pipeline(cfg, need_spec=True)
    if model is None:
        return INVALID
    try:
        res = falsify_global(spec, model, config, int(cfg.get("length", 3)))
    finally:
        model.close()
    print(f"robustness: {res.robustness:g}")
    print(f"simulations: {res.simulations}")
    print(f"wall time: {time.monotonic() - started:.2f}s")
    if cfg.get("out"):
        out = {"robustness": res.robustness, "simulations": res.simulations, "runs": res.runs,
               "witness": None if res.witness is None else [v.as_dict() for v in res.witness]}
        _write(cfg["out"], json.dumps(out, indent=2) + "\n")
    if res.witness is None:
        print("no witness found")
        return UNMET
    print("witness found")
    return OK


def _annotations(report: dict) -> dict:
    ann = {"locations": {}, "transitions": {}}
    for key in ("coverage", "secondary"):
        ledger = report.get(key) or {}
        kind = ledger.get("criterion")
        if kind == "location":
            ann["locations"] = {int(k): v for k, v in ledger.get("counts", {}).items()}
        elif kind == "transition":
            ann["transitions"] = {int(k): v for k, v in ledger.get("counts", {}).items()}
    return ann


def cmd_report(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {args.input}: {exc}") from None
    if args.automaton:
        A = sa.load(args.automaton)
        if report.get("automaton_hash") != A.digest():
            print("report was produced for a different automaton", file=sys.stderr)
            return INVALID
    elif report.get("automaton"):
        A = sa.from_json(report["automaton"])
        if report.get("automaton_hash") and report["automaton_hash"] != A.digest():
            print("embedded automaton does not match the report's hash", file=sys.stderr)
            return INVALID
    else:
        raise UsageError("report has no embedded automaton; pass --automaton")
    text = sa.export_dot(A, _annotations(report))
    if args.dot:
        _write(args.dot, text)
    else:
        sys.stdout.write(text)
    cov = report.get("coverage") or {}
    if cov:
        print(f"coverage: {cov.get('percent', 0)}% {cov.get('criterion')}", file=sys.stderr)
    return OK


# ---------------------------------------------------------------------------

def _campaign_flags(p):
    p.add_argument("--spec", help="specification file")
    p.add_argument("--automaton", help="compiled automaton JSON (instead of --spec)")
    p.add_argument("--sut", help="builtin system name (s1, s2, leaky_integrator)")
    p.add_argument("--sut-param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--sut-cmd", help="external system command line")
    p.add_argument("--sut-timeout", type=float, help="seconds per simulation (external)")
    p.add_argument("--config", help="run-config JSON; flags override its values")
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--swarm", type=int, help="PSO swarm size")
    p.add_argument("--iters", type=int, help="PSO iterations")
    p.add_argument("--length", type=int, help="trace length (falsify, random)")
    p.add_argument("--max-length", type=int, dest="max_length")
    p.add_argument("--criterion", choices=["location", "transition"])
    p.add_argument("--policy", choices=list(POLICIES))
    p.add_argument("--carry-pruning", action="store_true")
    p.add_argument("--target", type=int, action="append", help="restrict targets (repeatable)")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--dot", help="annotated DOT path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stlcov", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", help="compile a specification to an automaton")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dot")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("validate", help="check an automaton file")
    p.add_argument("--automaton", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("monitor", help="robustness and verdict of a trace")
    p.add_argument("--spec", required=True)
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_monitor)

    for name, func, text in (("adaptive", cmd_adaptive, "adaptive coverage campaign"),
                             ("falsify", cmd_falsify, "global falsification baseline"),
                             ("random", cmd_random, "random testing baseline")):
        p = sub.add_parser(name, help=text)
        _campaign_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="annotated DOT from a stored report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--dot")
    p.add_argument("--automaton", help="check the report against this automaton")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except sa.SchemaError as exc:
        print(f"invalid automaton: {exc}", file=sys.stderr)
        return INVALID
    except (UsageError, SpecSyntaxError, FormulaError, PredicateError, SignalError,
            UnknownSystem, OSError, ValueError) as exc:
        # ValueError here is a configuration mismatch, e.g. system vs spec variables
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
