"""Command-line front end.

Exit codes: 0 success, 1 property violation, 2 input error, 3 solver
failure, 4 class infeasibility.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import checks
from .disintegration import (
    DisintegrationMap,
    class_distance,
    classes_equal,
    disintegrate,
    map_from_class_plan,
    pushforward_meta,
    recombine,
    second_marginal,
)
from .errors import NumericalFailure, OTError
from .kantorovich import TransportPlan, plans_to_dot, solve_mk
from .measure import (
    CostSpec,
    Euclidean,
    InnerProduct,
    SquaredEuclidean,
    _as_array,
    cost_from_dict,
    make_measure,
    measure_from_dict,
    measure_to_dict,
)
from .meta import EPS_META, meta_from_dict, meta_to_dict
from .solver import EPS_DUAL
from .transport_class import solve_class_problem

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_SOLVER, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


DEFAULT_TOLERANCES = {"meta": EPS_META, "dual": EPS_DUAL}


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs besides its inputs' contents.

    ``tolerances`` maps ``meta`` (class verdicts) and ``dual`` (duality and
    Lipschitz check thresholds) to positive overrides of the defaults.
    """

    command: str
    inputs: dict = field(default_factory=dict)
    out: str | None = None
    format: str | None = None
    mode: str | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0

    def __post_init__(self):
        for name, value in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise InputError(f"--tol: unknown tolerance {name!r}")
            if not value > 0:
                raise InputError(f"--tol: {name} must be positive")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        tol = dict(DEFAULT_TOLERANCES)
        for item in args.tol or []:
            name, sep, value = item.partition("=")
            if not sep:
                raise InputError(f"--tol: expected NAME=VALUE, got {item!r}")
            try:
                tol[name] = float(value)
            except ValueError:
                raise InputError(f"--tol: {value!r} is not a number")
        keys = ("cost", "mu", "nu", "plan", "lambda_")
        inputs = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
        return cls(args.command, inputs, args.out, args.format, args.mode, tol, args.seed)


def _num(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{what}: file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: malformed JSON in {path}: {exc}")


def parse_cost(spec: str) -> CostSpec:
    """``euclidean[:p]``, ``sqeuclidean``, ``inner`` or a path to cost JSON."""
    name, _, arg = spec.partition(":")
    if name == "euclidean":
        return Euclidean(float(arg) if arg else 1)
    if name == "sqeuclidean":
        return SquaredEuclidean()
    if name == "inner":
        return InnerProduct()
    data = _read_json(spec, "--cost")
    try:
        return cost_from_dict(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"--cost: {exc}")


def load_measure(path, flag, mode=None):
    data = _read_json(path, flag)
    if not isinstance(data, dict):
        raise InputError(f"{flag}: expected a JSON object")
    if mode is not None:
        data = dict(data, mode=mode)
    try:
        return measure_from_dict(data)
    except KeyError as exc:
        raise InputError(f"{flag}: {exc.args[0]}")
    except (OTError, ValueError, TypeError) as exc:
        raise InputError(f"{flag}: invalid field value: {exc}")


def load_plan(path, mode=None) -> TransportPlan:
    """A plan file holds either ``source``/``target``/``matrix`` or a disintegration map."""
    data = _read_json(path, "--plan")
    try:
        if "base" in data:
            if mode is not None:
                data = dict(
                    data,
                    base=dict(data["base"], mode=mode),
                    conditionals=[dict(c, mode=mode) for c in data["conditionals"]],
                )
            f = DisintegrationMap.from_dict(data)
            return recombine(f, f.base)
        for key in ("source", "target", "matrix"):
            if key not in data:
                raise KeyError(f"plan JSON is missing field {key!r}")
        src, tgt = data["source"], data["target"]
        if mode is not None:
            src, tgt = dict(src, mode=mode), dict(tgt, mode=mode)
        mu, nu = measure_from_dict(src), measure_from_dict(tgt)
        M = _as_array(data["matrix"], mu.mode)
        return TransportPlan(mu, nu, M)
    except KeyError as exc:
        raise InputError(f"--plan {path}: {exc.args[0]}")
    except (OTError, ValueError, TypeError) as exc:
        raise InputError(f"--plan {path}: {exc}")


def plan_to_dict(plan: TransportPlan) -> dict:
    return {
        "source": measure_to_dict(plan.source),
        "target": measure_to_dict(plan.target),
        "matrix": [[_num(v) for v in row] for row in plan.matrix],
    }


def _emit(args, payload: dict, table_lines: list[str]):
    fmt = args.format or ("table" if sys.stdout.isatty() else "json")
    if fmt == "json":
        text = json.dumps(payload, indent=2) + "\n"
    elif fmt == "csv" and "csv" in payload:
        text = payload["csv"]
    else:
        text = "\n".join(table_lines) + "\n"
    if args.out and args.command != "demo":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    if not (args.cost and args.mu and args.nu):
        raise InputError("solve needs --cost, --mu and --nu")
    c = parse_cost(args.cost)
    mu = load_measure(args.mu, "--mu", args.mode)
    nu = load_measure(args.nu, "--nu", args.mode)
    res = solve_mk(c, mu, nu)
    sol = res.solution
    dual = mu.weights @ sol.dual_row + nu.weights @ sol.dual_col
    gap = abs(float(res.value) - float(dual))
    triples = [(i, j, res.plan.matrix[i, j]) for i, j in res.plan.support()]
    payload = {
        "value": _num(res.value),
        "plan": [[i, j, _num(x)] for i, j, x in triples],
        "dual_row": [_num(v) for v in sol.dual_row],
        "dual_col": [_num(v) for v in sol.dual_col],
        "duality_gap": gap,
        "iterations": sol.iterations,
        "csv": "i,j,mass\n" + "".join(f"{i},{j},{_num(x)}\n" for i, j, x in triples),
    }
    lines = [f"value         {_num(res.value)}", f"duality gap   {gap:.3e}", "plan (i, j, mass):"]
    lines += [f"  {i:>3} {j:>3}  {_num(x)}" for i, j, x in triples]
    lines.append("dual_row  " + " ".join(str(_num(v)) for v in sol.dual_row))
    lines.append("dual_col  " + " ".join(str(_num(v)) for v in sol.dual_col))
    _emit(args, payload, lines)
    return EXIT_OK


def _partition(plans, tol=EPS_META):
    n = len(plans)
    label = list(range(n))
    for a in range(n):
        for b in range(a + 1, n):
            if label[b] == b and classes_equal(plans[a], plans[b], tol):
                label[b] = label[a]
    groups: dict[int, list[int]] = {}
    for k, lab in enumerate(label):
        groups.setdefault(lab, []).append(k)
    return list(groups.values())


def cmd_classify(args) -> int:
    if not args.plan:
        raise InputError("classify needs at least one --plan")
    plans = [load_plan(p, args.mode) for p in args.plan]
    src = plans[0].source
    for p, path in zip(plans, args.plan):
        if p.source != src:
            raise InputError(f"--plan {path}: source measure differs from the first plan")
    names = [Path(p).stem for p in args.plan]
    groups = _partition(plans, args.config.tolerances["meta"])
    dists = {}
    for a in range(len(plans)):
        for b in range(a + 1, len(plans)):
            dists[f"{names[a]}~{names[b]}"] = _num(class_distance(plans[a], plans[b]))
    payload = {
        "classes": [[names[k] for k in g] for g in groups],
        "meta_distances": dists,
    }
    lines = ["classes:"] + ["  {" + ", ".join(names[k] for k in g) + "}" for g in groups]
    lines += ["meta distances:"] + [f"  {k}: {v}" for k, v in dists.items()]
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_class_solve(args) -> int:
    if not (args.cost and args.mu and args.lambda_):
        raise InputError("class-solve needs --cost, --mu and --lambda")
    c = parse_cost(args.cost)
    mu = load_measure(args.mu, "--mu", args.mode)
    data = _read_json(args.lambda_, "--lambda")
    try:
        if args.mode is not None:
            data = dict(data, atoms=[dict(a, mode=args.mode) for a in data["atoms"]])
        Lambda = meta_from_dict(data)
    except KeyError as exc:
        raise InputError(f"--lambda: missing field {exc.args[0]!r}")
    except (OTError, ValueError, TypeError) as exc:
        raise InputError(f"--lambda: {exc}")
    report = solve_class_problem(c, mu, Lambda)
    payload = report.to_dict()
    payload["degeneracy_flags"] = [p.to_dict() for p in report.degeneracy_flags]
    lines = [
        f"relaxed value     {payload['relaxed_value']}",
        f"map value         {payload['map_value']}",
        f"gap               {payload['gap']}",
        f"feasible maps     {report.feasible_maps_exist}",
        f"assignment        {payload['optimal_assignment']}",
    ]
    for p in report.degeneracy_flags:
        kind = "degenerate" if p.flagged else "tie-degenerate"
        lines.append(f"flag  pair ({p.i}, {p.j}) {kind}, discriminant {p.to_dict()['discriminant']}")
    _emit(args, payload, lines)
    return EXIT_OK if report.feasible_maps_exist else EXIT_INFEASIBLE


def demo_plans():
    """Source, target and the four plans f, g, h, k of the three-atom example."""
    mu = make_measure([0, 1, 2], ["1/3"] * 3, mode="rational")
    nu = make_measure([0, 1], ["1/6", "5/6"], mode="rational")
    F = Fraction

    def plan(rows):
        return TransportPlan(mu, nu, [[F(a), F(b)] for a, b in rows])

    return mu, nu, {
        "f": plan([("1/6", "1/6"), (0, "1/3"), (0, "1/3")]),
        "g": plan([(0, "1/3"), ("1/6", "1/6"), (0, "1/3")]),
        "h": plan([("3/30", "7/30"), ("2/30", "8/30"), (0, "1/3")]),
        "k": plan([("1/30", "9/30"), ("4/30", "6/30"), (0, "1/3")]),
    }


def cmd_demo(args) -> int:
    mu, nu, plans = demo_plans()
    c = Euclidean(1)
    lines = ["mu = " + repr(mu), "nu = " + repr(nu), ""]
    payload = {"conditionals": {}, "meta": {}, "second_marginals": {}, "costs": {}}
    for name, plan in plans.items():
        f = disintegrate(plan)
        lines.append(f"{name}: conditionals")
        for i, lam in enumerate(f.conditionals):
            lines.append(f"   x{i + 1} -> {lam!r}")
        meta = pushforward_meta(f)
        lines.append(f"   push-forward {meta!r}")
        rec = map_from_class_plan(plan)
        lines.append(f"   splitting atoms {[i + 1 for i in rec.splitting_atoms]}")
        marg = second_marginal(plan)
        lines.append(f"   second marginal equals nu: {marg == nu}")
        lines.append(f"   cost (|x-y|) = {plan.cost(c)}")
        payload["conditionals"][name] = [measure_to_dict(l) for l in f.conditionals]
        payload["meta"][name] = meta_to_dict(meta)
        payload["second_marginals"][name] = marg == nu
        payload["costs"][name] = _num(plan.cost(c))
    names = list(plans)
    tol = args.config.tolerances["meta"]
    groups = _partition([plans[k] for k in names], tol)
    verdicts = {
        pair: classes_equal(plans[pair[0]], plans[pair[2]], tol)
        for pair in ("f~g", "f~h", "h~k", "f~k")
    }
    dists = {
        f"{a}~{b}": _num(class_distance(plans[a], plans[b]))
        for i, a in enumerate(names) for b in names[i + 1:]
    }
    mk = solve_mk(c, mu, nu).value
    lines.append("")
    lines.append("classes: " + " ".join("{" + ",".join(names[k] for k in g) + "}" for g in groups))
    for k, v in verdicts.items():
        lines.append(f"  {k}: {'same class' if v else 'different classes'}  (meta distance {dists[k]})")
    lines.append(f"MK value (|x-y|) = {mk}")
    payload.update(
        classes=[[names[k] for k in g] for g in groups],
        verdicts=verdicts,
        meta_distances=dists,
        mk_value=_num(mk),
    )
    expected = verdicts == {"f~g": True, "f~h": False, "h~k": False, "f~k": False} and all(
        payload["second_marginals"].values()
    )
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "same_class.dot").write_text(
        plans_to_dot("same_class", [("f", plans["f"]), ("g", plans["g"])])
    )
    (out_dir / "two_splits.dot").write_text(
        plans_to_dot("two_splits", [("h", plans["h"]), ("k", plans["k"])])
    )
    _emit(args, payload, lines)
    return EXIT_OK if expected else EXIT_VIOLATION


def cmd_check(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    cost = parse_cost(args.cost) if args.cost else None
    tol = None
    if checks.SUITES[args.suite][1] > 0:
        tol = args.config.tolerances["dual"]
    result = checks.run_suite(args.suite, trials=args.trials, seed=args.seed, cost=cost, tol=tol)
    payload = {
        "suite": args.suite,
        "trials": result.trials,
        "max_violation": result.max_violation,
        "passed": result.passed,
    }
    if not result.passed:
        payload["witness"] = result.witness
    lines = [
        f"suite          {args.suite}",
        f"trials         {result.trials}",
        f"max violation  {result.max_violation:.3e}",
        f"result         {'pass' if result.passed else 'FAIL'}",
    ]
    if not result.passed:
        lines.append("witness " + json.dumps(result.witness))
    _emit(args, payload, lines)
    return EXIT_OK if result.passed else EXIT_VIOLATION


COMMANDS = {
    "solve": cmd_solve,
    "classify": cmd_classify,
    "class-solve": cmd_class_solve,
    "demo": cmd_demo,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otclass", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=["float", "rational"])
    common.add_argument("--out")
    common.add_argument("--format", choices=["json", "csv", "table"])
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="override a tolerance (meta, dual)")

    p = sub.add_parser("solve", parents=[common], help="Kantorovich problem")
    p.add_argument("--cost", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)

    p = sub.add_parser("classify", parents=[common], help="partition plans into classes")
    p.add_argument("--plan", action="extend", nargs="+", required=True)

    p = sub.add_parser("class-solve", parents=[common], help="problem within a class")
    p.add_argument("--cost", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--lambda", dest="lambda_", required=True)

    sub.add_parser("demo", parents=[common], help="three-atom example walkthrough")

    p = sub.add_parser("check", parents=[common], help="randomized property suites")
    p.add_argument("suite", choices=sorted(checks.SUITES))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--cost")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        args.config = RunConfig.from_args(args)
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
