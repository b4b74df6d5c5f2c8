"""Command-line entry point.

Exit codes are a stable contract: 0 success, 2 usage or config schema
error, 3 work-budget refusal, 4 verification failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

from . import __version__, extremal, formulas, montecarlo, verify
from .dynamics import Modified, Rule, Standard
from .formulas import ThresholdQuery

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_VERIFY = 4


class SchemaError(Exception):
    """Config validation failure; the message names the offending field."""


def _default_threads() -> int:
    raw = os.environ.get("TORUSBOOT_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise SchemaError(f"TORUSBOOT_THREADS: expected an integer, got {raw!r}")
    if value < 1:
        raise SchemaError(f"TORUSBOOT_THREADS: must be >= 1, got {value}")
    return value


def _parse_rule(tag: str, d: int, r: int | None) -> Rule:
    if tag == "modified":
        return Modified()
    if tag == "standard":
        return Standard(r=d if r is None else r)
    raise SchemaError(f"rule: expected 'standard' or 'modified', got {tag!r}")


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(
    out_dir: Path, subcommand: str, params: dict, outputs: list[str], started: str
) -> None:
    manifest = {
        "subcommand": subcommand,
        "params": params,
        "tool_version": __version__,
        "started": started,
        "finished": _timestamp(),
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


# ---------------------------------------------------------------------------
# formulas

FORMULA_QUANTITIES = ("ell", "m", "m-general", "lambda-leading", "p-alpha")


def cmd_formulas(args: argparse.Namespace) -> int:
    params: dict = {}
    if args.quantity == "ell":
        _require(args, "d", "t")
        params = {"d": args.d, "t": args.t}
        value: float | int = formulas.ell(args.t, args.d)
    elif args.quantity == "m":
        _require(args, "d", "t")
        params = {"d": args.d, "t": args.t}
        value = formulas.m(args.t, args.d)
    elif args.quantity == "m-general":
        _require(args, "d", "t", "r")
        params = {"d": args.d, "t": args.t, "r": args.r}
        value = formulas.m_general(args.t, args.d, args.r)
    elif args.quantity == "lambda-leading":
        _require(args, "d", "t", "n", "q")
        rule = _parse_rule(args.rule, args.d, args.r)
        params = {"d": args.d, "t": args.t, "n": args.n, "q": args.q, "rule": args.rule}
        value = formulas.lambda_leading(args.n, args.d, args.t, args.q, rule)
    else:
        _require(args, "d", "t", "n", "alpha")
        rule = _parse_rule(args.rule, args.d, args.r)
        params = {"d": args.d, "t": args.t, "n": args.n, "alpha": args.alpha, "rule": args.rule}
        value = formulas.p_alpha(
            ThresholdQuery(d=args.d, n=args.n, t=args.t, alpha=args.alpha, rule=rule)
        )
    doc = {"quantity": args.quantity, "params": params, "value": value}
    if args.quantity in ("lambda-leading", "p-alpha"):
        # the (1+o(1)) factor is dropped; flag so reports cannot confuse
        # asymptotic predictions with exact values
        doc["label"] = "leading-order"
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise SchemaError(f"--{name} is required for quantity {args.quantity!r}")


# ---------------------------------------------------------------------------
# extremal

def cmd_extremal(args: argparse.Namespace) -> int:
    rule = _parse_rule(args.rule, args.d, args.r)
    started = _timestamp()
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []

    if args.action == "min":
        count, certs = extremal.count_min_certificates(args.d, args.t, rule, budget=args.budget)
        tags = [c.to_json()["classification"] for c in certs]
        summary = {
            "d": args.d,
            "t": args.t,
            "rule": args.rule,
            "size": certs[0].size if certs else 0,
            "count": count,
            "canonical": tags.count("canonical"),
            "semi_canonical": tags.count("semi-canonical"),
            "other": tags.count("other"),
        }
        if out_dir is not None:
            (out_dir / "certificates.json").write_text(extremal.certificates_to_json(certs) + "\n")
            header = "d,t,rule,size,count,canonical,semi_canonical,other\n"
            row = ",".join(str(summary[k]) for k in
                           ("d", "t", "rule", "size", "count", "canonical", "semi_canonical", "other"))
            (out_dir / "summary.csv").write_text(header + row + "\n")
            outputs += ["certificates.json", "summary.csv"]
        print(json.dumps(summary, sort_keys=True))
    elif args.action in ("rho1", "joint"):
        if args.action == "joint":
            if args.offset is None:
                raise SchemaError("--offset is required for action 'joint'")
            offset = _parse_offset(args.offset, args.d)
            poly = extremal.exact_joint(args.d, args.t, offset, rule, budget=args.budget)
        else:
            poly = extremal.exact_rho1(args.d, args.t, rule, budget=args.budget)
        doc = poly.to_json()
        if args.q is not None:
            doc["value_at_q"] = {"q": args.q, "value": poly.evaluate(args.q)}
        if out_dir is not None:
            name = f"{args.action}.json"
            (out_dir / name).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            outputs.append(name)
        print(json.dumps(doc, sort_keys=True))
    else:  # near-minimal
        if args.k is None:
            raise SchemaError("--k is required for action 'near-minimal'")
        g = extremal.count_near_minimal(args.d, args.t, args.k, rule, budget=args.budget)
        print(json.dumps({"d": args.d, "t": args.t, "k": args.k, "rule": args.rule, "count": g},
                         sort_keys=True))

    if out_dir is not None:
        params = {k: getattr(args, k) for k in ("action", "d", "t", "rule", "r", "offset", "k", "budget", "q")}
        _write_manifest(out_dir, "extremal", params, outputs, started)
    return EXIT_OK


def _parse_offset(raw: str, d: int) -> tuple[int, ...]:
    try:
        offset = tuple(int(p) for p in raw.split(","))
    except ValueError:
        raise SchemaError(f"--offset: expected comma-separated integers, got {raw!r}")
    if len(offset) != d:
        raise SchemaError(f"--offset: expected {d} coordinates, got {len(offset)}")
    return offset


# ---------------------------------------------------------------------------
# experiment

_CONFIG_FIELDS = {
    "schema": int,
    "d": int,
    "n": int,
    "rule": str,
    "r": int,
    "q": (int, float),
    "t_horizon": int,
    "trials": int,
    "master_seed": int,
    "threads": int,
    "measure": list,
    "t_measure": int,
    "lambda": (int, float),
}
_REQUIRED_FIELDS = ("schema", "d", "n", "rule", "q", "t_horizon", "trials", "master_seed")


def load_experiment_config(doc: dict) -> tuple[montecarlo.ExperimentConfig, dict]:
    """Validated (config, extras) from a parsed JSON document.

    extras carries the measurement plan: measure list, t_measure, lambda.
    """
    if not isinstance(doc, dict):
        raise SchemaError("config: expected a JSON object")
    for key in doc:
        if key not in _CONFIG_FIELDS:
            raise SchemaError(f"{key}: unknown field")
    for key in _REQUIRED_FIELDS:
        if key not in doc:
            raise SchemaError(f"{key}: required field missing")
    for key, expected in _CONFIG_FIELDS.items():
        if key not in doc:
            continue
        value = doc[key]
        if isinstance(value, bool) or not isinstance(value, expected):
            raise SchemaError(f"{key}: wrong type")
    if doc["schema"] != 1:
        raise SchemaError(f"schema: expected 1, got {doc['schema']}")
    rule = _parse_rule(doc["rule"], doc["d"], doc.get("r"))
    measure = doc.get("measure", ["T", "F"])
    for i, item in enumerate(measure):
        if item not in ("T", "F"):
            raise SchemaError(f"measure[{i}]: expected 'T' or 'F', got {item!r}")
    try:
        config = montecarlo.ExperimentConfig(
            d=doc["d"],
            n=doc["n"],
            rule=rule,
            q=float(doc["q"]),
            t_horizon=doc["t_horizon"],
            trials=doc["trials"],
            master_seed=doc["master_seed"],
            threads=doc.get("threads", _default_threads()),
        )
    except ValueError as exc:
        raise SchemaError(str(exc))
    extras = {
        "measure": list(measure),
        "t_measure": doc.get("t_measure", doc["t_horizon"]),
        "lambda": doc.get("lambda"),
    }
    return config, extras


def cmd_experiment(args: argparse.Namespace) -> int:
    started = _timestamp()
    try:
        doc = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise SchemaError(f"config: cannot read {args.config}: {exc}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config: invalid JSON: {exc}")
    config, extras = load_experiment_config(doc)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []
    report: dict = {"config": doc, "results": {}}

    if "T" in extras["measure"]:
        dist_t = montecarlo.run_trials_T(config)
        (out_dir / "T_hist.csv").write_text(dist_t.to_csv())
        outputs.append("T_hist.csv")
        est = montecarlo.estimate_P_T_le_t(dist_t, extras["t_measure"])
        report["results"]["T"] = {
            "trials": dist_t.trials,
            "stuck": dist_t.stuck_count,
            "P_T_le_t": {
                "t": extras["t_measure"],
                "point": est.point,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
                "level": est.level,
            },
        }
    if "F" in extras["measure"]:
        dist_f = montecarlo.run_trials_F(config, extras["t_measure"])
        (out_dir / "F_hist.csv").write_text(dist_f.to_csv())
        outputs.append("F_hist.csv")
        entry: dict = {"trials": dist_f.trials, "t": extras["t_measure"]}
        if extras["lambda"] is not None:
            entry["tv_vs_poisson"] = {
                "lambda": extras["lambda"],
                "tv": montecarlo.tv_report(dist_f, float(extras["lambda"])),
            }
        report["results"]["F"] = entry

    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs.append("report.json")
    _write_manifest(out_dir, "experiment", doc, outputs, started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args: argparse.Namespace) -> int:
    threads = args.threads if args.threads is not None else _default_threads()
    reports = verify.run_suite(args.suite, threads=threads)
    all_ok = True
    for rep in reports:
        print(rep.line())
        for line in rep.details:
            print("   ", line)
        all_ok = all_ok and rep.passed
    return EXIT_OK if all_ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torusboot")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_form = sub.add_parser("formulas", help="closed-form quantities as JSON")
    p_form.add_argument("quantity", choices=FORMULA_QUANTITIES)
    p_form.add_argument("--d", type=int)
    p_form.add_argument("--t", type=int)
    p_form.add_argument("--n", type=int)
    p_form.add_argument("--r", type=int)
    p_form.add_argument("--q", type=float)
    p_form.add_argument("--alpha", type=float)
    p_form.add_argument("--rule", choices=("standard", "modified"), default="standard")
    p_form.set_defaults(func=cmd_formulas)

    p_ext = sub.add_parser("extremal", help="exhaustive extremal oracles")
    p_ext.add_argument("action", choices=("min", "rho1", "joint", "near-minimal"))
    p_ext.add_argument("--d", type=int, required=True)
    p_ext.add_argument("--t", type=int, required=True)
    p_ext.add_argument("--r", type=int)
    p_ext.add_argument("--rule", choices=("standard", "modified"), default="standard")
    p_ext.add_argument("--offset", help="comma-separated coordinates, e.g. 1,0")
    p_ext.add_argument("--k", type=int)
    p_ext.add_argument("--q", type=float)
    p_ext.add_argument("--budget", type=int, default=extremal.DEFAULT_BUDGET)
    p_ext.add_argument("--out")
    p_ext.set_defaults(func=cmd_extremal)

    p_exp = sub.add_parser("experiment", help="seeded Monte Carlo experiment from a JSON config")
    p_exp.add_argument("config")
    p_exp.add_argument("--out", required=True)
    p_exp.set_defaults(func=cmd_experiment)

    p_ver = sub.add_parser("verify", help="run an acceptance suite")
    p_ver.add_argument("suite", choices=sorted(verify.SUITES))
    p_ver.add_argument("--threads", type=int)
    p_ver.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except extremal.WorkBudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
