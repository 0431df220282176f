"""Command-line entry point ``reactive-paths``.

Configuration is one JSON document; command-line flags override its fields,
which override the built-in defaults.  CSV outputs get a JSON sidecar next
to them (same stem, ``.json``) holding the merged configuration and seed;
running again from the sidecar's ``config`` reproduces the CSV byte for
byte.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from . import figures as figs
from . import kernels
from . import special_laws as sl
from . import verify as ver
from .ams import AmsConfig, run_ams
from .errors import ReactivePathsError
from .exit_laws import ExitProblem, exit_probability, h_drift, laplace_bvp
from .limit_laws import LAW_NAMES, law_from_spec, monomial_mean_bound
from .mc_sampler import SimConfig, extract_reactive_segment, sample
from .potentials import Potential, correction_F

PROBLEM_DEFAULTS = {"potential": "quartic", "a": -0.9, "b": 0.9, "x": -0.89, "epsilon": [0.1]}
SIM_DEFAULTS = {"n": 1000, "sampler": "naive-rejection", "dt": None, "seed": 0, "replicas": 1,
                "max_steps": 10_000_000, "bridge_correction": True, "delta_x": 0.1,
                "delta_y": 0.1}
AMS_DEFAULTS = {"n_replicas": 100, "kill_count": 1, "absorbing_level": None,
                "stop_level": None}


def _eps_list(text):
    try:
        vals = [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("epsilon list must be nonempty and positive")
    return vals


def _kv(items):
    """``["x=-0.89", "potential=quartic"]`` -> dict, numbers parsed."""
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ReactivePathsError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def load_config(args, defaults):
    """Merge defaults < config file < flags.

    A JSON sidecar written by a previous run is accepted as a config file;
    its embedded ``config`` is used, so the run can be repeated exactly.
    """
    cfg = json.loads(json.dumps(defaults))
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = json.load(fh)
        if isinstance(doc.get("config"), dict) and ("command" in doc or "figure" in doc):
            doc = doc["config"]
        cfg.update(doc)
    if getattr(args, "epsilon", None) is not None:
        cfg["epsilon"] = list(args.epsilon)
    for flag in ("seed", "budget_seconds"):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[flag] = val
    if isinstance(cfg.get("epsilon"), (int, float)):
        cfg["epsilon"] = [cfg["epsilon"]]
    eps = cfg.get("epsilon")
    if eps is not None and (not eps or any(not float(e) > 0 for e in eps)):
        raise ReactivePathsError("epsilon list must be nonempty and positive")
    return cfg


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=ver._json_default) + "\n"


def _csv_text(rows):
    buf = io.StringIO()
    csv.writer(buf).writerows(rows)
    return buf.getvalue()


def _write_pair(out, rows, sidecar):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_csv_text(rows), newline="")
    side = out.with_suffix(".json")
    side.write_text(_dump(sidecar))
    return out, side


def _outputs(out, eps_list, default):
    base = Path(out or default)
    if len(eps_list) == 1:
        return [base]
    return [base.with_name(f"{base.stem}_eps{e:g}{base.suffix or '.csv'}") for e in eps_list]


def _problem(cfg, eps):
    return ExitProblem(Potential.from_tag(cfg["potential"]), float(cfg["a"]), float(cfg["b"]),
                       float(cfg["x"]), float(eps))


def _sim(cfg, eps):
    return SimConfig(float(eps), dt=cfg.get("dt"), max_steps=int(cfg["max_steps"]),
                     seed=int(cfg["seed"]), replicas=int(cfg["replicas"]),
                     sampler=cfg["sampler"], bridge_correction=bool(cfg["bridge_correction"]))


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args):
    cfg = load_config(args, {**PROBLEM_DEFAULTS, **SIM_DEFAULTS})
    if args.replicas is not None:
        cfg["replicas"] = args.replicas
    for eps, out in zip(cfg["epsilon"], _outputs(args.out, cfg["epsilon"], "simulate.csv")):
        sim = _sim(cfg, eps)
        if sim.sampler == "free-run":
            res = extract_reactive_segment(Potential.from_tag(cfg["potential"]), sim,
                                           cfg["delta_x"], cfg["delta_y"], int(cfg["n"]))
        else:
            res = sample(_problem(cfg, eps), sim, int(cfg["n"]))
        rows = [("duration", "attempts", "replica", "seed")] + list(res.rows())
        side = {"command": "simulate", "config": dict(cfg, epsilon=[eps]), "seed": sim.seed,
                "meta": res.meta, "n": len(res), "n_attempts": res.n_attempts}
        _write_pair(out, rows, side)
    return 0


def cmd_ams(args):
    cfg = load_config(args, {**PROBLEM_DEFAULTS, **SIM_DEFAULTS, **AMS_DEFAULTS})
    if args.replicas is not None:
        cfg["n_replicas"] = args.replicas
    for eps, out in zip(cfg["epsilon"], _outputs(args.out, cfg["epsilon"], "ams.csv")):
        acfg = AmsConfig(_sim(cfg, eps), n_replicas=int(cfg["n_replicas"]),
                         kill_count=int(cfg["kill_count"]),
                         absorbing_level=cfg["absorbing_level"], stop_level=cfg["stop_level"])
        res = run_ams(_problem(cfg, eps), acfg)
        rows = [("duration", "attempts", "replica", "seed")] + list(res.sample.rows())
        side = {"command": "ams", "config": dict(cfg, epsilon=[eps]), "seed": int(cfg["seed"]),
                "meta": res.sample.meta, "probability_estimate": res.probability_estimate,
                "iterations": res.n_iterations}
        _write_pair(out, rows, side)
    return 0


def cmd_exit_law(args):
    cfg = load_config(args, {**PROBLEM_DEFAULTS, "s": [0.5, 1.0, 2.0], "at": None})
    if args.s is not None:
        cfg["s"] = args.s
    report = []
    for eps in cfg["epsilon"]:
        prob = _problem(cfg, eps)
        at = cfg.get("at")
        evals = [laplace_bvp(prob, float(s), at=at).to_dict() for s in cfg["s"]]
        report.append({"problem": prob.to_dict(), "at": at,
                       "exit_probability": exit_probability(prob),
                       "h_drift": h_drift(prob, prob.x if at is None else at),
                       "laplace": evals})
    _emit(args.out, {"config": cfg, "results": report})
    return 0


def _closed_forms():
    return {
        "ou-exact": lambda b, x, epsilon, s: sl.ou_laplace_exact(b, x, epsilon, s),
        "ou-asymptotic": lambda b, x, epsilon, s, alpha=1.0:
            sl.ou_laplace_asymptotic(b, x, epsilon, s, alpha),
        "bm-drift": lambda a, b, x, mu, s: sl.bm_drift_laplace(a, b, x, mu, s),
        "flat": lambda b, epsilon, s: sl.flat_laplace(b, epsilon, s),
        "flat-moments": lambda b, epsilon: list(sl.flat_moments(b, epsilon)),
        "flat-standardized": lambda s: sl.flat_standardized_laplace(s),
        "gumbel": lambda s: sl.GumbelLaw.standard_laplace(s),
        "tilde-g": lambda s: sl.TildeGLaw.laplace(s),
        "phi": lambda nu, y: sl.phi_nu(nu, y),
        "cylinder-d": lambda nu, x: sl.parabolic_cylinder_D(nu, x),
        "gamma": lambda z: sl.gamma_fn(z),
        "euler-gamma": lambda: sl.euler_gamma(),
        "correction-f": lambda s, potential="quartic":
            correction_F(Potential.from_tag(potential), s),
        "monomial-mean-bound": lambda n=1: monomial_mean_bound(int(n)),
    }


def cmd_laws(args):
    forms = _closed_forms()
    if args.name is None:
        _emit(args.out, {"closed_forms": sorted(forms)})
        return 0
    if args.name not in forms:
        raise ReactivePathsError(f"unknown closed form {args.name!r}; choose from {sorted(forms)}")
    inputs = _kv(args.params)
    value = forms[args.name](**inputs)
    _emit(args.out, {"name": args.name, "inputs": inputs, "value": value})
    return 0


def cmd_law(args):
    inputs = _kv(args.params)
    eps = args.epsilon or []
    if len(eps) > 1:
        laws = [law_from_spec(args.name, **dict(inputs, epsilon=e)).to_dict() for e in eps]
        _emit(args.out, {"name": args.name, "inputs": dict(inputs, epsilon=eps), "laws": laws})
        return 0
    if eps:
        inputs["epsilon"] = eps[0]
    _emit(args.out, {"name": args.name, "inputs": inputs,
                     "law": law_from_spec(args.name, **inputs).to_dict()})
    return 0


def cmd_verify(args):
    scale = {}
    for item in args.perturb or ():
        cid, _, f = item.partition("=")
        scale[cid] = float(f)
    report, ok = ver.run_suite(args.suite, seed=args.seed or 0,
                               echo=lambda line: print(line, file=sys.stderr),
                               thresholds=scale or None)
    text = ver.dumps(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [c["name"] for c in report["criteria"] if not c["passed"]]
    if failed:
        print("failed: " + "; ".join(failed), file=sys.stderr)
    return 0 if ok else 1


def cmd_figure(args):
    cfg = load_config(args, figs.DEFAULTS[args.figure]())
    if args.replicas is not None:
        cfg["n_samples"] = args.replicas
    rows, meta = figs.FIGURES[args.figure](cfg)
    meta["backend"] = kernels.BACKEND_NAME
    csv_path, _ = _write_pair(args.out or f"{args.figure}.csv", rows, meta)
    if meta["truncated"]:
        print(f"budget exhausted; wrote {len(meta['completed_epsilons'])} temperatures to "
              f"{csv_path}", file=sys.stderr)
    return 0


def _emit(out, obj):
    text = _dump(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- parser ------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration document")
    common.add_argument("--seed", type=int, help="64-bit seed")
    common.add_argument("--epsilon", type=_eps_list, metavar="LIST",
                        help="comma-separated temperatures")
    common.add_argument("--out", metavar="PATH", help="output file")
    common.add_argument("--budget-seconds", type=float, dest="budget_seconds",
                        help="wall-clock budget")
    common.add_argument("--replicas", type=int, metavar="N",
                        help="streams (simulate), replicas (ams) or samples per temperature (figure)")

    p = argparse.ArgumentParser(prog="reactive-paths", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="Monte Carlo reactive durations"
                   ).set_defaults(func=cmd_simulate)
    sub.add_parser("ams", parents=[common], help="adaptive multilevel splitting"
                   ).set_defaults(func=cmd_ams)
    q = sub.add_parser("exit-law", parents=[common], help="conditioned Laplace transform")
    q.add_argument("--s", type=_s_list, metavar="LIST", help="comma-separated s values")
    q.set_defaults(func=cmd_exit_law)
    q = sub.add_parser("laws", parents=[common], help="evaluate a closed form")
    q.add_argument("name", nargs="?")
    q.add_argument("params", nargs="*", metavar="KEY=VALUE")
    q.set_defaults(func=cmd_laws)
    q = sub.add_parser("law", parents=[common], help="a limit law as JSON")
    q.add_argument("name", choices=sorted(set(LAW_NAMES) | {"gumbel", "ou", "gaussian"}))
    q.add_argument("params", nargs="*", metavar="KEY=VALUE")
    q.set_defaults(func=cmd_law)
    q = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    q.add_argument("--suite", default="all", choices=sorted(ver.SUITES))
    q.add_argument("--perturb", action="append", metavar="ID=FACTOR",
                   help="scale the thresholds of one criterion (fixture for failure reports)")
    q.set_defaults(func=cmd_verify)
    q = sub.add_parser("figure", parents=[common], help="plot data as CSV")
    q.add_argument("figure", choices=sorted(figs.FIGURES))
    q.set_defaults(func=cmd_figure)
    return p


def _s_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad s list {text!r}") from None
    if not vals or any(math.isnan(v) for v in vals):
        raise argparse.ArgumentTypeError("s list must be nonempty")
    return vals


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ReactivePathsError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
