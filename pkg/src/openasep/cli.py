"""Command-line front end.

Exit codes: 0 success, 1 failed verdict (with --strict), 2 usage error,
3 malformed config, 4 parameters outside the fan region, 5 invalid
argument values, 6 resource budget exceeded.

Every flag can also be set through an environment variable named
OPENASEP_<FLAG> (upper case, dashes as underscores); command-line flags win
over the environment, which wins over the [run] section of the config.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, mpa, ratefn, twolayer
from .config import RunConfig, load_config, params_from_mapping, parse_float_list
from .errors import (
    ConfigFileError,
    DomainError,
    OpenAsepError,
    ResourceBudgetError,
    ScopeError,
    TruncationError,
)
from .output import write_csv, write_dat, write_json
from .params import classify
from .qkernel import FLOAT, RATIONAL

ENV_PREFIX = "OPENASEP_"
DEFAULT_SEED = 20240613

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_CONFIG, EXIT_SCOPE, EXIT_DOMAIN, EXIT_BUDGET = range(7)

PARAM_KEYS = ("alpha", "beta", "gamma", "delta", "a", "b", "c", "d", "q")

# hard defaults, applied after flags, environment and config
DEFAULTS = {
    "out": "results", "seed": DEFAULT_SEED, "threads": 1, "mode": "float", "n": 6,
    "samples": 1000, "instances": 1000, "line_slopes": "0.1:0.9:0.1", "grid_k": 200,
    "rhos": "0.3,0.5,0.7", "ns": "50,100,200,400", "name": "lemma24",
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with [params], [profile], [run] sections")
    p.add_argument("--out", help="output directory (default results)")
    p.add_argument("--seed", type=int, help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--threads", type=int, help="worker processes for grid experiments")
    p.add_argument("--mode", choices=("rational", "float"), help="arithmetic backend")
    p.add_argument("--strict", action="store_true", help="exit 1 when a verdict fails")
    for k in PARAM_KEYS:
        p.add_argument(f"--{k}", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="openasep", description="open ASEP stationary-measure laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stationary", help="exact stationary probabilities")
    _common(p)
    p.add_argument("--n", type=int)

    p = sub.add_parser("two-layer", help="first-layer marginal vs matrix product law")
    _common(p)
    p.add_argument("--n", type=int)

    p = sub.add_parser("sample", help="exact two-layer samples")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("bridges", help="randomized exact bridge-inequality sweeps")
    _common(p)
    p.add_argument("--n", type=int, help="largest bridge length")
    p.add_argument("--instances", type=int)

    p = sub.add_parser("rate-fn", help="rate function on line profiles")
    _common(p)
    p.add_argument("--line-slopes", help="start:stop:step or comma list")
    p.add_argument("--grid-k", type=int)
    p.add_argument("--no-variational", action="store_true")

    p = sub.add_parser("ldp-check", help="pinned-endpoint log-probabilities vs the rate")
    _common(p)
    p.add_argument("--rhos")
    p.add_argument("--ns")
    p.add_argument("--grid-k", type=int)

    p = sub.add_parser("experiments", help="named experiment with verdict")
    _common(p)
    p.add_argument("--name", choices=("theorem23", "lemma24", "corollary26", "prop25",
                                      "ldp", "bridges"))
    p.add_argument("--ns")
    p.add_argument("--samples", type=int)
    return parser


def _resolve(args, cfg: RunConfig):
    """Fill unset flags from the environment, then the config, then defaults."""
    for key, val in vars(args).items():
        if val is not None or key in ("command", "config"):
            continue
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is None:
            env = cfg.run.get(key.replace("_", "-"), cfg.run.get(key))
        if env is None and key in DEFAULTS:
            env = DEFAULTS[key]
        if env is None:
            continue
        if key in ("seed", "threads", "n", "samples", "instances", "grid_k"):
            try:
                env = int(env)
            except ValueError:
                raise ConfigFileError(f"{key} must be an integer, got {env!r}") from None
        elif key in PARAM_KEYS:
            env = float(env)
        setattr(args, key, env)


def _params(args, cfg: RunConfig, need: bool = True):
    flags = {k: getattr(args, k) for k in PARAM_KEYS if getattr(args, k, None) is not None}
    if flags:
        try:
            p, rates = params_from_mapping(flags)
        except ConfigFileError as exc:
            raise DomainError(str(exc)) from None
    else:
        p, rates = cfg.params, cfg.rates
    if p is None:
        if need:
            raise ConfigFileError("no parameters: pass --a/--b (or --alpha/--beta) or a [params] section")
        return None, None
    p.require_fan()
    return p, rates


def _mode(args):
    return RATIONAL if args.mode == "rational" else FLOAT


def _slopes(spec: str):
    if ":" in spec:
        parts = [float(t) for t in spec.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise DomainError("line slopes must be start:stop:step with step > 0")
        n = int(math.floor((parts[1] - parts[0]) / parts[2] + 1e-9))
        return [round(parts[0] + i * parts[2], 12) for i in range(n + 1)]
    return parse_float_list(spec, "slope list")


def _ints(spec: str):
    return [int(v) for v in parse_float_list(spec, "integer list")]


def _meta(args, p=None, **extra):
    out = {"command": args.command, "seed": args.seed, "mode": args.mode}
    if p is not None:
        out["params"] = p.as_dict()
        out["phase"] = classify(p).phase.value
    out.update(extra)
    return out


def cmd_stationary(args, cfg):
    p, _ = _params(args, cfg)
    mode = _mode(args)
    table = mpa.stationary_table(p.exact() if mode.exact else p, args.n, mode)
    rows = []
    for i, v in enumerate(table):
        cfgbits = "".join(str(b) for b in mpa.index_config(i, args.n))
        rows.append([i, cfgbits, v] + ([str(v)] if mode.exact else []))
    out = Path(args.out)
    header = ["index", "config", "probability"] + (["exact"] if mode.exact else [])
    write_csv(out / "stationary.csv", header, rows)
    total = sum(table)
    write_json(out / "stationary.json", _meta(args, p, N=args.n, total=total))
    print(f"wrote {out / 'stationary.csv'} ({len(rows)} configurations, total {float(total):.17g})")
    return EXIT_OK


def cmd_two_layer(args, cfg):
    p, _ = _params(args, cfg)
    mode = _mode(args)
    pp = p.exact() if mode.exact else p
    marg = twolayer.marginal_first_layer(pp, args.n, mode)
    law = mpa.height_law(pp, args.n, mode)
    rows = [[i, "".join(map(str, mpa.index_config(i, args.n))), u, v, abs(u - v)]
            for i, (u, v) in enumerate(zip(marg, law))]
    tv = sum(r[4] for r in rows) / 2
    out = Path(args.out)
    write_csv(out / "two_layer.csv", ["index", "config", "first_layer", "matrix_product", "absdiff"], rows)
    Z = twolayer.partition_Z(pp, args.n, mode)
    write_json(out / "two_layer.json", _meta(args, p, N=args.n, tv=tv, partition_Z=Z))
    print(f"total variation {float(tv):.17g}")
    return EXIT_OK


def cmd_sample(args, cfg):
    p, _ = _params(args, cfg)
    rng = np.random.default_rng(args.seed)
    lam1, lam2 = twolayer.sample_arrays(p, args.n, rng, args.samples)
    rows = [[i, " ".join(map(str, a)), " ".join(map(str, b))] for i, (a, b) in enumerate(zip(lam1, lam2))]
    out = Path(args.out)
    write_csv(out / "samples.csv", ["sample", "lambda1", "lambda2"], rows)
    write_json(out / "samples.json", _meta(args, p, N=args.n, samples=args.samples))
    print(f"wrote {len(rows)} samples to {out / 'samples.csv'}")
    return EXIT_OK


def _verdict(args, res):
    if args.strict and not res.get("ok", True):
        return EXIT_VERDICT
    return EXIT_OK


def cmd_bridges(args, cfg):
    res = experiments.run_bridge_suite(args.instances, max_N=min(args.n, 10), seed=args.seed)
    out = Path(args.out)
    write_csv(out / "bridges.csv", ["lemma", "N", "lhs", "rhs", "satisfied"],
              [[r["lemma"], r["instance"]["N"], r["lhs"], r["rhs"], r["satisfied"]] for r in res["rows"]])
    write_json(out / "bridges.json", _meta(args, summary=res["summary"], gibbs=res["gibbs"], ok=res["ok"]))
    for lemma, c in sorted(res["summary"].items()):
        print(f"{lemma}: {c['violations']} violations in {c['instances']} instances")
    return _verdict(args, res)


def cmd_rate_fn(args, cfg):
    p, _ = _params(args, cfg)
    a, b = float(p.a), float(p.b)
    rows = []
    for rho in _slopes(args.line_slopes):
        f = ratefn.line_profile(rho)
        I = ratefn.rate_closed(f, a, b)
        if args.no_variational:
            rows.append([rho, I, "", ""])
        else:
            V = ratefn.rate_variational(f, a, b, args.grid_k)
            rows.append([rho, I, V, V - I])
    out = Path(args.out)
    header = ["rho", "I_closed", "I_variational", "gap"]
    write_csv(out / "rate_fn.csv", header, rows)
    write_dat(out / "rate_fn.dat", header, [[r if r != "" else "nan" for r in row] for row in rows])
    extra = {}
    if cfg.profile is not None:
        f = ratefn.PiecewiseLinearProfile(*cfg.profile)
        extra["profile"] = {"breakpoints": cfg.profile[0], "values": cfg.profile[1],
                            "I_closed": ratefn.rate_closed(f, a, b)}
        if not args.no_variational:
            extra["profile"]["I_variational"] = ratefn.rate_variational(f, a, b, args.grid_k)
    write_json(out / "rate_fn.json", _meta(args, p, grid_k=args.grid_k, **extra))
    print(f"wrote {len(rows)} rows to {out / 'rate_fn.csv'}")
    return EXIT_OK


def _write_rows(out: Path, stem: str, rows):
    if not rows:
        return
    header = [k for k in rows[0] if not isinstance(rows[0][k], (dict, list, tuple))]
    write_csv(out / f"{stem}.csv", header, [[r[k] for k in header] for r in rows])


def cmd_ldp_check(args, cfg):
    p, _ = _params(args, cfg)
    res = experiments.ldp_convergence(p, parse_float_list(args.rhos, "rho list"), _ints(args.ns),
                                      gridK=args.grid_k)
    out = Path(args.out)
    _write_rows(out, "ldp", res["rows"])
    write_json(out / "ldp.json", _meta(args, p, verdicts=res["verdicts"], ok=res["ok"]))
    for v in res["verdicts"]:
        print(f"rho={v['rho']:.6g} final gap {v['final_gap']:.3e} {'PASS' if v['ok'] else 'FAIL'}")
    return _verdict(args, res)


def _default_window():
    return twolayer.WindowSpec((1.0,), (0.4,), (0.6,))


def cmd_experiments(args, cfg):
    from .params import FanParams

    p, _ = _params(args, cfg, need=False)
    name = args.name
    ns = _ints(args.ns) if args.ns and args.ns != DEFAULTS["ns"] else None
    if name == "theorem23":
        grid = [p] if p is not None else experiments.default_fan_grid()
        res = experiments.run_theorem23_grid(grid, ns or list(range(1, 9)), _mode(args),
                                             threads=args.threads)
    elif name == "lemma24":
        res = experiments.run_lemma24(p or FanParams(0.5, 0.5), ns or [125, 250, 500, 1000, 2000])
    elif name == "corollary26":
        res = experiments.run_corollary26(p or FanParams(0.5, 0.5, -0.4, -0.4, 0.5),
                                          [_default_window()], ns or [50, 100, 200, 300])
    elif name == "prop25":
        res = experiments.run_prop25(p or FanParams(0.0, 0.0), 2, 0.2, [_default_window()],
                                     ns or [50, 100, 200], samples=args.samples or 10_000,
                                     seed=args.seed)
    elif name == "ldp":
        res = experiments.ldp_convergence(p or FanParams(0.0, 0.0), [0.3, 0.5, 0.7],
                                          ns or [50, 100, 200, 400])
    else:
        res = experiments.run_bridge_suite(seed=args.seed)
    out = Path(args.out)
    _write_rows(out, name, res["rows"])
    meta = {k: v for k, v in res.items() if k != "rows"}
    write_json(out / f"{name}.json", _meta(args, p, **meta))
    print(f"{name}: {'PASS' if res['ok'] else 'FAIL'}")
    return _verdict(args, res)


COMMANDS = {
    "stationary": cmd_stationary,
    "two-layer": cmd_two_layer,
    "sample": cmd_sample,
    "bridges": cmd_bridges,
    "rate-fn": cmd_rate_fn,
    "ldp-check": cmd_ldp_check,
    "experiments": cmd_experiments,
}


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        _resolve(args, cfg)
        return COMMANDS[args.command](args, cfg)
    except ConfigFileError as exc:
        code, msg = EXIT_CONFIG, exc
    except ScopeError as exc:
        code, msg = EXIT_SCOPE, exc
    except (ResourceBudgetError, TruncationError) as exc:
        code, msg = EXIT_BUDGET, exc
    except (DomainError, OpenAsepError, ValueError) as exc:
        code, msg = EXIT_DOMAIN, exc
    print(f"openasep: error: {str(msg).splitlines()[0] if str(msg) else type(msg).__name__}",
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    return parse_and_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
