"""Command-line interface: ``geosub {pmf,moments,simulate,reliability,sweep,validate}``.

Configuration is merged from defaults, a JSON ``--config`` file, ``GEOSUB_*``
environment variables and finally explicit flags (flags win).  The resolved
configuration is written next to every output file so a run can be repeated
with ``--config <out>.config.json``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, GeosubError, ParameterError
from .gcp import GcpParams, gcp_moments, gcp_cov, gcp_pmf_table, gcp_sample_count
from .gscpp import GscppParams, gscpp_cdf, gscpp_moments, gscpp_pmf_discrete, gscpp_sample
from .gsmpp import GsmppParams, gsmpp_cdf, gsmpp_mean, gsmpp_sample
from .gspp import (
    GsppParams,
    gspp_moments,
    gspp_pmf_generic_table,
    gspp_pmf_sfpp,
    gspp_sample,
    sfpp_region,
)
from .jumps import JumpLaw
from .mc import McReport, mc_draws
from .numerics import SeriesControl
from .shock import (
    CumulativeShockModel,
    ExtremeShockModel,
    cumulative_mc,
    cumulative_reliability,
    extreme_failure_rate,
    extreme_mc,
    extreme_reliability,
    sensitivity_sweep,
    sweep_csv,
)
from .spp import SppParams, spp_moments, spp_pmf_generic_table, spp_pmf_sfpp, spp_pmf_tsfpp, spp_sample
from .subordinators import Stable, TemperedStable, subordinator_from_dict

ENV_PREFIX = "GEOSUB_"

DEFAULTS = {
    "process": "gspp",
    "family": "stable",
    "alpha": 0.6,
    "lambda": 1.0,
    "mu": 1.0,
    "t": 1.0,
    "k_max": 10,
    "q": 0.7,
    "seed": 12345,
    "format": "csv",
    "tol": 1e-12,
    "max_terms": 10_000,
    "n": 100_000,
    "quantity": "reliability",
}

_FAMILY_KEYS = {
    "stable": ("alpha",),
    "tempered_stable": ("alpha", "nu"),
    "gamma": ("p", "beta"),
    "inverse_gaussian": ("delta", "gamma"),
    "mixed_stable": ("weights", "alphas"),
    "mixed_tempered": ("weights", "alphas", "nus"),
}

_EXIT = {"parameter_out_of_range": 2, "unknown_family": 2, "argument_order": 2, "validity_region": 3, "convergence": 4}


# --------------------------------------------------------------------------
# configuration


def _parse_list(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="JSON config file; flags override its values")
    a("--process", choices=["gcp", "spp", "gspp", "gscpp", "gsmpp"])
    a("--family", help="subordinator family")
    for name in ("alpha", "nu", "p", "beta", "delta", "gamma", "mu", "q", "tol"):
        a(f"--{name}", type=float)
    a("--lambda", dest="lambda", type=float)
    a("--weights", type=_parse_list)
    a("--alphas", type=_parse_list)
    a("--nus", type=_parse_list)
    a("--t", type=float)
    a("--t-grid", dest="t_grid", type=_parse_list, help="comma or space separated times")
    a("--y-grid", dest="y_grid", type=_parse_list, help="cdf evaluation points")
    a("--k-max", dest="k_max", type=int)
    a("--threshold", type=int)
    a("--jumps", help="path to a JSON jump/factor law")
    a("--seed", type=int)
    a("--n", type=int, help="Monte Carlo sample size")
    a("--mc-n", dest="mc_n", type=int, help="Monte Carlo paths per reliability point (0 = none)")
    a("--out")
    a("--format", choices=["csv", "json"])
    a("--max-terms", dest="max_terms", type=int)
    a("--parameter", choices=["q", "alpha", "lambda", "mu"])
    a("--values", type=_parse_list)
    a("--quantity", choices=["reliability", "failure_rate"])

    parser = argparse.ArgumentParser(prog="geosub", description="Geometric-time subordinated Poisson processes")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("pmf", "probability mass function (or cdf with --y-grid)"),
        ("moments", "mean, variance and covariance"),
        ("simulate", "draw samples and summarise them"),
        ("reliability", "shock-model reliability and failure rate"),
        ("sweep", "sensitivity sweep of the extreme shock model"),
        ("validate", "run the closed-form vs Monte Carlo oracle suite"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def _env_overrides(environ) -> dict:
    out = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        try:
            out[name] = json.loads(raw)
        except json.JSONDecodeError:
            out[name] = raw
    return out


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        loaded.pop("command", None)
        # a nested subordinator object is flattened so flags can override single parameters
        cfg.update(loaded.pop("subordinator", None) or {})
        cfg.update(loaded)
    cfg.update(_env_overrides(os.environ if environ is None else environ))
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command")})
    if isinstance(cfg.get("jumps"), str):
        with open(cfg["jumps"]) as fh:
            cfg["jumps"] = json.load(fh)
    cfg["subordinator"] = _subordinator_dict(cfg)
    return cfg


def _subordinator_dict(cfg) -> dict:
    family = cfg.get("family")
    keys = _FAMILY_KEYS.get(family)
    if keys is None:
        return {"family": family}
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ParameterError(f"family {family!r} needs --{' --'.join(missing)}")
    return {"family": family, **{k: cfg[k] for k in keys}}


def _times_of(cfg) -> list[float]:
    grid = cfg.get("t_grid")
    return [float(x) for x in grid] if grid else [float(cfg["t"])]


def _control(cfg) -> SeriesControl:
    return SeriesControl(abs_tol=float(cfg["tol"]), max_terms=int(cfg["max_terms"]))


def _gspp(cfg) -> GsppParams:
    return GsppParams.of(float(cfg["lambda"]), float(cfg["mu"]), subordinator_from_dict(cfg["subordinator"]))


def _jumps(cfg) -> JumpLaw:
    if cfg.get("jumps") is None:
        raise ParameterError(f"process {cfg['process']!r} needs --jumps")
    return JumpLaw.from_dict(cfg["jumps"])


# --------------------------------------------------------------------------
# commands


def cmd_pmf(cfg) -> list[dict]:
    proc, ctl = cfg["process"], _control(cfg)
    K = int(cfg["k_max"])
    t = float(cfg["t"])
    if cfg.get("y_grid"):
        y = np.asarray(cfg["y_grid"], dtype=float)
        if proc == "gscpp":
            vals = gscpp_cdf(y, t, GscppParams(_gspp(cfg), _jumps(cfg)), ctl)
        elif proc == "gsmpp":
            vals = gsmpp_cdf(y, t, GsmppParams(_gspp(cfg), _jumps(cfg)), ctl)
        else:
            raise ParameterError("--y-grid is available for gscpp and gsmpp")
        return [{"y": float(a), "cdf": float(b)} for a, b in zip(y, vals)]
    if proc == "gcp":
        probs = gcp_pmf_table(t, GcpParams(float(cfg["mu"])), K)
        return [{"k": k, "pmf": float(v), "diagnostic": "closed_form"} for k, v in enumerate(probs)]
    sub = subordinator_from_dict(cfg["subordinator"])
    lam, mu = float(cfg["lambda"]), float(cfg["mu"])
    rows = []
    if proc == "spp":
        if isinstance(sub, (Stable, TemperedStable)):
            for k in range(K + 1):
                if isinstance(sub, Stable):
                    r = spp_pmf_sfpp(k, t, lam, sub.alpha, ctl, full=True)
                else:
                    r = spp_pmf_tsfpp(k, t, lam, sub.alpha, sub.nu, ctl, full=True)
                rows.append({"k": k, "pmf": r.value, "diagnostic": _diag(r)})
            return rows
        probs = spp_pmf_generic_table(t, SppParams(lam, sub), K)
        return [{"k": k, "pmf": float(v), "diagnostic": f"jet:K={K}"} for k, v in enumerate(probs)]
    if proc == "gspp":
        p = GsppParams.of(lam, mu, sub)
        if isinstance(sub, Stable) and t > 0 and sfpp_region(t, lam, sub.alpha, mu)[0] < sfpp_region(t, lam, sub.alpha, mu)[1]:
            for k in range(K + 1):
                r = gspp_pmf_sfpp(k, t, lam, sub.alpha, mu, ctl, full=True)
                rows.append({"k": k, "pmf": r.value, "diagnostic": _diag(r)})
            return rows
        probs = gspp_pmf_generic_table(t, p, K)
        return [{"k": k, "pmf": float(v), "diagnostic": f"jet:K={K}"} for k, v in enumerate(probs)]
    if proc == "gscpp":
        probs = gscpp_pmf_discrete(K, t, GscppParams(GsppParams.of(lam, mu, sub), _jumps(cfg)), ctl)
        return [{"k": k, "pmf": float(v), "diagnostic": "convolution"} for k, v in enumerate(probs)]
    raise ParameterError("gsmpp has no pmf; pass --y-grid for its cdf")


def _diag(r) -> str:
    d = f"series:n_terms={r.n_terms}"
    return d + (f",digits={r.digits}" if r.digits else "")


def cmd_moments(cfg) -> list[dict]:
    proc = cfg["process"]
    times = sorted(_times_of(cfg))
    rows = []
    if proc == "gcp":
        gp = GcpParams(float(cfg["mu"]))
        mom = lambda t: gcp_moments(t, gp)
        cov = lambda s, t: gcp_cov(s, t, gp)
    elif proc == "spp":
        sp = SppParams(float(cfg["lambda"]), subordinator_from_dict(cfg["subordinator"]))
        mom = lambda t: spp_moments(t, sp)
        # independent increments: Cov(s, t) = Var(s)
        cov = lambda s, t: spp_moments(s, sp)[1]
    elif proc in ("gspp", "gscpp"):
        fn = (lambda t: gspp_moments(t, _gspp(cfg))) if proc == "gspp" else (
            lambda t: gscpp_moments(t, GscppParams(_gspp(cfg), _jumps(cfg))))
        mom = lambda t: (fn(t).mean, fn(t).variance)
        cov = lambda s, t: fn(t).cov(s, t)
    else:
        raise ParameterError("moments are available for gcp, spp, gspp and gscpp; use simulate for gsmpp")
    for i, s in enumerate(times):
        for t in times[i:]:
            m, v = mom(t)
            rows.append({"s": s, "t": t, "mean_t": float(m), "variance_t": float(v), "cov_s_t": float(cov(s, t))})
    return rows


def _sampler(cfg):
    proc = cfg["process"]
    t = float(cfg["t"])
    if proc == "gcp":
        gp = GcpParams(float(cfg["mu"]))
        return lambda rng, n: gcp_sample_count(t, gp, rng, n), gcp_moments(t, gp)[0]
    if proc == "spp":
        sp = SppParams(float(cfg["lambda"]), subordinator_from_dict(cfg["subordinator"]))
        return lambda rng, n: spp_sample(t, sp, rng, n), spp_moments(t, sp)[0]
    if proc == "gspp":
        p = _gspp(cfg)
        return lambda rng, n: gspp_sample(t, p, rng, n), gspp_moments(t, p).mean
    if proc == "gscpp":
        p = GscppParams(_gspp(cfg), _jumps(cfg))
        return lambda rng, n: gscpp_sample(t, p, rng, n), gscpp_moments(t, p).mean
    p = GsmppParams(_gspp(cfg), _jumps(cfg))
    target = gsmpp_mean(t, p) if 0 <= p.mellin(2.0) <= 1 else math.nan
    return lambda rng, n: gsmpp_sample(t, p, rng, n), target


def cmd_simulate(cfg):
    sampler, target = _sampler(cfg)
    n = int(cfg["n"])
    x = mc_draws(sampler, n, int(cfg["seed"])).astype(float)
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(n))
    rep = McReport(mean, se, n, float(target))
    summary = {
        "n": n,
        "mean": mean,
        "variance": float(np.var(x, ddof=1)),
        "stderr": se,
        "closed_form_mean": float(target),
        "verdict": rep.verdict if math.isfinite(target) else "no_closed_form",
    }
    return [{"sample": float(v)} for v in x], summary


def cmd_reliability(cfg) -> list[dict]:
    times = _times_of(cfg)
    seed, mc_n = int(cfg["seed"]), int(cfg.get("mc_n") or 0)
    lam, mu = float(cfg["lambda"]), float(cfg["mu"])
    sub = subordinator_from_dict(cfg["subordinator"])
    if cfg.get("threshold"):
        m = CumulativeShockModel(int(cfg["threshold"]), GcpParams(mu), SppParams(lam, sub))
        rows = []
        for i, t in enumerate(times):
            row = {"t": t, "reliability": cumulative_reliability(t, m)}
            if mc_n:
                r = cumulative_mc(t, m, mc_n, int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0]))
                row.update(mc_estimate=r.estimate, mc_stderr=r.stderr)
            rows.append(row)
        return rows
    m = ExtremeShockModel(float(cfg["q"]), GsppParams.of(lam, mu, sub))
    reports = extreme_mc(times, m, mc_n, seed) if mc_n else None
    rows = []
    for i, t in enumerate(times):
        row = {"t": t, "reliability": extreme_reliability(t, m), "failure_rate": extreme_failure_rate(t, m)}
        if reports:
            row.update(mc_estimate=reports[i].estimate, mc_stderr=reports[i].stderr)
        rows.append(row)
    return rows


def cmd_sweep(cfg) -> list[dict]:
    if not cfg.get("parameter") or not cfg.get("values"):
        raise ParameterError("sweep needs --parameter and --values")
    m = ExtremeShockModel(float(cfg["q"]), _gspp(cfg))
    return sensitivity_sweep(
        m,
        cfg["parameter"],
        cfg["values"],
        _times_of(cfg),
        quantity=cfg["quantity"],
        mc_n=int(cfg.get("mc_n") or 0),
        seed=int(cfg["seed"]),
    )


def cmd_validate(cfg) -> list[dict]:
    from .validation import run_suite

    return run_suite(seed=int(cfg["seed"]), n=int(cfg["n"]))


# --------------------------------------------------------------------------
# output


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def render(rows: list[dict], fmt: str, cfg: dict, extra: dict | None = None) -> str:
    if fmt == "json":
        payload = {"config": cfg, "rows": rows}
        if extra:
            payload.update(extra)
        return json.dumps(payload, indent=2) + "\n"
    if rows and "parameter_name" in rows[0]:
        return sweep_csv(rows)
    cols = list(rows[0]) if rows else []
    lines = [",".join(cols)] + [",".join(_fmt(r[c]) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, cfg: dict, summary: dict | None = None):
    out = cfg.get("out")
    if out:
        Path(out).write_text(text)
        Path(str(out) + ".config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
        if summary is not None:
            sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    else:
        sys.stdout.write(text)
        if summary is not None and cfg["format"] == "csv":
            sys.stderr.write(json.dumps(summary) + "\n")


COMMANDS = {
    "pmf": cmd_pmf,
    "moments": cmd_moments,
    "reliability": cmd_reliability,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args, environ)
        cfg["command"] = args.command
        if args.command == "simulate":
            rows, summary = cmd_simulate(cfg)
            text = render(rows, cfg["format"], cfg, {"summary": summary})
            _emit(text, cfg, summary)
            return 0
        rows = COMMANDS[args.command](cfg)
        _emit(render(rows, cfg["format"], cfg), cfg)
        if args.command == "validate" and any(r["verdict"] == "fail" for r in rows):
            return 1
        return 0
    except GeosubError as exc:
        err = {"error": {"code": exc.code, "type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, ConvergenceError):
            err["error"].update(partial_sum=exc.partial_sum, tail_estimate=exc.tail_estimate, n_terms=exc.n_terms)
        sys.stderr.write(json.dumps(err) + "\n")
        return _EXIT.get(exc.code, 5)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": {"code": "config", "type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
