"""Command-line interface: ``eephnd <command> [options]``.

Reports are written as JSON lines (one object per line, sorted keys, 17
significant digits); curves and samples as CSV preceded by one ``#`` line of
JSON metadata. Every output embeds the tool version, resolved configuration,
seed and dataset provenance. ``--threads`` never changes emitted values and
is therefore not recorded.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from . import distributions as dist
from .dataio import ReportBundle, dumps, finite_or_none, load_csv, rescale_time, write_csv, write_jsonl
from .errors import EephndError
from .estimation import FitConfig, bootstrap_ci, fit_mle, information_criteria
from .rng import ALGORITHM, RngStream
from .sampling import sample
from .survival import (CONCORDANCE_PROTOCOL, concordance_counts, concordance_index, cox_ph_fit,
                       kaplan_meier, model_concordance_protocol)

ROSTER = ("eephnd", "eep", "hn", "lognormal", "gamma-rayleigh")
CURVE_KINDS = ("pdf", "cdf", "hazard", "survival", "odds")

# stream ids fanned out from --seed
STREAM_SAMPLE = 0


def _parse_params(items: list[str]) -> dict[str, float]:
    out = {}
    for chunk in items:
        for kv in chunk.split(","):
            if not kv.strip():
                continue
            if "=" not in kv:
                raise EephndError(f"bad parameter {kv!r}; expected name=value")
            k, v = kv.split("=", 1)
            k = {"lambda": "lam"}.get(k.strip(), k.strip())
            try:
                out[k] = float(v)
            except ValueError:
                raise EephndError(f"parameter {k} is not a number: {v!r}") from None
    return out


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise EephndError(f"bad grid {text!r}; expected lo:hi:steps") from None
    if not (0 < lo < hi) or steps < 2:
        raise EephndError("grid needs 0 < lo < hi and steps >= 2")
    return np.linspace(lo, hi, steps)


def _meta(args, command: str, config: dict, dataset=None) -> dict:
    meta = {
        "tool": "eephnd",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": {"seed": args.seed, "algorithm": ALGORITHM},
    }
    if dataset is not None:
        meta["dataset"] = dataset.provenance
    return meta


def _load(args, covariates=()):
    ds = load_csv(args.input, args.time_col, args.status_col, args.status_coding, covariates)
    if args.rescale_time:
        ds = rescale_time(ds)
    return ds


def _data_config(args) -> dict:
    return {"input": args.input, "time_col": args.time_col, "status_col": args.status_col,
            "status_coding": args.status_coding, "rescale_time": args.rescale_time}


def _fit_config(args) -> FitConfig:
    return FitConfig(restarts=args.restarts, max_iters=args.max_iters, tol=args.tol, seed=args.seed)


def cmd_fit(args) -> int:
    ds = _load(args)
    cfg = _fit_config(args)
    fit = fit_mle(ds.time, args.model, cfg)
    ic = information_criteria(fit, require_converged=False)
    config = {**_data_config(args), "model": fit.model_tag, "fit": cfg.as_dict(),
              "bootstrap": args.bootstrap, "level": args.level}
    body = fit.as_dict()
    body["loglik"] = finite_or_none(fit.loglik)
    records = [{"record": "meta", **_meta(args, "fit", config, ds)},
               {"record": "fit", **body, "criteria": ic.as_dict()}]
    if args.bootstrap:
        ci = bootstrap_ci(ds.time, fit.model_tag, B=args.bootstrap, level=args.level,
                          seed=args.seed, point=fit, threads=args.threads)
        records.append({"record": "bootstrap", **ci.as_dict()})
    write_jsonl(records, args.output)
    return 0


def cmd_compare(args) -> int:
    ds = _load(args)
    cfg = _fit_config(args)
    models = [dist.get_model(m).tag for m in args.models.split(",") if m.strip()]
    fits = [fit_mle(ds.time, m, cfg) for m in models]
    criteria = [information_criteria(f, require_converged=False) for f in fits]
    config = {**_data_config(args), "models": models, "fit": cfg.as_dict(), "rank_by": args.rank_by}
    bundle = ReportBundle(fits, criteria, args.rank_by, _meta(args, "compare", config, ds))
    write_jsonl(bundle.records(), args.output)
    return 0


def cmd_sample(args) -> int:
    model = dist.get_model(args.model)
    if model.tag not in ("eephnd", "eep", "hn"):
        raise EephndError(f"no sampler for model {model.tag}")
    params = model.params_cls.from_dict(_parse_params(args.params))
    stream = RngStream(args.seed, STREAM_SAMPLE)
    batch = sample(args.n, params, stream, labels=args.labels)
    config = {"model": model.tag, "params": params.as_dict(), "n": args.n, "labels": args.labels}
    meta = _meta(args, "sample", config)
    meta["seed"] = batch.seed_metadata
    cols = ["index", "value"] + (["component"] if args.labels else [])
    rows = ([i, v] + ([batch.component_labels[i]] if args.labels else [])
            for i, v in enumerate(batch.values))
    write_csv(meta, cols, rows, args.output)
    return 0


def _curve_column(kind, x, params):
    if kind == "pdf":
        return dist.pdf(x, params), None
    if kind == "cdf":
        return dist.cdf(x, params), None
    s = np.asarray(dist.survival(x, params), dtype=float)
    if kind == "survival":
        return s, None
    num = dist.pdf(x, params) if kind == "hazard" else dist.cdf(x, params)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.asarray(num) / s
    # survival underflow or a ratio past double range
    saturated = (s <= 0) | ~np.isfinite(vals)
    return np.where(saturated, np.nan, vals), saturated


def cmd_curves(args) -> int:
    model = dist.get_model(args.model)
    sets = [model.params_cls.from_dict(_parse_params([p])) for p in (args.params or [])]
    if not sets:
        raise EephndError("at least one --params set is required")
    x = _parse_grid(args.grid)
    kinds = [k.strip() for k in args.which.split(",") if k.strip()]
    bad = set(kinds) - set(CURVE_KINDS)
    if bad:
        raise EephndError(f"unknown curve kind(s) {sorted(bad)}")
    columns, data, flags = ["x"], [x], []
    for j, params in enumerate(sets):
        suffix = f"_{j}" if len(sets) > 1 else ""
        for kind in kinds:
            vals, sat = _curve_column(kind, x, params)
            vals = np.asarray(vals, dtype=float)
            columns.append(kind + suffix)
            data.append(vals)
            if sat is not None:
                columns.append(f"{kind}{suffix}_saturated")
                data.append(sat.astype(int))
                flags.append(int(sat.sum()))
    rows = []
    for i in range(x.size):
        row = []
        for col in data:
            v = col[i]
            row.append(None if isinstance(v, float) and not math.isfinite(v) else v)
        rows.append(row)
    config = {"model": model.tag, "params": [p.as_dict() for p in sets], "grid": args.grid, "which": kinds}
    meta = _meta(args, "curves", config)
    meta["saturated_cells"] = int(sum(flags))
    write_csv(meta, columns, rows, args.output)
    return 0


def cmd_km(args) -> int:
    ds = _load(args)
    km = kaplan_meier(ds.time, ds.event, level=args.level)
    records = [{"record": "meta", **_meta(args, "km", {**_data_config(args), "level": args.level}, ds)},
               {"record": "km", **km.as_dict()}]
    for t in args.at or []:
        lo, hi = km.band_at(t)
        records.append({"record": "km_at", "t": t, "survival": km.survival_at(t), "lower": lo, "upper": hi})
    write_jsonl(records, args.output)
    return 0


def cmd_cox(args) -> int:
    names = [c.strip() for c in args.covariates.split(",") if c.strip()]
    ds = _load(args, names)
    fit = cox_ph_fit(ds.covariates(names), ds.time, ds.event, names)
    lp = fit.linear_predictor(ds.covariates(names))
    c = concordance_index(lp, ds.time, ds.event, threads=args.threads)
    config = {**_data_config(args), "covariates": names, "ties": "efron"}
    write_jsonl([{"record": "meta", **_meta(args, "cox", config, ds)},
                 {"record": "cox", **fit.as_dict(), "concordance": c}], args.output)
    return 0


def cmd_cindex(args) -> int:
    config = _data_config(args)
    if args.cox:
        names = [c.strip() for c in args.cox.split(",") if c.strip()]
        ds = _load(args, names)
        fit = cox_ph_fit(ds.covariates(names), ds.time, ds.event, names)
        scores = fit.linear_predictor(ds.covariates(names))
        protocol = "harrell-c; risk score = Cox linear predictor"
        source = {"cox": names}
    else:
        ds = _load(args)
        if args.model == "km":
            target = kaplan_meier(ds.time, ds.event)
            source = {"model": "km"}
        else:
            cfg = _fit_config(args)
            target = fit_mle(ds.time, args.model, cfg)
            source = {"model": target.model_tag, "fit": cfg.as_dict(), "params": target.params.as_dict()}
        # risk convention equivalent of the -S(t_i) predicted-time score
        scores = np.asarray(target.survival_at(ds.time) if args.model == "km"
                            else dist.survival(ds.time, target.params), dtype=float)
        protocol = CONCORDANCE_PROTOCOL
    value = concordance_index(scores, ds.time, ds.event, threads=args.threads)
    conc, disc, tied = concordance_counts(scores, ds.time, ds.event, threads=args.threads)
    write_jsonl([{"record": "meta", **_meta(args, "cindex", {**config, **source}, ds)},
                 {"record": "cindex", "value": value, "protocol": protocol,
                  "concordant": conc, "discordant": disc, "tied": tied}], args.output)
    return 0


def _add_common(p):
    p.add_argument("--output", default="-", help="output path ('-' for stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def _add_data(p):
    p.add_argument("--input", default="builtin:lung", help="CSV path or builtin:lung")
    p.add_argument("--time-col", default="time")
    p.add_argument("--status-col", default="status")
    p.add_argument("--status-coding", choices=("01", "12"), default="01")
    p.add_argument("--rescale-time", action=argparse.BooleanOptionalAction, default=True)


def _add_fit(p):
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eephnd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"eephnd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model by maximum likelihood")
    _add_common(p); _add_data(p); _add_fit(p)
    p.add_argument("--model", default="eephnd")
    p.add_argument("--bootstrap", type=int, default=0, metavar="B")
    p.add_argument("--level", type=float, default=0.95)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="fit the model roster and rank by information criteria")
    _add_common(p); _add_data(p); _add_fit(p)
    p.add_argument("--models", "--model", dest="models", default=",".join(ROSTER))
    p.add_argument("--rank-by", choices=("aic", "bic", "caic_bozdogan", "aicc"), default="aic")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sample", help="draw random variates")
    _add_common(p)
    p.add_argument("--model", default="eephnd")
    p.add_argument("--params", action="append", default=[], help="k=v list, e.g. alpha=2,beta=2")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--labels", action="store_true", help="record the mixture component of each draw")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("curves", help="evaluate pdf/cdf/hazard/survival/odds on a grid")
    _add_common(p)
    p.add_argument("--model", default="eephnd")
    p.add_argument("--params", action="append", help="k=v list; repeat for several curves")
    p.add_argument("--grid", default="0.01:5:500", help="lo:hi:steps, endpoints inclusive")
    p.add_argument("--which", default=",".join(CURVE_KINDS))
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("km", help="Kaplan-Meier estimate with Greenwood log(-log) bands")
    _add_common(p); _add_data(p)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--at", type=float, action="append", help="report S(t) and band at t")
    p.set_defaults(func=cmd_km)

    p = sub.add_parser("cox", help="Cox proportional hazards fit (Efron ties)")
    _add_common(p); _add_data(p)
    p.add_argument("--covariates", default="age,sex")
    p.set_defaults(func=cmd_cox)

    p = sub.add_parser("cindex", help="Harrell's concordance index")
    _add_common(p); _add_data(p); _add_fit(p)
    p.add_argument("--model", default="eephnd", help="zoo model tag or 'km'")
    p.add_argument("--cox", default=None, help="comma list of covariates; scores by Cox linear predictor")
    p.set_defaults(func=cmd_cindex)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EephndError, ValueError, OSError) as exc:
        sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
