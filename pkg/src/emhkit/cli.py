"""Command-line front end: ``emhkit <subcommand> ...``.

Every subcommand is a thin wrapper over a library call and prints the
serialised result (JSON by default, CSV with ``--csv``) to stdout or to
``--out``. The default output directory for ``pipeline`` and ``synth``
comes from the ``EMHKIT_OUTPUT_DIR`` environment variable.
"""
from __future__ import annotations

import argparse
import io
import csv
import os
import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from . import __version__
from . import bds as _bds
from . import embedding as _emb
from . import entropy as _ent
from . import lyapunov as _lyap
from . import market as _market
from . import pipeline as _pipe
from . import series as _series
from . import synth as _synth
from . import volatility as _vol

ENV_OUTPUT_DIR = "EMHKIT_OUTPUT_DIR"
SUBCOMMANDS = ("ingest", "returns", "hurst", "embed", "bds", "lyapunov", "garch", "entropy", "hhi",
               "report", "synth", "pipeline")


class CLIError(Exception):
    pass


def default_output_dir() -> Path:
    return Path(os.environ.get(ENV_OUTPUT_DIR, "emhkit_runs"))


# ------------------------------------------------------------------ input

def _load(args):
    series, report = _series.load_csv(args.input, args.frequency, args.gap_policy)
    return series, report


def _analysis_series(args) -> np.ndarray:
    """Series handed to an estimator: log returns (optionally deseasonalized) or raw values."""
    series, _ = _load(args)
    if args.input_kind == "returns":
        return np.asarray(series.values, dtype=float)
    r = _series.log_returns(series)
    if args.deseasonalize:
        r = _series.deseasonalize(r, args.period)
    return r.values


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_pipe.to_jsonable(v) if not isinstance(v, str) else v for v in r])
    return buf.getvalue()


def _emit(args, obj, header=None, rows=None) -> None:
    if args.fmt == "csv":
        if header is None:
            raise CLIError("this subcommand has no CSV form; use --json")
        text = _csv_text(header, rows)
    else:
        text = _pipe.dump_json(obj)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------- commands

def cmd_ingest(args):
    series, report = _load(args)
    obj = {"label": series.label, "n": len(series.values), "frequency": series.frequency,
           "load_report": report.to_dict()}
    _emit(args, obj, ["timestamp", "value"], [(str(t), v) for t, v in zip(series.timestamps, series.values)])


def cmd_returns(args):
    series, _ = _load(args)
    r = _series.log_returns(series)
    if args.deseasonalize:
        r = _series.deseasonalize(r, args.period)
    obj = {"parent_label": r.parent_label, "deseasonalized": r.deseasonalized,
           "timestamps": [str(t) for t in r.timestamps], "values": r.values,
           "unconditional_volatility": dict(_series.unconditional_volatility(r, args.partition))}
    _emit(args, obj, ["timestamp", "return"], [(str(t), v) for t, v in zip(r.timestamps, r.values)])


def cmd_hurst(args):
    x = _analysis_series(args)
    kw = {}
    if args.method == "wghe":
        kw = {"theta": args.theta}
    if args.window:
        cfg = _series.RollingConfig(args.window, args.step)
        rows = _series.rolling_apply(x, cfg, lambda w: _pipe.hurst_dispatch(args.method, w, args.q, **kw))
        obj = {"method": args.method, "window": args.window, "step": args.step,
               "rolling": [{"end": e, "H": v} for e, v in rows]}
        _emit(args, obj, ["end", "H"], rows)
        return
    est = _pipe.hurst_dispatch(args.method, x, args.q, **kw)
    d = est.to_dict()
    _emit(args, d, ["log_x", "log_y"], [(p["log_x"], p["log_y"]) for p in d["points"]])


def cmd_embed(args):
    x = _analysis_series(args)
    obj = {}
    tau = args.tau
    if args.ami or tau is None:
        tau_star, flag, curve = _emb.ami_first_min(x, args.max_tau)
        obj.update({"tau_star": tau_star, "ami_curve": curve, "ami_flag": flag})
        tau = tau if tau is not None else tau_star
    rows = None
    if args.fnn:
        f = _emb.fnn(x, tau, args.max_m)
        obj.update({"m_star": f.m_star, "fnn_curve": f.fractions, "flags": f.flags, "tau": tau})
        rows = [(m, v) for m, v in f.fractions.items()]
    if rows is None and "ami_curve" in obj:
        rows = [(t, v) for t, v in enumerate(obj["ami_curve"])]
        _emit(args, obj, ["tau", "ami_bits"], rows)
        return
    _emit(args, obj, ["m", "fnn_fraction"], rows)


def cmd_bds(args):
    x = _analysis_series(args)
    res = _bds.bds_test(x, m_max=args.mmax, eps_multiple=args.eps_mult)
    d = res.to_dict()
    keys = ["m", "W", "p_value", "C_m", "C_1^m", "sigma_hat"]
    _emit(args, d, keys, [[r[k] for k in keys] for r in d["dimensions"]])


def cmd_lyapunov(args):
    x = _analysis_series(args)
    if args.method == "rosenstein":
        res = _lyap.rosenstein_sweep(x, tau=args.tau, ms=tuple(range(2, args.max_m + 1)))
        d = res.to_dict()
        _emit(args, d, ["t", "S"], [(c["t"], c["S"]) for c in d["curve"]])
    else:
        res = _lyap.jacobian_lambda(x, args.max_tau, args.max_m, args.max_q, seed=args.seed,
                                    select=args.select, n_boot=args.n_boot)
        d = res.to_dict()
        keys = ["tau", "m", "q", "lambda", "bic"]
        _emit(args, d, keys, [[c[k] for k in keys] for c in d["grid"]])


def cmd_garch(args):
    x = _analysis_series(args)
    if args.select:
        fits, failures = _vol.select_model(x, seed=args.seed)
        if not fits:
            raise CLIError("no candidate model could be fitted")
        fit = fits[0]
        obj = {"best": fit.to_dict(), "ranking": _vol.selection_table(fits),
               "failures": [{"model": m, "error": e} for m, e in failures]}
    else:
        fit = _vol.fit_model(x, _vol.MeanSpec.parse(args.mean), _vol.VarianceSpec(args.family.upper(), args.dist),
                             seed=args.seed)
        obj = fit.to_dict()
    if args.sigma_out:
        Path(args.sigma_out).write_text(_csv_text(["t", "sigma"], list(enumerate(fit.sigma))))
    _emit(args, obj, ["t", "sigma"], list(enumerate(fit.sigma)))


def cmd_entropy(args):
    x = _analysis_series(args)
    cfg = _ent.EntropyConfig(a=args.a, n_states=args.n_states, partition=args.partition, window=args.window,
                             step=args.step, a_mode=args.a_mode)
    tr = _ent.rolling_tsallis(x, cfg)
    obj = {"config": cfg.__dict__, "ends": tr.ends, "values": tr.values, "flags": tr.flags}
    if tr.a_values is not None:
        obj["a_values"] = tr.a_values
    _emit(args, obj, ["end", "H_a"], list(zip(tr.ends, tr.values)))


def cmd_hhi(args):
    shares = list(args.shares)
    if args.file:
        shares += [float(t) for t in Path(args.file).read_text().replace(",", " ").split()]
    if not shares:
        raise CLIError("no shares given")
    percent = True if args.percent else (False if args.fraction else None)
    res = _market.hhi(shares, percent)
    _emit(args, res.to_dict(), ["HHI", "class"], [(res.value, res.cls)])


def cmd_report(args):
    obj = {}
    if args.bundle:
        bundle = _pipe.load_bundle(args.bundle)
        rep = _market.efficiency_report(bundle)
        obj.update(rep)
        text = _market.render_report(_pipe.to_jsonable(rep))
        if args.text_out:
            Path(args.text_out).write_text(text)
        else:
            sys.stderr.write(text)
    if args.panel:
        panel = _market.load_panel(args.panel)
        mat, flags = _market.correlation_matrix(panel)
        obj["correlation"] = {"columns": list(mat.columns), "matrix": mat.to_numpy(), "flags": flags}
        if args.lyap_col and args.vol_col:
            doc = _market.direction_of_change(panel, args.lyap_col, args.vol_col)
            obj["direction_of_change"] = doc.reset_index().to_dict(orient="records")
    if not obj:
        raise CLIError("report needs --bundle and/or --panel")
    rows = None
    if "correlation" in obj:
        cols = obj["correlation"]["columns"]
        rows = [[c, *row] for c, row in zip(cols, obj["correlation"]["matrix"])]
        _emit(args, obj, ["column", *cols], rows)
    else:
        _emit(args, obj)


def _synth_params(args) -> dict:
    p = {}
    for name in ("H", "d", "phi", "k", "gamma", "alpha", "xi", "noise_snr", "sigma", "period", "s0", "mu"):
        v = getattr(args, name, None)
        if v is not None:
            p[name] = v
    return p


def cmd_synth(args):
    spec = _synth.GeneratorSpec(args.kind, args.n, args.seed, _synth_params(args))
    x = _synth.generate(spec)
    start = datetime.fromisoformat(args.start)
    rows = [((start + timedelta(days=i)).date().isoformat(), v) for i, v in enumerate(x)]
    if args.out is not None:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        if not args.json_forced:
            args.fmt = "csv"
    _emit(args, {"kind": spec.kind, "n": spec.n, "seed": spec.seed, "params": spec.params, "values": x},
          ["timestamp", "value"], rows)


def cmd_pipeline(args):
    manifest = _pipe.RunManifest.load(args.manifest)
    if args.seed_given:
        manifest.seed = args.seed
    out = args.out_dir or manifest.output_dir or str(default_output_dir())
    run_dir, status = _pipe.run_pipeline(manifest, out)
    failed = {k: v for k, v in status.items() if v.startswith("error")}
    sys.stdout.write(_pipe.dump_json({"run_dir": str(run_dir), "status": status}))
    return 1 if failed else 0


# ------------------------------------------------------------------ parser

def _add_input(p, analysis: bool = True):
    p.add_argument("input", help="CSV file with header timestamp,value")
    p.add_argument("--frequency", choices=("daily", "hourly"), default="daily")
    p.add_argument("--gap-policy", choices=("error", "forward_fill", "interpolate"), default="error")
    if analysis:
        p.add_argument("--input-kind", choices=("prices", "returns"), default="prices",
                       help="prices are converted to log returns first")
        p.add_argument("--deseasonalize", action="store_true")
        p.add_argument("--period", type=int, default=7)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    fmt = common.add_mutually_exclusive_group()
    # SUPPRESS keeps a subcommand from overwriting options given before it
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", default=argparse.SUPPRESS,
                     help="JSON output (default)")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv", default=argparse.SUPPRESS,
                     help="CSV output")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write output here instead of stdout")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")

    ap = argparse.ArgumentParser(prog="emhkit", description="Market-efficiency time-series toolkit.",
                                 parents=[common])
    ap.add_argument("--version", action="version", version=f"emhkit {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    sub.required = True

    p = sub.add_parser("ingest", parents=[common], help="load and validate a price CSV")
    _add_input(p, analysis=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("returns", parents=[common], help="log returns, optionally deseasonalized")
    _add_input(p, analysis=False)
    p.add_argument("--deseasonalize", action="store_true")
    p.add_argument("--period", type=int, default=7)
    p.add_argument("--partition", choices=("whole", "annual"), default="whole")
    p.set_defaults(func=cmd_returns)

    p = sub.add_parser("hurst", parents=[common], help="Hurst exponent estimation")
    _add_input(p)
    p.add_argument("--method", choices=_pipe.HURST_METHODS, default="rs-al")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=100.0, help="wGHE weight decay")
    p.add_argument("--window", type=int, default=None, help="rolling window length")
    p.add_argument("--step", type=int, default=1)
    p.set_defaults(func=cmd_hurst)

    p = sub.add_parser("embed", parents=[common], help="delay and embedding dimension")
    _add_input(p)
    p.add_argument("--ami", action="store_true")
    p.add_argument("--fnn", action="store_true")
    p.add_argument("--tau", type=int, default=None)
    p.add_argument("--max-tau", type=int, default=20)
    p.add_argument("--max-m", type=int, default=10)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("bds", parents=[common], help="BDS test of the i.i.d. null")
    _add_input(p)
    p.add_argument("--mmax", type=int, default=6)
    p.add_argument("--eps-mult", type=float, default=0.5)
    p.set_defaults(func=cmd_bds)

    p = sub.add_parser("lyapunov", parents=[common], help="maximal Lyapunov exponent")
    _add_input(p)
    p.add_argument("--method", choices=("rosenstein", "jacobian"), default="jacobian")
    p.add_argument("--tau", type=int, default=1, help="delay for the Rosenstein method")
    p.add_argument("--max-tau", type=int, default=2)
    p.add_argument("--max-m", type=int, default=7)
    p.add_argument("--max-q", type=int, default=3)
    p.add_argument("--select", choices=("bic", "max_lambda"), default="bic")
    p.add_argument("--n-boot", type=int, default=500)
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("garch", parents=[common], help="GARCH-family volatility models")
    _add_input(p)
    p.add_argument("--mean", default="ar=1;ma=1", help='lag spec, e.g. "ar=1;sar=7,14,21;ma=1;sma=7,14,21"')
    p.add_argument("--family", choices=("garch", "egarch", "gjr"), default="egarch")
    p.add_argument("--dist", choices=("normal", "t"), default="normal")
    p.add_argument("--select", action="store_true", help="rank the default candidate menu by AIC")
    p.add_argument("--sigma-out", help="also write the conditional sigma series as CSV")
    p.set_defaults(func=cmd_garch)

    p = sub.add_parser("entropy", parents=[common], help="rolling Tsallis entropy")
    _add_input(p)
    p.add_argument("--a", type=float, default=1.575)
    p.add_argument("--window", type=int, default=365)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--partition", choices=("fixed", "adaptive"), default="fixed")
    p.add_argument("--n-states", type=int, default=10)
    p.add_argument("--a-mode", choices=("fixed", "mle"), default="fixed")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("hhi", parents=[common], help="Herfindahl-Hirschman index")
    p.add_argument("shares", nargs="*", type=float)
    p.add_argument("--file", help="file of whitespace/comma separated shares")
    unit = p.add_mutually_exclusive_group()
    unit.add_argument("--percent", action="store_true")
    unit.add_argument("--fraction", action="store_true")
    p.set_defaults(func=cmd_hhi)

    p = sub.add_parser("report", parents=[common], help="efficiency report and cross-metric tables")
    p.add_argument("--bundle", help="pipeline run directory")
    p.add_argument("--panel", help="annual panel CSV with a year column")
    p.add_argument("--lyap-col")
    p.add_argument("--vol-col")
    p.add_argument("--text-out", help="write the rendered text report here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", parents=[common], help="synthetic series with known ground truth")
    p.add_argument("--kind", choices=_synth.KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    for name in ("H", "d", "phi", "k", "gamma", "alpha", "xi", "noise-snr", "sigma", "period", "s0", "mu"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--start", default="2000-01-01", help="first timestamp of the CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", parents=[common], help="run a full analysis from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None,
                   help=f"run directory (default: manifest output_dir, then ${ENV_OUTPUT_DIR})")
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.json_forced = getattr(args, "fmt", None) == "json"
    args.fmt = getattr(args, "fmt", None) or "json"
    args.out = getattr(args, "out", None)
    args.seed_given = hasattr(args, "seed")
    args.seed = getattr(args, "seed", 0)
    try:
        rc = args.func(args)
    except (CLIError, _pipe.PipelineError, _series.SeriesError, ValueError, OSError) as exc:
        sys.stderr.write(f"emhkit {args.command}: error: {exc}\n")
        return 1
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
