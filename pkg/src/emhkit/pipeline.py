"""End-to-end batch pipeline driven by a JSON run manifest.

The manifest is written into the run directory before any computation.
Each stage writes one JSON document (sorted keys, no wall-clock values)
plus plot-ready CSV files; a failing stage is recorded in ``status.json``
and stages that depend on it are skipped.
"""
from __future__ import annotations

import csv
import io
import json
import math
import shutil
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import numpy as np

from . import __version__
from . import bds as _bds
from . import embedding as _emb
from . import entropy as _ent
from . import hurst as _hurst
from . import lyapunov as _lyap
from . import market as _market
from . import series as _series
from . import volatility as _vol

__all__ = ["PipelineError", "RunManifest", "to_jsonable", "dump_json", "write_csv", "run_pipeline",
           "HURST_METHODS", "hurst_dispatch"]

HURST_METHODS = ("rs", "rs-al", "dfa", "ghe", "wghe", "gph", "spec", "acf")

DEFAULT_CONFIG = {
    "deseasonalize": {"period": 7},
    "hurst": {"methods": ["rs-al", "dfa", "ghe", "gph", "spec", "acf"]},
    "bds": {"m_max": 6, "eps_multiple": 0.5},
    "embed": {"max_tau": 20, "max_m": 10},
    "lyapunov": {"methods": ["rosenstein", "jacobian"], "max_tau": 2, "max_m": 7, "max_q": 3,
                 "n_boot": 500, "restarts": 5},
    "garch": {"candidates": "default", "n_starts": 3},
    "entropy": {"a": 1.575, "n_states": 10, "window": 365, "step": 1, "partition": "fixed"},
}


class PipelineError(RuntimeError):
    pass


def to_jsonable(v):
    """Convert numpy scalars/arrays, tuples, dates and non-finite floats for JSON."""
    if hasattr(v, "to_dict") and not isinstance(v, dict):
        v = v.to_dict()
    if isinstance(v, dict):
        return {str(k): to_jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_jsonable(u) for u in v]
    if isinstance(v, np.ndarray):
        return [to_jsonable(u) for u in v.tolist()]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (datetime, date)):
        return v.isoformat()
    return v


def dump_json(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation, trailing newline)."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([to_jsonable(v) if not isinstance(v, str) else v for v in r])
    Path(path).write_text(buf.getvalue())


@dataclass
class RunManifest:
    inputs: list
    output_dir: str
    seed: int = 0
    config: dict = field(default_factory=dict)
    version: str = __version__

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        if "inputs" not in d or not d["inputs"]:
            raise PipelineError("manifest needs at least one input")
        if "output_dir" not in d:
            raise PipelineError("manifest needs an output_dir")
        inputs = [i if isinstance(i, dict) else {"path": i} for i in d["inputs"]]
        return cls(inputs, str(d["output_dir"]), int(d.get("seed", 0)), dict(d.get("config", {})),
                   d.get("version", __version__))

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def merged_config(self) -> dict:
        cfg = json.loads(json.dumps(DEFAULT_CONFIG))
        for k, v in self.config.items():
            if isinstance(v, dict) and k in cfg:
                cfg[k].update(v)
            else:
                cfg[k] = v
        return cfg

    def to_dict(self) -> dict:
        return {"inputs": self.inputs, "output_dir": self.output_dir, "seed": self.seed,
                "config": self.merged_config(), "version": self.version}


def hurst_dispatch(method: str, returns: np.ndarray, q: float = 1.0, **kw):
    """Run one Hurst estimator by CLI name on a return series.

    Price-based estimators (GHE, wGHE) receive the cumulative sum of the
    returns, i.e. the log-price path up to a constant.
    """
    x = np.asarray(returns, dtype=float)
    if method == "rs":
        return _hurst.rs_hurst(x)
    if method == "rs-al":
        return _hurst.rs_hurst_corrected(x)
    if method == "dfa":
        return _hurst.dfa(x)
    if method == "ghe":
        return [e for e in _hurst.ghe(np.cumsum(x), q_list=(q,))][0]
    if method == "wghe":
        return _hurst.wghe(np.cumsum(x), q=q, **kw)
    if method == "gph":
        return _hurst.gph(x)
    if method == "spec":
        return _hurst.spectral_beta(x)
    if method == "acf":
        return _hurst.acf_hurst(x)
    raise ValueError(f"unknown Hurst method {method!r}; choose from {HURST_METHODS}")


# ------------------------------------------------------------------ stages

def _stage_hurst(ctx, cfg):
    out = {}
    for method in cfg["methods"]:
        try:
            out[method] = hurst_dispatch(method, ctx["x"]).to_dict()
        except Exception as exc:
            out[method] = {"method": method, "status": "error", "error": str(exc)}
    return out


def _stage_bds(ctx, cfg):
    return _bds.bds_test(ctx["x"], m_max=cfg["m_max"], eps_multiple=cfg["eps_multiple"]).to_dict()


def _stage_embed(ctx, cfg):
    x = ctx["x"]
    tau, flag, curve = _emb.ami_first_min(x, max_tau=cfg["max_tau"])
    f = _emb.fnn(x, tau=tau, max_m=cfg["max_m"])
    return {"tau_star": tau, "m_star": f.m_star, "ami_curve": curve, "fnn_curve": f.fractions,
            "flags": {"ami": flag, **f.flags}}


def _stage_lyapunov(ctx, cfg):
    x, seed = ctx["x"], ctx["seed"]
    out = {}
    for method in cfg["methods"]:
        if method == "rosenstein":
            out[method] = _lyap.rosenstein_sweep(x).to_dict()
        elif method == "jacobian":
            out[method] = _lyap.jacobian_lambda(x, cfg["max_tau"], cfg["max_m"], cfg["max_q"], seed=seed,
                                                n_boot=cfg["n_boot"], restarts=cfg["restarts"]).to_dict()
        else:
            raise ValueError(f"unknown Lyapunov method {method!r}")
    return out


def _candidates(spec):
    if spec == "default":
        return _vol.default_candidates()
    return [(_vol.MeanSpec.parse(c["mean"]), _vol.VarianceSpec(c["family"].upper(), c.get("dist", "normal")))
            for c in spec]


def _stage_garch(ctx, cfg):
    fits, failures = _vol.select_model(ctx["x"], _candidates(cfg["candidates"]), seed=ctx["seed"],
                                       n_starts=cfg["n_starts"])
    if not fits:
        raise RuntimeError("no candidate model converged")
    best = fits[0]
    ctx["sigma"] = best.sigma
    ts = ctx["timestamps"]
    offset = len(ctx["x"]) - len(best.sigma)
    write_csv(ctx["dir"] / "sigma.csv", ["timestamp", "sigma"],
              [(str(ts[i + offset]) if ts is not None else i + offset, s) for i, s in enumerate(best.sigma)])
    return {"best": best.to_dict(), "ranking": _vol.selection_table(fits),
            "failures": [{"model": str(m), "error": str(e)} for m, e in failures]}


def _stage_entropy(ctx, cfg):
    x = ctx["x"]
    window = min(int(cfg["window"]), len(x) // 2)
    conf = _ent.EntropyConfig(a=cfg["a"], n_states=cfg["n_states"], partition=cfg["partition"],
                              window=window, step=cfg["step"])
    trace = _ent.rolling_tsallis(x, conf, timestamps=ctx["timestamps"])
    rows = [(str(e), v) for e, v in zip(trace.ends, trace.values)]
    out = {"config": conf.__dict__, "mean": float(trace.values.mean()), "std": float(trace.values.std()),
           "max_entropy": trace.flags["max_entropy"], "n_windows": len(trace.values)}
    sigma = ctx.get("sigma")
    if sigma is not None:
        # sigma covers the last len(sigma) returns; align on window ends
        offset = len(x) - len(sigma)
        idx = np.array([i * conf.step + conf.window - 1 for i in range(len(trace.values))]) - offset
        keep = idx >= 0
        s = np.asarray(sigma)[idx[keep]]
        out["volatility"] = _ent.entropy_volatility_report(trace.values[keep], s)
        rows = [(r[0], r[1], sv) for r, sv in zip([r for r, k in zip(rows, keep) if k], s)]
        write_csv(ctx["dir"] / "entropy.csv", ["timestamp", "H_a", "sigma"], rows)
    else:
        write_csv(ctx["dir"] / "entropy.csv", ["timestamp", "H_a"], rows)
    return out


STAGES = (
    ("hurst", _stage_hurst, ()),
    ("bds", _stage_bds, ()),
    ("embed", _stage_embed, ()),
    ("lyapunov", _stage_lyapunov, ()),
    ("garch", _stage_garch, ()),
    ("entropy", _stage_entropy, ()),
)


def _prepare(inp: dict, cfg: dict, sub: Path):
    series, report = _series.load_csv(inp["path"], inp.get("frequency", "daily"),
                                       inp.get("gap_policy", "error"), inp.get("label"))
    r = _series.log_returns(series)
    period = cfg["deseasonalize"].get("period")
    phase = None
    if period == 7 and r.timestamps is not None:
        phase = np.array([t.weekday() for t in r.timestamps])
    d = _series.deseasonalize(r, period, phase) if period else r
    write_csv(sub / "returns.csv", ["timestamp", "return", "deseasonalized"],
              [(str(t), a, b) for t, a, b in zip(r.timestamps, r.values, d.values)])
    vol = {"raw": dict(_series.unconditional_volatility(r, "whole")),
           "deseasonalized": dict(_series.unconditional_volatility(d, "whole"))}
    try:
        vol["annual_raw"] = dict(_series.unconditional_volatility(r, "annual"))
        vol["annual_deseasonalized"] = dict(_series.unconditional_volatility(d, "annual"))
    except _series.SeriesError:
        pass
    ingest = {"label": series.label, "n_prices": len(series.values), "frequency": series.frequency,
              "load_report": report.to_dict(), "unconditional_volatility": vol}
    return series, d, ingest


def run_pipeline(manifest: RunManifest | dict | str | Path, output_dir=None) -> tuple:
    """Execute every stage for every input.

    Returns ``(run_dir, status)``. ``status`` maps ``label/stage`` to
    ``"ok"``, ``"error: ..."`` or ``"skipped: ..."``.

    Raises
    ------
    PipelineError
        When an input file is missing; the freshly created run directory
        is removed again.
    """
    if isinstance(manifest, (str, Path)):
        manifest = RunManifest.load(manifest)
    elif isinstance(manifest, dict):
        manifest = RunManifest.from_dict(manifest)
    run_dir = Path(output_dir if output_dir is not None else manifest.output_dir)
    created = not run_dir.exists()
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "manifest.json").write_text(dump_json(manifest.to_dict()))
    missing = [i["path"] for i in manifest.inputs if not Path(i["path"]).is_file()]
    if missing:
        if created:
            shutil.rmtree(run_dir)
        else:
            (run_dir / "manifest.json").unlink()
        raise PipelineError(f"input file not found: {', '.join(map(str, missing))}")
    cfg = manifest.merged_config()
    status = {}
    bundle = {}
    for inp in manifest.inputs:
        label = inp.get("label") or Path(inp["path"]).stem
        inp = {**inp, "label": label}
        sub = run_dir / label
        sub.mkdir(exist_ok=True)
        try:
            series, d, ingest = _prepare(inp, cfg, sub)
            (sub / "ingest.json").write_text(dump_json(ingest))
            status[f"{label}/ingest"] = "ok"
        except Exception as exc:
            status[f"{label}/ingest"] = f"error: {exc}"
            for name, _, _ in STAGES:
                status[f"{label}/{name}"] = "skipped: ingest failed"
            continue
        ctx = {"x": d.values, "timestamps": d.timestamps, "seed": manifest.seed, "dir": sub}
        results = {}
        for name, fn, deps in STAGES:
            key = f"{label}/{name}"
            if any(not status.get(f"{label}/{dep}", "").startswith("ok") for dep in deps):
                status[key] = "skipped: dependency failed"
                continue
            if name not in cfg or cfg[name] is None:
                status[key] = "skipped: disabled"
                continue
            try:
                res = fn(ctx, cfg[name])
                (sub / f"{name}.json").write_text(dump_json(res))
                results[name] = res
                status[key] = "ok"
            except Exception as exc:
                status[key] = f"error: {type(exc).__name__}: {exc}"
        bundle[label] = _bundle_entry(results, ingest)
    try:
        report = _market.efficiency_report(bundle)
        (run_dir / "report.json").write_text(dump_json(report))
        (run_dir / "report.txt").write_text(_market.render_report(to_jsonable(report)))
        status["report"] = "ok"
    except Exception as exc:
        status["report"] = f"error: {type(exc).__name__}: {exc}"
    (run_dir / "status.json").write_text(dump_json(status))
    return run_dir, status


def _bundle_entry(results: dict, ingest: dict) -> dict:
    entry = {"volatility": ingest["unconditional_volatility"]}
    h = results.get("hurst", {})
    entry["hurst"] = {m: r["H"] for m, r in h.items() if r.get("status") == "ok" and r.get("H") is not None}
    if "bds" in results:
        entry["bds_rejects"] = any(d["p_value"] is not None and d["p_value"] < 0.05
                                   for d in results["bds"]["dimensions"])
    if "lyapunov" in results:
        entry["lyapunov"] = {m: {"lambda_max": r["lambda_max"], "verdict": r.get("verdict")}
                             for m, r in results["lyapunov"].items()}
    if "garch" in results:
        entry["garch"] = {"model": results["garch"]["best"]["model"],
                          "variance": results["garch"]["best"]["variance"]}
    if "entropy" in results:
        entry["entropy"] = {k: results["entropy"][k] for k in ("mean", "std", "max_entropy")}
    return entry


def load_bundle(run_dir) -> dict:
    """Rebuild the report bundle from a finished run directory."""
    run_dir = Path(run_dir)
    bundle = {}
    for sub in sorted(p for p in run_dir.iterdir() if p.is_dir()):
        if not (sub / "ingest.json").is_file():
            continue
        results = {}
        for name, _, _ in STAGES:
            f = sub / f"{name}.json"
            if f.is_file():
                results[name] = json.loads(f.read_text())
        bundle[sub.name] = _bundle_entry(results, json.loads((sub / "ingest.json").read_text()))
    if not bundle:
        raise PipelineError(f"no market results found under {run_dir}")
    return bundle
