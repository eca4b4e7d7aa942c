"""Command line entry point: `levynet <subcommand> [--config path] [--seed n] [--out dir] ...`.

Every subcommand writes report.json and one or more CSV files into --out.
Artifacts depend only on (config, seed): floats are written with repr, JSON keys
are sorted and nothing time-dependent is recorded.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import barron, chaos, constructive, experiments, spectral
from .errors import ConfigError, LevyNetError
from .levy_models import LevyModel1D, SymbolSector, model_from_dict
from .payoffs import GaussianLog, PayoffSpec
from .pricing_oracle import price_fourier_1d, price_mc
from .relu_net import save

SUBCOMMANDS = ("price", "construct", "rate-study", "dim-sweep", "spectral", "chaos", "barron", "calib")

_BS = {"variant": "BlackScholes", "sigma": 0.2}
_CALL = {"kind": "Call", "K": 1.0}

DEFAULTS = {
    "price": {"model": _BS, "payoff": _CALL, "tau": 1.0, "s": [0.5 + 0.1 * i for i in range(11)],
              "nPoints": 1 << 18},
    "construct": {"model": _BS, "payoff": _CALL, "T": 1.0, "box": [0.5, 1.5], "epsilon": 0.01,
                  "attempts": 10},
    "rate-study": {"model": _BS, "payoff": _CALL, "T": 1.0, "box": [0.5, 1.5],
                   "nList": [1 << k for k in range(6, 15)], "trials": 8},
    "dim-sweep": {"sigma": 0.2, "dList": [1, 2, 5, 10, 20], "target": 0.02, "T": 1.0, "box": [0.5, 1.5],
                  "K": 1.0, "trials": 32},
    "spectral": {"model": {"variant": "BlackScholes", "sigma": 0.3},
                 "payoff": {"kind": "Butterfly", "K1": 0.8, "K": 1.0, "K2": 1.25}, "tau": 0.25,
                 "box": [0.5, 1.5], "pList": [4, 8, 12, 16, 20, 24, 28, 32], "deltaNet": 1e-6, "kMax": 10,
                 "emulateP": 16, "gridPoints": 2000},
    "chaos": {"model": {"variant": "BlackScholes", "sigma": 1.0, "d": 2}, "v0": {"kind": "Gaussian", "d": 2},
              "tau": 8.0, "sector": {"rho": 1.0, "C1": 0.5}, "maxOrder": 8, "q": 1.0,
              "nList": [1, 2, 4, 8, 16, 32, 64], "deltaNet": 1e-6, "emulateN": 32, "gridPoints": 21,
              "box": [-1.0, 1.0]},
    "barron": {"model": _BS, "d": 1, "width": 1.0, "amplitude": 1.0, "R": 2.0,
               "mList": [64, 128, 256, 512, 1024, 2048, 4096], "method": "Greedy", "nPoints": 100_000,
               "evolveTau": [0.0, 0.5, 1.0]},
    "calib": {"model": {"variant": "Merton", "sigma": 0.2, "lambda": 0.5, "muJ": -0.1, "sigmaJ": 0.15},
              "S0": 1.0, "T": 1.0, "strikeRange": {"lo": 0.8, "hi": 1.25, "N": 20}, "epsilon": 1e-3},
}


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def _schema() -> dict:
    return json.loads(resources.files("levynet").joinpath("schemas/config.json").read_text())


def _key_path(err: jsonschema.ValidationError) -> str:
    path = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        path += missing[:1]
    elif err.validator == "additionalProperties":
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        path += extra[:1]
    return ".".join(path) or "$"


def validate_config(cfg: dict) -> None:
    """Raise ConfigError naming the first offending key."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a table", "$")
    validator = jsonschema.Draft202012Validator(_schema())
    errs = sorted(validator.iter_errors(cfg), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errs:
        raise ConfigError(errs[0].message, _key_path(errs[0]))


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config ({exc.strerror})", str(p)) from None
    try:
        if p.suffix == ".toml":
            if sys.version_info >= (3, 11):
                import tomllib
            else:
                import tomli as tomllib
            cfg = tomllib.loads(raw.decode())
        else:
            cfg = json.loads(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse config ({exc})", str(p)) from None
    validate_config(cfg)
    return cfg


def resolve(subcommand: str, cfg: dict, seed: Optional[int], mode: Optional[str]) -> dict:
    """Subcommand defaults overlaid with the config and then the command line flags."""
    if cfg.get("subcommand", subcommand) != subcommand:
        raise ConfigError(f"config is for {cfg['subcommand']!r}, not {subcommand!r}", "subcommand")
    out = copy.deepcopy(DEFAULTS[subcommand])
    out.update(copy.deepcopy(cfg))
    out["subcommand"] = subcommand
    out["seed"] = int(seed if seed is not None else cfg.get("seed", 0))
    out["mode"] = mode or cfg.get("mode", "practical")
    return out


def build_model(cfg: dict):
    try:
        return model_from_dict(cfg["model"])
    except KeyError as exc:
        raise ConfigError("missing required key", f"model.{exc.args[0]}") from None
    except (ValueError, LevyNetError) as exc:
        raise ConfigError(str(exc), "model") from None


def build_payoff(cfg: dict, d: int) -> PayoffSpec:
    try:
        return PayoffSpec.from_dict(cfg["payoff"], d)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), "payoff") from None


def threads_from(arg: Optional[int]) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("LEVYNET_THREADS")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"not an integer: {env!r}", "LEVYNET_THREADS") from None
    if n < 1:
        raise ConfigError("must be at least 1", "threads")
    return n


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    return x


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(jsonable(obj), sort_keys=True, indent=2))
        fh.write("\n")


def write_svg(path: Path, series: dict, title: str, xlabel: str, ylabel: str,
              logx: bool = False, logy: bool = False, width: int = 640, height: int = 420) -> None:
    """Line chart of {name: (x, y)}; nonpositive values are dropped on log axes."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
    tx = (lambda v: math.log10(v)) if logx else float
    ty = (lambda v: math.log10(v)) if logy else float
    pts = {}
    for name, (xs, ys) in series.items():
        pts[name] = [(tx(x), ty(y)) for x, y in zip(xs, ys)
                     if math.isfinite(x) and math.isfinite(y) and (not logx or x > 0) and (not logy or y > 0)]
    allp = [p for v in pts.values() for p in v]
    if not allp:
        allp = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    x1, y1 = (x1 if x1 > x0 else x0 + 1), (y1 if y1 > y0 else y0 + 1)
    ml, mr, mt, mb = 70, 20, 40, 50
    sx = lambda v: ml + (v - x0) / (x1 - x0) * (width - ml - mr)
    sy = lambda v: height - mb - (v - y0) / (y1 - y0) * (height - mt - mb)
    lab = lambda v, lg: f"1e{v:.1f}" if lg else f"{v:.3g}"
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>',
           f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
           f'<text x="15" y="{height / 2:.1f}" text-anchor="middle" transform="rotate(-90 15 {height / 2:.1f})">{ylabel}</text>']
    for i in range(5):
        xv, yv = x0 + i * (x1 - x0) / 4, y0 + i * (y1 - y0) / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{height - mb + 16}" text-anchor="middle">{lab(xv, logx)}</text>')
        out.append(f'<text x="{ml - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{lab(yv, logy)}</text>')
    for k, (name, p) in enumerate(pts.items()):
        c = colors[k % len(colors)]
        if p:
            coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in p)
            out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{width - mr - 150}" y="{mt + 16 * (k + 1)}" fill="{c}">{name}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# subcommands; each returns (report results, summary lines)
# ---------------------------------------------------------------------------


def _sector(cfg: dict, model) -> SymbolSector:
    if "sector" in cfg:
        s = cfg["sector"]
        try:
            return SymbolSector(s["rho"], s["C1"], s.get("C2", math.inf), s.get("C3", math.inf), s.get("rhoVec"))
        except ValueError as exc:
            raise ConfigError(str(exc), "sector") from None
    m1 = model if isinstance(model, LevyModel1D) else None
    if m1 is not None and m1.jumps is None and m1.sigma > 0:
        return SymbolSector(1.0, 0.5 * m1.sigma**2)
    raise ConfigError("required unless the model is Black-Scholes with sigma > 0", "sector")


def run_price(cfg: dict, out: Path):
    model = build_model(cfg)
    d = model.d
    spec = build_payoff(cfg, d)
    S = np.asarray(cfg["s"], dtype=float).reshape(-1, d)
    if d == 1:
        res = price_fourier_1d(model, spec, cfg["tau"], S[:, 0])
    else:
        res = price_mc(model, spec, cfg["tau"], S, int(cfg["nPoints"]), cfg["seed"])
    vals = np.atleast_1d(res.value)
    errs = np.atleast_1d(res.error_bound)
    cols = ["s"] if d == 1 else [f"s{i + 1}" for i in range(d)]
    write_csv(out / "price.csv", cols + ["value", "errorBound", "kind"],
              [list(s) + [v, e, res.kind] for s, v, e in zip(S, vals, errs)])
    lines = [f"{' '.join(f'{x:.4f}' for x in s)}  {v:.7f}  (+- {e:.1e})" for s, v, e in zip(S, vals, errs)]
    return {"kind": res.kind, "n": res.n, "maxErrorBound": float(errs.max())}, lines


def _construct_cfg(cfg: dict) -> constructive.ConstructionConfig:
    a, b = cfg["box"]
    try:
        return constructive.ConstructionConfig(
            epsilon=cfg["epsilon"], a=a, b=b, mode=cfg["mode"], n_override=cfg.get("nOverride"),
            attempts=cfg["attempts"], grid_points_per_dim=cfg.get("gridPointsPerDim"), seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc), "box" if "0 < a" in str(exc) else "epsilon") from None


def run_construct(cfg: dict, out: Path):
    model = build_model(cfg)
    spec = build_payoff(cfg, model.d)
    try:
        net, rep = constructive.construct(model, spec, cfg["T"], _construct_cfg(cfg), require_target=False)
    except constructive.InfeasibleConstruction as exc:
        raise ConfigError(str(exc), "mode") from None
    save(net, out / "network.json")
    write_csv(out / "construct.csv", ["attempt", "supError"], enumerate(rep.attempt_errors))
    lines = [f"n = {rep.n}  M = {rep.M}  L = {rep.L}  sup error = {rep.sup_error:.4e}  met = {rep.met_target}"]
    return rep.to_dict(), lines


def run_rate_study(cfg: dict, out: Path):
    model = build_model(cfg)
    spec = build_payoff(cfg, model.d)
    try:
        rs = constructive.rate_study(model, spec, cfg["T"], tuple(cfg["box"]), cfg["nList"], cfg["trials"],
                                     cfg["seed"], cfg.get("gridPointsPerDim"))
    except ValueError as exc:
        raise ConfigError(str(exc), "nList") from None
    write_csv(out / "rate.csv", ["n", "meanError", "stdError", "M"], zip(rs.n, rs.mean_error, rs.std_error, rs.M))
    if cfg.get("svg"):
        write_svg(out / "rate.svg", {"mean sup error": (rs.n, rs.mean_error)}, "construction error", "n",
                  "error", logx=True, logy=True)
    lines = [f"n = {n:6d}  error = {e:.4e}  M = {M}" for n, e, M in zip(rs.n, rs.mean_error, rs.M)]
    lines.append(f"slope = {rs.slope:.4f}  r2 = {rs.r2:.4f}")
    return {"slope": rs.slope, "intercept": rs.intercept, "r2": rs.r2}, lines


def run_dim_sweep(cfg: dict, out: Path):
    sw = experiments.dimension_sweep(cfg["sigma"], cfg["dList"], cfg["target"], cfg["T"], tuple(cfg["box"]),
                                     cfg["K"], cfg["seed"], cfg["trials"])
    write_csv(out / "sweep.csv", ["d", "n", "M", "error"], [(r.d, r.n, r.M, r.error) for r in sw.rows])
    sep_d = 5
    rng = np.random.default_rng([cfg["seed"], 11])
    S = rng.uniform(*cfg["box"], size=(8, sep_d))
    sep = experiments.separable_check(cfg["sigma"], sep_d, cfg["K"], cfg["T"], S, 1 << 16, cfg["seed"])
    if cfg.get("svg"):
        write_svg(out / "sweep.svg", {"M(d)": ([r.d for r in sw.rows], [r.M for r in sw.rows])},
                  "network size at fixed error", "d", "M", logx=True, logy=True)
    res = {"rows": [experiments.as_dict(r) for r in sw.rows], "polyExponent": sw.poly_exponent,
           "polyR2": sw.poly_r2, "expRate": sw.exp_rate, "expR2": sw.exp_r2,
           "polynomialPreferred": sw.polynomial_preferred,
           "separable": {"d": sep.d, "maxZ": sep.max_z, "maxDiff": sep.max_diff}}
    lines = [f"d = {r.d:3d}  n = {r.n:5d}  M = {r.M:6d}  error = {r.error:.4e}" for r in sw.rows]
    lines.append(f"polynomial r2 = {sw.poly_r2:.4f}  exponential r2 = {sw.exp_r2:.4f}")
    return res, lines


def run_spectral(cfg: dict, out: Path):
    model = build_model(cfg)
    if not isinstance(model, LevyModel1D):
        raise ConfigError("spectral needs a one-dimensional model", "model")
    spec = build_payoff(cfg, 1)
    sector = _sector(cfg, model)
    tau = cfg["tau"]
    ch = spectral.cheb_approx(model, spec, tau, tuple(cfg["box"]), cfg["pList"], sector, cfg["gridPoints"])
    rows, emul = [], None
    for r in ch.rows:
        em = spectral.spectral_emulate(ch, r.p, cfg["deltaNet"])
        rows.append((r.p, r.sup_error, em.M, em.L))
        if r.p == cfg["emulateP"]:
            emul = em
    write_csv(out / "spectral.csv", ["p", "supError", "M", "L"], rows)
    res = {"decayCoefficient": ch.decay_coefficient, "fitR2": ch.fit_r2,
           "fitMaxRelResidual": ch.fit_max_rel_residual, "oracleError": ch.oracle_error, "delta": ch.delta}
    if emul is not None:
        save(emul.net, out / "network.json")
        res["emulation"] = {"p": cfg["emulateP"], "M": emul.M, "L": emul.L, "measuredError": emul.measured_error,
                            "chebError": emul.cheb_error, "deltaNet": emul.delta_net}
    if spec.kind == "Butterfly":
        v0 = spec.log_payoff()
        g = []
        for k in range(cfg["kMax"] + 1):
            g.append((k, spectral.gevrey_bound(k, tau, sector, v0.l2_norm()),
                      spectral.derivative_l2_norm(model, v0, tau, k)))
        write_csv(out / "gevrey.csv", ["k", "bound", "numericNorm"], g)
        res["gevreyHolds"] = all(n <= b * (1 + 1e-6) for _, b, n in g)
    if cfg.get("svg"):
        write_svg(out / "spectral.svg", {"sup error": ([r[0] for r in rows], [r[1] for r in rows])},
                  "Chebyshev interpolation error", "p", "error", logy=True)
    lines = [f"p = {p:3d}  error = {e:.4e}  M = {M}  L = {L}" for p, e, M, L in rows]
    return res, lines


def run_chaos(cfg: dict, out: Path):
    model = build_model(cfg)
    v = cfg["v0"]
    d = int(v.get("d", model.d))
    if d != model.d:
        raise ConfigError(f"v0 has d = {d} but the model has d = {model.d}", "v0.d")
    v0 = GaussianLog(d=d, width=v.get("width", 1.0), amplitude=v.get("amplitude", 1.0))
    sector = _sector(cfg, model)
    exp = chaos.taylor_coeffs(model, v0, cfg["tau"], sector, max_order=cfg["maxOrder"], q=cfg["q"])
    g = np.linspace(cfg["box"][0], cfg["box"][1], cfg["gridPoints"])
    X = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1).reshape(-1, d)
    rows = chaos.sparse_eval_and_error(exp, cfg["nList"], X)
    write_csv(out / "chaos.csv", ["n", "size", "supError", "tailBound", "oracleError"],
              [(r.n, r.size, r.sup_error, r.tail_bound, r.oracle_error) for r in rows])
    write_json(out / "expansion.json", exp.to_records())
    cert = chaos.summability_certificate(d, cfg["tau"], sector, exp.v0hat_l1, cfg["q"])
    groups = chaos.index_sequence(exp.indices, exp.bounds, cfg["emulateN"])
    lam = chaos.build_index_set(exp.indices, exp.bounds, cfg["emulateN"], groups)
    sn = chaos.sparse_to_relu(exp, lam, cfg["deltaNet"])
    save(sn.net, out / "network.json")
    res = {"tau0": chaos.tau0(d, float(sector.rho), cfg["q"], sector.C1), "rhoPrime": exp.rho_prime,
           "certificate": {"bound": cert.lq_norm_bound, "finite": cert.finite, "ratio": cert.ratio},
           "network": {"n": cfg["emulateN"], "size": len(lam), "M": sn.M, "L": sn.L, "m": sn.m}}
    lines = [f"n = {r.n:3d}  #Lambda = {r.size:3d}  error = {r.sup_error:.4e}  tail = {r.tail_bound:.4e}"
             for r in rows]
    return res, lines


def run_barron(cfg: dict, out: Path):
    d = cfg["d"]
    f = barron.gaussian_function(d, cfg["width"], cfg["amplitude"])
    norm = barron.barron_norm(f)
    model = build_model(cfg) if "model" in cfg else None
    evolved = {}
    if model is not None:
        if model.d != d:
            raise ConfigError(f"model has d = {model.d} but the function has d = {d}", "model.d")
        evolved = {repr(float(t)): barron.evolved_norm(f, model, t) for t in cfg.get("evolveTau", [])}
    try:
        fits = barron.fit_two_layer_path(f, d, cfg["R"], cfg["mList"], cfg["method"], cfg["seed"], cfg["nPoints"])
    except ValueError as exc:
        raise ConfigError(str(exc), "mList") from None
    rows = [(ft.m, ft.l2pi_error, barron.barron_bound(norm, cfg["R"], ft.m)) for ft in fits]
    write_csv(out / "barron.csv", ["m", "error", "bound"], rows)
    save(fits[-1].net, out / "network.json")
    if cfg.get("svg"):
        write_svg(out / "barron.svg", {"error": ([r[0] for r in rows], [r[1] for r in rows]),
                                       "bound": ([r[0] for r in rows], [r[2] for r in rows])},
                  "two-layer fit", "m", "L2 error", logx=True, logy=True)
    res = {"barronNorm": norm, "exactNorm": f.exact_norm, "evolvedNorms": evolved,
           "regularized": [bool(ft.regularized) for ft in fits]}
    lines = [f"m = {m:5d}  error = {e:.4e}  bound = {b:.4e}" for m, e, b in rows]
    return res, lines


def run_calib(cfg: dict, out: Path):
    model = build_model(cfg)
    if not isinstance(model, LevyModel1D):
        raise ConfigError("calibration needs a one-dimensional model", "model")
    if "strikes" in cfg:
        K = np.asarray(cfg["strikes"], dtype=float)
    else:
        r = cfg["strikeRange"]
        K = experiments.strike_range(r["lo"], r["hi"], r["N"])
    S0, T = cfg["S0"], cfg["T"]
    C = experiments.call_chain(model, S0, K, T)
    net, res = experiments.calib_experiment(model, S0, K, T, cfg["epsilon"], cfg["seed"], C_hat=C)
    save(net, out / "network.json")
    write_csv(out / "calib.csv", ["K", "C", "target", "fit"], zip(K, C, C / K, net(S0 / K)))
    lines = [f"N = {res.N}  mse = {res.mse:.4e}  epsilon = {res.epsilon:g}  M = {res.M}  met = {res.met_target}"]
    return experiments.as_dict(res), lines


RUNNERS = {"price": run_price, "construct": run_construct, "rate-study": run_rate_study,
           "dim-sweep": run_dim_sweep, "spectral": run_spectral, "chaos": run_chaos, "barron": run_barron,
           "calib": run_calib}


def run(subcommand: str, cfg: dict, out: Path, threads: int = 1) -> dict:
    """Execute a resolved config, write its artifacts and return the report."""
    out.mkdir(parents=True, exist_ok=True)
    res, lines = RUNNERS[subcommand](cfg, out)
    report = {"subcommand": subcommand, "seed": cfg["seed"], "mode": cfg["mode"], "threads": threads,
              "config": cfg, "results": res}
    write_json(out / "report.json", report)
    report["summary"] = lines
    return report


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levynet", description="ReLU network approximation of Levy option prices")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="TOML or JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads recorded in the report (env LEVYNET_THREADS)")
    p.add_argument("--mode", choices=("paper", "practical"))
    p.add_argument("--svg", action="store_true", help="also write SVG line charts")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("must be nonnegative", "seed")
        threads = threads_from(args.threads)
        cfg = resolve(args.subcommand, load_config(args.config), args.seed, args.mode)
        if args.svg:
            cfg["svg"] = True
        report = run(args.subcommand, cfg, Path(args.out), threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LevyNetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for line in report["summary"]:
        print(line)
    print(f"artifacts written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
