"""Batch front-end.

Every run is described by an :class:`ExperimentConfig`; the command line only
builds one. Runs write their tables as CSV, the resolved config as JSON next to
them and a manifest with parameters, seed and wall time.

Exit codes: 0 success, 2 invalid input, 3 numerical tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import gzip
import io
import json
import math
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__, analytic, checks, diffusion, specfun, spiking, subordinator, wf
from .errors import DomainError, ToleranceError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_TOLERANCE = 3


@dataclass
class ExperimentConfig:
    """A fully resolved experiment.

    ``command`` and ``target`` name the subcommand (``target`` is ``None`` for
    ``zeros`` and ``subordinator``); ``params`` holds its options.
    """

    command: str
    target: Optional[str] = None
    params: dict = field(default_factory=dict)
    master_seed: int = 0
    out: Optional[str] = None
    workers: int = 1
    profile: str = "desk"
    tolerances: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        if "command" not in d:
            raise DomainError("config lacks 'command'")
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise DomainError("config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


# -- output plumbing ------------------------------------------------------------

class _Sink:
    """Where a run writes: a single CSV file, a directory, or stdout."""

    def __init__(self, out: Optional[str], directory: bool):
        self.out = out
        self.directory = directory or (out is not None and not out.endswith(".csv"))
        self.artifacts: list[str] = []
        if out is not None:
            base = out if self.directory else os.path.dirname(os.path.abspath(out))
            os.makedirs(base, exist_ok=True)

    def _side(self, suffix: str) -> Optional[str]:
        if self.out is None:
            return None
        if self.directory:
            return os.path.join(self.out, suffix)
        return os.path.splitext(self.out)[0] + "." + suffix

    def table(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        text = buf.getvalue()
        if self.out is None:
            sys.stdout.write(text)
            return
        path = os.path.join(self.out, name) if self.directory else self.out
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.artifacts.append(path)

    def gz_table(self, name: str, header, rows):
        if self.out is None:
            return
        path = os.path.join(self.out, name)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        # mtime=0 keeps the archive byte-identical across runs
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as fh:
            fh.write(buf.getvalue().encode())
        self.artifacts.append(path)

    def json(self, suffix: str, obj):
        path = self._side(suffix)
        if path is None:
            return
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_plain(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.artifacts.append(path)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _plain(x):
    return checks._jsonable(x)


def _error_report(exc: BaseException, code: int) -> dict:
    return {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}


# -- argument helpers -------------------------------------------------------------

def _grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError(f"grid must read lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise DomainError(f"grid must read lo:hi:n, got {text!r}") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or hi < lo:
        raise DomainError(f"grid needs 0 <= lo <= hi and n >= 1, got {text!r}")
    return np.linspace(lo, hi, n)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DomainError(f"expected comma-separated numbers, got {text!r}") from None


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.split(","):
        a, _, b = item.partition(":")
        try:
            out.append((float(a), float(b)))
        except ValueError:
            raise DomainError(f"expected lam:mu pairs, got {text!r}") from None
    return out


def _need(params: dict, *keys):
    for k in keys:
        if params.get(k) is None:
            raise DomainError(f"missing required parameter {k!r}")


# -- experiments --------------------------------------------------------------------

def _run_zeros(cfg: ExperimentConfig, sink: _Sink) -> dict:
    p = cfg.params
    _need(p, "nu", "count")
    tab = specfun.bessel_j_zeros(float(p["nu"]), int(p["count"]))
    sink.table("zeros.csv", ["index", "zero"], ((i + 1, z) for i, z in enumerate(tab.zeros)))
    return {}


def _run_exponent(cfg: ExperimentConfig, sink: _Sink) -> dict:
    p = cfg.params
    mus = _grid(p.get("mu_grid") or "0.1:5:50")
    beta = p.get("beta")
    _need(p, "beta")
    beta = float(beta)
    gamma = float(p.get("gamma") or 1.0)
    lam = float(p.get("lam") or 1.0)
    tol = cfg.tolerances.get("gap")
    ledger = {}
    if cfg.target == "wf":
        if not beta > 1:
            raise DomainError(f"Wright-Fisher needs beta > 1, got beta={beta!r}")
        tau = float(p.get("tau") or 1e-3)
        alpha = float(p["alpha"]) if p.get("alpha") is not None else gamma * tau
        ps = wf.WfScaling(tau, alpha, beta, lam, gamma=alpha / tau)
        g = alpha / tau
        method = p.get("method") or "series"
        rows = []
        for mu in mus:
            if method == "series":
                lim = float(mu) * wf.limit_representing_integral(mu, beta, g) / wf.limit_speed_integral(mu, beta)
            elif method == "cf":
                lim = g * wf.wf_phi_cf(mu, beta, 40)
            elif method == "limit":
                lim = wf.wf_phi_limit(mu, beta, g)
            else:
                raise DomainError(f"unknown method {method!r}")
            phn = wf.wf_phi_n(ps, float(mu))
            rows.append((mu, phn, lim, g * wf.wf_phi_cf(mu, beta, 40), abs(phn - lim)))
        sink.table("exponent.csv", ["mu", "phi_n", "phi_limit", "cf_depth40", "abs_err"], rows)
        worst = max(r[4] for r in rows)
    elif cfg.target in ("feller", "rbm"):
        n = float(p.get("n") or 1e4)
        rows = []
        if cfg.target == "feller":
            alpha = float(p["alpha"]) if p.get("alpha") is not None else gamma / n
            for mu in mus:
                v = analytic.feller_phi_n(n, alpha, beta, lam, float(mu))
                lim = analytic.feller_phi_limit(mu, beta, alpha * n)
                rows.append((mu, v, lim, abs(v - lim)))
            fit = analytic.ig_parameter_fit(beta, alpha * n)
            ledger["ig_fit"] = {"mean": fit.mean, "shape": fit.shape,
                                "shape_stated": (alpha * n) ** 2 / beta, "max_abs_gap": fit.max_abs_gap}
        else:
            beta_n = float(p["beta_n"]) if p.get("beta_n") is not None else n ** -0.25
            for mu in mus:
                v = analytic.rbm_phi_n(n, beta_n, lam, float(mu))
                rows.append((mu, v, float(mu), abs(v - mu)))
            aux = analytic.RbmAux(n, beta_n, lam, 1.0)
            ledger["rbm"] = {"beta_n": beta_n, "rho_n": aux.rho,
                             "zero_killing_mass": analytic.rbm_zero_killing_mass(n, beta_n, lam)}
        sink.table("exponent.csv", ["mu", "phi_n", "phi_limit", "gap"], rows)
        worst = max(r[3] for r in rows)
    else:
        raise DomainError(f"unknown exponent family {cfg.target!r}")
    if tol is not None and worst > float(tol):
        raise ToleranceError(f"largest gap {worst:.3g} exceeds tolerance {tol}")
    return ledger


def _run_subordinator(cfg: ExperimentConfig, sink: _Sink) -> dict:
    p = cfg.params
    _need(p, "beta")
    beta = float(p["beta"])
    gamma = float(p.get("gamma") or 1.0)
    rep = subordinator.arbitrate_convention(beta, gamma, tol=float(cfg.tolerances.get("arbitration", 1e-4)))
    law = subordinator.SubordinatorLaw.wright_fisher(beta, gamma, rep.selected)
    ledger = {"convention": {"selected": rep.selected, "mus": list(rep.mus), "gaps": rep.gaps}}
    did = False
    if p.get("cumulants"):
        k = subordinator.cumulants(beta, gamma, int(p["cumulants"]))
        sink.table("cumulants.csv", ["n", "kappa"], ((i + 1, v) for i, v in enumerate(k)))
        did = True
    if p.get("moments"):
        t = float(p.get("t") or 1.0)
        m = subordinator.moments(law, t, int(p["moments"]))
        sink.table("moments.csv", ["n", "moment"], ((i + 1, v) for i, v in enumerate(m[1:])))
        did = True
    if p.get("sample"):
        eps = float(p.get("eps") or 1e-6)
        t = float(p.get("t") or 1.0)
        rng = np.random.default_rng(cfg.master_seed)
        s = subordinator.sample_increment(law, t, eps, rng=rng, size=int(p["sample"]))
        sink.table("samples.csv", ["sample_index", "value"], enumerate(np.atleast_1d(s)))
        did = True
    if not did:
        raise DomainError("nothing requested: pass --cumulants, --moments or --sample")
    return ledger


def _model(target: str, p: dict) -> diffusion.DiffusionModel:
    beta = p.get("beta")
    if target == "wf":
        _need(p, "tau", "beta")
        tau = float(p["tau"])
        alpha = float(p["alpha"]) if p.get("alpha") is not None else tau
        return diffusion.DiffusionModel.wright_fisher(tau, alpha, float(beta))
    if target == "feller":
        _need(p, "n", "beta")
        n = float(p["n"])
        alpha = float(p["alpha"]) if p.get("alpha") is not None else 1.0 / n
        return diffusion.DiffusionModel.feller(n, alpha, float(beta))
    if target == "rbm":
        _need(p, "n")
        n = float(p["n"])
        return diffusion.DiffusionModel.reflected_bm(n, float(beta) if beta is not None else n ** -0.25)
    raise DomainError(f"unknown diffusion family {target!r}")


def _simulate(cfg: ExperimentConfig, record_dt=None, family=None) -> diffusion.PathEnsemble:
    p = cfg.params
    model = _model(family or cfg.target, p)
    _need(p, "T", "dt", "paths")
    start = p.get("start") or "zero"
    if start not in ("zero", "stationary"):
        try:
            start = float(start)
        except ValueError:
            raise DomainError(f"start must be zero, stationary or a number, got {start!r}") from None
    pairs = _pairs(p["pairs"]) if p.get("pairs") else [(1.0, 0.5), (1.0, 1.0)]
    return diffusion.simulate_ensemble(model, float(p["T"]), float(p["dt"]), int(p["paths"]),
                                       cfg.master_seed, start=start, laplace_pairs=pairs,
                                       record_dt=record_dt if record_dt is not None else p.get("record_dt"),
                                       scheme=p.get("scheme"), workers=cfg.workers)


def _run_simulate(cfg: ExperimentConfig, sink: _Sink) -> dict:
    p = cfg.params
    ens = _simulate(cfg)
    hit = []
    if p.get("hit"):
        v = _floats(p["hit"])
        if len(v) != 2:
            raise DomainError("hit takes t,eps")
        hit = [(v[0], v[1])]
    deltas = _floats(p["deltas"]) if p.get("deltas") else []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", diffusion.TruncationWarning)
        rep = diffusion.condition_report(ens, hit, deltas)
    sink.json("ensemble_meta.json", ens.meta() | {"workers": cfg.workers})
    sink.table("laplace.csv", ["lambda", "mu", "R_hat", "se"], rep.resolvent)
    sink.table("conditions.csv", ["kind", "a", "b", "value", "se"], rep.rows())
    if p.get("write_paths"):
        rows = ((i, t, x, a) for i in range(ens.X.shape[0])
                for t, x, a in zip(ens.times, ens.X[i], ens.A[i]))
        sink.gz_table("paths.csv.gz", ["path", "t", "X", "A"], rows)
    out = {"failed_paths": ens.failed.size,
           "warnings": sorted({str(w.message) for w in caught})}
    if ens.failed.size:
        raise ToleranceError(f"{ens.failed.size} paths produced non-finite states")
    return out


def _run_spiking(cfg: ExperimentConfig, sink: _Sink) -> dict:
    p = cfg.params
    K = int(p.get("K") or 10)
    seed = cfg.master_seed
    gen = p.get("generator") or "binomial"
    if cfg.target == "ind":
        beta = float(p.get("beta") or 3.0)
        r = float(p.get("r") or 1.0)
        eps = float(p.get("eps") or 1e-2)
        bins = int(p.get("bins") or 10_000)
        F = spiking.MixingMeasure.beta_rate(beta, r, eps)
        batch = spiking.sample_ind_model(F, K, bins, seed, gen)
        rho = spiking.pairwise_correlation(batch)
        ident = spiking.jump_identity(batch)
        stats = {"rho": rho.value, "rho_se": rho.se, "rho_exact": F.correlation,
                 "identity": ident.value, "identity_se": ident.se, "alpha_eps": F.a}
    elif cfg.target == "ds":
        ens = _simulate(cfg, record_dt=float(p.get("bin_width") or 1.0) / 10, family=p.get("family") or "wf")
        bins = int(p["bins"]) if p.get("bins") else None
        batch = spiking.sample_doubly_stochastic(ens, K, seed, float(p.get("bin_width") or 1.0), bins, gen)
        batch = spiking.SpikeBatch(K, np.asarray(batch.counts)[0], batch.bin_width, seed,
                                   mixing=np.asarray(batch.mixing)[0])
        rho = spiking.pairwise_correlation(batch)
        stats = {"rho": rho.value, "rho_se": rho.se, "model": ens.model.as_dict()}
    elif cfg.target == "cp":
        beta = float(p.get("beta") or 3.0)
        r = float(p.get("r") or 1.0)
        grid = _floats(p["eps"]) if p.get("eps") else [1e-2, 1e-3]
        samples = int(p.get("bins") or 1_000_000)
        res = spiking.compound_poisson_limit_stats(beta, r, grid, K, samples, seed)
        sink.table("cp_stats.csv", ["eps", "rate", "rate_se", "rate_exact", "rho", "rho_se",
                                    "rho_exact", "identity", "identity_se"],
                   ((s.eps, s.rate, s.rate_se, s.rate_exact, s.rho.value, s.rho.se, s.rho_exact,
                     s.identity.value, s.identity.se) for s in res))
        sink.json("stats.json", {"limit_correlation": 1.0 / (1.0 + beta),
                                 "jump_law": {str(s.eps): s.jump_law for s in res}})
        return {}
    else:
        raise DomainError(f"unknown spiking model {cfg.target!r}")
    sink.table("raster.csv", ["bin", "count"], enumerate(np.asarray(batch.counts)))
    sink.json("stats.json", stats)
    return {}


def _run_verify(cfg: ExperimentConfig, sink: _Sink) -> dict:
    group = cfg.target or "all"
    res = checks.run_checks(group, cfg.profile, cfg.master_seed or 20240917, cfg.workers,
                            echo=lambda s: print(s, flush=True))
    sink.json("verify.json", [r.as_dict() for r in res])
    failed = [r.criterion for r in res if not r.passed]
    summary = {"group": group, "profile": cfg.profile, "failed": failed,
               "convention": next((r.detail.get("selected") for r in res if r.criterion == "5"), None)}
    if failed:
        raise ToleranceError(f"criteria failed: {', '.join(failed)}")
    return summary


_RUNNERS = {
    "zeros": (_run_zeros, False),
    "exponent": (_run_exponent, False),
    "subordinator": (_run_subordinator, False),
    "simulate": (_run_simulate, True),
    "spiking": (_run_spiking, False),
    "verify": (_run_verify, True),
}


def run(config: ExperimentConfig) -> int:
    """Execute ``config``; returns the process exit code."""
    t0 = time.perf_counter()
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    sink = None
    try:
        if config.command not in _RUNNERS:
            raise DomainError(f"unknown command {config.command!r}")
        if config.profile not in checks.PROFILES:
            raise DomainError(f"unknown profile {config.profile!r}")
        if int(config.workers) < 1:
            raise DomainError("workers must be >= 1")
        fn, directory = _RUNNERS[config.command]
        multi = config.command == "subordinator" and sum(
            bool(config.params.get(k)) for k in ("cumulants", "moments", "sample")) > 1
        sink = _Sink(config.out, directory or multi or config.command == "spiking" and config.target == "cp")
        sink.json("config.json", config.to_dict())
        ledger = fn(config, sink)
        code, err = EXIT_OK, None
    except DomainError as exc:
        code, err = EXIT_INVALID, _error_report(exc, EXIT_INVALID)
        ledger = {}
    except (ToleranceError, ArithmeticError) as exc:
        code, err = EXIT_TOLERANCE, _error_report(exc, EXIT_TOLERANCE)
        ledger = {}
    except (ValueError, TypeError, KeyError) as exc:
        code, err = EXIT_INVALID, _error_report(exc, EXIT_INVALID)
        ledger = {}
    if err is not None:
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
    if sink is not None:
        if err is not None:
            sink.json("error.json", err)
        sink.json("manifest.json", {
            "command": config.command, "target": config.target, "params": config.params,
            "master_seed": config.master_seed, "workers": config.workers, "profile": config.profile,
            "tolerances": config.tolerances, "started_utc": started,
            "wall_time_s": time.perf_counter() - t0, "git_revision": "unknown",
            "version": __version__, "exit_code": code, "artifacts": list(sink.artifacts),
            "ledger": ledger})
    return code


# -- command line -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"status": "error", "exit_code": EXIT_INVALID, "error": "UsageError",
                          "message": message}, sort_keys=True), file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _common(p):
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="CSV file or output directory")
    p.add_argument("--profile", choices=sorted(checks.PROFILES), default=argparse.SUPPRESS)


def _sim_flags(p):
    p.add_argument("--tau", type=float)
    p.add_argument("--n", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--start", default="zero", help="zero, stationary or an initial state")
    p.add_argument("--scheme", choices=["cir", "euler", "exact"])
    p.add_argument("--pairs", help="lam:mu pairs for the resolvent, e.g. 1:0.5,1:1")
    p.add_argument("--record-dt", dest="record_dt", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="afscale", description="Laplace exponents, subordinator laws and "
                 "simulations of integrated reflected diffusions.")
    ap.add_argument("--config", help="run a saved JSON config instead of a subcommand")
    _common(ap)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("zeros", help="positive zeros of J_nu")
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    _common(p)

    p = sub.add_parser("exponent", help="prelimit and limit Laplace exponents")
    p.add_argument("target", choices=["wf", "feller", "rbm"])
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=float)
    p.add_argument("--beta-n", dest="beta_n", type=float)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--mu-grid", dest="mu_grid", default="0.1:5:50")
    p.add_argument("--method", choices=["series", "cf", "limit"], default="series")
    _common(p)

    p = sub.add_parser("subordinator", help="cumulants, moments and samples of the limit subordinator")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--cumulants", type=int)
    p.add_argument("--moments", type=int)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--sample", type=int)
    p.add_argument("--eps", type=float, default=1e-6)
    _common(p)

    p = sub.add_parser("simulate", help="simulate integrated diffusions")
    p.add_argument("target", choices=["wf", "feller", "rbm"])
    _sim_flags(p)
    p.add_argument("--hit", help="t,eps window for the hitting-time tail")
    p.add_argument("--deltas", help="comma-separated lags for the modulus bound")
    p.add_argument("--write-paths", dest="write_paths", action="store_true")
    _common(p)

    p = sub.add_parser("spiking", help="spike-count models")
    p.add_argument("target", choices=["ind", "ds", "cp"])
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--bins", type=int)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--eps", help="bin length; a comma-separated grid for cp")
    p.add_argument("--generator", choices=["binomial", "poisson"], default="binomial")
    p.add_argument("--bin-width", dest="bin_width", type=float, default=1.0)
    p.add_argument("--family", choices=["wf", "feller", "rbm"], default="wf",
                   help="driving diffusion for ds")
    _sim_flags(p)
    _common(p)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("target", nargs="?", default="all", choices=sorted(checks.GROUPS))
    _common(p)
    return ap


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    d = vars(ns).copy()
    if d.get("config"):
        cfg = ExperimentConfig.load(d["config"])
        for k, attr in (("seed", "master_seed"), ("workers", "workers"), ("out", "out"), ("profile", "profile")):
            if k in d:
                setattr(cfg, attr, d[k])
        return cfg
    if not d.get("command"):
        raise DomainError("a subcommand or --config is required")
    cfg = ExperimentConfig(command=d.pop("command"), target=d.pop("target", None),
                           master_seed=d.pop("seed", 0), out=d.pop("out", None),
                           workers=d.pop("workers", 1), profile=d.pop("profile", "desk"))
    d.pop("config", None)
    if cfg.command == "spiking" and cfg.target == "ind" and d.get("eps") is not None:
        d["eps"] = float(_floats(d["eps"])[0])
    cfg.params = {k: v for k, v in sorted(d.items()) if v is not None and v is not False}
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except DomainError as exc:
        print(json.dumps(_error_report(exc, EXIT_INVALID), sort_keys=True), file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
