"""Command-line front end.

    noma-secrecy coverage|est|optimize|simulate|validate [--config FILE] [--set key=value ...]
    noma-secrecy figure fig2..fig12

Configs are JSON objects with a ``params`` block (scenario constants), an
optional ``mc`` block and command-specific keys.  Thresholds are given in dB
here and converted to linear values before reaching the library.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import montecarlo as mcm
from . import optimize as opt
from .coverage import eve_snr_cdf, legit_ccdf
from .secrecy import REGIMES, detection_prob_imperfect, detection_prob_perfect, est as est_value
from .spatial import SystemParams, db_to_lin
from .specfun import ConvergenceError, DomainError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_INFEASIBLE = 0, 1, 2, 3, 4
MIN_VALIDATE_TRIALS = 1000


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Output tables
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class CurveTable:
    """Named equal-length columns plus provenance header lines."""

    columns: dict
    label: str = ""
    header: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError("columns must have equal length")

    def __len__(self):
        return len(next(iter(self.columns.values()), []))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# label: {self.label}\n")
        for key, val in self.header.items():
            buf.write(f"# {key}: {json.dumps(val, sort_keys=True) if not isinstance(val, str) else val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.columns))
        for row in zip(*self.columns.values()):
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


class _Rows:
    """Row accumulator that turns into a CurveTable."""

    def __init__(self, names):
        self.names = list(names)
        self.data = {n: [] for n in names}

    def add(self, **row):
        if set(row) != set(self.names):
            raise KeyError(f"row keys {sorted(row)} != {sorted(self.names)}")
        for k, v in row.items():
            self.data[k].append(v)

    def table(self, label, header):
        return CurveTable(self.data, label, header)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

PARAM_KEYS = {f.name for f in dataclasses.fields(SystemParams)}
MC_KEYS = {f.name for f in dataclasses.fields(mcm.McConfig)}

COMMAND_KEYS = {
    "coverage": {"k", "t_db", "sic", "include_eve"},
    "est": {"regime", "k", "r_e", "r_b", "sweep", "surface"},
    "optimize": {"task", "k", "regime", "sic", "r_e", "r_b", "target_est", "bracket", "sweep"},
    "simulate": {"k", "t_db", "eve_t_db"},
    "validate": {"tolerance_scale"},
}
COMMON_KEYS = {"params", "mc", "mode", "label"}

DEFAULTS = {
    "coverage": {"k": "all", "t_db": {"start": -20.0, "stop": 30.0, "num": 20}, "sic": "perfect", "include_eve": False},
    "est": {"regime": "adaptive", "k": 1, "r_e": 1.0, "r_b": None, "sweep": None, "surface": None},
    "optimize": {"task": "re_adaptive", "k": 1, "regime": "adaptive", "sic": "perfect", "r_e": 1.0, "r_b": None,
                 "target_est": 0.0, "bracket": None, "sweep": None},
    "simulate": {"k": "all", "t_db": {"start": -20.0, "stop": 30.0, "num": 20}, "eve_t_db": []},
    "validate": {"tolerance_scale": 1.0},
}


@dataclass
class ExperimentConfig:
    command: str
    params: SystemParams
    mc: mcm.McConfig
    block: dict
    mode: str = "analytic"
    label: str = ""

    def echo(self) -> dict:
        return {
            "command": self.command,
            "params": self.params.to_dict(),
            "mc": dataclasses.asdict(self.mc),
            "mode": self.mode,
            **self.block,
        }


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(raw: dict, assignment: str) -> None:
    """Apply ``a.b=value`` to a nested dict; a bare name goes to params or mc when it belongs there."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, val = assignment.split("=", 1)
    path = key.strip().split(".")
    if len(path) == 1 and path[0] in PARAM_KEYS:
        path = ["params"] + path
    elif len(path) == 1 and path[0] in MC_KEYS:
        path = ["mc"] + path
    node = raw
    for p in path[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: {p} is not a block")
    node[path[-1]] = _parse_value(val)


def build_config(command: str, raw: dict, cli_mc: dict | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = COMMON_KEYS | COMMAND_KEYS[command]
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    p_raw = raw.get("params", {}) or {}
    bad = sorted(set(p_raw) - PARAM_KEYS)
    if bad:
        raise ConfigError(f"unknown params keys: {', '.join(bad)}")
    m_raw = dict(raw.get("mc", {}) or {})
    bad = sorted(set(m_raw) - MC_KEYS)
    if bad:
        raise ConfigError(f"unknown mc keys: {', '.join(bad)}")
    m_raw.update({k: v for k, v in (cli_mc or {}).items() if v is not None})
    try:
        params = SystemParams(**p_raw)
        mc = mcm.McConfig(**m_raw)
    except (DomainError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    mode = raw.get("mode", "analytic")
    if mode not in ("analytic", "mc", "both"):
        raise ConfigError("mode must be analytic, mc or both")
    block = dict(DEFAULTS[command])
    block.update({k: v for k, v in raw.items() if k not in COMMON_KEYS})
    return ExperimentConfig(command, params, mc, block, mode, raw.get("label", command))


def expand_grid(spec, name="grid"):
    """A list of numbers, or {start, stop, num} / {start, stop, step}."""
    if isinstance(spec, (int, float)):
        spec = [spec]
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "num", "step", "log"}
        if extra or "start" not in spec or "stop" not in spec:
            raise ConfigError(f"{name}: bad grid spec {spec}")
        if "num" in spec:
            n = int(spec["num"])
            if spec.get("log"):
                vals = np.logspace(math.log10(spec["start"]), math.log10(spec["stop"]), n)
            else:
                vals = np.linspace(spec["start"], spec["stop"], n)
        elif "step" in spec:
            n = int(round((spec["stop"] - spec["start"]) / spec["step"])) + 1
            vals = spec["start"] + spec["step"] * np.arange(n)
        else:
            raise ConfigError(f"{name}: grid needs num or step")
        spec = vals.tolist()
    if not isinstance(spec, list) or not spec:
        raise ConfigError(f"{name}: empty grid")
    try:
        return [float(v) for v in spec]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: non-numeric grid") from exc


def _users(spec, params):
    ks = list(range(1, params.n_users + 1)) if spec == "all" else ([spec] if isinstance(spec, int) else spec)
    if not isinstance(ks, list) or not ks:
        raise ConfigError("k must be an index, a list or 'all'")
    for k in ks:
        try:
            params.check_user(k)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
    return [int(k) for k in ks]


def _header(cfg: ExperimentConfig):
    return {"version": __version__, "seed": cfg.mc.seed, "config": cfg.echo()}


def _z(est, ref):
    # infinite when the estimate has zero spread but misses the reference
    return est.z_score(ref)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_coverage(cfg: ExperimentConfig) -> CurveTable:
    p, b = cfg.params, cfg.block
    t_db = expand_grid(b["t_db"], "t_db")
    t = db_to_lin(t_db)
    ks = _users(b["k"], p)
    sics = ["perfect", "imperfect"] if b["sic"] == "both" else [b["sic"]]
    if not set(sics) <= {"perfect", "imperfect"}:
        raise ConfigError("sic must be perfect, imperfect or both")
    rows = _Rows(["curve", "k", "t_db", "analytic", "mc", "mc_stderr", "z"])
    perfect = {k: np.atleast_1d(legit_ccdf(t, k, p)) for k in range(1, max(ks) + 1)} if cfg.mode != "mc" else {}
    mc_res = {}
    if cfg.mode != "analytic":
        for sic in sics:
            mc = dataclasses.replace(cfg.mc, sic_model="perfect" if sic == "perfect" else "worst_case_imperfect")
            mc_res[sic] = mcm.simulate(p, mc, mcm.SimulationPlan(legit_t=tuple(t)))["legit"]
    for sic in sics:
        for k in ks:
            if perfect:
                ana = perfect[k] if sic == "perfect" else np.prod([perfect[i] for i in range(1, k + 1)], axis=0)
            for j, x in enumerate(t_db):
                a = float(ana[j]) if perfect else math.nan
                e = mc_res[sic][k - 1][j] if mc_res else None
                rows.add(curve=f"p_{sic}", k=k, t_db=x, analytic=a, mc=e.mean if e else math.nan,
                         mc_stderr=e.stderr if e else math.nan, z=_z(e, a) if (e and perfect) else math.nan)
    if b["include_eve"]:
        ana = np.atleast_1d(eve_snr_cdf(t, p)) if cfg.mode != "mc" else None
        em = mcm.simulate_eve_cdf(t, p, cfg.mc) if cfg.mode != "analytic" else None
        for j, x in enumerate(t_db):
            # detection probability at the eavesdropper is the complement of the cdf
            a = 1.0 - float(ana[j]) if ana is not None else math.nan
            e = em[j] if em else None
            rows.add(curve="p_e", k=0, t_db=x, analytic=a, mc=1.0 - e.mean if e else math.nan,
                     mc_stderr=e.stderr if e else math.nan, z=-_z(e, 1.0 - a) if (e and ana is not None) else math.nan)
    return rows.table(cfg.label, _header(cfg))


SWEEP_VARS = ("r_e", "r_b", "r_p", "lambda_e", "p_t")


def _est_point(cfg, regime, k, params, r_e, r_b):
    a = float(est_value(regime, k, params, r_e, r_b).est) if cfg.mode != "mc" else math.nan
    e = ej = None
    if cfg.mode != "analytic":
        if regime == "fixed_imperfect":
            e = mcm.simulate_est_product(k, params, cfg.mc, r_e, r_b)
            ej = mcm.simulate_est(regime, k, params, cfg.mc, r_e, r_b)
        else:
            e = mcm.simulate_est(regime, k, params, cfg.mc, r_e, r_b)
    return a, e, ej


def cmd_est(cfg: ExperimentConfig) -> CurveTable:
    p, b = cfg.params, cfg.block
    regime = b["regime"]
    if regime not in REGIMES:
        raise ConfigError(f"regime must be one of {REGIMES}")
    ks = _users(b["k"], p)
    if b["surface"] is not None:
        surf = b["surface"]
        if not isinstance(surf, dict) or set(surf) != {"r_b", "r_e"} or regime == "adaptive":
            raise ConfigError("surface needs {r_b, r_e} grids and a fixed-rate regime")
        rb = np.array(expand_grid(surf["r_b"], "r_b"))
        re = np.array(expand_grid(surf["r_e"], "r_e"))
        rows = _Rows(["k", "r_b", "r_e", "est"])
        for k in ks:
            vals = np.asarray(est_value(regime, k, p, re[None, :], rb[:, None], mode="fast").est)
            for i, x in enumerate(rb):
                for j, y in enumerate(re):
                    rows.add(k=k, r_b=x, r_e=y, est=float(vals[i, j]))
        return rows.table(cfg.label, _header(cfg))
    sweep = b["sweep"] or {"var": "r_e", "values": [b["r_e"]]}
    if not isinstance(sweep, dict) or set(sweep) != {"var", "values"} or sweep["var"] not in SWEEP_VARS:
        raise ConfigError(f"sweep must be {{var, values}} with var in {SWEEP_VARS}")
    var, values = sweep["var"], expand_grid(sweep["values"], "sweep.values")
    if regime != "adaptive" and b["r_b"] is None and var != "r_b":
        raise ConfigError("fixed-rate regimes need r_b")
    rows = _Rows(["k", var, "analytic", "mc", "mc_stderr", "z", "mc_joint", "mc_joint_stderr"])
    for k in ks:
        for x in values:
            r_e, r_b, params = b["r_e"], b["r_b"], p
            if var == "r_e":
                r_e = x
            elif var == "r_b":
                r_b = x
            elif var == "p_t":
                params = p.with_power(x)
            else:
                params = p.replace(**{var: x})
            a, e, ej = _est_point(cfg, regime, k, params, r_e, r_b)
            rows.add(**{"k": k, var: x, "analytic": a, "mc": e.mean if e else math.nan,
                        "mc_stderr": e.stderr if e else math.nan,
                        "z": _z(e, a) if (e and cfg.mode == "both") else math.nan,
                        "mc_joint": ej.mean if ej else math.nan, "mc_joint_stderr": ej.stderr if ej else math.nan})
    return rows.table(cfg.label, _header(cfg))


def _bracket(b, default):
    br = b["bracket"]
    if br is None:
        return default
    if not (isinstance(br, list) and len(br) == 2):
        raise ConfigError("bracket must be [lo, hi]")
    return (float(br[0]), float(br[1]))


def _optimize_one(cfg, params):
    b = cfg.block
    (k,) = _users(b["k"], params) if not isinstance(b["k"], list) else _users(b["k"][:1], params)
    task = b["task"]
    if task == "re_adaptive":
        return opt.maximize_re_adaptive(k, params, _bracket(b, opt.DEFAULT_RE_BRACKET))
    if task == "rates_fixed":
        rb = _bracket(b, opt.DEFAULT_RB_BRACKET)
        return opt.maximize_rates_fixed(k, params, b["sic"], rb_bracket=rb)
    if task == "min_rp":
        return opt.min_exclusion_radius(k, float(b["target_est"]), params, float(b["r_e"]), b["regime"],
                                        b["r_b"], _bracket(b, opt.DEFAULT_RP_BRACKET))
    if task == "power":
        return opt.optimal_power(k, float(b["r_e"]), b["regime"], params, b["r_b"],
                                 _bracket(b, opt.DEFAULT_PT_BRACKET))
    raise ConfigError("task must be re_adaptive, rates_fixed, min_rp or power")


def cmd_optimize(cfg: ExperimentConfig) -> dict:
    """Returns the JSON-ready result; a sweep runs one optimization per value."""
    b = cfg.block
    out = {"version": __version__, "config": cfg.echo()}
    if b["sweep"] is None:
        out["result"] = _optimize_one(cfg, cfg.params).as_dict()
        return out
    sweep = b["sweep"]
    if not isinstance(sweep, dict) or set(sweep) != {"var", "values"} or sweep["var"] not in ("r_p", "lambda_e", "rho_e_db", "alpha"):
        raise ConfigError("optimize sweep must be {var, values} over r_p, lambda_e, rho_e_db or alpha")
    results = []
    for x in expand_grid(sweep["values"], "sweep.values"):
        try:
            res = _optimize_one(cfg, cfg.params.replace(**{sweep["var"]: x})).as_dict()
        except opt.InfeasibleError as exc:
            res = {"infeasible": True, "supremum": exc.supremum, "message": str(exc)}
        results.append({sweep["var"]: x, **res})
    out["results"] = results
    return out


def cmd_simulate(cfg: ExperimentConfig) -> CurveTable:
    p, b = cfg.params, cfg.block
    t_db = expand_grid(b["t_db"], "t_db")
    eve_db = expand_grid(b["eve_t_db"], "eve_t_db") if b["eve_t_db"] else []
    ks = _users(b["k"], p)
    plan = mcm.SimulationPlan(legit_t=tuple(db_to_lin(t_db)), eve_t=tuple(db_to_lin(eve_db)) if eve_db else ())
    res = mcm.simulate(p, cfg.mc, plan)
    rows = _Rows(["curve", "k", "t_db", "mean", "stderr", "trials"])
    for k in ks:
        for j, x in enumerate(t_db):
            e = res["legit"][k - 1][j]
            rows.add(curve="legit_ccdf", k=k, t_db=x, mean=e.mean, stderr=e.stderr, trials=e.trials)
    for j, x in enumerate(eve_db):
        e = res["eve"][j]
        rows.add(curve="eve_cdf", k=0, t_db=x, mean=e.mean, stderr=e.stderr, trials=e.trials)
    return rows.table(cfg.label, _header(cfg))


# ---------------------------------------------------------------------------
# Validation suite
# ---------------------------------------------------------------------------

VALIDATE_T_DB = np.linspace(-20.0, 30.0, 20)


def _check(name, analytic, est, scale):
    tol = max(3.0 * est.stderr, 0.01 * scale)
    diff = abs(float(analytic) - est.mean)
    return {"name": name, "analytic": float(analytic), "empirical": est.mean, "stderr": est.stderr,
            "z": _z(est, float(analytic)), "tolerance": tol, "pass": bool(diff <= tol)}


def validation_suite(params: SystemParams, mc: mcm.McConfig, scale: float = 1.0):
    """Analytic-vs-MC agreement over coverage, eavesdropper cdf and every EST regime.

    The imperfect-SIC check compares against independently simulated
    marginals; the literal joint-event estimate is listed under
    ``discrepancies`` and does not gate the result.
    """
    checks, discrepancies = [], []
    t = db_to_lin(VALIDATE_T_DB)
    for n in (2, 4):
        for m in (1, 2, 4):
            p = params.replace(n_users=n, m_antennas=m)
            sim = mcm.simulate(p, mc, mcm.SimulationPlan(legit_t=tuple(t)))["legit"]
            for k in range(1, n + 1):
                ana = np.atleast_1d(legit_ccdf(t, k, p))
                for j, x in enumerate(VALIDATE_T_DB):
                    checks.append(_check(f"legit_ccdf N={n} M={m} k={k} t={x:.4f}dB", ana[j], sim[k - 1][j], 1.0))
    for r_p in (0.0, 50.0, 200.0):
        p = params.replace(r_p=r_p)
        sim = mcm.simulate_eve_cdf(t, p, mc)
        ana = np.atleast_1d(eve_snr_cdf(t, p))
        for j, x in enumerate(VALIDATE_T_DB):
            checks.append(_check(f"eve_cdf r_p={r_p:g} t={x:.4f}dB", ana[j], sim[j], 1.0))
    for n in (2, 4):
        p = params.replace(n_users=n)
        items = []
        for k in range(1, n + 1):
            items += [("adaptive", k, 0.0, r_e) for r_e in (0.5, 1.0, 2.0, 4.0)]
            for r_b in (2.0, 4.0, 6.0):
                for r_e in (0.5, 1.0, 3.0):
                    if r_e < r_b:
                        items += [("fixed_perfect", k, r_b, r_e), ("fixed_imperfect", k, r_b, r_e)]
        perfect = [it for it in items if it[0] != "fixed_imperfect"]
        sim = mcm.simulate(p, mc, mcm.SimulationPlan(est=tuple(perfect)))["est"]
        for (regime, k, r_b, r_e), e in zip(perfect, sim):
            ana = est_value(regime, k, p, r_e, r_b or None).est
            checks.append(_check(f"est {regime} N={n} k={k} r_b={r_b:g} r_e={r_e:g}", ana, e, scale))
        imperfect = [it for it in items if it[0] == "fixed_imperfect"]
        joint_mc = dataclasses.replace(mc, sic_model="worst_case_imperfect")
        joint = mcm.simulate(p, joint_mc, mcm.SimulationPlan(est=tuple(imperfect)))["est"]
        for (regime, k, r_b, r_e), ej in zip(imperfect, joint):
            ana = est_value(regime, k, p, r_e, r_b).est
            e = mcm.simulate_est_product(k, p, mc, r_e, r_b)
            checks.append(_check(f"est {regime} N={n} k={k} r_b={r_b:g} r_e={r_e:g}", ana, e, scale))
            if k > 1:
                discrepancies.append({"name": f"joint-vs-product N={n} k={k} r_b={r_b:g} r_e={r_e:g}",
                                      "analytic_product": float(ana), "mc_joint": ej.mean,
                                      "mc_joint_stderr": ej.stderr, "z": _z(ej, float(ana))})
    # detection-probability gap at N=4, r_b=3
    p = params.replace(n_users=4)
    pairs = tuple((k, 3.0) for k in range(1, 5))
    det = mcm.simulate(p, mc, mcm.SimulationPlan(detection=pairs))["detection"]
    for (k, r_b), (marg, jnt) in zip(pairs, det):
        ana = float(detection_prob_imperfect(k, r_b, p))
        discrepancies.append({"name": f"detection joint-vs-product N=4 k={k} r_b=3", "analytic_product": ana,
                              "mc_joint": jnt.mean, "mc_joint_stderr": jnt.stderr, "z": _z(jnt, ana),
                              "perfect_analytic": float(detection_prob_perfect(k, r_b, p)), "mc_marginal": marg.mean})
    return checks, discrepancies


def cmd_validate(cfg: ExperimentConfig) -> dict:
    if cfg.mc.trials < MIN_VALIDATE_TRIALS:
        raise ConfigError(f"validate needs at least {MIN_VALIDATE_TRIALS} trials")
    checks, disc = validation_suite(cfg.params, cfg.mc, float(cfg.block["tolerance_scale"]))
    n_fail = sum(not c["pass"] for c in checks)
    return {"version": __version__, "config": cfg.echo(), "passed": n_fail == 0, "n_checks": len(checks),
            "n_failed": n_fail, "checks": checks, "discrepancies": disc}


# ---------------------------------------------------------------------------
# Figure registry
# ---------------------------------------------------------------------------

_P50 = {"n_users": 2, "r_p": 50.0}
_POWER = {"n_users": 2, "r_p": 50.0, "p_t": -50.0, "sigma_b2": -160.0, "sigma_e2": -140.0}
_PT_GRID = {"start": -90.0, "stop": -10.0, "step": 1.0}

# id -> list of (command, config) pieces; all pieces of one figure share a CSV
FIGURES = {
    "fig2": [("coverage", {"params": {"n_users": 6}, "k": "all", "t_db": [10 * math.log10(2 ** r - 1) for r in (1.0, 3.0)],
                           "sic": "both"})],
    "fig3": [("coverage", {"params": {"n_users": 4, "m_antennas": m}, "k": "all", "sic": "imperfect",
                           "t_db": {"start": -20.0, "stop": 40.0, "num": 31}}) for m in (1, 2, 4)]
            + [("coverage", {"params": {"n_users": 4, "r_p": rp}, "k": [1], "sic": "imperfect", "include_eve": True,
                             "t_db": {"start": -20.0, "stop": 40.0, "num": 31}}) for rp in (0.0, 50.0, 100.0, 200.0)],
    "fig4": [("est", {"params": _P50, "regime": "fixed_perfect", "k": 1,
                      "surface": {"r_b": {"start": 0.0, "stop": 12.0, "step": 0.25},
                                  "r_e": {"start": 0.0, "stop": 12.0, "step": 0.25}}})],
    "fig5": [("optimize", {"params": dict(_P50, lambda_e=lam), "task": "rates_fixed", "k": 1})
             for lam in (1e-6, 1e-5, 1e-4)],
    "fig6": [("est", {"params": _P50, "regime": "fixed_perfect", "k": 1, "r_b": float(rb),
                      "sweep": {"var": "r_e", "values": {"start": 0.0, "stop": 9.0, "step": 0.1}}}) for rb in range(1, 10)]
            + [("est", {"params": dict(_P50, r_p=rp), "regime": "adaptive", "k": 1,
                        "sweep": {"var": "r_e", "values": {"start": 0.0, "stop": 9.0, "step": 0.1}}}) for rp in (0.0, 50.0, 100.0)],
    "fig7": [("est", {"params": _P50, "regime": reg, "k": [1, 2], "r_e": 3.0,
                      "sweep": {"var": "r_b", "values": {"start": 3.0, "stop": 12.0, "step": 0.1}}})
             for reg in ("fixed_perfect", "fixed_imperfect")],
    "fig8": [("optimize", {"params": {"n_users": 2}, "task": "min_rp", "k": 1, "r_e": 1.0, "target_est": tgt,
                           "sweep": {"var": "lambda_e", "values": {"start": 1e-7, "stop": 1e-3, "num": 17, "log": True}}})
             for tgt in (0.5, 1.0, 1.5)],
    "fig9": [("est", {"params": {"n_users": 2}, "regime": "adaptive", "k": [1, 2], "r_e": 1.0,
                      "sweep": {"var": "r_p", "values": {"start": 0.0, "stop": 400.0, "step": 5.0}}})],
    "fig10": [("est", {"params": {"n_users": 2, "m_antennas": m}, "regime": "adaptive", "k": [1, 2], "r_e": 1.0,
                       "sweep": {"var": "lambda_e", "values": {"start": 1e-7, "stop": 1e-2, "num": 21, "log": True}}})
              for m in (1, 2, 4)],
    "fig11": [("est", {"params": dict(_POWER, sigma_e2=s), "regime": "adaptive", "k": [1, 2], "r_e": 1.0,
                       "sweep": {"var": "p_t", "values": _PT_GRID}}) for s in (-150.0, -140.0, -130.0)],
    "fig12": [("est", {"params": dict(_POWER, lambda_e=lam), "regime": "adaptive", "k": 1, "r_e": 1.0,
                       "sweep": {"var": "p_t", "values": _PT_GRID}}) for lam in (0.0, 1e-6, 1e-5, 1e-4)],
}


def cmd_figure(fig_id: str, lambda_e: float | None = None, cli_mc=None, mode="analytic"):
    """CSV text (or JSON for optimizer figures) of one registry entry.

    ``lambda_e`` overrides the eavesdropper density of every piece that does
    not sweep it (fig3's text and parameter table disagree on this value).
    """
    if fig_id not in FIGURES:
        raise ConfigError(f"unknown figure {fig_id!r}; known: {', '.join(FIGURES)}")
    parts = []
    for i, (command, raw) in enumerate(FIGURES[fig_id]):
        raw = json.loads(json.dumps(raw))
        sweeps_lambda = "lambda_e" in json.dumps(raw.get("sweep")) or "lambda_e" in raw.get("params", {})
        if lambda_e is not None and not sweeps_lambda:
            raw["params"]["lambda_e"] = lambda_e
        raw["label"] = f"{fig_id}.{i}"
        raw["mode"] = mode
        cfg = build_config(command, raw, cli_mc)
        parts.append(COMMANDS[command](cfg))
    if all(isinstance(x, dict) for x in parts):
        return _dump_json({"figure": fig_id, "parts": parts})
    return "".join(x.to_csv() if isinstance(x, CurveTable) else _dump_json(x) for x in parts)


COMMANDS = {"coverage": cmd_coverage, "est": cmd_est, "optimize": cmd_optimize, "simulate": cmd_simulate,
            "validate": cmd_validate}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="noma-secrecy", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["figure"]:
        sp = sub.add_parser(name)
        if name == "figure":
            sp.add_argument("fig_id")
            sp.add_argument("--lambda-e", type=float, default=None,
                            help="override the eavesdropper density of the figure's pieces")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--mode", choices=("analytic", "mc", "both"))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--threads", type=int)
    return ap


def run(argv=None) -> tuple[int, str]:
    """Parse and execute; returns (exit status, output text)."""
    return _execute(_parser().parse_args(argv))


def _execute(args) -> tuple[int, str]:
    cli_mc = {"seed": args.seed, "trials": args.trials, "threads": args.threads}
    try:
        if args.command == "figure":
            if args.config or args.set:
                raise ConfigError("figure takes no --config/--set; use the matching command instead")
            return EXIT_OK, cmd_figure(args.fig_id, args.lambda_e, cli_mc, args.mode or "analytic")
        raw = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"{args.config}: {exc}") from exc
        for item in args.set:
            apply_override(raw, item)
        if args.mode:
            raw["mode"] = args.mode
        cfg = build_config(args.command, raw, cli_mc)
        result = COMMANDS[args.command](cfg)
    except (ConfigError, DomainError) as exc:
        return EXIT_CONFIG, _dump_json({"error": "config", "message": str(exc)})
    except opt.InfeasibleError as exc:
        return EXIT_INFEASIBLE, _dump_json({"error": "infeasible", "message": str(exc), "supremum": exc.supremum})
    except ConvergenceError as exc:
        return EXIT_CONVERGENCE, _dump_json({"error": "convergence", "message": str(exc)})
    if isinstance(result, CurveTable):
        return EXIT_OK, result.to_csv()
    status = EXIT_FAIL if args.command == "validate" and not result["passed"] else EXIT_OK
    return status, _dump_json(result)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    status, text = _execute(args)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        (sys.stderr if status in (EXIT_CONFIG, EXIT_CONVERGENCE) else sys.stdout).write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
