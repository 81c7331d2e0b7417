"""Config-driven experiment runner.

Usage::

    cmfluct run --config exp.yaml [--config more.yaml] [--out-dir out] [--seed-override N] [--threads K]
    cmfluct report DIR [--csv summary.csv]

A config is a YAML mapping with the top-level keys ``experiment``, ``seed``,
``label``, ``model``, ``function``, ``params``, ``policy`` and
``require_determinate``; see ``docs/config.md`` for the per-experiment schema.
Every run writes ``<experiment>-<hash>.json`` (summary, config and hash) and
usually a companion ``<experiment>-<hash>.csv``.  The hash is the SHA-256 of
the canonical JSON of the validated config, seed override included.

Exit codes: 0 success, 1 runtime error, 2 indeterminate verdict where the
config required a determinate one, 64 invalid config.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import additive_fluct as af
from . import levy_criteria as lc
from . import mc_lab
from . import minorant as mn
from . import vertex_law as vl
from ._numerics import INDETERMINATE
from .levy_model import model_from_dict, model_to_dict, sample_path

EXIT_OK, EXIT_ERROR, EXIT_INDETERMINATE, EXIT_USAGE = 0, 1, 2, 64
EXPERIMENTS = ("sample-path", "minorant", "phi-table", "vertex-sim", "criteria-fs", "criteria-is",
               "additive-conditions", "mc-fluctuation", "meander", "audit-appendix", "asymptotics")
# work is split into this many independently seeded chunks whatever --threads is,
# so outputs do not depend on the thread count
N_CHUNKS = 8


class ConfigError(ValueError):
    pass


# -- schema -----------------------------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 1}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


# each entry: (params schema, policy schema, needs model, needs function); None means optional
_PARAMS = {
    "sample-path": (_obj({"horizon": _POS, "n_points": {"type": "integer", "minimum": 2}}), _obj({}), True, False),
    "minorant": (_obj({"source": {"enum": ["grid-hull", "stick-breaking", "cauchy-exact"]},
                       "horizon": _POS, "grid_size": _INT, "n_faces": _INT, "lam": _POS}), _obj({}), True, False),
    "phi-table": (_obj({"quantity": {"enum": ["phi", "psi_fs", "phi_is"]}, "u": _NUMS, "w": _NUMS, "s": _NUM,
                        "lam": _POS}),
                  _obj({"rel_tol": _POS, "abs_tol": _POS}), True, False),
    "vertex-sim": (_obj({"method": {"enum": ["prm", "cauchy-exact"]}, "u": _NUMS, "w": _NUMS, "lam": _POS,
                         "size_floor": _POS}),
                   _obj({"n_samples": _INT, "z_max": _POS}), True, False),
    "criteria-fs": (_obj({"s": _NUM, "c": _POS, "route": {"enum": ["scaling", "generic"]}}),
                    _obj({"depth": _INT}), True, True),
    "criteria-is": (_obj({"c": _POS, "route": {"enum": ["scaling", "generic"]}}),
                    _obj({"depth": _INT}), True, True),
    "additive-conditions": (
        _obj({"mode": {"enum": ["conditions", "series", "experiment"]},
              "measure": _obj({"kind": {"enum": ["stationary-atom", "breakequivalence"]},
                               "size": _POS, "rate": _POS, "n_max": _INT}, ["kind"]),
              "boundary": _obj({"kind": {"enum": ["identity", "linear", "power"]}, "c": _POS, "p": _POS},
                               ["kind"]),
              "series": {"enum": ["a", "b"]}, "slope": _NUM,
              "theta": _obj({"start": _NUM, "stop": _NUM, "power": _POS}, ["start", "stop"]),
              "n_values": {"type": "array", "items": _INT, "minItems": 1}}),
        _obj({"depth": _INT, "runs": _INT}), None, None),
    "mc-fluctuation": (
        _obj({"regime": {"enum": ["FS", "IS"]}, "sampler": {"enum": list(mc_lab.SAMPLERS)}, "s": _NUM,
              "kind": {"enum": ["sup", "inf"]}, "k_min": _INT, "grid_size": _INT, "horizon": _POS,
              "n_faces": _INT, "lam": _POS, "allow_unregistered": {"type": "boolean"}}, ["regime", "sampler"]),
        _obj({"k_max": _INT, "n_paths": _INT, "theta": _POS, "n_boot": _INT}), True, True),
    "meander": (_obj({"p": _POS, "q": _POS, "k_min": _INT, "grid_size": _INT}),
                _obj({"k_max": _INT, "n_paths": _INT, "theta": _POS, "n_boot": _INT}), True, False),
    "audit-appendix": (_obj({"grid": {"type": "array", "minItems": 1,
                                      "items": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4}}},
                            ["grid"]),
                       _obj({"n_mc": _INT}), True, False),
    "asymptotics": (_obj({"n": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                          "u_base": _POS, "s_step": _NUM, "lam": _POS}, ["n"]),
                    _obj({"ratio_band": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2}}),
                    True, False),
}

_DEFAULTS = {
    "sample-path": ({"horizon": 1.0, "n_points": 1025}, {}),
    "minorant": ({"source": "grid-hull", "horizon": 1.0, "grid_size": 2 ** 12, "n_faces": 60, "lam": 1.0}, {}),
    "phi-table": ({"quantity": "phi", "s": 0.0, "lam": 1.0}, {"rel_tol": 1e-10, "abs_tol": 1e-14}),
    "vertex-sim": ({"method": "prm", "lam": 1.0, "size_floor": 1e-10}, {"n_samples": 100_000, "z_max": 3.0}),
    "criteria-fs": ({"s": 0.0, "c": 1.0, "route": "scaling"}, {"depth": lc.DEFAULT_DEPTH}),
    "criteria-is": ({"c": 1.0, "route": "scaling"}, {"depth": lc.DEFAULT_DEPTH}),
    "additive-conditions": ({"mode": "conditions", "series": "a", "slope": 0.0},
                            {"depth": af.DEFAULT_DEPTH, "runs": 200}),
    "mc-fluctuation": ({"s": 0.0, "k_min": 4, "grid_size": 2 ** 16, "horizon": 1.0, "n_faces": 80, "lam": 1.0,
                        "allow_unregistered": False},
                       {"k_max": 14, "n_paths": 500, "theta": 0.05, "n_boot": 200}),
    "meander": ({"k_min": 4, "grid_size": 2 ** 16}, {"k_max": 14, "n_paths": 200, "theta": 0.05, "n_boot": 200}),
    "audit-appendix": ({}, {"n_mc": 100_000}),
    "asymptotics": ({"u_base": 2.0, "s_step": -1.0, "lam": 1.0}, {"ratio_band": [0.9, 1.1]}),
}

_TOP = _obj({"experiment": {"enum": list(EXPERIMENTS)}, "seed": {"type": "integer", "minimum": 0},
             "label": {"type": "string"}, "model": {"type": "object"}, "function": {"type": "object"},
             "params": {"type": "object"}, "policy": {"type": "object"},
             "require_determinate": {"type": "boolean"}}, ["experiment", "seed"])


def _validate(instance, schema, where):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path)
        raise ConfigError(f"{where}{'/' + path if path else ''}: {e.message}") from None


def validate_config(raw) -> dict:
    """Check a parsed config and return it with defaults filled in."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    _validate(raw, _TOP, "config")
    cfg = copy.deepcopy(raw)
    exp = cfg["experiment"]
    p_schema, q_schema, needs_model, needs_f = _PARAMS[exp]
    for block, schema, default in (("params", p_schema, _DEFAULTS[exp][0]),
                                   ("policy", q_schema, _DEFAULTS[exp][1])):
        given = cfg.get(block, {})
        _validate(given, schema, block)
        cfg[block] = {**default, **given}
    cfg.setdefault("label", "")
    cfg.setdefault("require_determinate", False)
    if needs_model or (needs_model is None and "model" in cfg):
        if "model" not in cfg:
            raise ConfigError(f"{exp} needs a model block")
        try:
            cfg["model"] = model_to_dict(model_from_dict(cfg["model"]))
        except (ValueError, TypeError) as e:
            raise ConfigError(f"model: {e}") from None
    elif needs_model is False and "model" in cfg:
        raise ConfigError(f"{exp} takes no model block")
    if needs_f or (needs_f is None and "function" in cfg):
        if "function" not in cfg:
            raise ConfigError(f"{exp} needs a function block")
        try:
            cfg["function"] = lc.TestFunction.from_dict(cfg["function"]).to_dict()
        except (ValueError, TypeError) as e:
            raise ConfigError(f"function: {e}") from None
    elif needs_f is False and "function" in cfg:
        raise ConfigError(f"{exp} takes no function block")
    pr = cfg["params"]
    if exp == "meander" and ("p" in pr) == ("q" in pr):
        raise ConfigError("params: meander needs exactly one of p and q")
    if exp in ("phi-table", "vertex-sim") and ("u" not in pr or "w" not in pr):
        raise ConfigError("params: u and w grids are required")
    if exp == "additive-conditions":
        need = {"conditions": ("measure", "boundary"), "series": ("theta", "model", "function"), "experiment": ("n_values",)}
        missing = [k for k in need[pr["mode"]] if k not in pr and k not in cfg]
        if missing:
            raise ConfigError(f"params: mode {pr['mode']} needs {missing}")
    return cfg


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def load_config(path, seed_override=None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML: {e}") from None
    if seed_override is not None and isinstance(raw, dict):
        raw["seed"] = seed_override
    return validate_config(raw)


# -- helpers ----------------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


def _csv(header, rows, chash) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header) + ["config_hash"])
    for r in rows:
        w.writerow([_fmt(v) for v in r] + [chash])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def _chunks(n, k=N_CHUNKS):
    k = max(1, min(k, n))
    base, extra = divmod(n, k)
    return [base + (i < extra) for i in range(k)]


def _parallel(fn, args, threads):
    if threads <= 1 or len(args) == 1:
        return [fn(*a) for a in args]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda a: fn(*a), args))


# -- experiments ------------------------------------------------------------------------------
# each returns (summary dict, csv header, csv rows); summary may carry "verdict"


def _exp_sample_path(cfg, model, f, seq, threads):
    pr = cfg["params"]
    t, x = sample_path(model, pr["horizon"], pr["n_points"] - 1, np.random.default_rng(seq))
    return {"n_rows": len(t), "final_value": float(x[-1])}, ("time", "value"), zip(t, x)


def _exp_minorant(cfg, model, f, seq, threads):
    pr = cfg["params"]
    rng = np.random.default_rng(seq)
    if pr["source"] == "grid-hull":
        t, x = sample_path(model, pr["horizon"], pr["grid_size"], rng)
        cm = mn.convex_minorant(t, x)
    elif pr["source"] == "stick-breaking":
        cm = mn.sample_faces_stickbreaking(model, rng, horizon=pr["horizon"], n_faces=pr["n_faces"])
    else:
        cm = vl.cauchy_exact_minorant(model, rng, lam=pr["lam"])
    order = np.argsort(cm.slopes, kind="stable")
    rows = zip(cm.lengths[order], cm.slopes[order])
    summary = {"n_faces": int(len(cm.lengths)), "horizon": cm.horizon, "residual": cm.residual,
               "tau_0": float(np.sum(cm.lengths[cm.slopes <= 0]))}
    return summary, ("length", "slope"), rows


def _exp_phi_table(cfg, model, f, seq, threads):
    pr, po = cfg["params"], cfg["policy"]
    tol = {"rel_tol": po["rel_tol"], "abs_tol": po["abs_tol"]}
    rows = []
    for u in pr["u"]:
        for w in pr["w"]:
            if pr["quantity"] == "phi":
                r = vl.phi(model, u, w, pr["lam"], **tol)
            elif pr["quantity"] == "psi_fs":
                r = vl.psi_fs(model, pr["s"], u, w, pr["lam"], **tol)
            else:
                r = vl.phi_is(model, u, w, pr["lam"], **tol)
            rows.append((u, w, r.value, r.error))
    return {"n_rows": len(rows)}, ("u", "w", "value", "error_bound"), rows


def _exp_vertex_sim(cfg, model, f, seq, threads):
    pr, po = cfg["params"], cfg["policy"]
    u = np.asarray(pr["u"], dtype=float)
    if pr["method"] == "cauchy-exact":
        order = np.argsort(u)

        def draw(n, s):
            out = vl.sample_vertex_cauchy(model, u[order], n, np.random.default_rng(s), lam=pr["lam"])
            res = np.empty_like(out)
            res[:, order] = out
            return res
    else:
        def draw(n, s):
            return vl.sample_vertex_prm(model, u, n, np.random.default_rng(s), lam=pr["lam"],
                                        size_floor=pr["size_floor"])
    sizes = _chunks(po["n_samples"])
    samples = np.vstack(_parallel(draw, list(zip(sizes, seq.spawn(len(sizes)))), threads))
    rows, worst = [], 0.0
    for j, uj in enumerate(u):
        for w in pr["w"]:
            target = vl.phi(model, float(uj), w, pr["lam"]).value
            m = vl.laplace_match(samples[:, j], w, target)
            worst = max(worst, abs(m.z))
            rows.append((uj, w, m.estimate, m.target, m.stderr, m.z))
    verdict = "match" if worst < po["z_max"] else "mismatch"
    return ({"max_abs_z": worst, "verdict": verdict, "determinate": True},
            ("u", "w", "estimate", "target", "stderr", "z"), rows)


def _exp_criteria(cfg, model, f, seq, threads):
    pr, po = cfg["params"], cfg["policy"]
    if cfg["experiment"] == "criteria-fs":
        res = lc.fs_conditions(model, pr["s"], f, pr["c"], po["depth"], route=pr["route"])
    else:
        res = lc.is_conditions(model, f, pr["c"], po["depth"], route=pr["route"])
    summary = res.to_dict()
    summary["determinate"] = res.verdict != INDETERMINATE
    return summary, ("condition", "verdict"), ((k, v.verdict) for k, v in res.conditions.items())


def _measure(spec):
    if spec["kind"] == "breakequivalence":
        return af.breakequivalence_measure(spec.get("n_max", 40))
    return af.StationaryMeasure(sizes=(spec.get("size", 0.5),), rates=(spec.get("rate", 1.0),))


def _boundary(spec):
    if spec["kind"] == "identity":
        return af.Boundary.identity()
    if spec["kind"] == "linear":
        return af.Boundary.linear(spec.get("c", 1.0))
    return af.Boundary.power(spec.get("p", 1.0))


def _exp_additive(cfg, model, f, seq, threads):
    pr, po = cfg["params"], cfg["policy"]
    if pr["mode"] == "experiment":
        rep = af.breakequivalence_experiment(pr["n_values"], po["runs"], np.random.default_rng(seq))
        n = np.asarray(pr["n_values"], dtype=int)
        return ({"frequency": rep.frequency, "stderr": rep.stderr, "runs": rep.runs},
                ("n", "hit_rate"), zip(n, rep.per_level_rate))
    if pr["mode"] == "series":
        return _additive_series(cfg, model, f)
    measure, h = _measure(pr["measure"]), _boundary(pr["boundary"])
    reps = af.thm32_conditions(measure, h, po["depth"])
    inv, convex = af.prop34_conditions(measure, h, po["depth"])
    reps.update(inv)
    summary = {"conditions": {k: v.to_dict() for k, v in reps.items()}, "boundary_convex": convex,
               "verdict": reps["Pi_large"].verdict}
    summary["determinate"] = summary["verdict"] != INDETERMINATE
    return summary, ("condition", "verdict"), ((k, v.verdict) for k, v in reps.items())


def _additive_series(cfg, model, f):
    """Upper-function series for the vertex process past the vertex at ``slope``.

    Series ``a`` uses ``t_n = 1/theta_n``, series ``b`` uses
    ``t_n = log log theta_n / theta_n``, with ``theta_n = exp(n^power)``.
    """
    pr = cfg["params"]
    if model is None or f is None:
        raise ConfigError("series mode needs model and function blocks")
    th = pr["theta"]
    n = np.arange(int(th["start"]), int(th["stop"]) + 1)
    theta = np.exp(n.astype(float) ** th.get("power", 1.0))

    def psi(u, w):
        return vl.psi_fs(model, pr["slope"], u, w).value
    if pr["series"] == "a":
        rep, ratio = af.thm31a_series(psi, f, lambda v: 1.0 / v, theta)
        summary = {"verdict": rep.verdict, "series": rep.to_dict(), "f_ratio": ratio}
        return ({**summary, "determinate": rep.verdict != INDETERMINATE}, ("n", "term"),
                zip(n, rep.terms))
    first, second = af.thm31b_series(psi, f, lambda v: math.log(math.log(v)) / v, theta)
    verdict = f"{first.verdict}/{second.verdict}"
    det = INDETERMINATE not in (first.verdict, second.verdict)
    rows = [(k, a, b) for k, a, b in zip(n, first.terms, np.append(second.terms, np.nan))]
    return ({"verdict": verdict, "first": first.to_dict(), "second": second.to_dict(), "determinate": det},
            ("n", "first_term", "second_term"), rows)


def _exp_mc(cfg, model, f, seq, threads):
    pr, po = cfg["params"], cfg["policy"]
    kids = seq.spawn(N_CHUNKS + 1)
    sizes = _chunks(po["n_paths"])

    def work(n, s):
        return mc_lab.estimate_fluctuation(
            model, pr["regime"], f, pr["sampler"], po["k_max"], n, np.random.default_rng(s), s=pr["s"],
            kind=pr.get("kind"), k_min=pr["k_min"], grid_size=pr["grid_size"],
            horizon=None if pr["sampler"] == "cauchy-exact" else pr["horizon"], n_faces=pr["n_faces"],
            lam=pr["lam"], allow_unregistered=pr["allow_unregistered"])
    parts = _parallel(work, list(zip(sizes, kids[:len(sizes)])), threads)
    return _classified(parts, po, kids[-1])


def _classified(parts, po, seq):
    first = parts[0]
    stat = mc_lab.FluctuationStatistic(first.regime, first.kind, first.levels,
                                       np.vstack([p.block for p in parts]), slope=first.slope,
                                       meta={**first.meta, "n_paths": sum(p.n_paths for p in parts)})
    cls = mc_lab.regime_classify(stat, po["theta"], po["n_boot"], np.random.default_rng(seq))
    summary = {"verdict": cls.verdict, "confidence": cls.confidence, "block_slope": cls.block_slope,
               "cumulative_slope": cls.cumulative_slope, "determinate": cls.verdict != mc_lab.INDETERMINATE,
               "meta": stat.meta}
    rows = []
    for which in ("block", "running", "cumulative"):
        q = stat.quantiles(which)
        for j, k in enumerate(stat.levels):
            rows.append((which, int(k), q[0, j], q[1, j], q[2, j]))
    return summary, ("statistic", "level", "q25", "median", "q75"), rows


def _exp_meander(cfg, model, f, seq, threads):
    pr, po = cfg["params"], cfg["policy"]
    kids = seq.spawn(N_CHUNKS + 1)
    sizes = _chunks(po["n_paths"])
    which = {k: pr[k] for k in ("p", "q") if k in pr}

    def work(n, s):
        return mc_lab.meander_growth(model, po["k_max"], n, np.random.default_rng(s), k_min=pr["k_min"],
                                     grid_size=pr["grid_size"], **which)
    return _classified(_parallel(work, list(zip(sizes, kids[:len(sizes)])), threads), po, kids[-1])


def _exp_audit(cfg, model, f, seq, threads):
    rep = lc.appendix_bound_audit(model, cfg["params"]["grid"], cfg["policy"]["n_mc"], np.random.default_rng(seq))
    rows = [(r.t, r.K, r.eps, r.p, r.moment, r.moment_se, r.moment_bound, r.tail, r.tail_se, r.tail_bound,
             int(r.violated)) for r in rep.records]
    return ({"violations": rep.violations, "checks": len(rows), "audit_flag": rep.violations > 0},
            ("t", "K", "eps", "p", "moment", "moment_se", "moment_bound", "tail", "tail_se", "tail_bound",
             "violated"), rows)


def _exp_asymptotics(cfg, model, f, seq, threads):
    pr, po = cfg["params"], cfg["policy"]
    n = np.asarray(pr["n"], dtype=float)
    chk = vl.phi_asymptotics_check(model, pr["s_step"] * n, pr["u_base"] ** n, pr["lam"])
    lo, hi = po["ratio_band"]
    last = float(chk.ratio[-1])
    return ({"final_ratio": last, "verdict": "within" if lo <= last <= hi else "outside", "determinate": True},
            ("n", "exponent", "prediction", "ratio"), zip(n.astype(int), chk.exponent, chk.prediction, chk.ratio))


_RUNNERS = {"sample-path": _exp_sample_path, "minorant": _exp_minorant, "phi-table": _exp_phi_table,
            "vertex-sim": _exp_vertex_sim, "criteria-fs": _exp_criteria, "criteria-is": _exp_criteria,
            "additive-conditions": _exp_additive, "mc-fluctuation": _exp_mc, "meander": _exp_meander,
            "audit-appendix": _exp_audit, "asymptotics": _exp_asymptotics}


def run_config(cfg: dict, out_dir, threads: int = 1) -> tuple[int, dict]:
    """Run one validated config, write its artifacts and return ``(exit code, manifest)``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    exp = cfg["experiment"]
    model = model_from_dict(cfg["model"]) if "model" in cfg else None
    f = lc.TestFunction.from_dict(cfg["function"]) if "function" in cfg else None
    seq = np.random.SeedSequence(cfg["seed"])
    stem = f"{exp}-{chash[:16]}"
    manifest = {"experiment": exp, "label": cfg["label"], "config_hash": chash, "config": cfg}
    try:
        summary, header, rows = _RUNNERS[exp](cfg, model, f, seq, threads)
        rows = list(rows)
    except ConfigError:
        raise
    except Exception as e:  # reported, not raised: a failed run still leaves a manifest
        manifest.update(status="error", error=f"{type(e).__name__}: {e}")
        _write(out_dir / f"{stem}.json", json.dumps(_jsonable(manifest), sort_keys=True, indent=1) + "\n")
        return EXIT_ERROR, manifest
    manifest.update(status="ok", summary=summary, csv=f"{stem}.csv")
    code = EXIT_OK
    if cfg["require_determinate"] and not summary.get("determinate", True):
        manifest["status"] = "indeterminate"
        code = EXIT_INDETERMINATE
    _write(out_dir / f"{stem}.csv", _csv(header, rows, chash))
    _write(out_dir / f"{stem}.json", json.dumps(_jsonable(manifest), sort_keys=True, indent=1) + "\n")
    return code, manifest


def _write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


# -- report -----------------------------------------------------------------------------------

REPORT_COLUMNS = ("label", "experiment", "status", "verdict", "confidence", "audit_flag", "hash_ok", "file")


def _report_row(path: Path) -> dict:
    d = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(d, dict) or "config" not in d or "config_hash" not in d:
        raise ValueError("not a run manifest")
    summary = d.get("summary", {})
    ok = config_hash(d["config"]) == d["config_hash"] and path.stem.endswith(d["config_hash"][:16])
    if ok and d.get("csv"):
        body = (path.parent / d["csv"]).read_text(encoding="utf-8").splitlines()
        ok = all(line.endswith("," + d["config_hash"]) for line in body[1:])
    return {"label": d.get("label", ""), "experiment": d.get("experiment", ""), "status": d.get("status", ""),
            "verdict": summary.get("verdict", ""), "confidence": summary.get("confidence", ""),
            "audit_flag": summary.get("audit_flag", ""), "hash_ok": ok, "file": path.name}


def _natural(text):
    return [(0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.split(r"(\d+)", text)]


def report(artifact_dir) -> tuple[list[dict], list[str]]:
    """Summarise every run manifest under ``artifact_dir``; unreadable files go to the warnings."""
    rows, warnings = [], []
    for path in sorted(Path(artifact_dir).glob("*.json")):
        try:
            rows.append(_report_row(path))
        except (OSError, ValueError, KeyError, TypeError, UnicodeDecodeError) as e:
            warnings.append(f"{path.name}: {type(e).__name__}: {e}")
    rows.sort(key=lambda r: (_natural(r["label"]), r["experiment"], r["file"]))
    return rows, warnings


def format_table(rows) -> str:
    cells = [list(REPORT_COLUMNS)] + [[str(r[c]) for c in REPORT_COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(REPORT_COLUMNS))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells) + "\n"


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# -- entry point ------------------------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="cmfluct", description="Convex minorant fluctuation experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run experiments from config files")
    r.add_argument("--config", action="append", required=True, help="YAML config (repeatable)")
    r.add_argument("--out-dir", default="artifacts")
    r.add_argument("--seed-override", type=int, default=None)
    r.add_argument("--threads", type=int, default=1, help="worker threads per experiment")
    p = sub.add_parser("report", help="summarise a directory of run outputs")
    p.add_argument("artifact_dir")
    p.add_argument("--csv", default=None, help="also write the table as CSV here")
    return ap


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if args.command == "report":
        if not Path(args.artifact_dir).is_dir():
            print(f"error: {args.artifact_dir} is not a directory", file=sys.stderr)
            return EXIT_USAGE
        rows, warnings = report(args.artifact_dir)
        sys.stdout.write(format_table(rows))
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
        if args.csv:
            _write(Path(args.csv), report_csv(rows))
        return EXIT_OK
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        configs = [load_config(c, args.seed_override) for c in args.config]
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    worst = EXIT_OK
    for cfg in configs:
        code, manifest = run_config(cfg, args.out_dir, args.threads)
        line = f"{manifest['experiment']} {manifest['config_hash'][:16]} {manifest['status']}"
        verdict = manifest.get("summary", {}).get("verdict")
        print(line + (f" {verdict}" if verdict is not None else ""), flush=True)
        if code == EXIT_ERROR:
            print(f"error: {manifest['error']}", file=sys.stderr)
        # errors dominate indeterminate verdicts
        worst = EXIT_ERROR if EXIT_ERROR in (worst, code) else max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
