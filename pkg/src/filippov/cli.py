"""Batch command-line interface.

Every command reads one INI-style config file (``print-config`` shows all
sections and defaults), validates it before computing anything, and writes
plot-ready CSV and JSON reports plus a run manifest into the output
directory. Exit codes: 1 config error, 2 numerical failure or refused
precondition, 3 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import inspect
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .classify import (
    ChaosRefused, band_containment, catalog_limit_cycles, chaos_check, classify_decomposition,
    classify_regular, sphere_decomposition,
)
from .field import PiecewiseField, Visibility, find_tangencies, trig_field
from .flow import (
    DeterministicLeft, DeterministicRight, DYNAMICAL_EVENTS, IntegrationOptions, fold_return_gap,
    integrate,
)
from .manifold import ManifoldModel, quotient_distance
from .maps import NoReturn, NotFound, Section, displacement_roots
from .scenarios import PRESETS, Scenario

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 1, 2, 3
SCHEMA_DIR = Path(__file__).parent / "schemas"
CLOSURE_TOL = 1e-7

# section -> key -> (type, default); type "any" keeps the raw literal
CONFIG_SPEC: Dict[str, Dict[str, tuple]] = {
    "run": {"seed": (int, 0)},
    "scenario": {"name": (str, "chaotic-torus"), "model": (str, "")},
    "integration": {"rel_tol": (float, 1e-10), "abs_tol": (float, 1e-12), "max_step": (float, 0.05),
                    "t_max": (float, 100.0), "event_tol": (float, 1e-10), "pole_tol": (float, 1e-9),
                    "max_events": (int, 1_000_000)},
    "simulate": {"x0": (float, 0.1), "y0": (float, 0.3), "t_max": (float, 50.0),
                 "direction": (str, "forward"), "branch": (str, "right")},
    "classify": {"kind": (str, "auto"), "n_returns": (int, 1000), "n_grid": (int, 2048),
                 "band_samples": (int, 100), "band_t_end": (float, 50.0)},
    "return_map": {"section": (str, "auto"), "n_grid": (int, 512)},
    "chaos": {"samples": (int, 200), "tau_hit": (float, 1e-4), "radius": (float, 0.05),
              "eps": (float, 1e-3), "t_transit": (float, 60.0), "t_sensitivity": (float, 20.0),
              "sensitivity_points": (int, 0)},
    "sphere": {"samples": (int, 50), "tau_hit": (float, 1e-4), "mc_samples": (int, 200)},
    "sweep": {"target": (str, "classify"), "param": (str, ""), "start": (float, 0.0),
              "stop": (float, 0.0), "num": (int, 0), "param2": (str, ""), "start2": (float, 0.0),
              "stop2": (float, 0.0), "num2": (int, 0), "workers": (int, 1),
              "refine_tol": (float, 1e-6), "gap_tol": (float, 1e-9)},
    "output": {"dir": (str, "out")},
}
FREE_SECTIONS = ("params",)
FIELD_SECTIONS = ("plus", "minus")
FIELD_KEYS = ("v1_x", "v2_x", "v1_y", "v2_y")
COMMANDS = ("simulate", "classify", "return-map", "chaos-check", "sphere-decompose", "sweep",
            "print-config")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


# ---------------------------------------------------------------------------
# config


def parse_value(text: str):
    """Literal from a config value: int, float, JSON, else the raw string."""
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def default_config() -> dict:
    cfg = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in CONFIG_SPEC.items()}
    cfg["params"] = {}
    return cfg


def _coerce(section: str, key: str, raw):
    typ, _ = CONFIG_SPEC[section][key]
    try:
        if typ is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: expected {typ.__name__}, got {raw!r}") from None


def config_from_mapping(data: dict) -> dict:
    """Merge a nested mapping over the defaults; unknown sections or keys are rejected."""
    cfg = default_config()
    for sec, entries in data.items():
        if not isinstance(entries, dict):
            raise ConfigError(f"section [{sec}] must hold key = value pairs")
        if sec in FREE_SECTIONS:
            cfg[sec].update({k: v if not isinstance(v, str) else parse_value(v) for k, v in entries.items()})
        elif sec in FIELD_SECTIONS:
            bad = set(entries) - set(FIELD_KEYS)
            if bad:
                raise ConfigError(f"[{sec}] unknown keys: {', '.join(sorted(bad))}")
            cfg[sec] = {k: v if not isinstance(v, str) else parse_value(v) for k, v in entries.items()}
        elif sec in CONFIG_SPEC:
            for k, v in entries.items():
                if k not in CONFIG_SPEC[sec]:
                    raise ConfigError(f"[{sec}] unknown key {k!r}")
                cfg[sec][k] = _coerce(sec, k, v)
        else:
            raise ConfigError(f"unknown section [{sec}]")
    return cfg


def load_config(path: Optional[str]) -> dict:
    """Read an INI config or the ``config`` block of a run manifest."""
    if path is None:
        return default_config()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return config_from_mapping(data.get("config", data))
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(p))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return config_from_mapping({s: dict(cp[s]) for s in cp.sections()})


def config_to_ini(cfg: dict) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec, entries in cfg.items():
        cp[sec] = {k: json.dumps(v) if isinstance(v, (dict, list)) else str(v) for k, v in entries.items()}
    lines = []
    for sec in cp.sections():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {v}" for k, v in cp[sec].items())
        lines.append("")
    return "\n".join(lines)


def apply_overrides(cfg: dict, scenario: Optional[str], params: List[str], out: Optional[str]) -> dict:
    if scenario:
        cfg["scenario"]["name"] = scenario
    for item in params or ():
        if "=" not in item:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg["params"][k.strip()] = parse_value(v)
    if out:
        cfg["output"]["dir"] = out
    env = os.environ.get("FILIPPOV_SEED")
    if env is not None:
        try:
            cfg["run"]["seed"] = int(env)
        except ValueError:
            raise ConfigError(f"FILIPPOV_SEED must be an integer, got {env!r}") from None
    return cfg


def integration_options(cfg: dict) -> IntegrationOptions:
    try:
        return IntegrationOptions(**cfg["integration"])
    except ValueError as exc:
        raise ConfigError(f"[integration] {exc}") from None


def build_scenario(cfg: dict) -> Scenario:
    """Named preset with ``[params]``, or an inline field from ``[plus]``/``[minus]``."""
    name = cfg["scenario"]["name"]
    model = cfg["scenario"]["model"] or None
    params = dict(cfg["params"])
    try:
        if name == "inline":
            if "plus" not in cfg or "minus" not in cfg:
                raise ConfigError("inline scenario needs [plus] and [minus] sections")
            m = ManifoldModel.parse(model or "torus")
            up = {k: cfg["plus"].get(k) for k in FIELD_KEYS}
            lo = {k: cfg["minus"].get(k) for k in FIELD_KEYS}
            up = trig_field(up["v1_x"] or 0.0, up["v2_x"] or 0.0, up["v1_y"], up["v2_y"])
            lo = trig_field(lo["v1_x"] or 0.0, lo["v2_x"] or 0.0, lo["v1_y"], lo["v2_y"])
            sc = Scenario("inline", {"model": m.value}, lambda: PiecewiseField(up, lo, m))
            sc.field()
            return sc
        if name not in PRESETS:
            raise ConfigError(f"unknown scenario {name!r}; known: inline, {', '.join(sorted(PRESETS))}")
        builder = PRESETS[name]
        sig = inspect.signature(builder)
        bad = set(params) - set(sig.parameters)
        if bad:
            raise ConfigError(f"[params] not accepted by {name}: {', '.join(sorted(bad))}")
        if model is not None:
            if "model" not in sig.parameters:
                raise ConfigError(f"scenario {name} fixes its own model")
            params["model"] = model
        sc = builder(**params)
        sc.field()
        return sc
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"scenario {name}: {exc}") from None


# ---------------------------------------------------------------------------
# output helpers


def jsonable(v):
    """Plain JSON data; non-finite floats become null."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if hasattr(v, "to_dict"):
        return jsonable(v.to_dict())
    if hasattr(v, "value") and not isinstance(v, (int, str, bool)):
        return v.value
    return v


def _versions() -> dict:
    out = {"python": platform.python_version(), "platform": platform.platform()}
    for pkg in ("artifact", "numpy", "scipy", "sympy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


class Writer:
    """Collects output files and writes the manifest last."""

    def __init__(self, cfg: dict, command: str):
        self.dir = Path(cfg["output"]["dir"])
        self.cfg = cfg
        self.command = command
        self.files: Dict[str, str] = {}
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IOError(f"cannot create output directory {self.dir}: {exc}") from exc

    def text(self, name: str, content: str):
        path = self.dir / name
        path.write_text(content)
        self.files[name] = hashlib.sha256(content.encode()).hexdigest()

    def json(self, name: str, data):
        self.text(name, json.dumps(jsonable(data), indent=1, sort_keys=True) + "\n")

    def manifest(self, opts: IntegrationOptions, summary: Optional[dict] = None):
        self.json("manifest.json", {
            "command": self.command, "config": self.cfg, "seed": self.cfg["run"]["seed"],
            "tolerances": opts.to_dict(), "versions": _versions(), "outputs": dict(self.files),
            "summary": summary or {}})


def _report(cfg, scenario: Scenario, opts: IntegrationOptions, command: str, body) -> dict:
    return {"command": command, "scenario": scenario.to_dict(), "options": opts.to_dict(),
            "seed": cfg["run"]["seed"], "report": jsonable(body)}


# ---------------------------------------------------------------------------
# commands


def closure(events, tol: float = CLOSURE_TOL) -> Optional[dict]:
    """First return of the orbit to its first dynamical event, if any."""
    dyn = [e for e in events if e.kind in DYNAMICAL_EVENTS]
    if not dyn:
        return None
    e0 = dyn[0]
    for k, e in enumerate(dyn[1:], start=1):
        if e.kind is e0.kind and e.detail == e0.detail and quotient_distance(e.location, e0.location) <= tol:
            return {"period": e.t - e0.t, "events_per_period": k, "at": e0.to_dict(),
                    "closure_error": quotient_distance(e.location, e0.location)}
    return None


def cmd_simulate(cfg: dict) -> dict:
    sc = build_scenario(cfg)
    s = cfg["simulate"]
    if s["direction"] not in ("forward", "backward"):
        raise ConfigError("[simulate] direction must be forward or backward")
    if s["branch"] not in ("right", "left"):
        raise ConfigError("[simulate] branch must be right or left")
    opts = replace(integration_options(cfg), t_max=s["t_max"])
    X = sc.field()
    policy = DeterministicRight if s["branch"] == "right" else DeterministicLeft
    tr = integrate(X, (s["x0"], s["y0"]), opts, s["direction"], policy)
    w = Writer(cfg, "simulate")
    w.text("trajectory.csv", tr.to_csv())
    w.text("events.jsonl", tr.events_jsonl())
    summary = {"scenario": sc.name, "t_end": tr.t_end, "final_event": tr.final_event,
               "event_counts": {}, "closed_orbit": closure(tr.events)}
    for e in tr.events:
        summary["event_counts"][e.kind.value] = summary["event_counts"].get(e.kind.value, 0) + 1
    w.json("summary.json", _report(cfg, sc, opts, "simulate", summary))
    w.manifest(opts, jsonable(summary))
    return summary


def cmd_classify(cfg: dict) -> dict:
    sc = build_scenario(cfg)
    c = cfg["classify"]
    opts = integration_options(cfg)
    X = sc.field()
    kind = c["kind"]
    if kind == "auto":
        kind = "regular" if sc.name == "regular" else "decompose"
    if kind == "regular":
        if sc.name != "regular":
            raise ConfigError("[classify] kind = regular needs the regular scenario")
        p = sc.params
        rep = classify_regular(cfg["params"].get("a", p["a"]), cfg["params"].get("b", p["b"]),
                               p["s1"], p["s2"], X.model, c["n_returns"], opts)
        body = rep.to_dict()
    elif kind == "decompose":
        body = classify_decomposition(X, c["n_grid"]).to_dict()
    elif kind in ("limit-cycles", "band"):
        rep = catalog_limit_cycles(X, opts=opts)
        rep.details.pop("scan", None)
        body = rep.to_dict()
        if kind == "band":
            bands = rep.details["minimal_bands"]
            body["band_containment"] = [band_containment(X, b, c["band_samples"], c["band_t_end"],
                                                         cfg["run"]["seed"], opts=opts) for b in bands]
    else:
        raise ConfigError(f"[classify] unknown kind {kind!r}")
    body["kind"] = kind
    w = Writer(cfg, "classify")
    w.json("classify.json", _report(cfg, sc, opts, "classify", body))
    summary = {"verdict": body["verdict"], "kind": kind}
    w.manifest(opts, summary)
    return body


def cmd_return_map(cfg: dict) -> dict:
    sc = build_scenario(cfg)
    r = cfg["return_map"]
    opts = integration_options(cfg)
    X = sc.field()
    if r["section"] == "auto":
        rep = catalog_limit_cycles(X, opts=opts, n_grid=r["n_grid"])
    else:
        try:
            sec = Section(r["section"])
        except ValueError:
            raise ConfigError(f"[return_map] unknown section {r['section']!r}") from None
        rep = catalog_limit_cycles(X, sec, opts, r["n_grid"])
    scan = rep.details.pop("scan")
    body = rep.to_dict()
    body["scan"] = scan.to_dict()
    w = Writer(cfg, "return-map")
    rows = ["coord,d"] + [f"{g!r},{'' if d is None else repr(d)}" for g, d in zip(scan.grid, scan.d)]
    w.text("displacement.csv", "\n".join(rows) + "\n")
    w.json("return_map.json", _report(cfg, sc, opts, "return-map", body))
    w.manifest(opts, {"verdict": body["verdict"], "roots": len(scan.roots)})
    return body


def cmd_chaos_check(cfg: dict) -> dict:
    sc = build_scenario(cfg)
    c = cfg["chaos"]
    opts = integration_options(cfg)
    diag = chaos_check(sc.field(), c["samples"], cfg["run"]["seed"], c["tau_hit"], c["radius"], c["eps"],
                       c["t_transit"], c["t_sensitivity"], c["sensitivity_points"] or None, opts)
    body = diag.to_dict()
    w = Writer(cfg, "chaos-check")
    w.json("chaos.json", _report(cfg, sc, opts, "chaos-check", body))
    w.manifest(opts, {"through_p_star_fraction": diag.through_p_star_fraction,
                      "witnesses": len(diag.transitivity_witnesses),
                      "sensitivity_passed": diag.sensitivity[2]})
    return body


def cmd_sphere_decompose(cfg: dict) -> dict:
    sc = build_scenario(cfg)
    s = cfg["sphere"]
    opts = integration_options(cfg)
    X = sc.field()
    if X.model is not ManifoldModel.SPHERE:
        raise ConfigError("sphere-decompose needs a sphere model")
    rep = sphere_decomposition(X, s["samples"], cfg["run"]["seed"], s["tau_hit"], s["mc_samples"], opts)
    body = rep.to_dict()
    w = Writer(cfg, "sphere-decompose")
    rows = ["orbit,t,x,y"]
    for i, tr in enumerate(rep.boundary_orbits):
        rows.extend(f"{i},{t!r},{x!r},{y!r}" for _, (t, x, y) in tr.iter_samples())
    w.text("boundary_orbits.csv", "\n".join(rows) + "\n")
    w.json("sphere.json", _report(cfg, sc, opts, "sphere-decompose", body))
    w.manifest(opts, {"bands": len(rep.M_h_bands), "M_c_sample_fraction": rep.M_c_sample_fraction})
    return body


# sweep


def sweep_point(cfg: dict, values: dict) -> dict:
    """Verdict and key statistics at one parameter point; failures are recorded, not raised."""
    c = json.loads(json.dumps(cfg))
    c["params"].update(values)
    row = {"params": values, "verdict": "error", "stats": {}, "error": None}
    try:
        sc = build_scenario(c)
        X = sc.field()
        target = c["sweep"]["target"]
        if target == "classify":
            if sc.name == "regular":
                rep = classify_regular(sc.params["a"], sc.params["b"], sc.params["s1"], sc.params["s2"],
                                       X.model, c["classify"]["n_returns"], integration_options(c))
            else:
                rep = classify_decomposition(X, c["classify"]["n_grid"])
            row["verdict"] = rep.verdict
            row["stats"] = {e.name: e.value for e in rep.evidence
                            if isinstance(e.value, (int, float)) and not isinstance(e.value, bool)}
            if sc.notes:
                row["stats"]["notes"] = "; ".join(sc.notes)
        elif target == "fold-gap":
            folds = [t for s in X.sigmas for t in find_tangencies(X, s)[0]
                     if t.visibility is Visibility.VISIBLE]
            if not folds:
                raise ValueError("no visible fold")
            gap = fold_return_gap(X, folds[0], 1.0, integration_options(c))
            if math.isnan(gap):
                raise ValueError("fold orbit does not turn back")
            tol = c["sweep"]["gap_tol"]
            row["verdict"] = "connection" if abs(gap) <= tol else ("gap+" if gap > 0 else "gap-")
            row["stats"] = {"gap": gap, "fold_x": folds[0].x, "fold_sigma": folds[0].sigma_id.value}
        else:
            raise ConfigError(f"[sweep] unknown target {target!r}")
    except ConfigError:
        raise
    except Exception as exc:  # per-point failures are part of the table
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sweep_task(args):
    cfg, values = args
    try:
        return sweep_point(cfg, values)
    except ConfigError as exc:
        return {"params": values, "verdict": "error", "stats": {}, "error": f"ConfigError: {exc}"}


def _axis(start, stop, num) -> List[float]:
    return [float(v) for v in np.linspace(start, stop, num)] if num > 0 else []


def refine_transition(cfg: dict, fixed: dict, name: str, lo: float, hi: float, v_lo: str,
                      tol: float) -> dict:
    """Bisect on the verdict between two grid points until the bracket is below ``tol``."""
    n = 0
    while hi - lo > tol and n < 200:
        mid = 0.5 * (lo + hi)
        v = sweep_point(cfg, dict(fixed, **{name: mid}))["verdict"]
        if v == v_lo:
            lo = mid
        else:
            hi = mid
        n += 1
    return {"bracket": [lo, hi], "estimate": 0.5 * (lo + hi), "bisections": n}


def cmd_sweep(cfg: dict) -> dict:
    s = cfg["sweep"]
    if not s["param"]:
        raise ConfigError("[sweep] param is required")
    if s["target"] not in ("classify", "fold-gap"):
        raise ConfigError(f"[sweep] unknown target {s['target']!r}")
    if s["workers"] < 1:
        raise ConfigError("[sweep] workers must be at least 1")
    if s["num"] > 0:
        build_scenario(json.loads(json.dumps(dict(cfg, params=dict(cfg["params"], **{s["param"]: s["start"]})))))
    opts = integration_options(cfg)
    xs = _axis(s["start"], s["stop"], s["num"])
    ys = _axis(s["start2"], s["stop2"], s["num2"]) if s["param2"] else [None]
    points = []
    for y in ys:
        for x in xs:
            v = {s["param"]: x}
            if y is not None:
                v[s["param2"]] = y
            points.append(v)
    tasks = [(cfg, p) for p in points]
    if s["workers"] > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=s["workers"]) as ex:
            rows = list(ex.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    for i, r in enumerate(rows):
        r["index"] = i
    transitions = []
    nx = len(xs)
    for j, y in enumerate(ys):
        line = rows[j * nx:(j + 1) * nx]
        for a, b in zip(line, line[1:]):
            if a["error"] or b["error"] or a["verdict"] == b["verdict"]:
                continue
            fixed = {} if y is None else {s["param2"]: y}
            t = refine_transition(cfg, fixed, s["param"], a["params"][s["param"]],
                                  b["params"][s["param"]], a["verdict"], s["refine_tol"])
            t.update({"between": [a["index"], b["index"]], "verdicts": [a["verdict"], b["verdict"]],
                      "fixed": fixed})
            transitions.append(t)
    body = {"param": s["param"], "param2": s["param2"] or None, "target": s["target"], "rows": rows,
            "transitions": transitions}
    w = Writer(cfg, "sweep")
    names = [s["param"]] + ([s["param2"]] if s["param2"] else [])
    stat_keys = sorted({k for r in rows for k, v in r["stats"].items() if not isinstance(v, str)})
    lines = [",".join(["index"] + names + ["verdict"] + stat_keys + ["error"])]
    for r in rows:
        cells = [str(r["index"])] + [repr(r["params"][n]) for n in names] + [_csv_cell(r["verdict"])]
        cells += [repr(r["stats"][k]) if k in r["stats"] else "" for k in stat_keys]
        cells.append(_csv_cell(r["error"] or ""))
        lines.append(",".join(cells))
    w.text("sweep.csv", "\n".join(lines) + "\n")
    scenario = {"name": cfg["scenario"]["name"], "params": jsonable(cfg["params"])}
    w.json("sweep.json", {"command": "sweep", "scenario": scenario, "options": opts.to_dict(),
                          "seed": cfg["run"]["seed"], "report": jsonable(body)})
    w.manifest(opts, {"rows": len(rows), "transitions": [t["estimate"] for t in transitions]})
    return body


def _csv_cell(s: str) -> str:
    return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s) else s


HANDLERS = {"simulate": cmd_simulate, "classify": cmd_classify, "return-map": cmd_return_map,
            "chaos-check": cmd_chaos_check, "sphere-decompose": cmd_sphere_decompose, "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="filippov", description="Piecewise smooth flows on the torus and sphere.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "print-config":
            continue
        p.add_argument("--config", "-c", help="INI config file, or a manifest.json to replay")
        p.add_argument("--scenario", help="scenario name (overrides [scenario] name)")
        p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                       help="scenario parameter (repeatable)")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        if name == "sweep":
            p.add_argument("--workers", type=int, help="concurrent sweep points")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "print-config":
        sys.stdout.write(config_to_ini(default_config()))
        return 0
    try:
        cfg = apply_overrides(load_config(args.config), args.scenario, args.param, args.out)
        if getattr(args, "workers", None) is not None:
            cfg["sweep"]["workers"] = args.workers
        integration_options(cfg)
        result = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChaosRefused, NotFound, NoReturn, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    brief = {k: result[k] for k in ("verdict", "closed_orbit", "final_event", "transitions") if k in result}
    print(json.dumps(jsonable(brief)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
