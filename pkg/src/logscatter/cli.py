"""Batch command line: experiment configs in, JSON reports and CSV traces out.

Usage::

    logscatter <command> --config cfg.json --out results/ [--seed N] [--tol X]

Exit status is 0 on success, 2 for configuration errors, 3 for numerical
non-convergence and 4 for property violations; failures also write
``error.json`` to the output directory.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import dyson, feynman, polylog, regularize
from .errors import DomainError, NonConvergenceError, PropertyViolation
from .jsonio import (DEVIATION_SCHEMA, MATRIX, MODEL_SCHEMA, U_SCHEMA, decode_deviation,
                     decode_matrix, decode_model, decode_u, dumps, encode,
                     expansion_to_dict, trace_csv)
from .linop import unitarity_defect
from .prodint import tail_bound

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_PROPERTY = 0, 2, 3, 4

_NUM = {"type": "number"}
_POINTS = {"type": "array", "items": {"type": "array", "items": _NUM,
                                      "minItems": 2, "maxItems": 2}}

SCHEMAS = {
    "oracle": {
        "type": "object",
        "properties": {"pairs": {"type": "integer", "minimum": 1},
                       "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                       "epsilons": {"type": "array", "items": _NUM},
                       "points": _POINTS, "tol": _NUM},
    },
    "dyson": {
        "type": "object", "required": ["model", "epsilon", "pmax", "points"],
        "properties": {"model": MODEL_SCHEMA, "epsilon": _NUM,
                       "pmax": {"type": "integer", "minimum": 1}, "points": _POINTS,
                       "tol": _NUM},
    },
    "polylog": {
        "type": "object", "required": ["model", "pmax"],
        "properties": {"model": MODEL_SCHEMA, "pmax": {"type": "integer", "minimum": 1},
                       "t": {"type": "array", "items": {"type": "number", "minimum": 1}},
                       "tau": {"type": "array", "items": {"type": "number", "maximum": -1}},
                       "tol": _NUM},
    },
    "limit": {
        "type": "object", "required": ["model", "epsilon"],
        "properties": {"model": MODEL_SCHEMA, "deviation": DEVIATION_SCHEMA,
                       "epsilon": _NUM,
                       "horizon": {"oneOf": [{"const": "auto"},
                                             {"type": "number", "minimum": 1}]},
                       "tol": _NUM},
    },
    "uv-limit": {
        "type": "object", "required": ["phi", "u", "epsilon"],
        "properties": {"phi": MATRIX, "u": U_SCHEMA, "epsilon": _NUM,
                       "K": {"type": "number", "minimum": 0},
                       "nu": {"type": "number", "exclusiveMinimum": 1}, "tol": _NUM},
    },
    "slope": {
        "type": "object", "required": ["example", "params", "L_grid"],
        "properties": {
            "example": {"enum": ["J", "vacpol", "vertex"]},
            "params": {"type": "object",
                       "properties": {"m": _NUM, "ell": _NUM,
                                      "q": {"type": "array", "items": _NUM,
                                            "minItems": 4, "maxItems": 4},
                                      "sigma": {"enum": [1, 2, 3, 4]},
                                      "tau": {"enum": [1, 2, 3, 4]},
                                      "mu": {"enum": [1, 2, 3, 4]}}},
            "L_grid": {"type": "array", "items": {"type": "number", "minimum": 1},
                       "minItems": 4},
            "spec": {"type": "object",
                     "properties": {"radial_nodes": {"type": "integer", "minimum": 4},
                                    "inner_nodes": {"type": "integer", "minimum": 4},
                                    "angular": {"type": "array", "minItems": 3,
                                                "maxItems": 3,
                                                "items": {"type": "integer",
                                                          "minimum": 4}}}},
        },
    },
    "axioms": {
        "type": "object", "required": ["deviation", "epsilon"],
        "properties": {"deviation": DEVIATION_SCHEMA, "epsilon": _NUM,
                       "t_grid": {"type": "array", "items": _NUM, "minItems": 3},
                       "tau_grid": {"type": "array", "items": _NUM, "minItems": 1}},
    },
    "scatter": {
        "type": "object", "required": ["model", "epsilon"],
        "properties": {"model": MODEL_SCHEMA, "deviation": DEVIATION_SCHEMA,
                       "epsilon": _NUM, "psi0": {"type": "array"},
                       "horizons": {"type": "array",
                                    "items": {"type": "number", "minimum": 1},
                                    "minItems": 1},
                       "tol": _NUM},
    },
}


class ConfigError(Exception):
    pass


def _write(out, name, text):
    (out / name).write_text(text)


def _tol(cfg, default):
    return float(cfg.get("tol", default))


# ---------------------------------------------------------------------------
# commands; each returns {filename: text}


def cmd_oracle(cfg, rng):
    eps_list = cfg.get("epsilons", [0.01, 0.1])
    points = cfg.get("points", [[3.0, -2.0], [10.0, -10.0]])
    rows, worst = [], 0.0
    for dim in cfg.get("dims", [2, 4]):
        for k in range(cfg.get("pairs", 20)):
            pair = dyson.random_pair(rng, dim)
            for eps in eps_list:
                for t, tau in points:
                    dev = float(np.linalg.norm(
                        dyson.classical_S(pair, eps, t, tau)
                        - dyson.solve_S(pair, eps, t, tau, _tol(cfg, 1e-12)), 2))
                    worst = max(worst, dev)
                    rows.append((dim, k, eps, t, tau, dev))
    report = {"max_deviation": worst, "cases": len(rows), "passed": worst < 1e-8}
    return {"oracle.json": dumps(report),
            "oracle.csv": trace_csv(rows, ("dim", "pair", "epsilon", "t", "tau",
                                           "deviation"))}


def cmd_dyson(cfg, rng):
    model = decode_model(cfg["model"], rng)
    eps, pmax, tol = cfg["epsilon"], cfg["pmax"], _tol(cfg, 1e-10)
    points, rows = [], []
    for t, tau in cfg["points"]:
        terms, int_norm = dyson.dyson_terms(model, pmax, t, tau, tol)
        partial = sum(term * eps ** p for p, term in enumerate(terms))
        exact = dyson.solve_S(model, eps, t, tau)
        points.append({"t": t, "tau": tau, "terms": terms, "partial_sum": partial,
                       "solve_S": exact, "int_norm_V": int_norm,
                       "series_parameter": abs(eps) * int_norm,
                       "deviation": float(np.linalg.norm(partial - exact, 2))})
        rows.extend((t, tau, p, float(np.linalg.norm(term, 2)))
                    for p, term in enumerate(terms))
    return {"dyson.json": dumps({"epsilon": eps, "pmax": pmax, "points": points}),
            "dyson.csv": trace_csv(rows, ("t", "tau", "p", "norm_S_p"))}


def cmd_polylog(cfg, rng):
    model = decode_model(cfg["model"], rng)
    pmax, tol = cfg["pmax"], _tol(cfg, 1e-10)
    out, rows, worst = {}, [], 0.0
    for side, key, default, anchor in (("plus", "t", [10.0, 100.0], 1.0),
                                       ("minus", "tau", [-10.0, -100.0], -1.0)):
        fn = polylog.recurse_plus if side == "plus" else polylog.recurse_minus
        exps = fn(model, pmax, tol)
        out[side] = [expansion_to_dict(e) for e in exps]
        for x in cfg.get(key, default):
            quad = dyson.dyson_terms(model, pmax, x, anchor, tol)[0] if side == "plus" \
                else dyson.dyson_terms(model, pmax, anchor, x, tol)[0]
            for e in exps:
                ref = quad[e.p]
                err = float(np.linalg.norm(polylog.eval_expansion(e, x) - ref, 2)
                            / max(np.linalg.norm(ref, 2), 1e-300))
                worst = max(worst, err)
                rows.append((side, e.p, x, err))
    out["max_relative_error"] = worst
    return {"polylog.json": dumps(out),
            "polylog.csv": trace_csv(rows, ("side", "p", "x", "relative_error"))}


def cmd_limit(cfg, rng):
    model = decode_model(cfg["model"], rng)
    df = decode_deviation(cfg.get("deviation", {"kind": "power_law"}), model)
    eps, tol = cfg["epsilon"], _tol(cfg, 1e-10)
    horizon = cfg.get("horizon", "auto")
    if horizon == "auto":
        res = regularize.limit_S(model, df, eps, tol)
        S, report = res.S_limit, res.as_dict()
        rows = res.side_reports["plus"].trace + res.side_reports["minus"].trace
        rows = sorted(rows, key=lambda r: (abs(r[0]), r[0]))
    else:
        F_decay = (abs(eps) * model.K, model.nu)
        rows, prev, T = [], None, 1.0
        while T <= horizon:
            cur = regularize.regularized_S(model, df, eps, T, -T, tol)
            diff = math.nan if prev is None else float(np.linalg.norm(cur - prev, 2))
            rows.append((T, diff, 2 * tail_bound(F_decay, T)))
            prev, T = cur, 2 * T
        S = regularize.regularized_S(model, df, eps, horizon, -horizon, tol)
        report = {"horizon": horizon, "unitarity_defect": unitarity_defect(S)}
    return {"limit.json": dumps({"S_limit": S, "report": report}),
            "trace.csv": trace_csv(rows)}


def cmd_uv_limit(cfg, rng):
    phi = decode_matrix(cfg["phi"])
    u = decode_u(cfg["u"], phi.shape[0])
    K = cfg.get("K", float(np.linalg.norm(getattr(u, "coef", np.zeros(1)), 2)))
    nu = cfg.get("nu", getattr(u, "power", 2.0))
    res = regularize.uv_limit(phi, u, cfg["epsilon"], _tol(cfg, 1e-10), decay=(K, nu),
                              vectorized=True)
    return {"uv_limit.json": dumps({"S_limit": res.S_limit, "report": res.as_dict()}),
            "trace.csv": trace_csv(res.report.trace)}


def cmd_slope(cfg, rng):
    p = cfg["params"]
    q = np.asarray(p.get("q", [0.0] * 4), dtype=float)
    ex = cfg["example"]
    F = feynman.make_integrand(ex, q, m=p.get("m"), ell=p.get("ell"),
                               sigma=p.get("sigma", 1), tau=p.get("tau", 1),
                               mu=p.get("mu", 1))
    spec = feynman.QuadratureSpec(**{k: (tuple(v) if k == "angular" else v)
                                     for k, v in cfg.get("spec", {}).items()})
    Ls = sorted(float(L) for L in cfg["L_grid"])
    vals = feynman.sphere_a1_series(F, Ls, spec)
    fit = feynman.extract_log_coefficient(list(zip(Ls, vals)))
    rows = []
    for L, a in zip(Ls, vals):
        entry = complex(np.atleast_2d(a)[0, 0])
        if ex == "vacpol":
            closed = feynman.closed_form_vacpol(L, q, p.get("sigma", 1), p.get("tau", 1),
                                                p["ell"])
            expected = np.pi ** 2 / 2 if p.get("sigma", 1) == p.get("tau", 1) else 0.0
        elif ex == "vertex":
            closed = feynman.closed_form_vertex(L, q, p.get("sigma", 1), p["ell"])
            expected = 2 * np.pi ** 2 * q[p.get("sigma", 1) - 1]
        else:
            closed = complex(feynman.closed_form_J_logpart(L, q, p.get("mu", 1), p["m"])[0, 0])
            expected = p["m"] / (8 * np.pi ** 2) * (-1 if p.get("mu", 1) == 4 else 1)
        # closed forms equal -a1 up to a vanishing remainder
        rows.append((L, entry.real, entry.imag, closed.real, closed.imag,
                     abs(entry + closed)))
    report = {"example": ex, "phi": fit.phi, "psi": fit.psi, "residual": fit.residual,
              "L_fit": fit.L, "expected_phi": expected,
              "phi_identity_component": complex(np.trace(fit.phi)) / fit.phi.shape[0]}
    return {"slope.json": dumps(report),
            "slope.csv": trace_csv(rows, ("L", "re_a1", "im_a1", "re_closed_form",
                                          "im_closed_form", "residual"))}


def cmd_axioms(cfg, rng):
    df = decode_deviation(cfg["deviation"])
    rep = regularize.check_deviation_axioms(
        df, cfg["epsilon"], cfg.get("t_grid", np.logspace(1, 4, 13).tolist()),
        cfg.get("tau_grid", [-2.0, 0.5, 3.0]))
    out = {"unitarity": rep.unitarity, "commutator": rep.commutator,
           "commutator_dense": rep.commutator_dense, "passed": rep.passed,
           "ok": rep.ok,
           "ratio_rates": {f"{'+' if s > 0 else '-'}inf,tau={tau:g}": r
                           for (s, tau), r in rep.ratio_rates.items()}}
    return {"axioms.json": dumps(out)}


def cmd_scatter(cfg, rng):
    model = decode_model(cfg["model"], rng)
    df = decode_deviation(cfg.get("deviation", {"kind": "power_law"}), model)
    if "psi0" in cfg:
        psi0 = np.asarray([complex(*v) if isinstance(v, list) else v for v in cfg["psi0"]])
    else:
        psi0 = rng.normal(size=model.dim) + 1j * rng.normal(size=model.dim)
        psi0 /= np.linalg.norm(psi0)
    horizons = cfg.get("horizons", [10.0, 100.0])
    res = regularize.scatter_states(model, df, cfg["epsilon"], psi0, horizons,
                                    _tol(cfg, 1e-10))
    states = [{"T": T, "psi_plus": pp, "psi_minus": pm, "residual": r}
              for T, (pp, pm, r) in zip(horizons, res)]
    return {"scatter.json": dumps({"psi0": psi0, "states": states}),
            "scatter.csv": trace_csv([(T, r) for T, (_, _, r) in zip(horizons, res)],
                                     ("T", "residual"))}


COMMANDS = {"oracle": cmd_oracle, "dyson": cmd_dyson, "polylog": cmd_polylog,
            "limit": cmd_limit, "uv-limit": cmd_uv_limit, "slope": cmd_slope,
            "axioms": cmd_axioms, "scatter": cmd_scatter}


def build_parser():
    ap = argparse.ArgumentParser(prog="logscatter", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="experiment config (JSON)")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for random models")
    ap.add_argument("--tol", type=float, help="override the config tolerance")
    return ap


def _load(args):
    if args.config is None:
        cfg = {}
    else:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if args.tol is not None:
        cfg["tol"] = args.tol
    try:
        jsonschema.validate(cfg, SCHEMAS[args.command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config does not match the {args.command} schema: "
                          f"{exc.message}") from exc
    return cfg


def run(argv=None):
    """Run one experiment; returns the exit status."""
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"logscatter: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    try:
        files = COMMANDS[args.command](cfg, rng)
    except (DomainError, KeyError, TypeError) as exc:
        status, kind, err = EXIT_CONFIG, "config", exc
    except NonConvergenceError as exc:
        status, kind, err = EXIT_NONCONV, "non_convergence", exc
    except PropertyViolation as exc:
        status, kind, err = EXIT_PROPERTY, "property_violation", exc
    else:
        for name, text in files.items():
            _write(out, name, text)
        return EXIT_OK
    diag = {"command": args.command, "error": kind, "message": str(err)}
    report = getattr(err, "report", None)
    if report is not None:
        diag["report"] = report.as_dict()
    _write(out, "error.json", dumps(encode(diag)))
    print(f"logscatter {args.command}: {kind}: {err}", file=sys.stderr)
    return status


def main(argv=None):
    sys.exit(run(argv))
