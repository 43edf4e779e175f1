"""Command-line experiment runner.

Every subcommand reads a JSON config (validated against a schema that
rejects unknown keys), writes CSV/JSON/.dat files to ``--out`` and echoes
the config into its summary.  Exit codes: 0 pass, 2 tolerance failure,
3 invalid config.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InvalidArgument, ResourceLimit

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 2, 3

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 1}
_FUNC = {"type": "object"}
_PGRID = {
    "type": "object",
    "properties": {"min": _NUM, "max": _NUM, "n": {"type": "integer", "minimum": 3}},
    "required": ["min", "max", "n"],
    "additionalProperties": False,
}
_U0 = {
    "type": "object",
    "properties": {"kind": {"enum": ["abs", "min_abs", "linear", "zero", "cos"]}, "cap": _POS, "p": _NUM, "amp": _NUM},
    "required": ["kind"],
    "additionalProperties": False,
}
_MODEL = {
    "model": {"enum": ["onedexample", "fourpath", "convex_single", "nonconvex_single", "nonconvex_pair", "custom"]},
    "f": _FUNC,
    "a": _POS,
    "b": _POS,
    "theta": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
    "k": _POS,
    "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "hamiltonian": {"type": "object"},
    "cell_n": _INT,
    "p_window": _POS,
    "n_p": {"type": "integer", "minimum": 3},
}
_RUN = {
    "gamma": _POS,
    "T": _POS,
    "u0": _U0,
    "window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
    "periodic_cell": {"type": "boolean"},
    "cell_nodes": _INT,
    "dx": _POS,
    "dt_split": _POS,
    "seed": {"type": "integer", "minimum": 0},
}


def _schema(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMAS = {
    "effective": _schema({
        "kind": {"enum": ["simplecell", "onedexample", "fourpath", "appendixB", "numeric"]},
        "f": _FUNC, "a": _POS, "b": _POS, "s": _MODEL["s"], "theta": _MODEL["theta"], "k": _POS,
        "p": _PGRID, "cell_n": _INT, "T1": _POS, "T2": _POS, "tolerance": _POS, "hamiltonian": {"type": "object"},
        "xi": {"type": "array", "items": _NUM},
    }, ["kind"]),
    "corrector": _schema({
        "s": _MODEL["s"], "theta": _MODEL["theta"], "k": _POS,
        "p": {"oneOf": [_PGRID, {"type": "array", "items": _NUM, "minItems": 1}]},
        "n_y": _INT, "tolerance": _POS,
    }, ["s", "p"]),
    "simulate": _schema({
        **_MODEL, **_RUN, "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "n_snapshots": _INT, "ballistic": {"type": "boolean"},
        "probes": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
    }, ["epsilon", "gamma"]),
    "ensemble": _schema({
        **_MODEL, **_RUN, "epsilons": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}, "minItems": 1},
        "solver": {"enum": ["scaled", "intermediate"]}, "reference": {"enum": ["effective", "none"]},
        "N": _INT, "probes": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}, "minItems": 1},
        "max_work": _POS, "scale_probes": {"type": "boolean"},
    }, ["epsilons", "gamma", "N", "probes"]),
    "rate": _schema({
        **_MODEL, **_RUN, "epsilons": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}, "minItems": 3},
        "n_seeds": _INT, "interior": _POS, "n_snapshots": _INT, "min_exponent": _NUM,
    }, ["epsilons", "gamma"]),
    "verify": _schema({
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 11}},
        "n_trials": _INT, "n_p": {"type": "integer", "minimum": 10}, "numeric": {"type": "boolean"},
        "s_values": {"type": "array", "items": _MODEL["s"], "minItems": 1},
    }),
}


class ConfigError(Exception):
    pass


def load_config(command: str, path: str | None) -> dict:
    """Read and validate a config; a missing path means the empty config."""
    cfg: dict = {}
    if path is not None:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    return cfg


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def _write_dat(path: Path, header: str, columns) -> None:
    with open(path, "w") as fh:
        fh.write("# " + header + "\n")
        for row in zip(*columns):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _pgrid(cfg: dict, default=(-3.0, 3.0, 61)) -> np.ndarray:
    g = cfg.get("p", {"min": default[0], "max": default[1], "n": default[2]})
    if isinstance(g, list):
        return np.asarray(g, dtype=float)
    return np.linspace(g["min"], g["max"], g["n"])


# --------------------------------------------------------------------------
# subcommands


def cmd_effective(cfg: dict, out: Path, args) -> int:
    from .effective import (
        EffectiveTable, cell_numeric, effective_Hs, fourpath_formulas, onedexample_formulas, simplecell, thresholds,
        walsh_decompose,
    )
    from .hamiltonians import GradientPart, HamiltonianSpec, Term, build_nonconvex_F, sawtooth
    from .problems import build_model, function_from_config

    kind = cfg["kind"]
    p = _pgrid(cfg)
    tol = float(cfg.get("tolerance", 0.0))
    cell_n, T1, T2 = int(cfg.get("cell_n", 256)), float(cfg.get("T1", 20.0)), float(cfg.get("T2", 40.0))
    summary: dict = {"config": cfg, "command": "effective"}
    tables: dict[str, EffectiveTable] = {}
    numeric_spec = None
    exact = None
    if kind == "simplecell":
        f = function_from_config(cfg.get("f"))
        exact = np.asarray(simplecell(f, p))
        tables["simplecell"] = EffectiveTable(p, exact, "simplecell", meta={"f": f.to_dict()})
        numeric_spec, xi = HamiltonianSpec(1, 1, (Term(GradientPart("eikonal"), None, 0), Term(None, f, 0))), [1.0]
    elif kind == "onedexample":
        f = function_from_config(cfg.get("f"))
        H1, H2 = onedexample_formulas(f, p)
        tables["H1"] = EffectiveTable(p, H1, "onedexample", meta={"subset": [0]})
        tables["H2"] = EffectiveTable(p, H2, "onedexample", meta={"subset": [1]})
        dec = walsh_decompose(build_model({"model": "onedexample", "f": f.to_dict()}).cube(p), p)
        summary["walsh_vs_formula"] = max(float(np.max(np.abs(dec.coefficients[(0,)] - H1))),
                                          float(np.max(np.abs(dec.coefficients[(1,)] - H2))))
    elif kind == "fourpath":
        f = function_from_config(cfg.get("f"))
        a, b = float(cfg.get("a", math.sqrt(1.5))), float(cfg.get("b", math.sqrt(0.5)))
        for name, vals in fourpath_formulas(f, a, b, p).items():
            tables[name] = EffectiveTable(p, vals, "fourpath", meta={"a": a, "b": b})
    elif kind == "appendixB":
        s = float(cfg.get("s", 0.3))
        F = build_nonconvex_F(*cfg.get("theta", [1.5, 1.0, 0.5]), k=cfg.get("k", 1.0))
        exact = np.asarray(effective_Hs(F, s, p))
        th = thresholds(F, s)
        tables["Hs"] = EffectiveTable(p, exact, "appendixB", meta={"s": s, "thresholds": th})
        summary["thresholds"] = th
        numeric_spec = HamiltonianSpec(1, 2, (Term(GradientPart("function", F), None, 0), Term(None, sawtooth(s), 1)))
        xi = [1.0, -1.0]
    else:
        if "hamiltonian" not in cfg:
            raise InvalidArgument("kind 'numeric' needs a 'hamiltonian' block")
        numeric_spec = HamiltonianSpec.from_dict(cfg["hamiltonian"])
        xi = cfg.get("xi", [1.0] * numeric_spec.m)
    status = EXIT_OK
    if kind == "numeric" or (args.check and numeric_spec is not None):
        res = cell_numeric(numeric_spec, xi, p, n=cell_n, T1=T1, T2=T2)
        tables["numeric"] = EffectiveTable(p, res.lam, "numeric", meta={"n": cell_n, "T1": T1, "T2": T2})
        summary["numeric_error_estimate"] = float(np.max(res.error))
        if exact is not None:
            dev = float(np.max(np.abs(res.lam - exact)))
            allowed = max(tol, 2.0 / cell_n, float(np.max(res.error)))
            summary["check"] = {"max_deviation": dev, "allowed": allowed, "passed": dev <= allowed}
            print(f"max |numeric - closed form| = {dev:.3e} (allowed {allowed:.3e})")
            if dev > allowed:
                status = EXIT_TOLERANCE
    elif args.check:
        print("no closed form to check against for this kind")
    for name, tab in tables.items():
        path = out / f"effective_{name}.csv"
        tab.to_csv(path, header={"config": cfg})
        _write_dat(out / f"effective_{name}.dat", "p value", (tab.p, tab.values))
    summary["tables"] = sorted(tables)
    summary["exit_code"] = status
    _write_json(out / "summary.json", summary)
    return status


def cmd_corrector(cfg: dict, out: Path, args) -> int:
    from .effective import corrector_Hs, verify_corrector
    from .hamiltonians import build_nonconvex_F

    s = float(cfg["s"])
    F = build_nonconvex_F(*cfg.get("theta", [1.5, 1.0, 0.5]), k=cfg.get("k", 1.0))
    ps = _pgrid(cfg)
    tol = float(cfg.get("tolerance", 1e-8))
    ny = int(cfg.get("n_y", 400))
    y = (np.arange(ny) + 0.5) / ny
    rows, ok = [], True
    with open(out / "corrector_profiles.csv", "w") as fh:
        fh.write("p,case,lambda,y,gradient\n")
        for q in ps:
            prof = corrector_Hs(F, s, float(q), reduce=True)
            rep = verify_corrector(prof, tol=tol)
            good = rep.passed(tol)
            ok = ok and good
            rows.append({"p": float(q), "case": prof.case, "lambda": prof.lam, "ode_residual": rep.ode_residual,
                         "mean_gradient_error": rep.mean_gradient_error, "jumps_admissible": rep.jump_admissibility,
                         "convention": rep.convention, "passed": good})
            for yy, g in zip(y, prof(y)):
                fh.write(f"{float(q)!r},{prof.case},{prof.lam!r},{float(yy)!r},{float(g)!r}\n")
    with open(out / "corrector_report.csv", "w") as fh:
        keys = ["p", "case", "lambda", "ode_residual", "mean_gradient_error", "jumps_admissible", "passed"]
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(str(r[k]) for k in keys) + "\n")
    status = EXIT_OK if ok else EXIT_TOLERANCE
    _write_json(out / "summary.json", {"config": cfg, "command": "corrector", "results": rows, "passed": ok,
                                       "exit_code": status})
    return status


def _seed(cfg: dict, args) -> int:
    return int(args.seed if args.seed is not None else cfg.get("seed", 0))


def cmd_simulate(cfg: dict, out: Path, args) -> int:
    from .ensemble import evaluate
    from .fields import rescale
    from .pathwise import snapshots_to_csv, solve_scaled
    from .problems import build_grid, build_model

    model = build_model(cfg)
    eps, gamma, T = float(cfg["epsilon"]), float(cfg["gamma"]), float(cfg.get("T", 1.0))
    seed = _seed(cfg, args)
    nodes = int(cfg.get("cell_nodes", 64))
    if cfg.get("periodic_cell"):
        u0 = build_grid(cfg.get("u0"), None, eps / nodes, periodic_cell=eps)
    else:
        u0 = build_grid(cfg.get("u0"), cfg.get("window", [-2.0, 2.0]), eps / nodes)
    n_steps = int(math.ceil(T / eps ** (2 * gamma) - 1e-9))
    fld = model.field(n_steps, [seed, 0])
    snaps = solve_scaled(eps, gamma, model.spec, fld, u0, T, n_snapshots=int(cfg.get("n_snapshots", 4)), cell_nodes=nodes)
    snapshots_to_csv(snaps, out / "snapshots.csv")
    fld.to_csv(out / "field.csv")
    for i in range(fld.m):
        z = rescale(fld, i, eps, gamma)
        z.to_csv(out / f"zeta_{i}.csv")
    with open(out / "snapshots.dat", "w") as fh:
        fh.write("# x u  (one block per snapshot time)\n")
        for t, g in snaps:
            fh.write(f"# t = {t!r}\n")
            for x, v in zip(g.axis(0), g.values):
                fh.write(f"{float(x)!r} {float(v)!r}\n")
            fh.write("\n\n")
    summary = {"config": cfg, "command": "simulate", "seed": seed, "n_steps": n_steps,
               "times": [t for t, _ in snaps]}
    probes = cfg.get("probes", [[0.0, t] for t, _ in snaps])
    by_t = {float(t): g for t, g in snaps}
    scale = eps**gamma if cfg.get("ballistic") else 1.0
    values = []
    for x, t in probes:
        g = by_t.get(float(t))
        if g is None:
            raise InvalidArgument(f"probe time {t} is not a snapshot time")
        values.append(scale * float(evaluate(g, x)))
    summary["probes"] = [{"x": x, "t": t, "value": v} for (x, t), v in zip(probes, values)]
    summary["probe_scaling"] = "eps^gamma" if cfg.get("ballistic") else "none"
    if cfg.get("ballistic") and model.name == "nonconvex_single" and (cfg.get("u0") or {}).get("kind") == "linear":
        from .effective.nonconvex import ballistic_constant

        cbar = ballistic_constant(model.params["F"], model.params["s"], float(cfg["u0"].get("p", 1.0)))
        summary["ballistic_constant"] = cbar
    _write_dat(out / "probes.dat", "x t value", ([p[0] for p in probes], [p[1] for p in probes], values))
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_ensemble(cfg: dict, out: Path, args) -> int:
    from .ensemble import ks_statistic, run_ensemble

    seed = _seed(cfg, args)
    probes = [tuple(p) for p in cfg["probes"]]
    N = int(cfg["N"])
    base = {k: v for k, v in cfg.items() if k not in ("epsilons", "N", "probes", "reference", "max_work", "scale_probes", "seed")}
    summary: dict = {"config": cfg, "command": "ensemble", "master_seed": seed, "runs": []}
    ref = None
    if cfg.get("reference", "effective") == "effective":
        r = run_ensemble(dict(base, solver="effective"), N, seed + 1, probes, jobs=args.jobs, max_work=cfg.get("max_work"))
        r.to_csv(out / "ensemble_effective.csv")
        ref = r.values
        summary["reference"] = r.summary()
    ks_rows = []
    for eps in cfg["epsilons"]:
        r = run_ensemble(dict(base, epsilon=eps), N, seed, probes, jobs=args.jobs, max_work=cfg.get("max_work"))
        vals = r.values * (eps ** cfg["gamma"] if cfg.get("scale_probes") else 1.0)
        r.values = vals
        r.to_csv(out / f"ensemble_eps_{eps:.6g}.csv")
        entry = r.summary()
        entry["epsilon"] = eps
        if ref is not None:
            entry["ks"] = [ks_statistic(vals[:, k], ref[:, k]) for k in range(len(probes))]
            ks_rows.append([eps] + entry["ks"])
        summary["runs"].append(entry)
    if ks_rows:
        with open(out / "ks_table.csv", "w") as fh:
            fh.write(",".join(["epsilon"] + [f"ks_{k}" for k in range(len(probes))]) + "\n")
            for row in ks_rows:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        _write_dat(out / "ks_table.dat", "epsilon ks_0 ...", list(zip(*ks_rows)))
        summary["ks_table"] = ks_rows
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_rate(cfg: dict, out: Path, args) -> int:
    from .effective import walsh_decompose
    from .ensemble import homog_gap, rate_fit
    from .fields import sample_seed
    from .problems import build_grid, build_model

    model = build_model(cfg)
    gamma, T = float(cfg["gamma"]), float(cfg.get("T", 1.0))
    seed = _seed(cfg, args)
    P = float(cfg.get("p_window", 3.0))
    p = np.linspace(-P, P, int(cfg.get("n_p", 601)))
    dec = walsh_decompose(model.cube(p), p)
    nodes = int(cfg.get("cell_nodes", 64))
    gaps = []
    for eps in cfg["epsilons"]:
        u0 = build_grid(cfg.get("u0", {"kind": "min_abs"}), cfg.get("window", [-2.5, 2.5]), eps / nodes)
        n_steps = int(math.ceil(T / eps ** (2 * gamma) - 1e-9))
        vals = []
        for i in range(int(cfg.get("n_seeds", 1))):
            sd = sample_seed(seed, i)
            vals.append(homog_gap(eps, gamma, model.spec, dec, model.field(n_steps, sd), u0, T,
                                  signs=model.signs(n_steps, sd), n_snapshots=int(cfg.get("n_snapshots", 4)),
                                  interior=cfg.get("interior")))
        gaps.append(float(np.mean(vals)))
    exponent, r2 = rate_fit(cfg["epsilons"], gaps)
    print(f"fitted exponent {exponent:.4f} (r^2 = {r2:.4f})")
    status = EXIT_OK
    if "min_exponent" in cfg and exponent < cfg["min_exponent"]:
        status = EXIT_TOLERANCE
    with open(out / "rate.csv", "w") as fh:
        fh.write("epsilon,gap\n")
        for e, g in zip(cfg["epsilons"], gaps):
            fh.write(f"{float(e)!r},{g!r}\n")
    _write_dat(out / "rate.dat", "epsilon gap", (cfg["epsilons"], gaps))
    _write_json(out / "summary.json", {"config": cfg, "command": "rate", "epsilons": cfg["epsilons"], "gaps": gaps,
                                       "exponent": exponent, "r2": r2, "exit_code": status})
    return status


def cmd_verify(cfg: dict, out: Path, args) -> int:
    from . import suites

    suite = args.suite or "all"
    results = []
    if suite == "appendixB":
        ok, report = suites.appendix_b_battery(tuple(cfg.get("s_values", suites.APPENDIX_B_S)), int(cfg.get("n_p", 50)),
                                               numeric=bool(cfg.get("numeric", False)))
        results.append({"name": "appendixB", "passed": ok, "metrics": suites._plain(report)})
        print(f"{'PASS' if ok else 'FAIL'} appendixB")
    elif suite == "properties":
        report = suites.property_suite(int(cfg.get("n_trials", 200)))
        for name, r in report.items():
            print(f"{'PASS' if r['passed'] else 'FAIL'} {name}")
        results.append({"name": "properties", "passed": all(r["passed"] for r in report.values()),
                        "metrics": suites._plain(report)})
    elif suite in ("all", "criteria"):
        for res in suites.run_criteria(cfg.get("criteria"), jobs=args.jobs):
            results.append(res.to_dict())
    else:
        raise InvalidArgument(f"unknown suite {suite!r}; choose appendixB, properties or all")
    ok = all(r["passed"] for r in results)
    status = EXIT_OK if ok else EXIT_TOLERANCE
    _write_json(out / "summary.json", {"config": cfg, "command": "verify", "suite": suite, "results": results,
                                       "passed": ok, "exit_code": status})
    return status


COMMANDS = {
    "effective": cmd_effective,
    "corrector": cmd_corrector,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "rate": cmd_rate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixhj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for ensembles")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--check", action="store_true", help="compare numeric and closed-form values")
        sp.add_argument("--suite", default=None, help="verify: appendixB | properties | all")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg = load_config(args.command, args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        _write_json(out / "summary.json", {"command": args.command, "error": str(exc), "exit_code": EXIT_CONFIG})
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, out, args)
    except (InvalidArgument, ResourceLimit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_json(out / "summary.json", {"config": cfg, "command": args.command, "error": str(exc),
                                           "exit_code": EXIT_CONFIG})
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
