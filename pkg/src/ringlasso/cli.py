"""Command-line front end.

Commands: ``fit``, ``simulate``, ``reproduce-table1``, ``diagnose`` and
``bounds``.  Settings come from a JSON config file (``--config``) holding
``"version": 1`` plus the keys listed in :data:`SCHEMA` for the command;
unknown keys are rejected.  Exit status: 0 ok, 2 bad input, 3 a solver did
not converge (outputs are still written), 4 internal error.
"""

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

CONFIG_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_INTERNAL = 0, 2, 3, 4

# key -> default (None means required)
SCHEMA = {
    "fit": {"data": None, "penalty": None, "lambda": 1.0, "options": {}},
    "simulate": {"n": 20, "p": 20, "m": 25, "decay_rate": 0.4, "index_origin": 0,
                 "noise_sigma": 1.0},
    "reproduce-table1": {"n": 60, "p": 60, "m_values": [5, 25, 100], "replicates": 5,
                         "decay_rate": 0.4, "index_origin": 0, "noise_sigma": 1.0,
                         "target_rank": 8, "zero_tol": 0.01,
                         "count_basis": "coordinate"},
    "diagnose": {"data": None, "coef": None, "penalty": "ring", "lambda": 1.0,
                 "options": {}, "re": None},
    "bounds": {"bound": None, "inputs": {}},
}
COMMON = {"version", "seed"}


def load_config(command, path=None):
    """Parse and validate a config; returns a dict with defaults filled in
    and relative paths resolved against the config's directory."""
    from .exceptions import ConfigError

    raw, base = {}, Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        if raw.get("version") != CONFIG_VERSION:
            raise ConfigError(f"{path}: config version must be {CONFIG_VERSION}")
        base = path.parent
    schema = SCHEMA[command]
    unknown = set(raw) - set(schema) - COMMON
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg = {"version": CONFIG_VERSION, "seed": raw.get("seed", 0)}
    for key, default in schema.items():
        if key in raw:
            cfg[key] = raw[key]
        elif default is None and not (command == "diagnose" and key == "re"):
            raise ConfigError(f"config for {command} needs {key!r}")
        else:
            cfg[key] = default
    for key in ("data", "coef"):
        if isinstance(cfg.get(key), str):
            cfg[key] = str((base / cfg[key]).resolve())
    return cfg


def _options(penalty, lam, extra, seed):
    from .exceptions import ConfigError
    from .group import GroupOptions
    from .lassoes import LassoesOptions
    from .ring import RingOptions

    cls = {"lassoes": LassoesOptions, "group": GroupOptions, "ring": RingOptions}.get(penalty)
    if cls is None:
        raise ConfigError(f"penalty must be lassoes, group or ring, not {penalty!r}")
    if not isinstance(extra, dict):
        raise ConfigError("options must be an object")
    kw = dict(extra, lam=float(lam))
    if penalty == "ring":
        kw.setdefault("seed", seed)
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad {penalty} option: {exc}") from exc


def _fit(dataset, penalty, opts):
    from .group import fit_group
    from .lassoes import fit_lassoes
    from .ring import fit_ring

    return {"lassoes": fit_lassoes, "group": fit_group, "ring": fit_ring}[penalty](dataset, opts)


def cmd_fit(cfg, out, plots=True):
    import numpy as np

    from .io import read_dataset, write_coef, write_json
    from .plots import write_plot

    ds = read_dataset(cfg["data"])
    opts = _options(cfg["penalty"], cfg["lambda"], cfg["options"], cfg["seed"])
    B, report = _fit(ds, cfg["penalty"], opts)
    write_coef(B, out / "coef.csv")
    write_json({"penalty": cfg["penalty"], "options": opts.__dict__, "report": report.to_dict()},
               out / "report.json")
    if plots:
        write_plot(out / "objective.svg", report.objective, "objective", "iteration",
                   "objective")
        if cfg["penalty"] == "ring":
            write_plot(out / "singular_values.svg", np.linalg.svd(B, compute_uv=False),
                       "singular values", "index", "value", markers=True)
        elif cfg["penalty"] == "group":
            write_plot(out / "row_norms.svg", np.linalg.norm(B, axis=1), "row norms",
                       "variable", "norm", markers=True)
        else:
            write_plot(out / "task_l1.svg", np.abs(B).sum(axis=0), "task l1 norms",
                       "task", "norm", markers=True)
    return report.converged


def _sim_config(cfg, **extra):
    from .simgen import SimConfig

    keys = ("n", "p", "m", "decay_rate", "index_origin", "noise_sigma")
    kw = {k: cfg[k] for k in keys if k in cfg}
    kw.update(extra)
    return SimConfig(seed=int(cfg["seed"]), **kw)


def cmd_simulate(cfg, out, plots=True):
    import numpy as np

    from .io import write_coef, write_dataset, write_json
    from .plots import write_plot
    from .simgen import gen_decay

    sc = _sim_config(cfg)
    ds, truth = gen_decay(sc)
    write_dataset(ds, out / "dataset")
    write_coef(truth.coef, out / "truth_coef.csv")
    write_json({"config": sc.__dict__, "sigma": truth.sigma, "moment_bound": truth.moment_bound,
                "theoretical_r2": sc.theoretical_r2()}, out / "truth.json")
    if plots:
        write_plot(out / "coef_variance.svg", np.var(truth.coef, axis=1), "coefficient variance",
                   "variable", "variance", logy=True, markers=True)
    return True


def cmd_reproduce_table1(cfg, out, plots=True):
    from .io import write_table
    from .plots import write_plot
    from .simgen import run_table1

    sc = _sim_config(cfg, m=int(cfg["m_values"][0]))
    ring_kw = {"target_rank": cfg["target_rank"], "zero_tol": cfg["zero_tol"],
               "count_basis": cfg["count_basis"]}
    rows = run_table1(sc, [int(m) for m in cfg["m_values"]], int(cfg["replicates"]), ring_kw)
    write_table(out / "table1.csv", ["m", "L_par_mean", "L_par_sd", "L_pre_mean", "L_pre_sd"],
                [[r.m, r.L_par_mean, r.L_par_sd, r.L_pre_mean, r.L_pre_sd] for r in rows])
    write_table(out / "table1_replicates.csv", ["m", "replicate", "seed", "L_par", "L_pre"],
                [[r.m, k, sc.seed + k, x.L_par, x.L_pre]
                 for r in rows for k, x in enumerate(r.replicates)])
    if plots:
        write_plot(out / "table1_L_par.svg", [r.L_par_mean for r in rows], "mean L_par", "m",
                   "L_par", xs=[r.m for r in rows], markers=True)
    return True


def cmd_diagnose(cfg, out, plots=True):
    from .diagnostics import design_constants, re_constant
    from .exceptions import ConfigError
    from .group import group_kkt_residual
    from .io import read_coef, read_dataset, write_json
    from .lassoes import lassoes_kkt_residual
    from .ring import kkt_residuals

    ds = read_dataset(cfg["data"])
    B = read_coef(cfg["coef"], shape=(ds.p, ds.n))
    penalty, lam = cfg["penalty"], float(cfg["lambda"])
    opts = _options(penalty, lam, cfg["options"], cfg["seed"])
    result = {"penalty": penalty, "lambda": lam, "design": design_constants(ds)}
    if penalty == "ring":
        kkt = kkt_residuals(B, ds, lam)
        result["kkt"] = kkt.to_dict()
        ok = kkt.passes()
    else:
        res = (lassoes_kkt_residual(B, ds, opts) if penalty == "lassoes"
               else group_kkt_residual(B, ds, lam))
        scale = 1e-4 * (1 + max(abs(lam), 1.0))
        ok = bool(res.max() <= scale)
        result["kkt"] = {"residuals": res.tolist(), "tolerance": scale, "passes": ok}
    re = cfg.get("re")
    if re is not None:
        if not isinstance(re, dict) or set(re) - {"s", "c0", "q"}:
            raise ConfigError("re must be an object with keys s, c0, q")
        est = re_constant(ds.designs(), int(re.get("s", 1)), float(re.get("c0", 3.0)),
                          int(re.get("q", 1)), seed=int(cfg["seed"]))
        result["re"] = est.to_dict()
    result["kkt_passes"] = ok
    write_json(result, out / "diagnostics.json")
    print(f"KKT checks: {'pass' if ok else 'FAIL'}")
    return True


def cmd_bounds(cfg, out, plots=True):
    from . import bounds
    from .exceptions import ConfigError
    from .io import write_json

    table = {"lassoes_theorem1": bounds.bound_lassoes_theorem1,
             "lassoL1p": bounds.bound_lassoL1p, "L12merge2": bounds.bound_L12merge2,
             "ring": bounds.bound_ring, "persistence": bounds.bound_persistence}
    fn = table.get(cfg["bound"])
    if fn is None:
        raise ConfigError(f"bound must be one of {sorted(table)}")
    try:
        report = fn(**cfg["inputs"])
    except TypeError as exc:
        raise ConfigError(f"bad inputs for {cfg['bound']}: {exc}") from exc
    write_json(report.to_dict(), out / "bounds.json")
    print(json.dumps(report.to_dict(), sort_keys=True))
    return True


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "reproduce-table1": cmd_reproduce_table1,
            "diagnose": cmd_diagnose, "bounds": cmd_bounds}


def build_parser():
    parser = argparse.ArgumentParser(prog="ringlasso", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--no-plots", action="store_true", help="skip SVG plots")
        p.add_argument("--threads", type=int, help="cap BLAS/OpenMP threads")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_INPUT
        # only effective before numpy is first imported
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    from .exceptions import NonConvergenceWarning, RingLassoError

    try:
        cfg = load_config(args.command, args.config)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ValueError("--seed must be an unsigned 64-bit integer")
            cfg["seed"] = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NonConvergenceWarning)
            ok = COMMANDS[args.command](cfg, out, plots=not args.no_plots)
    except (RingLassoError, ValueError) as exc:
        # SingularRidge lands here too: it signals lambda = 0 on a
        # rank-deficient design, which is an input problem
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    stalled = [w for w in caught if issubclass(w.category, NonConvergenceWarning)]
    for w in stalled:
        print(f"warning: {w.message}", file=sys.stderr)
    if stalled or ok is False:
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
