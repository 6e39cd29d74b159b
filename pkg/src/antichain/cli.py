"""Command-line interface: ``antichain <command> ...``.

Exit codes: 0 success, 2 usage error, 3 numerical or coalescence failure,
4 input parse failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import secrets
import sys

import numpy as np

from . import __version__
from .analysis import (
    DegenerateEstimandError,
    InsufficientReplicationError,
    estimate_autocovs,
    ilhs_corr_theory,
    indicator_vrf_max,
    indicator_vrf_normal,
    indicator_vrf_uniform,
    k_alpha_table,
    ks_distance_bound_check,
    ilhs_distance_bound,
    vrf_generalized,
    vrf_size_fixed,
)
from .antithetic_gen import METHODS, CapabilityError, GeneratorSpec, uniform_tuples
from .coupling_engine import NonCoalescenceError
from .datasets import LUPUS_TABLE, lupus_csv
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .streams import RandomStream

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_PARSE = 4

VRF_COLUMNS = ("k", "estimand", "method", "s_k", "se", "c_k", "t_k")
TRAJ_COLUMNS = ("rep", "chain", "step", "state")


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-tripping text for floats; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def resolve_seed(seed) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get("ANTICHAIN_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"ANTICHAIN_SEED is not an integer: {env!r}") from None
    s = secrets.randbits(63)
    print(f"seed: {s}", file=sys.stderr)
    return s


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _open_out(path):
    if path in (None, "-"):
        return _StdoutProxy()
    return open(path, "w", newline="")


class _StdoutProxy:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()
        return False


def write_rows(path, columns, rows, fmt_name="csv", extra=None):
    with _open_out(path) as fh:
        if fmt_name == "json":
            doc = dict(extra or {})
            doc["rows"] = [{c: r.get(c) for c in columns} for r in rows]
            json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
            return
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


# -- generate ------------------------------------------------------------------------


def cmd_generate(args) -> int:
    seed = resolve_seed(args.seed)
    try:
        spec = GeneratorSpec(args.method, args.k, args.t)
    except (ValueError, CapabilityError) as exc:
        raise UsageError(str(exc)) from None
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    vals = uniform_tuples(spec, RandomStream(seed, stream_id=0x6E6), args.n)
    rows = [{"rep": r, "coord": j, "value": float(vals[r, j])} for r in range(args.n) for j in range(spec.k)]
    write_rows(args.out, ("rep", "coord", "value"), rows, args.format, {"seed": seed, "spec": spec.label})
    msg = f"method={spec.label} k={spec.k} n={args.n} mean={vals.mean():.6f}"
    if args.n >= 3 and spec.k >= 2:
        rep = vrf_size_fixed(vals)
        msg += f" corr={rep.rho_hat:.6f} +/- {rep.se_s / (spec.k - 1):.6f}"
    print(msg, file=sys.stderr)
    return 0


# -- experiment ----------------------------------------------------------------------


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
        if args.seed is not None:
            cfg.seed = args.seed
        return cfg
    if args.experiment is None:
        raise UsageError("an experiment name or --config is required")
    kw = {
        "experiment": args.experiment,
        "method": args.method,
        "ks": args.k,
        "T": args.t,
        "replicates": args.replicates,
        "seed": resolve_seed(args.seed),
        "burn_in": args.burn_in,
        "data": args.data,
        "data_seed": args.data_seed,
        "n_data": args.n_data,
        "start": args.start,
        "slice_start": args.slice_start,
        "steps": args.steps,
        "timing": not args.no_timing,
    }
    if args.estimands:
        kw["estimands"] = args.estimands.split(",")
    if args.taus:
        kw["taus"] = args.taus
    if args.fixed_m is not None:
        kw["fixed_m"] = args.fixed_m
    else:
        kw["budget"] = args.budget if args.budget is not None else {"slice": 600, "probit": 9000}.get(args.experiment)
    return ExperimentConfig(**kw)


def write_trajectories(directory, trajectories):
    os.makedirs(directory, exist_ok=True)
    paths = []
    for (k, label), (states, vals) in sorted(trajectories.items()):
        path = os.path.join(directory, f"traj_k{k}_{label}.csv")
        names = list(vals)
        R, kk, m = states.shape[:3]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJ_COLUMNS + tuple(names))
            cols = [states] + [vals[n] for n in names]
            for r in range(R):
                for j in range(kk):
                    for t in range(m):
                        w.writerow([r, j, t] + [repr(float(c[r, j, t])) for c in cols])
        paths.append(path)
    return paths


def cmd_experiment(args) -> int:
    try:
        cfg = _config_from_args(args)
        if cfg.experiment != "circle":
            for k in cfg.ks:
                GeneratorSpec(cfg.method, k, cfg.T)
                if cfg.experiment in ("slice", "probit"):
                    cfg.chain_length(k)
    except (ValueError, CapabilityError) as exc:
        raise UsageError(str(exc)) from None
    if args.save_config:
        with open(args.save_config, "w") as fh:
            fh.write(cfg.to_json() + "\n")
    out = run_experiment(cfg)
    report = out["report"]
    if cfg.experiment == "circle":
        cols = ("tau", "corr", "se", "theory", "tau_drift")
    else:
        cols = VRF_COLUMNS
    if args.format == "json":
        with _open_out(args.out) as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    else:
        write_rows(args.out, cols, out["rows"])
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    if args.trajectories and out["trajectories"]:
        write_trajectories(args.trajectories, out["trajectories"])
    return 0


# -- theory --------------------------------------------------------------------------


def _emit_table(args, columns, rows, title=None):
    if args.format in ("csv", "json"):
        write_rows(args.out, columns, rows, args.format)
        return
    with _open_out(args.out) as fh:
        if title:
            fh.write(title + "\n")
        text = [[fmt(r[c]) if isinstance(r[c], float) else str(r[c]) for c in columns] for r in rows]
        widths = [max(len(c), *(len(t[i]) for t in text)) if text else len(c) for i, c in enumerate(columns)]
        fh.write("  ".join(c.rjust(w) for c, w in zip(columns, widths)) + "\n")
        for t in text:
            fh.write("  ".join(x.rjust(w) for x, w in zip(t, widths)) + "\n")


def cmd_theory(args) -> int:
    which = args.table
    if which == "k-alpha":
        rows = [{"alpha": a, "k_alpha": k} for a, k in k_alpha_table(args.alphas)]
        _emit_table(args, ("alpha", "k_alpha"), rows)
    elif which == "vrf-indicator":
        cs = args.c_grid if args.c_grid else [0.5]
        rows = []
        for k in args.k:
            for c in cs:
                if args.dist == "uniform":
                    if not 0 < c < 1:
                        raise UsageError("uniform indicator needs 0 < c < 1")
                    s = indicator_vrf_uniform(c, k)
                else:
                    s = indicator_vrf_normal(c, k)
                row = {"k": k, "c": c, "s_k": s}
                if args.dist == "uniform" and k >= 3:
                    tr = indicator_vrf_max(k)
                    row.update(s_star=tr.s_star, c_star_low=tr.c_star_low, c_star_high=tr.c_star_high)
                else:
                    row.update(s_star=None, c_star_low=None, c_star_high=None)
                rows.append(row)
        _emit_table(args, ("k", "c", "s_k", "s_star", "c_star_low", "c_star_high"), rows)
    elif which == "ilhs-corr":
        rows = [{"k": k, "t": t, "corr": ilhs_corr_theory(k, t)} for k in args.k for t in args.t]
        _emit_table(args, ("k", "t", "corr"), rows)
    elif which in ("ilhs-distance-bound", "thm7-bound"):
        rows = []
        for k in args.k:
            for t in args.t:
                if t < 1:
                    raise UsageError("t must be >= 1")
                row = {"k": k, "t": t, "bound": ilhs_distance_bound(k, t), "m": None, "d_observed": None}
                if args.check_m is not None:
                    rep = ks_distance_bound_check(k, t, args.check_m, args.grid_n)
                    row.update(m=args.check_m, d_observed=rep.d_observed)
                rows.append(row)
        _emit_table(args, ("k", "t", "bound", "m", "d_observed"), rows)
    return 0


# -- analyze -------------------------------------------------------------------------


def read_trajectory_csv(path):
    """Parse a trajectory file into ``{column: array (R, k, m)}``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: line 1: empty file")
        header = [h.strip() for h in header]
        if tuple(header[:4]) != TRAJ_COLUMNS:
            raise ParseError(f"{path}: line 1: expected header starting with {','.join(TRAJ_COLUMNS)}")
        names = header[3:]
        recs = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                idx = (int(row[0]), int(row[1]), int(row[2]))
                vals = [float(x) for x in row[3:]]
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
            if min(idx) < 0:
                raise ParseError(f"{path}: line {lineno}: negative index")
            recs.append((idx, vals))
    if not recs:
        raise ParseError(f"{path}: line 2: no data rows")
    R = max(r[0][0] for r in recs) + 1
    k = max(r[0][1] for r in recs) + 1
    m = max(r[0][2] for r in recs) + 1
    if len(recs) != R * k * m:
        raise ParseError(f"{path}: expected {R * k * m} rows for a complete (rep, chain, step) grid, got {len(recs)}")
    arr = np.full((R, k, m, len(names)), np.nan)
    for (r, j, t), vals in recs:
        arr[r, j, t] = vals
    if np.isnan(arr).any():
        raise ParseError(f"{path}: duplicate or missing (rep, chain, step) entries")
    return {n: arr[..., i] for i, n in enumerate(names)}


def cmd_analyze(args) -> int:
    rows = []
    for path in args.files:
        cols = read_trajectory_csv(path)
        label = args.method or os.path.splitext(os.path.basename(path))[0]
        names = [n for n in cols if n != "state"] or ["state"]
        for name in names:
            v = cols[name]
            rep = vrf_generalized(v)
            row = {"k": v.shape[1], "estimand": name, "method": label, "s_k": rep.s_k, "se": rep.se_s}
            if args.autocov and v.shape[0] >= 100:
                m = v.shape[2]
                times = np.unique(np.linspace(0, m - 1, min(5, m)).astype(int))
                est = estimate_autocovs(v, times)
                row["max_between_z"] = est.max_between_z()
            rows.append(row)
    cols_out = VRF_COLUMNS + (("max_between_z",) if args.autocov else ())
    write_rows(args.out, cols_out, rows, args.format)
    return 0


# -- dataset -------------------------------------------------------------------------


def cmd_dataset(args) -> int:
    cases = sum(r[2] for r in LUPUS_TABLE)
    total = sum(r[3] for r in LUPUS_TABLE)
    if args.format == "json":
        rows = [dict(zip(("igg_diff", "iga", "cases", "total"), r)) for r in LUPUS_TABLE]
        write_rows(args.out, ("igg_diff", "iga", "cases", "total"), rows, "json", {"cases": cases, "total": total})
    else:
        with _open_out(args.out) as fh:
            fh.write(lupus_csv())
    print(f"rows={len(LUPUS_TABLE)} cases={cases} total={total}", file=sys.stderr)
    return 0


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def common_flags(formats=("csv", "json")):
        c = argparse.ArgumentParser(add_help=False)
        c.add_argument("--seed", type=int, default=None, help="master seed (else $ANTICHAIN_SEED, else random and printed)")
        c.add_argument("--out", default=None, help="output file (default stdout)")
        c.add_argument("--format", choices=formats, default=formats[0])
        return c

    common = common_flags()

    p = argparse.ArgumentParser(prog="antichain", description="Antithetic coupling of Markov chains.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="emit antithetic tuples")
    g.add_argument("--method", choices=METHODS, default="ilhs")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--t", type=int, default=7, help="ILHS iterations")
    g.add_argument("--n", type=int, default=1000, help="number of tuples")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("experiment", parents=[common], help="run an antithetic experiment with a control arm")
    e.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    e.add_argument("--config", help="JSON experiment config")
    e.add_argument("--save-config", help="write the resolved config as JSON")
    e.add_argument("--method", choices=METHODS, default="ilhs")
    e.add_argument("--k", type=_int_list, default=[2], help="comma-separated k values")
    e.add_argument("--t", type=int, default=7, help="ILHS iterations")
    e.add_argument("--replicates", type=int, default=200)
    e.add_argument("--estimands", help="comma-separated estimand names")
    e.add_argument("--budget", type=int, help="total draws n = k*m per replicate")
    e.add_argument("--fixed-m", type=int, help="fixed chain length instead of a total budget")
    e.add_argument("--burn-in", type=int, default=0)
    e.add_argument("--data", default="synthetic", help="synthetic | embedded | path to CSV")
    e.add_argument("--data-seed", type=int)
    e.add_argument("--n-data", type=int, default=50)
    e.add_argument("--start", choices=("mle", "2sd", "extreme"), default="mle")
    e.add_argument("--slice-start", type=float, default=1.0)
    e.add_argument("--taus", type=_float_list, help="circle angles")
    e.add_argument("--steps", type=int, default=100000, help="circle chain length")
    e.add_argument("--no-timing", action="store_true", help="omit c_k and t_k")
    e.add_argument("--report", help="also write the JSON report here")
    e.add_argument("--trajectories", help="directory for trajectory CSVs")
    e.set_defaults(func=cmd_experiment)

    t = sub.add_parser("theory", parents=[common_flags(("text", "csv", "json"))], help="closed-form tables")
    t.set_defaults(func=cmd_theory)
    t.add_argument("table", choices=("k-alpha", "vrf-indicator", "ilhs-corr", "ilhs-distance-bound", "thm7-bound"),
                   help="thm7-bound is an alias of ilhs-distance-bound")
    t.add_argument("--alphas", type=_float_list, default=[0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99])
    t.add_argument("--dist", choices=("uniform", "normal"), default="uniform")
    t.add_argument("--k", type=_int_list, default=[3])
    t.add_argument("--t", type=_int_list, default=[1])
    t.add_argument("--c-grid", "--c", type=_float_list, dest="c_grid")
    t.add_argument("--check-m", type=int, help="also measure the sup distance for this m")
    t.add_argument("--grid-n", type=int, default=401)

    a = sub.add_parser("analyze", parents=[common], help="recompute VRFs from trajectory CSVs")
    a.add_argument("files", nargs="+")
    a.add_argument("--method", help="label for the method column")
    a.add_argument("--autocov", action="store_true", help="add the largest between-chain covariance in SE units")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("dataset", parents=[common], help="export the embedded lupus table")
    d.set_defaults(func=cmd_dataset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"antichain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"antichain: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonCoalescenceError as exc:
        print(f"antichain: {exc}; diagnostics: {json.dumps(exc.diagnostics, default=str)}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DegenerateEstimandError, InsufficientReplicationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"antichain: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
