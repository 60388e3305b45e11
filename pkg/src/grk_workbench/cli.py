"""Command-line front end.

Every subcommand prints one JSON document on standard output.  Exit codes:
0 success, 2 invalid flags or geometry, 3 search budget refused, 4 output
path not writable.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import control, extremal_optimizer, grk_parameters, reporting, sequence_search
from .full_space import DEFAULT_MAX_QUBITS, compare_with_reduced
from .reduced_model import DatabaseGeometry, OperatorWord

THREADS_ENV = "GRK_WORKBENCH_THREADS"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_OUTPUT = 4

DISCRETE = {"grk-run", "brute", "glg-scan", "oracle-compare"}
CONTINUUM = {"control-verify", "extremal", "extremal-opt"}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    n: int | None = None
    m: int | None = None
    K: float | None = None
    epsilon: float = sequence_search.DEFAULT_EPSILON
    max_len: int | None = None
    max_len_cap: int = sequence_search.DEFAULT_MAX_LEN_CAP
    max_switches: int | None = None
    horizon: float | None = None
    threads: int = 1
    csv_path: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        has_geom = self.n is not None or self.m is not None
        if self.subcommand in DISCRETE:
            if self.n is None or self.m is None:
                raise UsageError(f"{self.subcommand} needs --n and --m")
            if self.K is not None:
                raise UsageError(f"{self.subcommand} takes a geometry, not --k")
        elif self.subcommand in CONTINUUM:
            if self.K is None:
                raise UsageError(f"{self.subcommand} needs --k")
            if has_geom:
                raise UsageError(f"{self.subcommand} takes --k, not --n/--m")
        elif self.subcommand == "grk-params":
            if (self.K is None) == (self.n is None or self.m is None):
                raise UsageError("grk-params needs either --k or both --n and --m")
            if self.K is not None and has_geom:
                raise UsageError("grk-params takes either --k or --n/--m, not both")
        if self.threads < 1:
            raise UsageError("thread count must be positive")
        if not 0 <= self.epsilon <= 1:
            raise UsageError("--epsilon must lie in [0, 1]")

    def geometry(self) -> DatabaseGeometry:
        return DatabaseGeometry(self.n, self.m)

    def gamma(self) -> float:
        if not self.K > 1:
            raise UsageError("--k must exceed 1")
        return control.gamma_from_K(self.K)


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


def _vector(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return vals


def _schedule(text: str) -> list[tuple[str, float]]:
    out = []
    for item in text.split(","):
        arc, _, dur = item.partition(":")
        if arc not in ("X", "Y"):
            raise argparse.ArgumentTypeError(f"bad arc {item!r}; use X:duration or Y:duration")
        try:
            out.append((arc, float(dur)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad duration in {item!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grk-workbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def geometry_flags(p, required=True):
        p.add_argument("--n", type=int, required=required, help="database qubits, N = 2**n")
        p.add_argument("--m", type=int, required=required, help="block qubits, b = 2**m")

    p = sub.add_parser("grk-params", help="closed-form alpha_K, eta_K and iteration counts")
    p.add_argument("--k", type=float, dest="K", help="number of blocks (continuum parameters only)")
    geometry_flags(p, required=False)
    p.add_argument("--window", type=int, default=grk_parameters.DEFAULT_SCAN_WINDOW)

    p = sub.add_parser("grk-run", help="run G^k1 L^k2 G with the GRK counts")
    geometry_flags(p)

    p = sub.add_parser("brute", help="exhaustive search for the shortest successful word")
    geometry_flags(p)
    p.add_argument("--max-len", type=int, help="longest word (default ceil(pi/4 sqrt N) + 2)")
    p.add_argument("--epsilon", type=float, default=sequence_search.DEFAULT_EPSILON)
    p.add_argument("--threads", type=int)
    p.add_argument("--max-len-cap", type=int, default=sequence_search.DEFAULT_MAX_LEN_CAP)
    p.add_argument("--csv", dest="csv_path", help="write the GLG residual landscape here")

    p = sub.add_parser("glg-scan", help="scan the G^k1 L^k2 G family")
    geometry_flags(p)
    p.add_argument("--k1-max", type=int)
    p.add_argument("--k2-max", type=int)
    p.add_argument("--epsilon", type=float, default=sequence_search.DEFAULT_EPSILON)
    p.add_argument("--csv", dest="csv_path", help="write the residual landscape here")

    p = sub.add_parser("oracle-compare", help="full statevector vs reduced model")
    geometry_flags(p)
    p.add_argument("--target", type=int, default=0)
    p.add_argument("--word", required=True, help="letters G and L, first applied first")
    p.add_argument("--max-qubits", type=int, default=DEFAULT_MAX_QUBITS)

    p = sub.add_parser("control-verify", help="generator identities, arc maps, compression, endpoints")
    p.add_argument("--k", type=float, dest="K", required=True)
    p.add_argument("--a", type=float, default=1.0, help="switching data a for the arc-map check")
    p.add_argument("--b", type=float, default=1.0, help="switching data b for the arc-map check")
    p.add_argument("--ell", type=float, default=math.pi, help="Y-arc length for the compression report")
    p.add_argument("--tau", type=float, default=10.0, help="endpoint-check horizon")

    p = sub.add_parser("extremal", help="simulate one PMP extremal")
    p.add_argument("--k", type=float, dest="K", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--csv", dest="csv_path", help="write the sampled trajectory here")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--p0", type=_vector, help="initial costate as a,b,c")
    src.add_argument("--seed", type=int, help="draw a random unit costate")
    src.add_argument("--anchor", type=_schedule, help="terminal-anchored costate from X:t,Y:t,... ")
    p.add_argument("--psi0", type=_vector, help="initial state (default: continuum start)")
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--quiet-threshold", type=float, default=1e-10)

    p = sub.add_parser("extremal-opt", help="minimum-time schedules by arc pattern")
    p.add_argument("--k", type=float, dest="K", required=True)
    p.add_argument("--max-switches", type=int, required=True)
    p.add_argument("--json", action="store_true", help="JSON output (the default)")
    p.add_argument("--b", type=int, help="block size for query equivalents")
    p.add_argument("--seed", type=int, default=extremal_optimizer.DEFAULT_SEED)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    known = {"subcommand", "n", "m", "K", "epsilon", "max_len", "max_len_cap", "max_switches",
             "horizon", "threads", "csv_path"}
    values = vars(args)
    threads = values.get("threads")
    return RunConfig(
        subcommand=args.subcommand,
        n=values.get("n"),
        m=values.get("m"),
        K=values.get("K"),
        epsilon=values.get("epsilon", sequence_search.DEFAULT_EPSILON),
        max_len=values.get("max_len"),
        max_len_cap=values.get("max_len_cap", sequence_search.DEFAULT_MAX_LEN_CAP),
        max_switches=values.get("max_switches"),
        horizon=values.get("horizon"),
        threads=_default_threads() if threads is None else threads,
        csv_path=values.get("csv_path"),
        options={k: v for k, v in values.items() if k not in known},
    )


def _grk_params(cfg: RunConfig) -> dict:
    if cfg.K is not None:
        return grk_parameters.continuum_parameters(cfg.K).to_dict()
    return grk_parameters.iteration_counts(cfg.geometry(), cfg.options["window"]).to_dict()


def _grk_run(cfg: RunConfig) -> dict:
    geom = cfg.geometry()
    params = grk_parameters.iteration_counts(geom)
    run = grk_parameters.run_grk(geom, params)
    return {
        "geometry": geom.to_dict(),
        "parameters": params.to_dict(),
        "word": str(OperatorWord.glg(params.k1, params.k2)),
        "final": run.final,
        "residual": run.residual,
        "residual_probability": run.residual_probability,
        "queries": run.queries,
    }


def _brute(cfg: RunConfig) -> dict:
    geom = cfg.geometry()
    max_len = sequence_search.default_max_len(geom) if cfg.max_len is None else cfg.max_len
    report = sequence_search.exhaustive_search(
        geom, max_len, cfg.epsilon, threads=cfg.threads, max_len_cap=cfg.max_len_cap
    )
    if cfg.csv_path:
        k = max(max_len - 1, 0)
        table = sequence_search.glg_landscape(geom, k, k)
        reporting.write_atomic(cfg.csv_path, reporting.emit_report(table, "csv-landscape"))
    out = report.to_dict()
    out["max_len"] = max_len
    return out


def _glg_scan(cfg: RunConfig) -> dict:
    geom = cfg.geometry()
    k_default = sequence_search.default_max_len(geom)
    k1_max = cfg.options["k1_max"] if cfg.options["k1_max"] is not None else k_default
    k2_max = cfg.options["k2_max"] if cfg.options["k2_max"] is not None else k_default
    (k1, k2), residual = sequence_search.glg_scan(geom, k1_max, k2_max, cfg.epsilon)
    if cfg.csv_path:
        table = sequence_search.glg_landscape(geom, k1_max, k2_max)
        reporting.write_atomic(cfg.csv_path, reporting.emit_report(table, "csv-landscape"))
    return {
        "geometry": geom.to_dict(),
        "epsilon": cfg.epsilon,
        "k1_max": k1_max,
        "k2_max": k2_max,
        "k1": k1,
        "k2": k2,
        "queries": k1 + k2 + 1,
        "residual_probability": residual,
        "success": residual <= cfg.epsilon,
    }


def _oracle_compare(cfg: RunConfig) -> dict:
    try:
        word = OperatorWord.parse(cfg.options["word"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    deviation, leakage = compare_with_reduced(
        cfg.n, cfg.m, cfg.options["target"], word, max_qubits=cfg.options["max_qubits"]
    )
    return {
        "geometry": cfg.geometry().to_dict(),
        "target": cfg.options["target"],
        "word": str(word),
        "deviation": deviation,
        "leakage": leakage,
    }


def _control_verify(cfg: RunConfig) -> dict:
    gamma = cfg.gamma()
    s, _ = control._sc(gamma)
    a, b = cfg.options["a"], cfg.options["b"]
    X, Y = control.generators(gamma)
    F1, F2, F3 = control.switching_matrices(gamma)
    skew = max(float(np.max(np.abs(M + M.T))) for M in (X, Y, F1, F2, F3))
    tx = control.tau_X(gamma)
    ty = control.first_switch_Y(a, b)
    target = np.array([0.0, -a, b])
    end_x = np.array(control.phi_arc_X(a, b, gamma, tx), dtype=float)
    end_y = np.array(control.phi_arc_Y(a, b, ty), dtype=float)
    return {
        "K": cfg.K,
        "gamma": gamma,
        "s": s,
        "skewness": skew,
        "lie_closure_residual": control.lie_closure_residual(gamma),
        "switching_map": {
            "a": a,
            "b": b,
            "tau_X": tx,
            "tau_Y": ty,
            "x_arc_end": end_x,
            "y_arc_end": end_y,
            "x_arc_error": float(np.max(np.abs(end_x - target))),
            "y_arc_error": float(np.max(np.abs(end_y - target))),
        },
        "compression": control.compression_report(gamma, cfg.options["ell"]).to_dict(),
        "endpoints": control.endpoint_checks(gamma, cfg.options["tau"]).to_dict(),
    }


def _extremal(cfg: RunConfig) -> dict:
    gamma = cfg.gamma()
    opts = cfg.options
    if cfg.horizon is None or cfg.horizon < 0:
        raise UsageError("--horizon must be nonnegative")
    psi0 = np.array(opts["psi0"]) if opts["psi0"] is not None else control.continuum_initial_state(gamma)
    if opts["p0"] is not None:
        p0, source = np.array(opts["p0"]), "given"
    elif opts["anchor"] is not None:
        p0, source = control.anchor_costate(gamma, psi0, opts["anchor"]), "terminal-anchored"
    else:
        seed = 0 if opts["seed"] is None else opts["seed"]
        v = np.random.default_rng(seed).standard_normal(3)
        p0, source = v / np.linalg.norm(v), f"random unit, seed {seed}"
    traj = control.simulate_extremal(gamma, psi0, p0, cfg.horizon, samples=opts["samples"])
    if cfg.csv_path:
        reporting.write_atomic(cfg.csv_path, reporting.emit_report(traj, "csv-extremal"))
    H = traj.hamiltonian
    return {
        "K": cfg.K,
        "gamma": gamma,
        "horizon": cfg.horizon,
        "psi0": psi0,
        "p0": p0,
        "costate_source": source,
        "switching_times": traj.switching_times,
        "arcs": [
            {"control": a.control, "start": a.start, "end": a.end, "complete": a.complete}
            for a in traj.arcs
        ],
        "x_gaps": traj.x_gaps(),
        "y_pair_sums": traj.y_pair_sums(),
        "hamiltonian_spread": float(H.max() - H.min()),
        "longest_quiet_interval": control.longest_quiet_interval(traj, opts["quiet_threshold"]),
        "halted": traj.halted,
        "diagnostic": traj.diagnostic,
    }


def _extremal_opt(cfg: RunConfig) -> dict:
    gamma = cfg.gamma()
    if cfg.max_switches is None or not 0 <= cfg.max_switches <= 6:
        raise UsageError("--max-switches must be between 0 and 6")
    table = extremal_optimizer.compare_patterns(gamma, cfg.max_switches, seed=cfg.options["seed"])
    out = table.to_dict()
    out["K"] = cfg.K
    if cfg.K >= 2:
        grk = extremal_optimizer.continuum_grk_schedule(cfg.K)
        out["grk"] = grk.to_dict()
        out["grk_predicted_time"] = extremal_optimizer.grk_predicted_time(cfg.K)
    b = cfg.options["b"]
    if b is not None:
        if b < 2:
            raise UsageError("--b must be at least 2")
        out["b"] = b
        out["queries"] = {
            "+".join(r.pattern): (
                extremal_optimizer.queries_at_block_size(r.total_time, b) if r.feasible else None
            )
            for r in table.rows
        }
        if "grk" in out:
            out["grk_queries"] = {
                "t1": extremal_optimizer.queries_at_block_size(out["grk"]["t1"], b),
                "t2": extremal_optimizer.queries_at_block_size(out["grk"]["t2"], b),
                "final_global_steps": 1,
            }
    return out


HANDLERS = {
    "grk-params": _grk_params,
    "grk-run": _grk_run,
    "brute": _brute,
    "glg-scan": _glg_scan,
    "oracle-compare": _oracle_compare,
    "control-verify": _control_verify,
    "extremal": _extremal,
    "extremal-opt": _extremal_opt,
}


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        result = HANDLERS[cfg.subcommand](cfg)
    except sequence_search.BudgetExceeded as exc:
        print(f"{parser.prog} {args.subcommand}: budget refused: {exc}", file=stderr)
        return EXIT_BUDGET
    except reporting.OutputError as exc:
        print(f"{parser.prog} {args.subcommand}: {exc}", file=stderr)
        return EXIT_OUTPUT
    except ValueError as exc:
        parser.print_usage(stderr)
        print(f"{parser.prog} {args.subcommand}: error: {exc}", file=stderr)
        return EXIT_USAGE
    stdout.write(reporting.to_json(result))
    stdout.flush()
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())
