"""Command-line front end: ``duonet {graph-info,solve,barycenter,check-lemmas}``.

Every subcommand accepts ``--config FILE``, a flat ``key = value`` file whose
keys are flag names (``c-n`` and ``c_n`` both work). Flags given on the
command line win over the file. Artifacts go to ``$DUONET_OUT_DIR``
(default ``./out``).

Exit codes: 0 success, 1 a lemma check failed, 2 invalid input, 3 solver error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .barycenter import (barycenter_dual_solution, barycenter_objective,
                         build_barycenter_problem, read_cost_csv, read_histograms_csv,
                         reference_barycenter)
from .config import SolverConfig
from .diagnostics import (check_recurrence_lemma, empirical_tail_check, recurrence_constant,
                          sample_premise_sequence, write_trace)
from .errors import (BatchOverflow, DuonetError, NoStochasticSupport, NonFiniteIterate)
from .experiments import run_trials, success_fraction
from .graph import TOPOLOGIES, build_graph, read_edge_list
from .problems import quadratic_consensus
from .solver_det import predict_iterations_det, solve_deterministic
from .solver_stoch import next_alpha, solve_stochastic

EXIT_OK, EXIT_LEMMA, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3
_SOLVER_ERRORS = (NonFiniteIterate, BatchOverflow, FloatingPointError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # one-line diagnostics instead of usage dumps
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_").lower()] = value
    return out


def _add_graph_flags(p):
    p.add_argument("--topology", choices=TOPOLOGIES)
    p.add_argument("--m", type=int, help="number of nodes")
    p.add_argument("--p", type=float, help="edge probability for erdos_renyi (default 0.5)")
    p.add_argument("--graph-seed", type=int, help="seed for erdos_renyi (default 0)")
    p.add_argument("--edges", help="edge-list file for --topology edge_list")


def _add_solver_flags(p):
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float, help="confidence, in (0, 0.25) (default 0.05)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--c-n", dest="c_n", type=float, help="horizon multiplier (default 1)")
    p.add_argument("--c-r", dest="c_r", type=float, help="batch multiplier (default 1)")
    p.add_argument("--sigma-x-sq", dest="sigma_x_sq", type=float)
    p.add_argument("--L-psi", dest="l_psi", type=float, help="dual smoothness override")
    p.add_argument("--N", dest="n_iter", type=int, help="fixed iteration count")
    p.add_argument("--batch-cap", dest="batch_cap", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, help="processes for --trials (default 1)")
    p.add_argument("--out", help="trace file (default $DUONET_OUT_DIR/trace.ndjson)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="duonet", description="Decentralized dual methods over networks.")
    parser.add_argument("--version", action="version", version=f"duonet {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("graph-info", help="print spectral summary of a topology")
    p.add_argument("--config")
    _add_graph_flags(p)

    p = sub.add_parser("solve", help="run the deterministic or stochastic dual method")
    p.add_argument("--config")
    p.add_argument("--algo", choices=("det", "stoch"))
    _add_graph_flags(p)
    p.add_argument("--n", type=int, help="block dimension (default 1)")
    p.add_argument("--oracle", choices=("quadratic_exact", "quadratic_gaussian"))
    p.add_argument("--mu", type=float, help="strong convexity of each f_i (default 1)")
    p.add_argument("--centers", help="CSV with one centre per row (default 3*i*(1,-1,...))")
    _add_solver_flags(p)

    p = sub.add_parser("barycenter", help="entropic Wasserstein barycenter over a network")
    p.add_argument("--config")
    p.add_argument("--histograms")
    p.add_argument("--cost")
    p.add_argument("--mu-reg", dest="mu_reg", type=float)
    _add_graph_flags(p)
    p.add_argument("--paper-constants", dest="paper_constants", action="store_const",
                   const=True, help="sigma_psi^2 = m * lambda_max instead of the simplex bound")
    _add_solver_flags(p)

    p = sub.add_parser("check-lemmas", help="run the step-size, recurrence and tail checks")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    return parser


_CONFIG_ALIASES = {"iterations": "n_iter"}


def _merge_config(parser, sub_name, args):
    """Fill unset flags from ``--config``; flags on the command line win."""
    if not getattr(args, "config", None):
        return args
    values = read_config_file(args.config)
    subparser = parser._subparsers._group_actions[0].choices[sub_name]
    known = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    for key, raw in values.items():
        # keys are lower-cased, so --N is spelled "iterations" in files
        dest = _CONFIG_ALIASES.get(key, key)
        if dest not in known:
            raise UsageError(f"{args.config}: unknown key {key!r}")
        if getattr(args, dest) is not None:
            continue
        action = known[dest]
        try:
            if isinstance(action, argparse._StoreConstAction):
                value = action.const if _bool(raw) else None
            else:
                value = action.type(raw) if action.type else raw
        except ValueError as exc:
            raise UsageError(f"{args.config}: bad value for {key}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{args.config}: {key} must be one of {list(action.choices)}")
        setattr(args, dest, value)
    return args


def _require(args, *flags):
    for flag in flags:
        dest = flag.lstrip("-").replace("-", "_")
        if getattr(args, dest) is None:
            raise UsageError(f"missing required flag {flag}")


def _default(value, fallback):
    return fallback if value is None else value


def out_dir() -> Path:
    d = Path(os.environ.get("DUONET_OUT_DIR", "out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _trace_path(args) -> Path:
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
    return out_dir() / "trace.ndjson"


def _graph_from_args(args):
    _require(args, "--topology", "--m")
    edges = None
    if args.topology == "edge_list":
        _require(args, "--edges")
        edges = read_edge_list(args.edges)
    return build_graph(args.topology, args.m, p=_default(args.p, 0.5),
                       seed=_default(args.graph_seed, 0), edges=edges)


def _solver_config(args, **extra) -> SolverConfig:
    fields = dict(
        eps=args.eps, delta=_default(args.delta, 0.05), seed=_default(args.seed, 0),
        c_N=_default(args.c_n, 1.0), c_r=_default(args.c_r, 1.0), L_psi=args.l_psi,
        N_override=args.n_iter, batch_cap=_default(args.batch_cap, 10_000_000),
        trials=_default(args.trials, 1),
    )
    fields.update(extra)
    return SolverConfig(**fields)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _write_trials_csv(path: Path, outcomes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "seed", "iterations", "objective_gap", "consensus_residual",
                    "oracle_calls", "success"])
        for t in outcomes:
            w.writerow([t.index, t.seed, t.iterations, repr(t.objective_gap),
                        repr(t.consensus_residual), t.oracle_calls, int(t.success)])


def cmd_graph_info(args) -> int:
    g = _graph_from_args(args)
    print(json.dumps(g.summary()))
    return EXIT_OK


def cmd_solve(args) -> int:
    _require(args, "--algo", "--topology", "--m")
    g = _graph_from_args(args)
    n = _default(args.n, 1)
    oracle = args.oracle or ("quadratic_gaussian" if args.algo == "stoch" else "quadratic_exact")
    if oracle == "quadratic_gaussian" and args.sigma_x_sq is None:
        raise UsageError("missing required flag --sigma-x-sq (needed by quadratic_gaussian)")
    if args.n_iter is None:
        _require(args, "--eps")
    centers = None
    if args.centers:
        centers = np.loadtxt(args.centers, delimiter=",", ndmin=2)
        n = centers.shape[1]
    mu = _default(args.mu, 1.0)
    sx = args.sigma_x_sq if oracle == "quadratic_gaussian" else None
    prob = quadratic_consensus(g, centers=centers, n=n, mu=mu, sigma_x_sq=sx)
    L_psi = args.l_psi if args.l_psi is not None else (prob.L_psi if g.m > 1 else 1.0 / mu)
    eps = _default(args.eps, 1.0)
    summary = {"algo": args.algo, "topology": args.topology, "m": g.m, "n": prob.centers.shape[1],
               "eps": eps, "delta": _default(args.delta, 0.05)}
    trace_path = _trace_path(args)

    if args.algo == "det":
        N = args.n_iter or predict_iterations_det(math.sqrt(prob.M_F_sq) or 1.0, mu, g.chi, eps,
                                                  _default(args.c_n, 1.0))
        res = solve_deterministic(g, prob.oracles, N, L_psi, y_bar_star=prob.y_bar_star)
        trace = res.trace
        write_trace(trace, trace_path)
    else:
        if oracle != "quadratic_gaussian":
            raise NoStochasticSupport(f"--algo stoch needs a sampling oracle, got {oracle}")
        cfg = _solver_config(args, eps=eps, L_psi=L_psi, mu=mu,
                             M_F_sq=prob.M_F_sq if prob.M_F_sq > 0 else None, sigma_x_sq=sx)
        if cfg.N_override is None and cfg.M_F_sq is None:
            cfg = cfg.replace(N_override=1)
        res = solve_stochastic(g, prob.oracles, cfg, F_star=prob.F_star, y_star=prob.y_star)
        trace = res.trace
        write_trace(trace, trace_path)
        if cfg.trials > 1:
            outcomes = run_trials(g, prob.oracles, cfg, prob.F_star,
                                  prob.R_y if g.m > 1 else None,
                                  trials=cfg.trials, workers=_default(args.workers, 1))
            summary["success_fraction"] = success_fraction(outcomes)
            _write_trials_csv(trace_path.parent / "trials.csv", outcomes)
    last = trace[-1]
    summary.update(iterations=last.k, oracle_calls=last.cum_oracle_calls,
                   comm_rounds=last.cum_comm_rounds, final_gap=last.gap,
                   final_consensus_residual=last.consensus_residual)
    _write_json(trace_path.parent / "summary.json", summary)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_barycenter(args) -> int:
    _require(args, "--histograms", "--cost", "--mu-reg", "--topology", "--eps")
    Q = read_histograms_csv(args.histograms)
    C = read_cost_csv(args.cost)
    if args.m is None:
        args.m = Q.shape[0]
    g = _graph_from_args(args)
    prob = build_barycenter_problem(Q, C, args.mu_reg, g, sigma_x_sq=args.sigma_x_sq,
                                    paper_constants=bool(args.paper_constants))
    cfg = _solver_config(args, L_psi=args.l_psi or prob.L_psi, mu=prob.mu_reg,
                         M_F_sq=prob.M_F_sq)
    res = solve_stochastic(g, prob.oracles, cfg, sigma_psi_sq=prob.sigma_psi_sq)
    trace_path = _trace_path(args)
    write_trace(res.trace, trace_path)
    np.savetxt(trace_path.parent / "barycenter.csv", res.x_N, delimiter=",", fmt="%.17g")
    summary = {
        "objective": barycenter_objective(prob.oracles, res.x_N),
        "consensus_residual": res.trace[-1].consensus_residual,
        "oracle_calls": res.total_oracle_calls,
        "comm_rounds": res.comm_rounds,
        "iterations": res.N,
    }
    if cfg.trials > 1:
        p_star, F_star = reference_barycenter(prob.oracles)
        _, R_y = barycenter_dual_solution(prob.oracles, g, p_star)
        outcomes = run_trials(g, prob.oracles, cfg, F_star, R_y, sigma_psi_sq=prob.sigma_psi_sq,
                              workers=_default(args.workers, 1))
        summary["reference_objective"] = F_star
        summary["success_fraction"] = success_fraction(outcomes)
        _write_trials_csv(trace_path.parent / "trials.csv", outcomes)
    _write_json(trace_path.parent / "summary.json", summary)
    print(json.dumps(summary))
    return EXIT_OK


def lemma_report(seed: int = 0) -> dict:
    """Run the step-size bound, recurrence lemma and tail checks."""
    rng = np.random.default_rng(seed)
    report = {}

    ok = True
    for L in (0.1, 1.0, 10.0):
        A = 0.0
        for k in range(10_000):
            a = next_alpha(A, L)
            if abs(2 * L * a * a - a - A) > 1e-12 * max(1.0, 2 * L * a * a) or a > (k + 2) / (2 * L):
                ok = False
            A += a
    report["alpha_recurrence"] = ok

    ok = math.isclose(recurrence_constant(1.0, 1.0), 1.0 + math.sqrt(3.0), rel_tol=1e-15)
    const = check_recurrence_lemma(0.5, 0.0, np.ones(11))
    ok = ok and const.holds_premise and const.holds_conclusion and const.bound_C == 1.0
    for _ in range(100):
        A, B = rng.uniform(0, 2), rng.uniform(0, 2)
        N = int(rng.integers(1, 40))
        chk = check_recurrence_lemma(A, B, sample_premise_sequence(A, B, N, rng), N)
        ok = ok and chk.holds_premise and chk.holds_conclusion
    report["recurrence_lemma"] = bool(ok)

    sigma_sq, n = 1.0, 3
    gauss = np.linalg.norm(rng.standard_normal((20_000, n)) * math.sqrt(sigma_sq / n), axis=1)
    heavy = np.linalg.norm(rng.standard_t(2, (20_000, n)) * math.sqrt(sigma_sq / n), axis=1)
    report["tail_gaussian"] = empirical_tail_check(gauss, sigma_sq).passed
    report["tail_heavy_rejected"] = not empirical_tail_check(heavy, sigma_sq).passed
    return report


def cmd_check_lemmas(args) -> int:
    report = lemma_report(_default(args.seed, 0))
    print(json.dumps(report))
    return EXIT_OK if all(report.values()) else EXIT_LEMMA


_COMMANDS = {"graph-info": cmd_graph_info, "solve": cmd_solve, "barycenter": cmd_barycenter,
             "check-lemmas": cmd_check_lemmas}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand; choose from " + ", ".join(_COMMANDS))
        args = _merge_config(parser, args.command, args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DuonetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
