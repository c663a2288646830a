"""Command-line entry point: ``plgrad {toy,causal,diag}``.

Exit codes: 0 success, 2 invalid configuration, 3 divergence during
training, 4 causal run finished but some score solves hit ``max_iters``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import config as cfgmod
from . import rng as rngmod
from .causal import graphs, sem
from .causal.experiment import CausalConfig, run_experiment
from .causal.score import FistaConfig
from .control_variate import cv_init
from .estimators import NoiseSeeds, exact_grad, sample_gradients, sample_moments
from .toy import brute_force_optimum, target_matrix, toy_objective
from .varopt import DivergenceError, TrainConfig, train

log = logging.getLogger("plgrad")

EXIT_CONFIG, EXIT_DIVERGED, EXIT_NONCONVERGED = 2, 3, 4


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--log-every", dest="log_every", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plgrad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    toy = sub.add_parser("toy", help="train on the toy assignment task")
    _common(toy)
    toy.add_argument("--k", type=int)
    toy.add_argument("--t", type=float)
    toy.add_argument("--estimator")
    toy.add_argument("--iters", type=int)
    toy.add_argument("--lr-theta", dest="lr_theta", type=float)
    toy.add_argument("--lr-phi", dest="lr_phi", type=float)
    toy.add_argument("--batch-size", dest="batch_size", type=int)
    toy.add_argument("--hidden", type=int)

    causal = sub.add_parser("causal", help="causal order search on simulated linear SEMs")
    _common(causal)
    causal.add_argument("--nodes", type=int)
    causal.add_argument("--graph", choices=["er", "sf"])
    causal.add_argument("--edges-mult", dest="edges_mult", type=float)
    causal.add_argument("--lambda", dest="lambda", type=float)
    causal.add_argument("--seeds", type=int, help="number of seeds, starting at --seed (default 0)")
    causal.add_argument("--n-train", dest="n_train", type=int)
    causal.add_argument("--n-val", dest="n_val", type=int)
    causal.add_argument("--threshold", type=float)
    causal.add_argument("--iters", type=int)
    causal.add_argument("--batch-size", dest="batch_size", type=int)
    causal.add_argument("--workers", type=int)
    causal.add_argument("--artifacts", help="directory for edge lists and data CSVs")

    diag = sub.add_parser("diag", help="estimator mean/variance diagnostics at a fixed theta")
    _common(diag)
    diag.add_argument("--k", type=int)
    diag.add_argument("--t", type=float)
    diag.add_argument("--estimators", help="comma-separated list")
    diag.add_argument("--n", type=int)
    diag.add_argument("--theta", help="comma-separated scores; random if omitted")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "verbose", "seeds", "estimators", "theta"}
    out = {k: v for k, v in vars(args).items() if k not in skip}
    if args.command == "causal" and args.seeds is not None:
        start = args.seed if args.seed is not None else 0
        out["seeds"] = list(range(start, start + args.seeds))
    if args.command == "causal":
        out.pop("seed", None)
    if args.command == "diag":
        if args.estimators is not None:
            out["estimators"] = [e.strip() for e in args.estimators.split(",") if e.strip()]
        if args.theta is not None:
            out["theta"] = [float(x) for x in args.theta.split(",")]
    return out


def _echo(cfg, out_path: Path) -> None:
    echo = out_path.parent / "config_echo.json"
    echo.write_text(json.dumps(cfgmod.dump(cfg), indent=2) + "\n")


def cmd_toy(cfg: cfgmod.ToyConfig) -> int:
    target = target_matrix(cfg.k, cfg.t)
    f = toy_objective(target)
    tcfg = TrainConfig(iters=cfg.iters, lr_theta=cfg.lr_theta, lr_phi=cfg.lr_phi,
                       batch_size=cfg.batch_size, estimator=cfg.estimator, seed=cfg.seed,
                       log_every=cfg.log_every, variance_probe_n=cfg.variance_probe_n,
                       hidden=cfg.hidden, mc_probe_n=cfg.mc_probe_n)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _echo(cfg, out)
    try:
        result = train(f, cfg.k, tcfg)
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "objective", "log_variance"])
        for row in result.trace:
            w.writerow([row.iteration, repr(row.objective), repr(row.log_variance)])
    final = result.trace[-1].objective
    print(f"final objective: {final:.6f}")
    print(f"mode permutation: {' '.join(str(i + 1) for i in result.decision)}")
    if cfg.k <= 8:
        _, best = brute_force_optimum(cfg.k, cfg.t)
        print(f"brute-force optimum: {best:.6f}")
        print(f"gap: {final - best:.6g}")
    return 0


def cmd_causal(cfg: cfgmod.CausalCliConfig) -> int:
    tcfg = TrainConfig(iters=cfg.iters, lr_theta=cfg.lr_theta, lr_phi=cfg.lr_phi,
                       batch_size=cfg.batch_size, estimator="relax", log_every=cfg.log_every,
                       variance_probe_n=cfg.variance_probe_n, hidden=cfg.hidden,
                       mc_probe_n=cfg.mc_probe_n)
    ccfg = CausalConfig(nodes=cfg.nodes, graph=cfg.graph, edges_mult=cfg.edges_mult,
                        lam=cfg.lam, n_train=cfg.n_train, n_val=cfg.n_val,
                        threshold=cfg.threshold, seeds=list(cfg.seeds), train=tcfg,
                        fista=FistaConfig(max_iters=cfg.fista_max_iters, tol=cfg.fista_tol),
                        workers=cfg.workers)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _echo(cfg, out)
    try:
        result = run_experiment(ccfg)
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    result = {"config": cfgmod.dump(cfg), **result}
    out.write_text(json.dumps(result, indent=2) + "\n")
    if cfg.artifacts:
        _write_artifacts(ccfg, result, Path(cfg.artifacts))

    print(f"{'method':<10} {'val_q_diff':>20} {'shd':>14}")
    for method in ("pl_relax", "random"):
        s = result["summary"][method]
        print(f"{method:<10} {s['val_q_diff']['mean']:>10.3f} ± {s['val_q_diff']['std']:<7.3f}"
              f" {s['shd']['mean']:>6.1f} ± {s['shd']['std']:<5.1f}")
    if result["nonconverged"]:
        print(f"warning: {result['nonconverged']} score solves hit max_iters", file=sys.stderr)
        return EXIT_NONCONVERGED
    return 0


def _write_artifacts(ccfg: CausalConfig, result: dict, root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    for run in result["runs"]:
        s = run["seed"]
        truth = graphs.gen_graph(ccfg.graph, ccfg.nodes, ccfg.edges_mult, s)
        _, x = sem.gen_sem_data(truth, ccfg.n_train, s)
        graphs.write_edge_list(truth, root / f"seed{s}_true.txt")
        learned = np.zeros((ccfg.nodes, ccfg.nodes), dtype=np.int8)
        for i, j in run["pl_relax"]["edges"]:
            learned[i - 1, j - 1] = 1
        graphs.write_edge_list(graphs.Dag(learned), root / f"seed{s}_learned.txt")
        sem.write_data(x, root / f"seed{s}_train.csv")


def run_diag(cfg: cfgmod.DiagConfig) -> dict:
    f = toy_objective(target_matrix(cfg.k, cfg.t))
    if cfg.theta is not None:
        theta = np.asarray(cfg.theta, dtype=np.float64)
    else:
        g = rngmod.stream(cfg.seed, rngmod.THETA_INIT)
        theta = g.uniform(-cfg.theta_range, cfg.theta_range, cfg.k)
    cv = cv_init(cfg.k, cfg.hidden, cfg.seed)
    exact = exact_grad(f, theta) if cfg.k <= 8 else None
    seeds = NoiseSeeds.draw(cfg.n, cfg.k, cfg.seed, rngmod.DIAG)
    rows = {}
    for name in cfg.estimators:
        grads = sample_gradients(name, f, theta, cv, seeds)
        mean, var = sample_moments(grads)
        se = np.sqrt(var / cfg.n)
        row = {"mean": mean.tolist(), "variance": var.tolist(),
               "total_variance": float(var.sum())}
        if exact is not None:
            dev = mean - exact
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.where(se > 0, dev / se, np.where(np.abs(dev) < 1e-12, 0.0, np.inf))
            row["z_scores"] = z.tolist()
        rows[name] = row
    return {"theta": theta.tolist(), "exact_grad": None if exact is None else exact.tolist(),
            "n": cfg.n, "estimators": rows}


def cmd_diag(cfg: cfgmod.DiagConfig) -> int:
    result = run_diag(cfg)
    if cfg.out:
        out = Path(cfg.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        _echo(cfg, out)
        out.write_text(json.dumps(result, indent=2) + "\n")
    print("theta: " + " ".join(f"{x:.4f}" for x in result["theta"]))
    if result["exact_grad"] is not None:
        print("exact: " + " ".join(f"{x:+.5f}" for x in result["exact_grad"]))
    print(f"{'estimator':<10} {'total var':>12} {'max |z|':>8}  mean")
    for name, row in result["estimators"].items():
        zmax = max(abs(z) for z in row["z_scores"]) if "z_scores" in row else float("nan")
        mean = " ".join(f"{x:+.5f}" for x in row["mean"])
        print(f"{name:<10} {row['total_variance']:>12.6g} {zmax:>8.3f}  {mean}")
    return 0


COMMANDS = {"toy": cmd_toy, "causal": cmd_causal, "diag": cmd_diag}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.resolve(args.command, args.config, _overrides(args))
        if args.command == "causal" and args.seed is not None and args.seeds is None:
            # --seed alone shifts the configured seed list to start there
            shifted = list(range(args.seed, args.seed + len(cfg.seeds)))
            cfg = cfgmod.resolve(args.command, args.config, {**_overrides(args), "seeds": shifted})
    except (ValidationError, ValueError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
