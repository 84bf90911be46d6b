"""Command-line entry point: ``rlrqaoa <subcommand> ...``.

Every invocation writes its artifacts plus ``manifest.json`` into the output
directory (``--out``, else ``$RLRQAOA_OUTDIR``, else ``./rlrqaoa-out``). A
manifest replays its run with ``rlrqaoa --from-manifest manifest.json``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import graph as _graph
from ._accel import backend_name
from .bench import (bench_fig3, bench_fig5, bench_fig6, default_hard_records, fig6_instances,
                    load_records, write_table)
from .errors import (Infeasible, MalformedInstance, NotAvailable, RqaoaError, SizeLimit)
from .instances import (EnsembleSpec, assign_weights, cage, generate_ensemble, mine_hard,
                        read_edge_list, save_records)
from .qaoa import write_landscape_csv
from .rqaoa import EXACT_MAX_SPINS, RqaoaConfig, brute_force_exact, run_many
from .trainer import TrainerConfig, train, vote_curve, write_curve_csv, write_norms_csv

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MALFORMED = 3
EXIT_INFEASIBLE = 4
EXIT_NOT_AVAILABLE = 5
EXIT_SIZE_LIMIT = 6
EXIT_SOLVER = 7
EXIT_IO = 8

RQAOA_COLUMNS = ("instance_id", "seed", "energy", "exact_energy", "ratio", "ties_total", "runtime_ms", "run")
DEFAULT_OUTDIR = "rlrqaoa-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get("RLRQAOA_OUTDIR") or DEFAULT_OUTDIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _ids(text: str) -> tuple[int, ...]:
    """``"3,4"`` or ``"14-30"`` or ``"14-30:2"`` into a tuple of ints."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, _, rest = part.partition("-")
            hi, _, step = rest.partition(":")
            out.extend(range(int(lo), int(hi) + 1, int(step or 1)))
        elif part:
            out.append(int(part))
    return tuple(out)


def _load_instance(path) -> _graph.IsingInstance:
    return _graph.load(path)


def _iid(path, inst) -> str:
    return str(inst.metadata.get("instance_id") or Path(path).stem)


def _exact_or_none(inst, want: bool):
    if not want or inst.n > EXACT_MAX_SPINS:
        return None
    return brute_force_exact(inst)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o).__name__)


def _write_json(path, doc) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, default=_json_default, allow_nan=True) + "\n")
    return path


# -- subcommands ------------------------------------------------------------------------

def cmd_generate(args, out: Path, info: dict):
    rng_seed = args.seed
    written = []
    if args.kind == "cage":
        g = cage(args.d, args.girth)
        for j in range(args.count):
            s = rng_seed + j
            inst = assign_weights(g, args.weights, np.random.default_rng(s), seed=s,
                                  graph=f"cage-{args.d}-{args.girth}")
            written.append(_graph.save(inst, out / f"cage-{args.d}-{args.girth}-{args.weights}-s{s}.json"))
    elif args.kind == "edges":
        if not args.from_edges:
            raise UsageError("generate --kind edges needs --from-edges FILE")
        g = read_edge_list(args.from_edges)
        info["inputs"][str(args.from_edges)] = _digest(args.from_edges)
        for j in range(args.count):
            s = rng_seed + j
            inst = assign_weights(g, args.weights, np.random.default_rng(s), seed=s,
                                  source=Path(args.from_edges).name)
            written.append(_graph.save(inst, out / f"{Path(args.from_edges).stem}-{args.weights}-s{s}.json"))
    else:
        spec = EnsembleSpec(_ids(args.n), _ids(args.d_list), args.weights, args.count, args.seed)
        if not spec.cells():
            raise Infeasible(f"no feasible (n, d) cell in n={args.n}, d={args.d_list}")
        for iid, inst in generate_ensemble(spec):
            written.append(_graph.save(inst, out / f"{iid}.json"))
    for p in written:
        print(p)
    info["artifacts"] = [p.name for p in written]


def cmd_exact(args, out: Path, info: dict):
    inst = _load_instance(args.instance)
    info["inputs"][str(args.instance)] = _digest(args.instance)
    res = brute_force_exact(inst)
    x = [res.assignment.get(v, 1) for v in sorted(inst.vertices)]
    print(f"energy {res.energy!r}")
    print(f"degeneracy {res.degeneracy}")
    print("assignment " + " ".join(f"{v}" for v in x))
    _write_json(out / "exact.json", {"instance_id": _iid(args.instance, inst), "energy": res.energy,
                                     "degeneracy": res.degeneracy,
                                     "assignment": {str(k): v for k, v in sorted(res.assignment.items())}})


def cmd_rqaoa(args, out: Path, info: dict):
    inst = _load_instance(args.instance)
    info["inputs"][str(args.instance)] = _digest(args.instance)
    iid = _iid(args.instance, inst)
    ex = _exact_or_none(inst, not args.no_exact)
    exact = ex.energy if ex else None
    cfg = RqaoaConfig(n_c=args.nc, tie_tolerance=args.tie_tolerance, grid_n=args.grid, seed=args.seed,
                      warm_start=args.warm_start)
    results = run_many(inst, cfg, args.runs, exact, args.jobs)
    rows = [(iid, args.seed, r.energy, exact, r.approx_ratio, r.ties_total, round(r.runtime_ms, 3), r.run_index)
            for r in results]
    write_table(out / "rqaoa_runs.csv", RQAOA_COLUMNS, rows)
    best = max(results, key=lambda r: r.energy)
    iters = sum(len(r.tie_counts) for r in results)
    tied = sum(1 for r in results for t in r.tie_counts if t > 0)
    summary = {
        "instance_id": iid, "runs": args.runs, "exact_energy": exact,
        "best_energy": best.energy, "best_ratio": best.approx_ratio,
        "mean_energy": float(np.mean([r.energy for r in results])),
        "mean_ratio": (float(np.mean([r.approx_ratio for r in results])) if exact and exact > 0 else None),
        "ground_state_prob": (float(np.mean([abs(r.energy - exact) <= 1e-9 for r in results]))
                              if exact is not None else None),
        "tie_fraction": tied / iters if iters else 0.0,
        "mean_ties_per_iteration": sum(r.ties_total for r in results) / iters if iters else 0.0,
    }
    _write_json(out / "rqaoa_summary.json", summary)
    _write_json(out / "rqaoa_best.json", best.to_record())
    print(json.dumps(summary, default=_json_default))


def cmd_rl(args, out: Path, info: dict, policy: str):
    inst = _load_instance(args.instance)
    info["inputs"][str(args.instance)] = _digest(args.instance)
    iid = _iid(args.instance, inst)
    ex = _exact_or_none(inst, not args.no_exact)
    exact = ex.energy if ex else None
    rcfg = RqaoaConfig(n_c=args.nc, grid_n=args.grid, seed=args.seed)
    tcfg = TrainerConfig(batch_size=args.batch, total_episodes=args.episodes, discount=args.discount,
                         lr_angles=args.lr_angles, lr_betas=args.lr_betas, beta_init=args.beta_init,
                         angle_init=args.angle_init, beta_mode=args.beta_mode, baseline=args.baseline,
                         seed=args.seed)
    info["config"]["trainer"] = tcfg.__dict__
    tasks = [(inst, policy, tcfg, rcfg, exact, r) for r in range(args.runs)]
    if args.jobs > 1 and args.runs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_train_one, tasks))
    else:
        results = [_train_one(t) for t in tasks]
    tag = "rl-rone" if policy == "rlrone" else "rl-rqaoa"
    best_run, best = None, None
    for r, res in enumerate(results):
        write_curve_csv(out / f"curve_run{r:02d}.csv", res)
        write_norms_csv(out / f"norms_run{r:02d}.csv", res)
        res.params.save(out / f"params_run{r:02d}.json")
        if res.best is not None and (best is None or res.best.energy > best.energy):
            best_run, best = r, res.best
    curves = np.array([res.best_so_far() for res in results]) if args.episodes else np.zeros((args.runs, 0))
    vote = vote_curve(curves) if curves.size else np.zeros(0)
    write_table(out / "vote.csv", ("episode", "vote_best"), [(e, v) for e, v in enumerate(vote)])
    doc = {"instance_id": iid, "policy": tag, "exact_energy": exact, "best_run": best_run,
           "best": None if best is None else best.to_record()}
    _write_json(out / "best.json", doc)
    print(json.dumps({"instance_id": iid, "policy": tag, "best_energy": None if best is None else best.energy,
                      "best_ratio": None if best is None else best.approx_ratio}))


def _train_one(task):
    inst, policy, tcfg, rcfg, exact, r = task
    return train(inst, policy, tcfg, rcfg, exact, run_index=r)


def cmd_mine(args, out: Path, info: dict):
    spec = EnsembleSpec(_ids(args.n), _ids(args.d_list), args.weights, args.count, args.seed)
    cfg = RqaoaConfig(n_c=args.nc, grid_n=args.grid)
    stats: dict = {}
    recs = mine_hard(spec, args.budget, args.threshold, cfg, args.jobs, args.max_records, args.limit, stats)
    save_records(recs, out)
    info["stats"] = stats
    print(json.dumps({"records": len(recs), **stats}))


def cmd_bench_fig3(args, out: Path, info: dict):
    res = bench_fig3(out, _ids(args.weight_seeds), args.runs, args.nc, 3, args.girth, args.seed, args.grid,
                     args.jobs)
    checks = {
        "mean_ratio_ge_0.90": bool(np.mean(np.concatenate([r.ratios for r in res])) >= 0.90),
        "ground_state_prob_ge_0.10": bool(np.mean([r.ground_state_prob for r in res]) >= 0.10),
        "tie_fraction_ge_0.50": bool(np.mean([r.tie_fraction for r in res]) >= 0.50),
        "one_seed_in_band": any(0.91 <= r.ratios.mean() <= 1.0 and 0.70 <= r.tie_fraction <= 1.0 for r in res),
    }
    info["checks"] = checks
    for r in res:
        print(f"seed {r.weight_seed}: mean ratio {r.ratios.mean():.4f} +- {r.ratios.std():.4f}, "
              f"ground state {r.ground_state_prob:.3f}, tie fraction {r.tie_fraction:.3f}")
    print(json.dumps(checks))


def cmd_bench_fig5(args, out: Path, info: dict):
    if args.instances:
        recs = load_records(args.instances)
        info["inputs"][str(Path(args.instances) / "index.csv")] = _digest(Path(args.instances) / "index.csv")
    else:
        recs = default_hard_records(args.count, args.seed, args.max_n, args.rqaoa_runs, args.nc, args.jobs)
    recs = [r for r in recs if r.instance.n <= args.max_n][:args.count]
    if not recs:
        raise NotAvailable("no hard instances to benchmark; run `rlrqaoa mine` first or widen the search")
    rows = bench_fig5(out, recs, args.runs, args.episodes, args.rqaoa_runs, args.nc, args.seed,
                      args.angle_init, args.jobs)
    info["checks"] = {
        "all_beat_rqaoa": all(r["rlrqaoa_beats_rqaoa"] for r in rows),
        "ratio_ge_0.99_count": sum(r["rlrqaoa_ratio"] >= 0.99 for r in rows),
    }
    for r in rows:
        print(f"{r['instance_id']}: rqaoa {r['rqaoa_ratio']:.4f}  rl-rqaoa {r['rlrqaoa_ratio']:.4f}")
    print(json.dumps(info["checks"]))


def cmd_bench_fig6(args, out: Path, info: dict):
    insts = fig6_instances(args.count, args.n, 3, args.seed)
    rows = bench_fig6(out, insts, args.runs, args.episodes, args.nc, args.seed, not args.no_exact, args.jobs)
    wins = sum(bool(r["rlrqaoa_ge_rlrone"]) for r in rows)
    info["checks"] = {"rlrqaoa_ge_rlrone": wins, "instances": len(rows)}
    for r in rows:
        print(f"{r['instance_id']}: rl-rqaoa {r['rlrqaoa_mean_best']:.3f}  rl-rone {r['rlrone_mean_best']:.3f}")
    print(json.dumps(info["checks"]))


def cmd_landscape(args, out: Path, info: dict):
    inst = _load_instance(args.instance)
    info["inputs"][str(args.instance)] = _digest(args.instance)
    alphas = np.linspace(0, math.pi, args.alpha_points, endpoint=False)
    gammas = np.linspace(0, 2 * math.pi, args.gamma_points, endpoint=False)
    path = write_landscape_csv(out / "landscape.csv", inst, alphas, gammas)
    print(path)


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rlrqaoa", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--from-manifest", metavar="FILE", help="replay the command recorded in a manifest")
    p.add_argument("--out", help="output directory override when replaying a manifest")
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output directory (default $RLRQAOA_OUTDIR or ./rlrqaoa-out)")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (1 is the reference)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write instance files")
    g.add_argument("--kind", choices=("regular", "cage", "edges"), default="regular")
    g.add_argument("--n", default="20", help="vertex counts, e.g. 14-30 or 16,20")
    g.add_argument("--d", dest="d_list", default="3", help="degrees for --kind regular")
    g.add_argument("--degree", dest="d", type=int, default=3, help="cage degree")
    g.add_argument("--girth", type=int, default=8)
    g.add_argument("--weights", choices=("gaussian", "bimodal"), default="bimodal")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--from-edges", help="edge-list file for --kind edges")

    e = sub.add_parser("exact", parents=[common], help="exhaustive ground state")
    e.add_argument("instance")

    def solver_opts(sp):
        sp.add_argument("instance")
        sp.add_argument("--nc", type=int, default=8)
        sp.add_argument("--runs", type=int, default=1)
        sp.add_argument("--grid", type=int, default=2000)
        sp.add_argument("--no-exact", action="store_true", help="skip the exhaustive reference")

    r = sub.add_parser("rqaoa", parents=[common], help="independent RQAOA runs")
    solver_opts(r)
    r.add_argument("--tie-tolerance", type=float, default=1e-8)
    r.add_argument("--warm-start", action="store_true")

    for name in ("rl-rqaoa", "rl-rone"):
        sp = sub.add_parser(name, parents=[common], help=f"train {name} agents")
        solver_opts(sp)
        sp.add_argument("--episodes", type=int, default=1400)
        sp.add_argument("--batch", type=int, default=10)
        sp.add_argument("--discount", type=float, default=0.99)
        sp.add_argument("--lr-angles", type=float, default=0.001)
        sp.add_argument("--lr-betas", type=float, default=0.5)
        sp.add_argument("--beta-init", type=float, default=25.0)
        sp.add_argument("--angle-init", choices=("energy_optimal", "random"), default="energy_optimal")
        sp.add_argument("--beta-mode", choices=("one-all", "all", "all-all"), default="one-all")
        sp.add_argument("--baseline", action="store_true", help="subtract the batch-mean return")

    m = sub.add_parser("mine", parents=[common], help="search an ensemble for hard instances")
    m.add_argument("--n", default="14-30")
    m.add_argument("--d", dest="d_list", default="3")
    m.add_argument("--weights", choices=("gaussian", "bimodal"), default="bimodal")
    m.add_argument("--count", type=int, default=25, help="replicates per (n, d) cell")
    m.add_argument("--limit", type=int, default=None, help="scan at most this many instances")
    m.add_argument("--budget", type=int, default=1400)
    m.add_argument("--threshold", type=float, default=0.95)
    m.add_argument("--nc", type=int, default=8)
    m.add_argument("--grid", type=int, default=2000)
    m.add_argument("--max-records", type=int, default=None)

    f3 = sub.add_parser("bench-fig3", parents=[common], help="tie statistics on a weighted cage")
    f3.add_argument("--weight-seeds", default="0-4")
    f3.add_argument("--runs", type=int, default=200)
    f3.add_argument("--nc", type=int, default=8)
    f3.add_argument("--girth", type=int, default=8)
    f3.add_argument("--grid", type=int, default=2000)

    f5 = sub.add_parser("bench-fig5", parents=[common], help="RL-RQAOA against best-of-k RQAOA")
    f5.add_argument("--instances", help="directory written by `mine` (index.csv)")
    f5.add_argument("--count", type=int, default=3)
    f5.add_argument("--max-n", type=int, default=20)
    f5.add_argument("--runs", type=int, default=15)
    f5.add_argument("--episodes", type=int, default=1400)
    f5.add_argument("--rqaoa-runs", type=int, default=1400)
    f5.add_argument("--nc", type=int, default=8)
    f5.add_argument("--angle-init", choices=("energy_optimal", "random"), default="energy_optimal")

    f6 = sub.add_parser("bench-fig6", parents=[common], help="RL-RQAOA against RL-RONE learning curves")
    f6.add_argument("--count", type=int, default=5)
    f6.add_argument("--n", type=int, default=30)
    f6.add_argument("--runs", type=int, default=5)
    f6.add_argument("--episodes", type=int, default=1000)
    f6.add_argument("--nc", type=int, default=8)
    f6.add_argument("--no-exact", action="store_true")

    ls = sub.add_parser("landscape", parents=[common], help="depth-1 energy on an (alpha, gamma) grid")
    ls.add_argument("instance")
    ls.add_argument("--alpha-points", type=int, default=90)
    ls.add_argument("--gamma-points", type=int, default=180)
    return p


COMMANDS = {
    "generate": cmd_generate, "exact": cmd_exact, "rqaoa": cmd_rqaoa,
    "rl-rqaoa": lambda a, o, i: cmd_rl(a, o, i, "rlrqaoa"),
    "rl-rone": lambda a, o, i: cmd_rl(a, o, i, "rlrone"),
    "mine": cmd_mine, "bench-fig3": cmd_bench_fig3, "bench-fig5": cmd_bench_fig5,
    "bench-fig6": cmd_bench_fig6, "landscape": cmd_landscape,
}


def _replay_argv(manifest_path, out_override) -> list[str]:
    try:
        doc = json.loads(Path(manifest_path).read_text())
        argv = list(doc["argv"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MalformedInstance(f"cannot read manifest {manifest_path}: {exc}") from exc
    if out_override:
        argv += ["--out", out_override]
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.from_manifest:
            argv = _replay_argv(args.from_manifest, args.out)
            args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required (see --help)")
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        out = _outdir(args)
        info = {"command": args.command, "argv": argv, "config": {k: v for k, v in vars(args).items()
                                                                   if k not in ("from_manifest",)},
                "version": __version__, "backend": backend_name(), "python": platform.python_version(),
                "numpy": np.__version__, "seed": args.seed, "inputs": {},
                "started": datetime.now(timezone.utc).isoformat()}
        t0 = time.perf_counter()
        COMMANDS[args.command](args, out, info)
        info["finished"] = datetime.now(timezone.utc).isoformat()
        info["elapsed_s"] = time.perf_counter() - t0
        _write_json(out / "manifest.json", info)
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedInstance as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except Infeasible as exc:
        print(f"error: infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NotAvailable as exc:
        print(f"error: not available: {exc}", file=sys.stderr)
        return EXIT_NOT_AVAILABLE
    except SizeLimit as exc:
        print(f"error: size limit: {exc}", file=sys.stderr)
        return EXIT_SIZE_LIMIT
    except (RqaoaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
