"""Scaled experiment recipes that emit long-format CSVs and one summary file each.

Every table is written with ``repr`` floats and a fixed row order, so a rerun
with the same arguments reproduces the files byte for byte. Wall-clock times
are kept out of the tables and go to the run manifest instead.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graph as _graph
from .graph import IsingInstance
from .instances import (EnsembleSpec, HardInstanceRecord, assign_weights, cage, derive_seed,
                        gen_random_regular, mine_hard, save_records)
from .rqaoa import RqaoaConfig, best_of_runs, brute_force_exact, run_many
from .trainer import TrainerConfig, train, vote_curve

FIG3_RUN_COLUMNS = ("weight_seed", "run", "energy", "exact_energy", "ratio", "ground_state", "ties_total",
                    "tied_iterations", "iterations")
FIG3_TIE_COLUMNS = ("weight_seed", "run", "iteration", "ties")
FIG3_SUMMARY_COLUMNS = ("weight_seed", "runs", "exact_energy", "degeneracy", "mean_ratio", "std_ratio",
                        "ground_state_prob", "tie_fraction", "mean_ties_per_iteration")
CURVE_LONG_COLUMNS = ("instance_id", "policy", "run", "episode", "energy", "best_so_far")
FIG5_SUMMARY_COLUMNS = ("instance_id", "n", "exact_energy", "rqaoa_best", "rqaoa_ratio", "rqaoa_runs_used",
                        "rlrqaoa_best", "rlrqaoa_ratio", "rlrqaoa_mean_best_ratio", "vote_final_ratio",
                        "rlrqaoa_beats_rqaoa")
FIG6_MEAN_COLUMNS = ("instance_id", "policy", "episode", "mean_best", "ci_low", "ci_high")
FIG6_SUMMARY_COLUMNS = ("instance_id", "n", "exact_energy", "episode", "rlrqaoa_mean_best",
                        "rlrone_mean_best", "rlrqaoa_ge_rlrone")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_table(path, columns, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_table(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


# -- tie statistics on cage graphs ------------------------------------------------------

@dataclass
class Fig3Seed:
    weight_seed: int
    exact_energy: float
    degeneracy: int
    ratios: np.ndarray
    ground_state_prob: float
    tie_fraction: float
    mean_ties: float


def bench_fig3(outdir, weight_seeds=(0, 1, 2, 3, 4), runs: int = 200, n_c: int = 8, d: int = 3,
               girth: int = 8, seed: int = 0, grid_n: int = 2000, jobs: int = 1) -> list[Fig3Seed]:
    """RQAOA statistics on a cage graph under several random +-1 weightings."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    g = cage(d, girth)
    run_rows, tie_rows, summary_rows, out = [], [], [], []
    for ws in weight_seeds:
        inst = assign_weights(g, "bimodal", np.random.default_rng(ws), seed=int(ws), graph=f"cage-{d}-{girth}")
        ex = brute_force_exact(inst)
        cfg = RqaoaConfig(n_c=n_c, grid_n=grid_n, seed=derive_seed(seed, ws))
        results = run_many(inst, cfg, runs, ex.energy, jobs)
        ratios, gs, tied, total_it, ties_sum = [], 0, 0, 0, 0
        for r in results:
            hit = abs(r.energy - ex.energy) <= 1e-9
            n_tied = sum(1 for t in r.tie_counts if t > 0)
            gs += hit
            tied += n_tied
            total_it += len(r.tie_counts)
            ties_sum += r.ties_total
            ratio = r.energy / ex.energy if ex.energy > 0 else math.nan
            ratios.append(ratio)
            run_rows.append((ws, r.run_index, r.energy, ex.energy, ratio, hit, r.ties_total, n_tied,
                             len(r.tie_counts)))
            tie_rows.extend((ws, r.run_index, i, t) for i, t in enumerate(r.tie_counts))
        ratios = np.array(ratios)
        item = Fig3Seed(int(ws), ex.energy, ex.degeneracy, ratios, gs / runs,
                        tied / total_it if total_it else 0.0, ties_sum / total_it if total_it else 0.0)
        out.append(item)
        summary_rows.append((ws, runs, ex.energy, ex.degeneracy, float(ratios.mean()), float(ratios.std()),
                             item.ground_state_prob, item.tie_fraction, item.mean_ties))
    write_table(outdir / "fig3_runs.csv", FIG3_RUN_COLUMNS, run_rows)
    write_table(outdir / "fig3_ties.csv", FIG3_TIE_COLUMNS, tie_rows)
    write_table(outdir / "fig3_summary.csv", FIG3_SUMMARY_COLUMNS, summary_rows)
    return out


# -- RL training fan-out ----------------------------------------------------------------

def _train_task(args):
    instance, policy, tcfg, rcfg, exact, run = args
    res = train(instance, policy, tcfg, rcfg, exact, run_index=run)
    return policy, run, res.energies(), res.best_so_far()


def train_runs(instance, policies, tcfg: TrainerConfig, rcfg: RqaoaConfig, runs: int,
               exact: float | None, jobs: int = 1) -> dict:
    """``{policy: (energies, best_so_far)}`` with arrays of shape (runs, episodes)."""
    tasks = [(instance, p, tcfg, rcfg, exact, r) for p in policies for r in range(runs)]
    if jobs <= 1:
        outs = [_train_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_train_task, tasks))
    res = {}
    for p in policies:
        rows = sorted((o for o in outs if o[0] == p), key=lambda o: o[1])
        res[p] = (np.array([o[2] for o in rows]).reshape(runs, -1),
                  np.array([o[3] for o in rows]).reshape(runs, -1))
    return res


def _curve_rows(iid, policy, energies, best):
    for r in range(energies.shape[0]):
        for e in range(energies.shape[1]):
            yield iid, policy, r, e, energies[r, e], best[r, e]


# -- RL-RQAOA against best-of-k RQAOA on hard instances ------------------------------------

def load_records(directory) -> list[HardInstanceRecord]:
    directory = Path(directory)
    out = []
    for row in read_table(directory / "index.csv"):
        inst = _graph.load(directory / f"{row['instance_id']}.json")
        out.append(HardInstanceRecord(row["instance_id"], inst, float(row["exact_energy"]),
                                      float(row["rqaoa_best"]), float(row["ratio"]),
                                      int(inst.metadata.get("runs_used", 0))))
    return out


def default_hard_records(count: int = 3, seed: int = 0, max_n: int = 20, run_budget: int = 1400,
                         n_c: int = 8, jobs: int = 1) -> list[HardInstanceRecord]:
    """Mine small hard instances: bimodal then gaussian, every degree from 3 to n - 1, n up to ``max_n``."""
    recs: list[HardInstanceRecord] = []
    cfg = RqaoaConfig(n_c=n_c)
    n_values = tuple(range(max(n_c + 2, 10), max_n + 1))
    for model in ("bimodal", "gaussian"):
        spec = EnsembleSpec(n_values, tuple(range(3, max_n)), model, 25, seed)
        recs += mine_hard(spec, run_budget, 0.95, cfg, jobs, max_records=count - len(recs))
        if len(recs) >= count:
            break
    return recs


def bench_fig5(outdir, records: list[HardInstanceRecord], runs: int = 15, episodes: int = 1400,
               rqaoa_runs: int = 1400, n_c: int = 8, seed: int = 0, angle_init: str = "energy_optimal",
               jobs: int = 1) -> list[dict]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_records(records, outdir / "instances")
    curve_rows, summary_rows, out = [], [], []
    for k, rec in enumerate(records):
        inst, exact = rec.instance, rec.exact_energy
        rcfg = RqaoaConfig(n_c=n_c, seed=derive_seed(seed, 0, k))
        rq = best_of_runs(inst, rcfg, rqaoa_runs, exact, stop_if_deterministic=True)
        tcfg = TrainerConfig(total_episodes=episodes, angle_init=angle_init, seed=derive_seed(seed, 1, k))
        energies, best = train_runs(inst, ("rlrqaoa",), tcfg, rcfg, runs, exact, jobs)["rlrqaoa"]
        curve_rows.extend(_curve_rows(rec.instance_id, "rlrqaoa", energies, best))
        rl_best = float(best[:, -1].max()) if best.size else -math.inf
        vote = vote_curve(best)[-1] if best.size else math.nan
        row = dict(instance_id=rec.instance_id, n=inst.n, exact_energy=exact, rqaoa_best=rq.energy,
                   rqaoa_ratio=rq.energy / exact, rqaoa_runs_used=rq.runs_used, rlrqaoa_best=rl_best,
                   rlrqaoa_ratio=rl_best / exact,
                   rlrqaoa_mean_best_ratio=float(best[:, -1].mean() / exact) if best.size else math.nan,
                   vote_final_ratio=vote / exact, rlrqaoa_beats_rqaoa=rl_best > rq.energy + 1e-9)
        out.append(row)
        summary_rows.append(tuple(row[c] for c in FIG5_SUMMARY_COLUMNS))
    write_table(outdir / "fig5_curves.csv", CURVE_LONG_COLUMNS, curve_rows)
    write_table(outdir / "fig5_summary.csv", FIG5_SUMMARY_COLUMNS, summary_rows)
    return out


# -- RL-RQAOA against RL-RONE ------------------------------------------------------------

def fig6_instances(count: int = 5, n: int = 30, d: int = 3, seed: int = 0) -> list[tuple[str, IsingInstance]]:
    out = []
    for j in range(count):
        s = derive_seed(seed, 6, n, d, j)
        rng = np.random.default_rng(s)
        iid = f"bimodal-n{n}-d{d}-{j:03d}"
        out.append((iid, assign_weights(gen_random_regular(n, d, rng), "bimodal", rng, seed=s, d=d,
                                        instance_id=iid)))
    return out


def bench_fig6(outdir, instances=None, runs: int = 5, episodes: int = 1000, n_c: int = 8, seed: int = 0,
               exact: bool = True, jobs: int = 1) -> list[dict]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    instances = fig6_instances(seed=seed) if instances is None else instances
    curve_rows, mean_rows, summary_rows, out = [], [], [], []
    for k, (iid, inst) in enumerate(instances):
        _graph.save(inst, outdir / f"{iid}.json")
        ex = brute_force_exact(inst).energy if exact else None
        rcfg = RqaoaConfig(n_c=n_c, seed=derive_seed(seed, 0, k))
        tcfg = TrainerConfig(total_episodes=episodes, seed=derive_seed(seed, 1, k))
        res = train_runs(inst, ("rlrqaoa", "rlrone"), tcfg, rcfg, runs, ex, jobs)
        means = {}
        for policy, (energies, best) in res.items():
            curve_rows.extend(_curve_rows(iid, policy, energies, best))
            mean = best.mean(axis=0)
            half = 1.96 * best.std(axis=0, ddof=1) / math.sqrt(runs) if runs > 1 else np.zeros_like(mean)
            means[policy] = mean
            mean_rows.extend((iid, policy, e, mean[e], mean[e] - half[e], mean[e] + half[e])
                             for e in range(len(mean)))
        last = episodes - 1
        row = dict(instance_id=iid, n=inst.n, exact_energy=ex, episode=last,
                   rlrqaoa_mean_best=float(means["rlrqaoa"][last]) if episodes else math.nan,
                   rlrone_mean_best=float(means["rlrone"][last]) if episodes else math.nan)
        row["rlrqaoa_ge_rlrone"] = row["rlrqaoa_mean_best"] >= row["rlrone_mean_best"]
        out.append(row)
        summary_rows.append(tuple(row[c] for c in FIG6_SUMMARY_COLUMNS))
    write_table(outdir / "fig6_curves.csv", CURVE_LONG_COLUMNS, curve_rows)
    write_table(outdir / "fig6_mean.csv", FIG6_MEAN_COLUMNS, mean_rows)
    write_table(outdir / "fig6_summary.csv", FIG6_SUMMARY_COLUMNS, summary_rows)
    return out
