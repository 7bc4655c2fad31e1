"""Experiment orchestration: trials, metrics files, reproducible outputs.

Output files per training spec (CSV headers are part of the interface):

* ``<name>.csv``        per-trial rows: trial,round,train_loss,test_accuracy,
                        epsilon_item,epsilon_client
* ``<name>_summary.csv`` mean/std over trials: round,train_loss_mean,
                        train_loss_std,test_accuracy_mean,test_accuracy_std
* ``<name>.json``       plot-agnostic series file: {"name": ..., "series":
                        [{"label": ..., "x": [...], "y": [...]}, ...]}

Floats are written with repr (shortest round-trip form), so a given (spec,
seed) pair always produces byte-identical files, serial or parallel.
"""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import privacy
from .config import (ExperimentSpec, FIG2_CONFIGS, build_transport,
                     preset_specs, resolve_data_dir, validate_spec)
from .data import load_mnist, partition
from .errors import ConfigurationError
from .fedavg import TrainingResult, run_training
from .streams import derive_rng

METRICS_HEADER = ["trial", "round", "train_loss", "test_accuracy",
                  "epsilon_item", "epsilon_client"]
SUMMARY_HEADER = ["round", "train_loss_mean", "train_loss_std",
                  "test_accuracy_mean", "test_accuracy_std"]
ACCOUNTANT_HEADER = ["round", "sequential", "advanced", "renyi"]
BOUND_HEADER = ["t", "bound"]
HISTOGRAM_HEADER = ["bin_left", "bin_right", "count"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip form, plain float
    return str(value)


def write_csv(path: str, header: list[str], rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_series_json(path: str, name: str, series: list[dict]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump({"name": name, "series": series}, f, indent=2, sort_keys=True)
        f.write("\n")


def run_single_trial(spec: ExperimentSpec, trial: int) -> TrainingResult:
    """One training trial; pure function of (spec, trial)."""
    data_rng = derive_rng(spec.seed, "data", trial)
    train, test = load_mnist(resolve_data_dir(spec.data_dir),
                             n_train=spec.n_train, n_test=spec.n_test,
                             rng=data_rng)
    shards = partition(train, spec.fl.m_clients, spec.fl.partition,
                       derive_rng(spec.seed, "partition", trial))
    transport = build_transport(spec.transport)
    return run_training(spec.fl, transport, shards, train, test,
                        master_seed=spec.seed, trial=trial, delta=spec.delta)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> dict:
    """Run all trials of a spec and write metrics files.

    Returns a small summary dict (mean final loss/accuracy) for callers.
    """
    errors = validate_spec(spec)
    if errors:
        raise ConfigurationError("invalid spec:\n  " + "\n  ".join(errors))

    trials = list(range(spec.trials))
    if jobs > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_single_trial, [spec] * spec.trials, trials))
    else:
        results = [run_single_trial(spec, t) for t in trials]

    rows = []
    for trial, res in zip(trials, results):
        for m in res.metrics:
            rows.append([trial, m.round, m.train_loss, m.test_accuracy,
                         m.epsilon_item, m.epsilon_client])
    out_csv = os.path.join(spec.output_dir, f"{spec.name}.csv")
    write_csv(out_csv, METRICS_HEADER, rows)

    loss = np.array([[m.train_loss for m in r.metrics] for r in results])
    acc = np.array([[m.test_accuracy for m in r.metrics] for r in results])
    rounds = np.arange(1, spec.fl.rounds + 1)
    summary_rows = [
        [int(t), float(lm), float(ls), float(am), float(as_)]
        for t, lm, ls, am, as_ in zip(rounds, loss.mean(0), loss.std(0),
                                      acc.mean(0), acc.std(0))
    ]
    write_csv(os.path.join(spec.output_dir, f"{spec.name}_summary.csv"),
              SUMMARY_HEADER, summary_rows)

    write_series_json(
        os.path.join(spec.output_dir, f"{spec.name}.json"), spec.name,
        [{"label": "train_loss_mean", "x": rounds.tolist(),
          "y": loss.mean(0).tolist()},
         {"label": "test_accuracy_mean", "x": rounds.tolist(),
          "y": acc.mean(0).tolist()}])

    return {
        "name": spec.name,
        "final_train_loss_mean": float(loss[:, -1].mean()),
        "final_test_accuracy_mean": float(acc[:, -1].mean()),
        "metrics_csv": out_csv,
    }


def run_accountant_csv(path: str, rounds: int, delta: float, q: float,
                       clip_norm: float, gap: float, rule: str = "all") -> None:
    """Write per-round composed epsilons; rule 'all' emits all three columns."""
    table = privacy.accountant_table(rounds, delta, q, clip_norm, gap)
    if rule == "all":
        write_csv(path, ACCOUNTANT_HEADER,
                  [[int(r[0]), r[1], r[2], r[3]] for r in table])
        return
    col = {"sequential": 1, "advanced": 2, "renyi": 3}[rule]
    write_csv(path, ["round", rule], [[int(r[0]), r[col]] for r in table])


def run_fig2_preset(output_dir: str, rounds: int = 1000,
                    delta: float = 1e-5, clip_norm: float = 1.0) -> list[str]:
    """The three composition-comparison CSVs (one per accountant config)."""
    paths = []
    for label, q, gap in FIG2_CONFIGS:
        path = os.path.join(output_dir, f"{label}.csv")
        run_accountant_csv(path, rounds, delta, q, clip_norm, gap, rule="all")
        paths.append(path)
    return paths


def run_preset(preset: str, output_dir: str, trials: int = 5,
               rounds: int = 200, seed: int = 2024, jobs: int = 1) -> list[dict]:
    """Run a named preset end to end, returning one summary per spec."""
    if preset == "fig2":
        return [{"name": p} for p in run_fig2_preset(output_dir)]
    summaries = []
    for spec in preset_specs(preset, trials=trials, rounds=rounds, seed=seed):
        spec.output_dir = output_dir
        summaries.append(run_experiment(spec, jobs=jobs))
    return summaries
