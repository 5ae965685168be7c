"""Seeded Monte Carlo runs over scenarios and parameter sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import __version__
from ..beamformer import BeamformingSolution, TargetSinrs, solve
from ..channel import ChannelSet, make_channel_set, sample_all_true_channels, trial_seed
from ..config import ScenarioConfig, SweepSpec
from ..metrics import TrialMetrics, to_db, trial_metrics
from ..verify.worst_case import worst_case_eve_sinr, worst_case_user_sinr

WORKERS_ENV = "ROBUST_BDMA_WORKERS"
FEAS_RTOL = 1e-9
CSV_COLUMNS = [
    "sweep_value", "method", "mean_total_power", "se_total_power", "mean_secret_sum_rate",
    "se_secret_sum_rate", "mean_eve_sinr_db", "se_eve_sinr_db", "frac_worstcase_feasible",
    "n_trials", "seed",
]


class SweepError(RuntimeError):
    def __init__(self, value, cause: Exception):
        super().__init__(f"sweep value {value!r}: {cause}")
        self.value = value
        self.cause = cause


def resolve_workers(n_workers: Optional[int] = None) -> int:
    """Explicit count, else the environment override, else 1."""
    if n_workers is None:
        env = os.environ.get(WORKERS_ENV)
        n_workers = int(env) if env else 1
    if n_workers == 0:
        n_workers = os.cpu_count() or 1
    if n_workers < 1:
        raise ValueError("worker count must be positive (0 means all CPUs)")
    return n_workers


def targets_for(config: ScenarioConfig) -> TargetSinrs:
    return TargetSinrs.uniform(config.n_users, config.gamma, config.gamma_e)


def worstcase_feasible(channels: ChannelSet, sol: BeamformingSolution, targets: TargetSinrs,
                       rtol: float = FEAS_RTOL) -> bool:
    """All user SINRs >= gamma and all Eve SINRs <= gamma_e over the error balls."""
    for k in range(sol.n_users):
        if worst_case_user_sinr(channels, sol, k).sinr < targets.gamma[k] * (1 - rtol):
            return False
        if worst_case_eve_sinr(channels, sol, k).sinr > targets.gamma_e[k] * (1 + rtol):
            return False
    return True


def _solutions(config: ScenarioConfig, channels: ChannelSet) -> dict:
    targets = targets_for(config)
    return {m: solve(m, channels, targets, config.an_fraction) for m in config.methods}


def _run_trials(config: ScenarioConfig, trials: range):
    """Worker body: metrics (and, in physical mode, feasibility) per trial."""
    targets = targets_for(config)
    out = []
    fixed = None
    if config.channel_mode == "synthetic":
        chans = make_channel_set(config)
        fixed = (chans, _solutions(config, chans))
    for t in trials:
        if fixed is None:
            chans = make_channel_set(config, trial=t)
            sols = _solutions(config, chans)
            true = chans.true_channels
            feas = {m: worstcase_feasible(chans, s, targets) for m, s in sols.items()}
        else:
            chans, sols = fixed
            true = sample_all_true_channels(chans, trial_seed(config.base_seed, t, 0), config.error_sampler)
            feas = None
        mets = {m: trial_metrics(chans, s, true_channels=true, eve_aggregate=config.eve_aggregate)
                for m, s in sols.items()}
        out.append((t, mets, feas))
    return out


def _chunks(n: int, parts: int) -> list[range]:
    size = -(-n // parts)
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def mean_se(values) -> tuple[float, float]:
    """Mean and standard error; fsum keeps the result independent of chunking."""
    x = [float(v) for v in values]
    n = len(x)
    mean = math.fsum(x) / n
    if n < 2 or not math.isfinite(mean):
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in x) / (n - 1)
    return mean, math.sqrt(var / n)


@dataclass
class MethodAggregate:
    method: str
    mean_total_power: float
    se_total_power: float
    mean_secret_sum_rate: float
    se_secret_sum_rate: float
    mean_eve_sinr_db: float
    se_eve_sinr_db: float
    frac_worstcase_feasible: float
    n_trials: int


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    aggregates: dict
    trials: dict = field(repr=False)  # method -> list[TrialMetrics], trial order

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "aggregates": {m: vars(a) for m, a in self.aggregates.items()},
            "provenance": provenance(self.config),
        }


def provenance(config: ScenarioConfig) -> dict:
    return {"config_hash": config.digest(), "seed": config.base_seed, "version": __version__}


def _eve_db(trials: list[TrialMetrics], how: str) -> tuple[float, float]:
    if how == "mean_of_db":
        return mean_se([m.eve_sinr_db_avg for m in trials])
    mean, se = mean_se([m.eve_sinr for m in trials])
    if mean <= 0:
        return to_db(mean), 0.0
    # delta method: d(10 log10 x) = 10 / (x ln 10) dx
    return to_db(mean), 10.0 * se / (mean * math.log(10.0))


def aggregate(config: ScenarioConfig, trials: dict, feasible: dict) -> dict:
    out = {}
    for m in config.methods:
        rows = trials[m]
        p, p_se = mean_se([r.total_power for r in rows])
        s, s_se = mean_se([r.secret_sum_rate for r in rows])
        e, e_se = _eve_db(rows, config.eve_average)
        f = math.fsum(1.0 for ok in feasible[m] if ok) / len(feasible[m])
        out[m] = MethodAggregate(m, p, p_se, s, s_se, e, e_se, f, len(rows))
    return out


def run_scenario(config: ScenarioConfig, n_workers: Optional[int] = None) -> ScenarioResult:
    """All trials of one scenario, split across a process pool.

    Every trial derives its random streams from ``(base_seed, trial)`` and
    the reduction runs in trial order, so the worker count cannot change
    any output bit.
    """
    config.validate()
    workers = min(resolve_workers(n_workers), config.n_trials)
    chunks = _chunks(config.n_trials, workers)
    if workers == 1:
        parts = [_run_trials(config, c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_trials, [config] * len(chunks), chunks))
    records = sorted((r for part in parts for r in part), key=lambda r: r[0])

    trials = {m: [r[1][m] for r in records] for m in config.methods}
    if config.channel_mode == "synthetic":
        chans = make_channel_set(config)
        targets = targets_for(config)
        once = {m: worstcase_feasible(chans, s, targets) for m, s in _solutions(config, chans).items()}
        feasible = {m: [once[m]] * config.n_trials for m in config.methods}
    else:
        feasible = {m: [r[2][m] for r in records] for m in config.methods}
    return ScenarioResult(config, aggregate(config, trials, feasible), trials)


@dataclass
class SweepResult:
    spec: SweepSpec
    results: list  # ScenarioResult per value

    @property
    def rows(self) -> list[dict]:
        out = []
        for value, res in zip(self.spec.values, self.results):
            for m in res.config.methods:
                a = res.aggregates[m]
                out.append({
                    "sweep_value": value, "method": m,
                    "mean_total_power": a.mean_total_power, "se_total_power": a.se_total_power,
                    "mean_secret_sum_rate": a.mean_secret_sum_rate,
                    "se_secret_sum_rate": a.se_secret_sum_rate,
                    "mean_eve_sinr_db": a.mean_eve_sinr_db, "se_eve_sinr_db": a.se_eve_sinr_db,
                    "frac_worstcase_feasible": a.frac_worstcase_feasible,
                    "n_trials": a.n_trials, "seed": res.config.base_seed,
                })
        return out

    def series(self, method: str, column: str) -> list:
        return [r[column] for r in self.rows if r["method"] == method]

    def provenance(self) -> dict:
        d = provenance(self.spec.fixed)
        d["swept_parameter"] = self.spec.swept_parameter
        d["values"] = list(self.spec.values)
        return d

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "provenance": self.provenance(),
            "fixed": self.spec.fixed.to_dict(),
            "rows": [{k: _json_float(v) for k, v in r.items()} for r in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, directory, name: str) -> tuple[str, str]:
        os.makedirs(directory, exist_ok=True)
        paths = (os.path.join(directory, f"{name}.csv"), os.path.join(directory, f"{name}.json"))
        for path, text in zip(paths, (self.to_csv(), self.to_json())):
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return paths


def _fmt(v) -> str:
    # repr round-trips every float exactly
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _json_float(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def run_sweep(spec: SweepSpec, n_workers: Optional[int] = None) -> SweepResult:
    results = []
    for v in spec.values:
        try:
            results.append(run_scenario(spec.config_at(v), n_workers))
        except Exception as exc:
            raise SweepError(v, exc) from exc
    return SweepResult(spec, results)
