"""Built-in desk-scale sweeps and their trend self-checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from ..beamformer import solve_robust
from ..channel import make_channel_set
from ..config import ScenarioConfig, SweepSpec
from ..verify.structure import check_solution_rank, kkt_residuals
from .engine import SweepResult, run_sweep, targets_for

G_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
KKT_TOL = 1e-9


class SelfCheckError(RuntimeError):
    pass


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    spec: SweepSpec
    check: Callable[[SweepResult], list]


def _base(scale: str, trials: Optional[int]) -> ScenarioConfig:
    if scale == "desk":
        cfg = ScenarioConfig(n_antennas=64, n_users=8, gamma_db=10.0, g=0.5, n_trials=2000)
    elif scale == "full":
        cfg = ScenarioConfig(n_antennas=128, n_users=30, gamma_db=10.0, g=0.5, n_trials=10000)
    else:
        raise ValueError(f"unknown scale {scale!r}")
    return cfg if trials is None else cfg.replace(n_trials=trials)


def _increasing(xs):
    return all(b > a for a, b in zip(xs, xs[1:]))


def _decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


def _fails(cond: bool, msg: str) -> list:
    return [] if cond else [msg]


def check_eve_below_0db(res: SweepResult) -> list:
    out = []
    for m in res.spec.fixed.methods:
        out += _fails(all(v < 0 for v in res.series(m, "mean_eve_sinr_db")),
                      f"{m}: mean Eve SINR not below 0 dB everywhere")
    return out


def robust_beats_an(res: SweepResult, n_se: float = 3.0) -> list:
    r = res.rows
    rob = [x for x in r if x["method"] == "robust"]
    an = [x for x in r if x["method"] == "an_split"]
    out = []
    for a, b in zip(rob, an):
        gap = a["mean_secret_sum_rate"] - b["mean_secret_sum_rate"]
        se = math.hypot(a["se_secret_sum_rate"], b["se_secret_sum_rate"])
        out += _fails(gap > n_se * se, f"sweep value {a['sweep_value']}: robust secret sum-rate "
                                        f"exceeds AN-split by {gap:.4g}, needs > {n_se * se:.4g}")
    return out


def _rate_increasing(res):
    return _fails(_increasing(res.series("robust", "mean_secret_sum_rate")),
                  "robust secret sum-rate not increasing")


def _fig6(res):
    return (_fails(_increasing(res.series("robust", "mean_total_power")), "robust power not increasing in g")
            + _fails(len(set(res.series("non_robust", "mean_total_power"))) == 1, "non-robust power varies with g"))


def _fig7(res):
    return _fails(_decreasing(res.series("robust", "mean_total_power")), "robust power not decreasing in N")


def _fig8(res):
    return _fails(_increasing(res.series("robust", "mean_total_power")), "robust power not increasing in K")


def presets(scale: str = "desk", trials: Optional[int] = None) -> dict:
    base = _base(scale, trials)
    if scale == "desk":
        n_vals, k_vals = (16, 32, 64, 128), (2, 4, 8, 16)
    else:
        n_vals, k_vals = (64, 128, 256), (10, 20, 30, 40)
    n_fixed = base
    k_fixed = base
    specs = [
        ("fig2", "Eve SINR versus g", SweepSpec("g", G_GRID, base), check_eve_below_0db),
        ("fig3", "secret sum-rate versus g", SweepSpec("g", G_GRID, base), robust_beats_an),
        ("fig4", "secret sum-rate versus N", SweepSpec("N", n_vals, n_fixed), _rate_increasing),
        ("fig5", "secret sum-rate versus K", SweepSpec("K", k_vals, k_fixed), _rate_increasing),
        ("fig6", "transmit power versus g", SweepSpec("g", G_GRID, base), _fig6),
        ("fig7", "transmit power versus N", SweepSpec("N", n_vals, n_fixed), _fig7),
        ("fig8", "transmit power versus K", SweepSpec("K", k_vals, k_fixed), _fig8),
    ]
    return {name: Preset(name, desc, spec, chk) for name, desc, spec, chk in specs}


def structure_checks(config: ScenarioConfig) -> list:
    """Rank structure and KKT residuals of one robust solution."""
    chans = make_channel_set(config)
    targets = targets_for(config)
    sol = solve_robust(chans, targets)
    out = [f"rank structure: {c.name} user {c.user} {c.detail}" for c in check_solution_rank(chans, sol, targets).failures]
    kkt = kkt_residuals(chans, sol, targets)
    if kkt.applicable and not kkt.max_relative() < KKT_TOL:
        out.append(f"KKT residual {kkt.max_relative():.3g} exceeds {KKT_TOL}")
    return out


def run_preset(name: str, scale: str = "desk", trials: Optional[int] = None,
               n_workers: Optional[int] = None) -> tuple[SweepResult, list]:
    """Run one preset; returns the sweep and the list of failed self-checks."""
    table = presets(scale, trials)
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(table)}")
    p = table[name]
    failures = structure_checks(p.spec.config_at(p.spec.values[0]))
    res = run_sweep(p.spec, n_workers)
    return res, failures + p.check(res)
