"""Per-trial performance quantities: realised SINRs, secret rates, power."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .beamformer import BeamformingSolution
from .channel import ChannelSet, Seed, sample_all_true_channels


def to_db(x: float) -> float:
    """10 log10(x); -inf for x == 0."""
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def instantaneous_sinrs(true_channels: np.ndarray, sol: BeamformingSolution, noise_vars,
                        eve_noise_var: float) -> tuple[np.ndarray, np.ndarray]:
    """Realised SINRs at every user and at Eve for every target.

    ``true_channels`` has shape (K+1, N) with Eve in the last row.
    """
    h = np.asarray(true_channels, dtype=complex)
    k = sol.n_users
    if h.shape != (k + 1, sol.n_antennas):
        raise ValueError(f"true_channels must have shape {(k + 1, sol.n_antennas)}, got {h.shape}")
    gains = np.abs(h.conj() @ sol.beams.T) ** 2  # gains[r, i] = |h_r^H s_i|^2
    an = np.abs(h.conj() @ sol.an_beam) ** 2
    noise = np.append(np.broadcast_to(np.asarray(noise_vars, dtype=float), (k,)), eve_noise_var)
    tot = gains.sum(axis=1)

    users = np.empty(k)
    for i in range(k):
        users[i] = gains[i, i] / (tot[i] - gains[i, i] + an[i] + noise[i])
    ge = gains[k]
    eve = ge / (tot[k] - ge + an[k] + noise[k])
    return users, eve


def secret_rate_unclamped(user_sinr, eve_sinr):
    return np.log2(1.0 + np.asarray(user_sinr)) - np.log2(1.0 + np.asarray(eve_sinr))


def secret_rate(user_sinr, eve_sinr):
    """``max(0, log2(1 + user) - log2(1 + eve))``; scalars in, scalar out."""
    if np.any(np.asarray(user_sinr) < 0) or np.any(np.asarray(eve_sinr) < 0):
        raise ValueError("SINRs must be nonnegative")
    r = np.maximum(secret_rate_unclamped(user_sinr, eve_sinr), 0.0)
    return float(r) if np.ndim(r) == 0 else r


@dataclass(frozen=True, eq=False)
class TrialMetrics:
    user_sinrs: np.ndarray
    eve_sinrs_per_target: np.ndarray
    secret_rates: np.ndarray
    secret_rates_unclamped: np.ndarray
    secret_sum_rate: float
    total_power: float
    eve_sinr: float  # linear, aggregated over targets
    eve_sinr_db_avg: float

    def __eq__(self, other):
        if not isinstance(other, TrialMetrics):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f), equal_nan=True)
                   for f in self.__dataclass_fields__)


def trial_metrics(channels: ChannelSet, sol: BeamformingSolution, rng_seed: Seed = None,
                  true_channels: Optional[np.ndarray] = None, eve_aggregate: str = "mean",
                  error_sampler: str = "ball") -> TrialMetrics:
    """Metrics for one realisation of the true channels.

    Uses ``true_channels`` if given, else the set's own physical channels,
    else draws one realisation from the error balls.
    """
    if true_channels is None:
        true_channels = channels.true_channels
    if true_channels is None:
        true_channels = sample_all_true_channels(channels, rng_seed, error_sampler)
    users, eve = instantaneous_sinrs(true_channels, sol, channels.noise_vars, channels.eve_noise_var)
    raw = secret_rate_unclamped(users, eve)
    rates = np.maximum(raw, 0.0)
    if eve_aggregate == "mean":
        e = math.fsum(eve) / eve.size
    elif eve_aggregate == "max":
        e = float(eve.max())
    else:
        raise ValueError(f"unknown eve_aggregate {eve_aggregate!r}")
    return TrialMetrics(
        user_sinrs=users,
        eve_sinrs_per_target=eve,
        secret_rates=rates,
        secret_rates_unclamped=raw,
        secret_sum_rate=math.fsum(rates),
        total_power=sol.total_power,
        eve_sinr=e,
        eve_sinr_db_avg=to_db(e),
    )


TRIAL_COLUMNS = ["trial", "method", "total_power", "secret_sum_rate", "eve_sinr", "eve_sinr_db",
                 "min_user_sinr", "min_secret_rate_unclamped"]


def write_trial_rows(rows: Iterable[tuple[int, str, TrialMetrics]], stream=None) -> str:
    """One CSV row per (trial, method); returns the text if no stream given."""
    out = stream if stream is not None else io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for trial, method, m in rows:
        w.writerow([trial, method, repr(m.total_power), repr(m.secret_sum_rate), repr(m.eve_sinr),
                    repr(m.eve_sinr_db_avg), repr(float(m.user_sinrs.min())),
                    repr(float(m.secret_rates_unclamped.min()))])
    return out.getvalue() if stream is None else ""
