"""Closed-form robust secure beamforming and the two comparison baselines.

Optimal structure: every information beam points along its own estimated
channel, no artificial noise is sent, and user k gets power
``gamma_k sigma_k^2 / (||h~_k|| - eps_k)^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelSet, _c2l, _l2c
from .hermitian import HermitianMatrix

ROBUST, NON_ROBUST, AN_SPLIT = "robust", "non_robust", "an_split"


class InfeasibleGeometryError(ValueError):
    def __init__(self, user: int, norm: float, radius: float):
        super().__init__(
            f"user {user}: error radius {radius:.6g} is not below estimate norm {norm:.6g}"
        )
        self.user = user


@dataclass(frozen=True)
class TargetSinrs:
    """Linear-scale SINR targets: ``gamma`` for users, ``gamma_e`` ceilings for Eve."""

    gamma: np.ndarray
    gamma_e: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        ge = np.broadcast_to(np.asarray(self.gamma_e, dtype=float), g.shape).copy()
        if np.any(g <= 0) or np.any(ge <= 0):
            raise ValueError("SINR targets must be positive")
        if np.any(ge >= g):
            raise ValueError("Eve SINR ceiling must be below the user target for every user")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "gamma_e", ge)

    @classmethod
    def uniform(cls, k: int, gamma: float, gamma_e: float) -> "TargetSinrs":
        return cls(np.full(k, float(gamma)), np.full(k, float(gamma_e)))


@dataclass(frozen=True, eq=False)
class BeamformingSolution:
    """Beam directions, powers and P2 multipliers.

    Multipliers that are undefined for a user (zero error radius, or a
    baseline method) are NaN and serialise as ``null``.
    """

    info_directions: np.ndarray  # (K, N) unit rows
    info_powers: np.ndarray  # (K,)
    an_direction: Optional[np.ndarray]
    an_power: float
    multipliers_s: np.ndarray
    multipliers_e: np.ndarray
    dual_xi: np.ndarray
    method_tag: str

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.info_directions, dtype=complex))
        if not np.allclose(np.linalg.norm(d, axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("information directions must have unit norm")
        p = np.asarray(self.info_powers, dtype=float)
        if np.any(p < 0) or self.an_power < 0:
            raise ValueError("powers must be nonnegative")
        if self.method_tag == ROBUST and self.an_power != 0.0:
            raise ValueError("robust solution carries no artificial noise")
        if self.an_direction is not None:
            w = np.asarray(self.an_direction, dtype=complex)
            if abs(np.linalg.norm(w) - 1.0) > 1e-12:
                raise ValueError("AN direction must have unit norm")
            object.__setattr__(self, "an_direction", w)
        object.__setattr__(self, "info_directions", d)
        object.__setattr__(self, "info_powers", p)
        for name in ("multipliers_s", "multipliers_e", "dual_xi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def n_users(self) -> int:
        return self.info_powers.size

    @property
    def n_antennas(self) -> int:
        return self.info_directions.shape[1]

    @property
    def total_power(self) -> float:
        return float(self.an_power + self.info_powers.sum())

    @property
    def beams(self) -> np.ndarray:
        """Information beamformers ``s_k = sqrt(P_k) u_k`` as rows."""
        return np.sqrt(self.info_powers)[:, None] * self.info_directions

    @property
    def an_beam(self) -> np.ndarray:
        if self.an_direction is None:
            return np.zeros(self.n_antennas, dtype=complex)
        return np.sqrt(self.an_power) * self.an_direction

    def to_dict(self) -> dict:
        return {
            "method_tag": self.method_tag,
            "info_directions": [_c2l(v) for v in self.info_directions],
            "info_powers": self.info_powers.tolist(),
            "an_direction": None if self.an_direction is None else _c2l(self.an_direction),
            "an_power": self.an_power,
            "total_power": self.total_power,
            "multipliers_s": _nan2none(self.multipliers_s),
            "multipliers_e": _nan2none(self.multipliers_e),
            "dual_xi": _nan2none(self.dual_xi),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BeamformingSolution":
        an = d.get("an_direction")
        return cls(
            info_directions=np.array([_l2c(v) for v in d["info_directions"]]),
            info_powers=np.asarray(d["info_powers"], dtype=float),
            an_direction=None if an is None else _l2c(an),
            an_power=float(d["an_power"]),
            multipliers_s=_none2nan(d["multipliers_s"]),
            multipliers_e=_none2nan(d["multipliers_e"]),
            dual_xi=_none2nan(d["dual_xi"]),
            method_tag=d["method_tag"],
        )


def _nan2none(a) -> list:
    return [None if np.isnan(x) else float(x) for x in a]


def _none2nan(a) -> np.ndarray:
    return np.array([np.nan if x is None else x for x in a], dtype=float)


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0):
        raise ValueError(f"zero-norm channel estimate for user {int(np.flatnonzero(norms == 0)[0])}")
    return m / norms[:, None]


def solve_robust(channels: ChannelSet, targets: TargetSinrs) -> BeamformingSolution:
    """Optimal robust solution in closed form.

    Users with a zero error radius fall back to the perfect-CSI power and
    report ``mu_s`` as NaN; a zero Eve radius likewise leaves ``mu_e`` NaN.
    """
    k = channels.n_users
    if targets.gamma.size != k:
        raise ValueError(f"got {targets.gamma.size} SINR targets for {k} users")
    est = channels.estimates
    norm2 = np.einsum("ij,ij->i", est.conj(), est).real
    norms = np.sqrt(norm2)
    eps = channels.error_radii
    for i in range(k):
        if eps[i] >= norms[i]:
            raise InfeasibleGeometryError(i, norms[i], eps[i])
    gamma, sigma2 = targets.gamma, channels.noise_vars
    # (||h|| - eps)^2 written as ||h||^2 (1 - r)^2 with r = eps/||h||: avoids
    # squaring a rounded square root
    r = eps / norms
    gap2 = norm2 * (1.0 - r) ** 2
    powers = gamma * sigma2 / gap2
    with np.errstate(divide="ignore", invalid="ignore"):
        mu_s = np.where(eps > 0, powers * (1.0 - r) / (gamma * r), np.nan)
    xi = gamma / gap2
    eps2_e = channels.eve_error_radius**2
    mu_e_val = channels.eve_noise_var / eps2_e if eps2_e > 0 else np.nan
    return BeamformingSolution(
        info_directions=_unit_rows(channels.estimates),
        info_powers=powers,
        an_direction=None,
        an_power=0.0,
        multipliers_s=mu_s,
        multipliers_e=np.full(k, mu_e_val),
        dual_xi=xi,
        method_tag=ROBUST,
    )


def solve_non_robust(channels: ChannelSet, targets: TargetSinrs) -> BeamformingSolution:
    """Treat the estimates as exact: ``P_k = gamma_k sigma_k^2 / ||h~_k||^2``."""
    k = channels.n_users
    dirs = _unit_rows(channels.estimates)
    powers = targets.gamma * channels.noise_vars / channels.estimate_norms**2
    nan = np.full(k, np.nan)
    return BeamformingSolution(dirs, powers, None, 0.0, nan, nan.copy(), nan.copy(), NON_ROBUST)


def solve_an_split(channels: ChannelSet, targets: TargetSinrs, an_fraction: float = 0.3) -> BeamformingSolution:
    """Spend ``an_fraction`` of the robust total on AN along h~_e, scale each
    information power by ``1 - an_fraction``. Total power is unchanged."""
    if not 0.0 <= an_fraction < 1.0:
        raise ValueError("an_fraction must lie in [0, 1)")
    base = solve_robust(channels, targets)
    an_power = an_fraction * float(base.info_powers.sum())
    eve = channels.eve_estimate
    nan = np.full(base.n_users, np.nan)
    return BeamformingSolution(
        info_directions=base.info_directions,
        info_powers=(1.0 - an_fraction) * base.info_powers,
        an_direction=eve / np.linalg.norm(eve) if an_power > 0 else None,
        an_power=an_power,
        multipliers_s=nan,
        multipliers_e=nan.copy(),
        dual_xi=nan.copy(),
        method_tag=AN_SPLIT,
    )


SOLVERS = {ROBUST: solve_robust, NON_ROBUST: solve_non_robust}


def solve(method: str, channels: ChannelSet, targets: TargetSinrs, an_fraction: float = 0.3) -> BeamformingSolution:
    if method == AN_SPLIT:
        return solve_an_split(channels, targets, an_fraction)
    try:
        return SOLVERS[method](channels, targets)
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None


def covariance_views(sol: BeamformingSolution) -> tuple[HermitianMatrix, list[HermitianMatrix]]:
    """``W_e = P_e w w^H`` and ``S_k = P_k u_k u_k^H``."""
    w = HermitianMatrix.outer(sol.an_beam)
    s = [HermitianMatrix.outer(v) for v in sol.beams]
    return w, s
