"""ULA channels, DFT-beam (BDMA) estimates and bounded error balls."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .config import ScenarioConfig, SpreadSpec

Seed = Union[int, np.random.Generator, np.random.SeedSequence, None]
EVE = "eve"

ORTHOGONALITY_TOL = 1e-9


class ChannelError(ValueError):
    pass


def rng_from(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_seed(base_seed: int, trial: int, stream: int = 0) -> np.random.SeedSequence:
    """Independent stream per (base seed, trial, stream) triple."""
    return np.random.SeedSequence([int(base_seed), int(trial), int(stream)])


@dataclass(frozen=True)
class UlaGeometry:
    n_antennas: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ChannelError("n_antennas must be positive")
        if not 0.0 < self.spacing_over_wavelength <= 0.5:
            raise ChannelError("antenna spacing must lie in (0, 0.5] wavelengths")


@dataclass(frozen=True)
class AngularSpread:
    center: float
    width: float = 0.0
    spectrum: str = "uniform"
    std: Optional[float] = None

    def __post_init__(self):
        if self.width < 0:
            raise ChannelError("spread width must be nonnegative")
        lo, hi = self.center - self.width / 2, self.center + self.width / 2
        if not (-np.pi / 2 < lo and hi < np.pi / 2):
            raise ChannelError(f"spread [{lo:.4f}, {hi:.4f}] rad leaves (-pi/2, pi/2)")
        if self.spectrum not in ("uniform", "truncated_gaussian"):
            raise ChannelError(f"unknown spectrum {self.spectrum!r}")
        if self.spectrum == "truncated_gaussian" and (self.std is None or self.std <= 0):
            raise ChannelError("truncated_gaussian spectrum needs a positive std")

    @classmethod
    def from_spec(cls, s: SpreadSpec) -> "AngularSpread":
        std = None if s.std_deg is None else np.deg2rad(s.std_deg)
        return cls(np.deg2rad(s.center_deg), np.deg2rad(s.width_deg), s.spectrum, std)


def steering_vector(geometry: UlaGeometry, theta: float) -> np.ndarray:
    """Array response with entries ``exp(-j 2 pi (d/lambda) n sin(theta))``."""
    if not -np.pi / 2 < theta < np.pi / 2:
        raise ChannelError(f"theta={theta} outside (-pi/2, pi/2)")
    n = np.arange(geometry.n_antennas)
    return np.exp(-2j * np.pi * geometry.spacing_over_wavelength * n * np.sin(theta))


def _spectrum_weights(spread: AngularSpread, thetas: np.ndarray, dtheta: float) -> np.ndarray:
    if spread.spectrum == "uniform":
        w = np.ones_like(thetas)
    else:
        w = np.exp(-0.5 * ((thetas - spread.center) / spread.std) ** 2)
    # normalise so the discrete integral of alpha is 1
    return w / (w.sum() * dtheta)


def _smooth_phase(rng: np.random.Generator, u: np.ndarray, jitter: float, order: int = 4) -> np.ndarray:
    coef = rng.standard_normal((2, order)) / np.sqrt(order)
    m = np.arange(1, order + 1)[:, None]
    wobble = coef[0] @ np.cos(np.pi * m * u) + coef[1] @ np.sin(np.pi * m * u)
    return rng.uniform(0, 2 * np.pi) + jitter * wobble


def synthesize_channel(geometry: UlaGeometry, spread: AngularSpread, n_quadrature: int = 256,
                       rng_seed: Seed = None, phase_jitter: float = 0.0) -> np.ndarray:
    """Midpoint-rule discretisation of the angular channel integral.

    The spectrum integrates to one over the spread, so a point source gives a
    unit-gain steering vector. With ``phase_jitter > 0`` each ray carries a
    random phase that varies smoothly with angle (random common offset plus a
    low-order random Fourier series scaled by ``phase_jitter``); the result
    then converges under quadrature refinement for every realisation.
    """
    if n_quadrature < 8:
        raise ChannelError("n_quadrature must be at least 8")
    rng = rng_from(rng_seed)
    if spread.width == 0.0:
        phase = rng.uniform(0, 2 * np.pi) if phase_jitter > 0 else 0.0
        return np.exp(1j * phase) * steering_vector(geometry, spread.center)
    dtheta = spread.width / n_quadrature
    u = (np.arange(n_quadrature) + 0.5) / n_quadrature
    thetas = spread.center - spread.width / 2 + u * spread.width
    alpha = _spectrum_weights(spread, thetas, dtheta).astype(complex)
    if phase_jitter > 0:
        alpha *= np.exp(1j * _smooth_phase(rng, u, phase_jitter))
    n = np.arange(geometry.n_antennas)[:, None]
    a = np.exp(-2j * np.pi * geometry.spacing_over_wavelength * n * np.sin(thetas)[None, :])
    return a @ alpha * dtheta


def dft_column(n_antennas: int, index: int) -> np.ndarray:
    n = np.arange(n_antennas)
    return np.exp(-2j * np.pi * index * n / n_antennas) / np.sqrt(n_antennas)


def bdma_estimate(channel, assigned_dft_indices: Sequence[int]) -> tuple[np.ndarray, float]:
    """Project ``channel`` onto the span of its assigned unit-norm DFT columns."""
    h = np.asarray(channel, dtype=complex)
    idx = sorted(set(int(i) for i in assigned_dft_indices))
    if not idx:
        raise ChannelError("empty DFT index set")
    n = h.size
    if idx[0] < 0 or idx[-1] >= n:
        raise ChannelError(f"DFT indices must lie in [0, {n})")
    f = np.stack([dft_column(n, i) for i in idx], axis=1)
    est = f @ (f.conj().T @ h)
    return est, float(np.linalg.norm(h - est))


def dft_beam_angle(geometry: UlaGeometry, index: int) -> Optional[float]:
    """Angle whose steering vector is parallel to DFT column ``index``, or None
    when that beam is not visible (|sin theta| >= 1)."""
    n = geometry.n_antennas
    u = index / n
    if u >= 0.5:
        u -= 1.0
    s = u / geometry.spacing_over_wavelength
    if abs(s) >= 1.0:
        return None
    return float(np.arcsin(s))


def assign_dft_beams(geometry: UlaGeometry, centers: Sequence[float], beams_each: int = 1) -> list[list[int]]:
    """Greedy beam assignment: entities in ascending centre angle (ties by
    index) each take the nearest free DFT indices to their spatial frequency,
    lower index first on equal distance."""
    n = geometry.n_antennas
    if beams_each * len(centers) > n:
        raise ChannelError("not enough DFT beams for all users")
    order = sorted(range(len(centers)), key=lambda i: (centers[i], i))
    free = set(range(n))
    out: list[list[int]] = [[] for _ in centers]
    for i in order:
        f = (geometry.spacing_over_wavelength * np.sin(centers[i]) * n) % n
        for _ in range(beams_each):
            best = min(free, key=lambda m: (min(abs(m - f), n - abs(m - f)), m))
            free.remove(best)
            out[i].append(best)
    return out


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Estimated channels with their error-ball radii and noise variances."""

    estimates: np.ndarray  # (K, N)
    eve_estimate: np.ndarray  # (N,)
    error_radii: np.ndarray  # (K,)
    eve_error_radius: float
    noise_vars: np.ndarray  # (K,)
    eve_noise_var: float
    true_channels: Optional[np.ndarray] = field(default=None)  # (K+1, N), Eve last

    def __post_init__(self):
        est = np.atleast_2d(np.asarray(self.estimates, dtype=complex))
        eve = np.asarray(self.eve_estimate, dtype=complex)
        k, n = est.shape
        radii = np.broadcast_to(np.asarray(self.error_radii, dtype=float), (k,)).copy()
        noise = np.broadcast_to(np.asarray(self.noise_vars, dtype=float), (k,)).copy()
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "eve_estimate", eve)
        object.__setattr__(self, "error_radii", radii)
        object.__setattr__(self, "noise_vars", noise)
        object.__setattr__(self, "eve_error_radius", float(self.eve_error_radius))
        object.__setattr__(self, "eve_noise_var", float(self.eve_noise_var))
        if eve.shape != (n,):
            raise ChannelError("Eve estimate dimension does not match users")
        if np.any(radii < 0) or self.eve_error_radius < 0:
            raise ChannelError("error radii must be nonnegative")
        if np.any(noise <= 0) or self.eve_noise_var <= 0:
            raise ChannelError("noise variances must be positive")
        norms = np.linalg.norm(est, axis=1)
        for i in np.flatnonzero(radii >= norms):
            raise ChannelError(f"user {i}: error radius {radii[i]:.6g} >= estimate norm {norms[i]:.6g}")
        all_est = self.all_estimates
        nrm = np.linalg.norm(all_est, axis=1)
        gram = np.abs(all_est.conj() @ all_est.T)
        np.fill_diagonal(gram, 0.0)
        if np.any(gram > ORTHOGONALITY_TOL * np.outer(nrm, nrm)):
            raise ChannelError("estimated channels are not mutually orthogonal")
        if self.true_channels is not None:
            tc = np.asarray(self.true_channels, dtype=complex)
            if tc.shape != (k + 1, n):
                raise ChannelError("true_channels must have shape (K+1, N)")
            dist = np.linalg.norm(tc - all_est, axis=1)
            bound = np.append(radii, self.eve_error_radius)
            if np.any(dist > bound * (1 + 1e-12) + 1e-12):
                raise ChannelError("a true channel lies outside its error ball")
            object.__setattr__(self, "true_channels", tc)

    @property
    def n_users(self) -> int:
        return self.estimates.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.estimates.shape[1]

    @property
    def all_estimates(self) -> np.ndarray:
        """Users then Eve, shape (K+1, N)."""
        return np.vstack([self.estimates, self.eve_estimate[None, :]])

    @property
    def estimate_norms(self) -> np.ndarray:
        return np.linalg.norm(self.estimates, axis=1)

    def radius(self, user) -> float:
        return self.eve_error_radius if user == EVE else float(self.error_radii[user])

    def estimate(self, user) -> np.ndarray:
        return self.eve_estimate if user == EVE else self.estimates[user]

    def to_dict(self) -> dict:
        d = {
            "estimates": [_c2l(v) for v in self.estimates],
            "eve_estimate": _c2l(self.eve_estimate),
            "error_radii": self.error_radii.tolist(),
            "eve_error_radius": self.eve_error_radius,
            "noise_vars": self.noise_vars.tolist(),
            "eve_noise_var": self.eve_noise_var,
        }
        if self.true_channels is not None:
            d["true_channels"] = [_c2l(v) for v in self.true_channels]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSet":
        tc = d.get("true_channels")
        return cls(
            estimates=np.array([_l2c(v) for v in d["estimates"]]),
            eve_estimate=_l2c(d["eve_estimate"]),
            error_radii=np.asarray(d["error_radii"], dtype=float),
            eve_error_radius=d["eve_error_radius"],
            noise_vars=np.asarray(d["noise_vars"], dtype=float),
            eve_noise_var=d["eve_noise_var"],
            true_channels=None if tc is None else np.array([_l2c(v) for v in tc]),
        )


def _c2l(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _l2c(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return a[:, 0] + 1j * a[:, 1]


def default_spreads(config: ScenarioConfig) -> list[AngularSpread]:
    """Users and Eve centred on evenly spaced visible DFT beam angles."""
    geom = UlaGeometry(config.n_antennas, config.spacing_over_wavelength)
    visible = [(m, a) for m in range(config.n_antennas)
               if (a := dft_beam_angle(geom, m)) is not None]
    count = config.n_users + 1
    if len(visible) < count:
        raise ChannelError("not enough visible DFT beams for K + 1 entities")
    picks = np.linspace(0, len(visible), count, endpoint=False).astype(int)
    width = np.deg2rad(config.spread_width_deg)
    out = []
    for p in picks:
        center = visible[p][1]
        center = float(np.clip(center, -np.pi / 2 + width / 2 + 1e-9, np.pi / 2 - width / 2 - 1e-9))
        out.append(AngularSpread(center, width))
    return out


def make_channel_set(config: ScenarioConfig, trial: int = 0) -> ChannelSet:
    """Channel set for a scenario.

    ``synthetic``: estimates are scaled DFT columns with squared norm
    ``channel_norm2`` (default N) and radii ``g * ||h~||``. ``physical``:
    ULA channels from angular spreads, projected onto assigned DFT beams,
    radii ``max(residual, g * ||h~||)``; the synthesized channels are kept as
    ``true_channels``. ``trial`` selects the random stream in physical mode.
    """
    n, k = config.n_antennas, config.n_users
    if k + 1 > n:
        raise ChannelError(f"K + 1 = {k + 1} exceeds N = {n}")
    g, g_e = config.g, config.eve_g
    if config.channel_mode == "synthetic":
        norm2 = float(n if config.channel_norm2 is None else config.channel_norm2)
        idx = [(j * n) // (k + 1) for j in range(k + 1)]
        cols = np.array([np.sqrt(norm2) * dft_column(n, m) for m in idx])
        norm = np.sqrt(norm2)
        return ChannelSet(
            estimates=cols[:k],
            eve_estimate=cols[k],
            error_radii=np.full(k, g * norm),
            eve_error_radius=g_e * norm,
            noise_vars=np.full(k, config.sigma2),
            eve_noise_var=config.eve_noise_var,
        )

    geom = UlaGeometry(n, config.spacing_over_wavelength)
    if config.spreads is not None:
        spreads = [AngularSpread.from_spec(s) for s in config.spreads]
    else:
        spreads = default_spreads(config)
    beams = assign_dft_beams(geom, [s.center for s in spreads], config.beams_per_user)
    ss = trial_seed(config.base_seed, trial, stream=1)
    rngs = [np.random.default_rng(s) for s in ss.spawn(k + 1)]
    true, est, resid = [], [], []
    for spread, idx, rng in zip(spreads, beams, rngs):
        h = synthesize_channel(geom, spread, config.n_quadrature, rng, config.phase_jitter)
        e, r = bdma_estimate(h, idx)
        true.append(h)
        est.append(e)
        resid.append(r)
    est = np.array(est)
    norms = np.linalg.norm(est, axis=1)
    radii = np.maximum(np.array(resid), np.append(np.full(k, g), g_e) * norms)
    return ChannelSet(
        estimates=est[:k],
        eve_estimate=est[k],
        error_radii=radii[:k],
        eve_error_radius=radii[k],
        noise_vars=np.full(k, config.sigma2),
        eve_noise_var=config.eve_noise_var,
        true_channels=np.array(true),
    )


def sample_error(n: int, radius: float, rng: np.random.Generator, mode: str = "ball") -> np.ndarray:
    """Complex perturbation with ``||delta|| <= radius``.

    ``ball``: uniform in the ball of C^n (radial density ~ r^(2n-1)).
    ``sphere``: uniform on the boundary sphere.
    """
    if radius == 0.0:
        return np.zeros(n, dtype=complex)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    z /= np.linalg.norm(z)
    if mode == "ball":
        r = radius * rng.uniform() ** (1.0 / (2 * n))
    elif mode == "sphere":
        r = radius
    else:
        raise ChannelError(f"unknown error sampler {mode!r}")
    return r * z


def sample_true_channel(channels: ChannelSet, user, rng_seed: Seed = None, mode: str = "ball") -> np.ndarray:
    """``h~ + delta`` with delta drawn inside the user's (or ``"eve"``'s) ball."""
    if user != EVE and not 0 <= int(user) < channels.n_users:
        raise ChannelError(f"invalid user index {user!r}")
    rng = rng_from(rng_seed)
    h = channels.estimate(user)
    return h + sample_error(h.size, channels.radius(user), rng, mode)


def sample_all_true_channels(channels: ChannelSet, rng_seed: Seed = None, mode: str = "ball") -> np.ndarray:
    """One realisation for every user and Eve, shape (K+1, N), Eve last."""
    rng = rng_from(rng_seed)
    est = channels.all_estimates
    radii = np.append(channels.error_radii, channels.eve_error_radius)
    return np.array([h + sample_error(h.size, r, rng, mode) for h, r in zip(est, radii)])
