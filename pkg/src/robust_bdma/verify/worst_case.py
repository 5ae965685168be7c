"""Exact worst-case SINRs over the channel error balls.

Two routes:

* aligned beams (every information beam along its own estimate, AN along
  Eve's estimate): the SINR depends on the error only through its
  projections on the estimate directions, and the extremum reduces to a
  one-dimensional problem solved analytically;
* arbitrary beams: bisection on the SINR level, each level tested by an
  exact trust-region subproblem (minimum of a Hermitian quadratic over a
  ball).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from ..beamformer import BeamformingSolution
from ..channel import ChannelSet

ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class WorstCase:
    """Extremal SINR over a ball, with the perturbation attaining it.

    ``lower``/``upper`` bracket the true extremum; they coincide on the
    aligned route and differ by the bisection tolerance otherwise.
    """

    sinr: float
    witness: np.ndarray
    lower: float
    upper: float
    route: str


def trust_region_min(a: np.ndarray, center: np.ndarray, radius: float) -> tuple[float, np.ndarray]:
    """Minimise ``(c + d)^H A (c + d)`` over ``||d|| <= radius``.

    Returns the minimum value and a minimiser ``d``. Handles the indefinite
    case through the secular equation and the degenerate ("hard") case by
    adding a component along the lowest eigenvector.
    """
    a = np.asarray(a, dtype=complex)
    c = np.asarray(center, dtype=complex)
    n = c.size

    def value(d):
        x = c + d
        return float(np.vdot(x, a @ x).real)

    if radius == 0.0:
        return value(np.zeros(n, dtype=complex)), np.zeros(n, dtype=complex)
    q, u = np.linalg.eigh(0.5 * (a + a.conj().T))
    qscale = float(np.max(np.abs(q)))
    if qscale == 0.0:
        return 0.0, np.zeros(n, dtype=complex)
    beta = q * (u.conj().T @ c)  # U^H A c
    bnorm = float(np.linalg.norm(beta))
    lam_lo = max(0.0, -q[0])
    shifted = q + lam_lo
    hard = shifted <= 1e-13 * qscale
    small = 1e-13 * max(bnorm, qscale * radius, np.finfo(float).tiny)
    # round-off residue along the lowest eigenvectors is exactly zero in theory;
    # left in, it divides by q + lam_lo = 0 in the secular step
    beta = np.where(hard & (np.abs(beta) <= small), 0.0, beta)

    def ratio(lam):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(beta != 0, beta / (q + lam), 0.0)

    def phi(lam):
        nrm = np.linalg.norm(ratio(lam))
        return (1.0 / nrm if nrm > 0 else np.inf) - 1.0 / radius

    candidates = []
    if np.any(np.abs(beta[hard]) > small):
        secular = True
    else:
        soft = ~hard
        d_p = -(u[:, soft] @ (beta[soft] / shifted[soft]))
        np_ = float(np.linalg.norm(d_p))
        secular = np_ >= radius
        if not secular:
            if lam_lo == 0.0:
                candidates.append(d_p)
            else:
                z = u[:, np.flatnonzero(hard)[0]]
                tau = np.sqrt(max(radius**2 - np_**2, 0.0))
                candidates += [d_p + tau * z, d_p - tau * z]
    if secular:
        lam_hi = lam_lo + bnorm / radius + qscale * 1e-12
        while phi(lam_hi) < 0:
            lam_hi = lam_lo + 2 * (lam_hi - lam_lo)
        if phi(lam_lo) >= 0:
            lam = lam_lo
        else:
            lam = brentq(phi, lam_lo, lam_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        d = -(u @ ratio(lam))
        nd = np.linalg.norm(d)
        if nd > 0:
            d = d * (radius / nd)
        candidates.append(d)
    best = min(candidates, key=value)
    if not np.all(np.isfinite(best)):
        raise FloatingPointError("trust-region step is not finite")
    return value(best), best


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def is_aligned(channels: ChannelSet, sol: BeamformingSolution, tol: float = ALIGN_TOL) -> bool:
    """True when every active beam is colinear with its intended estimate."""
    est = channels.estimates / channels.estimate_norms[:, None]
    colin = np.abs(np.sum(est.conj() * sol.info_directions, axis=1))
    if np.any((sol.info_powers > 0) & (colin < 1 - tol)):
        return False
    if sol.an_power > 0:
        if sol.an_direction is None:
            return False
        if abs(np.vdot(_unit(channels.eve_estimate), sol.an_direction)) < 1 - tol:
            return False
    return True


def sinr_user(h: np.ndarray, sol: BeamformingSolution, k: int, noise: float) -> float:
    g = np.abs(sol.beams.conj() @ h) ** 2  # |h^H s_i|^2
    an = abs(np.vdot(h, sol.an_beam)) ** 2
    return float(g[k] / (g.sum() - g[k] + an + noise))


def sinr_eve(h: np.ndarray, sol: BeamformingSolution, k: int, noise: float) -> float:
    return sinr_user(h, sol, k, noise)


def _interference_matrix(sol: BeamformingSolution, k: int) -> np.ndarray:
    b = np.delete(sol.beams, k, axis=0)
    m = b.T @ b.conj()
    w = sol.an_beam
    return m + np.outer(w, w.conj())


def _signal_matrix(sol: BeamformingSolution, k: int) -> np.ndarray:
    s = sol.beams[k]
    return np.outer(s, s.conj())


# ---------------------------------------------------------------- aligned route

def _aligned_user(channels, sol, k):
    h = channels.estimates[k]
    a = float(np.linalg.norm(h))
    eps = float(channels.error_radii[k])
    sigma2 = float(channels.noise_vars[k])
    pk = float(sol.info_powers[k])
    hats = channels.all_estimates / np.linalg.norm(channels.all_estimates, axis=1)[:, None]
    inter = np.append(np.delete(sol.info_powers, k), sol.an_power)
    inter_idx = np.append(np.delete(np.arange(channels.n_users), k), channels.n_users)
    j = int(np.argmax(inter)) if inter.size else None
    pm = float(inter[j]) if inter.size else 0.0
    t = min(eps, a) if pm == 0.0 else min((sigma2 / pm + eps**2) / a, eps, a)
    rest = np.sqrt(max(eps**2 - t**2, 0.0))
    delta = -t * hats[k]
    if pm > 0 and rest > 0:
        delta = delta + rest * hats[inter_idx[j]]
    val = pk * (a - t) ** 2 / (pm * rest**2 + sigma2)
    return val, delta


def _aligned_eve(channels, sol, k):
    he = channels.eve_estimate
    b = float(np.linalg.norm(he))
    eps = channels.eve_error_radius
    sigma2 = channels.eve_noise_var
    pk = float(sol.info_powers[k])
    pe = float(sol.an_power)
    hats = channels.all_estimates / np.linalg.norm(channels.all_estimates, axis=1)[:, None]

    def f(t):
        return pk * (eps**2 - t**2) / (pe * (b - t) ** 2 + sigma2)

    top = min(eps, b)
    cands = [0.0, top]
    if pe > 0 and top > 0:
        t = Polynomial([0.0, 1.0])
        deriv = -t * (pe * (b - t) ** 2 + sigma2) + pe * (eps**2 - t**2) * (b - t)
        for r in deriv.roots():
            if abs(r.imag) < 1e-12 * max(1.0, abs(r.real)) and 0.0 < r.real < top:
                cands.append(float(r.real))
    t = max(cands, key=f)
    delta = np.sqrt(max(eps**2 - t**2, 0.0)) * hats[k] - t * hats[-1]
    return f(t), delta


# ---------------------------------------------------------------- general route

def _bisect(feasible, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def _general_user(channels, sol, k):
    h = channels.estimates[k]
    eps = float(channels.error_radii[k])
    sigma2 = float(channels.noise_vars[k])
    s_mat = _signal_matrix(sol, k)
    i_mat = _interference_matrix(sol, k)
    nominal = sinr_user(h, sol, k, sigma2)
    if nominal == 0.0:
        return 0.0, np.zeros_like(h), 0.0, 0.0

    def feasible(t):
        v, _ = trust_region_min(s_mat - t * i_mat, h, eps)
        return v - t * sigma2 >= 0.0

    lo, hi = _bisect(feasible, 0.0, nominal * (1 + 1e-12))
    _, d = trust_region_min(s_mat - hi * i_mat, h, eps)
    d_lo = trust_region_min(s_mat - lo * i_mat, h, eps)[1]
    d = min((d, d_lo), key=lambda x: sinr_user(h + x, sol, k, sigma2))
    return sinr_user(h + d, sol, k, sigma2), d, lo, hi


def _general_eve(channels, sol, k):
    he = channels.eve_estimate
    eps = channels.eve_error_radius
    sigma2 = channels.eve_noise_var
    s_mat = _signal_matrix(sol, k)
    i_mat = _interference_matrix(sol, k)
    lam_max = float(np.linalg.eigvalsh(s_mat)[-1])
    t_hi = lam_max * (np.linalg.norm(he) + eps) ** 2 / sigma2 * (1 + 1e-12)
    if t_hi == 0.0:
        return 0.0, np.zeros_like(he), 0.0, 0.0

    def bounded(t):
        v, _ = trust_region_min(t * i_mat - s_mat, he, eps)
        return v + t * sigma2 >= 0.0

    # bounded() is monotone increasing in t; find the smallest bounded level
    lo, hi = _bisect(lambda t: not bounded(t), 0.0, t_hi)
    cands = [trust_region_min(t * i_mat - s_mat, he, eps)[1] for t in (lo, hi)]
    d = max(cands, key=lambda x: sinr_eve(he + x, sol, k, sigma2))
    return sinr_eve(he + d, sol, k, sigma2), d, lo, hi


def worst_case_user_sinr(channels: ChannelSet, sol: BeamformingSolution, user: int,
                         route: str = "auto") -> WorstCase:
    """Minimum SINR of ``user`` over its error ball."""
    if route == "auto":
        route = "aligned" if is_aligned(channels, sol) else "general"
    if route == "aligned":
        val, d = _aligned_user(channels, sol, user)
        return WorstCase(val, d, val, val, route)
    val, d, lo, hi = _general_user(channels, sol, user)
    return WorstCase(val, d, lo, hi, route)


def worst_case_eve_sinr(channels: ChannelSet, sol: BeamformingSolution, target_user: int,
                        route: str = "auto") -> WorstCase:
    """Maximum Eve SINR towards ``target_user`` over Eve's error ball."""
    if route == "auto":
        route = "aligned" if is_aligned(channels, sol) else "general"
    if route == "aligned":
        val, d = _aligned_eve(channels, sol, target_user)
        return WorstCase(val, d, val, val, route)
    val, d, lo, hi = _general_eve(channels, sol, target_user)
    return WorstCase(val, d, lo, hi, route)


def robust_quadratic_margin(x: np.ndarray, center: np.ndarray, offset: float, radius: float) -> tuple[float, np.ndarray]:
    """``min_{||d|| <= r} (c + d)^H X (c + d) + offset`` and its minimiser.

    Nonnegative exactly when the quadratic constraint holds on the whole ball.
    """
    v, d = trust_region_min(np.asarray(x), center, radius)
    return v + offset, d
