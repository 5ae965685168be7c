"""Structural certificates for a solution: multiplier positivity, covariance
rank and direction, KKT residuals of the power-allocation problem, and an
independent bisection oracle for the per-user minimal power."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..beamformer import BeamformingSolution, TargetSinrs, covariance_views
from ..channel import ChannelSet
from ..hermitian import HermitianMatrix, evd

RANK_TOL = 1e-9
COLINEAR_TOL = 1e-9


class VerificationError(ValueError):
    pass


def orthogonal_complement_basis(channels: ChannelSet, tol: float = 1e-9) -> np.ndarray:
    """Unitary ``Q = [h~_e/||h~_e||, h~_1/||h~_1||, ..., tau_1, ...]``.

    The trailing columns span the orthogonal complement of all estimates.
    """
    est = np.vstack([channels.eve_estimate[None, :], channels.estimates])
    norms = np.linalg.norm(est, axis=1)
    if np.any(norms == 0):
        raise VerificationError("zero-norm channel estimate")
    hats = est / norms[:, None]
    sv = np.linalg.svd(hats, compute_uv=False)
    if sv[-1] < 1 - tol or sv[0] > 1 + tol:
        raise VerificationError("channel estimates are not mutually orthogonal (rank deficient)")
    n, m = channels.n_antennas, hats.shape[0]
    if m == n:
        return hats.T.copy()
    # rows of vh beyond m span the null space of conj(hats): tau^H h = 0
    _, _, vh = np.linalg.svd(hats.conj())
    tau = vh[m:].conj().T
    return np.hstack([hats.T, tau])


@dataclass(frozen=True)
class StructureCheck:
    name: str
    user: Optional[int]
    passed: bool
    detail: str = ""


@dataclass
class RankReport:
    checks: list[StructureCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[StructureCheck]:
        return [c for c in self.checks if not c.passed]

    def add(self, name, user, passed, detail=""):
        self.checks.append(StructureCheck(name, user, bool(passed), detail))

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [c.__dict__ for c in self.checks]}


def _rank(m: HermitianMatrix, rank_tol: float = RANK_TOL) -> int:
    """Eigenvalues below ``rank_tol * trace`` count as zero."""
    q = evd(m).values
    scale = max(float(np.sum(np.abs(q))), np.finfo(float).tiny)
    return int(np.sum(np.abs(q) > rank_tol * scale)) if np.any(q != 0) else 0


def _top_colinearity(m: HermitianMatrix, direction: np.ndarray) -> float:
    dec = evd(m)
    u = dec.vectors[:, 0]
    return abs(np.vdot(u, direction / np.linalg.norm(direction)))


def check_rank_structure(channels: ChannelSet, w_e, s_list: Sequence, mu_e: Sequence[float],
                         mu_s: Sequence[float], targets: TargetSinrs, rank_tol: float = RANK_TOL) -> RankReport:
    """Positivity of the multipliers, nonzero ``X + mu I``, rank-one
    covariances aligned with the estimates, and the ``K + 1`` rank bound."""
    w_e = w_e if isinstance(w_e, HermitianMatrix) else HermitianMatrix(w_e)
    s_list = [s if isinstance(s, HermitianMatrix) else HermitianMatrix(s) for s in s_list]
    k_users = len(s_list)
    rep = RankReport()
    bound = k_users + 1

    for k in range(k_users):
        for name, mu in (("mu_e_positive", mu_e[k]), ("mu_s_positive", mu_s[k])):
            if mu is None or np.isnan(mu):
                rep.add(name, k, False, "multiplier absent")
            else:
                rep.add(name, k, mu > 0, f"mu={mu:.6g}")

    total = w_e.data + sum(s.data for s in s_list)
    for k in range(k_users):
        others = total - s_list[k].data
        x_e = others - s_list[k].data / targets.gamma_e[k]
        x_s = s_list[k].data / targets.gamma[k] - others
        for name, x, mu in (("x_e_plus_mu_rank", x_e, mu_e[k]), ("x_s_plus_mu_rank", x_s, mu_s[k])):
            if mu is None or np.isnan(mu):
                continue
            r = _rank(HermitianMatrix(x + mu * np.eye(x.shape[0])), rank_tol)
            rep.add(name, k, r >= 1, f"rank={r}")

    r_w = _rank(w_e, rank_tol)
    rep.add("w_e_rank_le_1", None, r_w <= 1, f"rank={r_w}")
    rep.add("w_e_rank_le_K+1", None, r_w <= bound, f"rank={r_w}")
    if r_w == 1:
        c = _top_colinearity(w_e, channels.eve_estimate)
        rep.add("w_e_along_eve_estimate", None, c >= 1 - COLINEAR_TOL, f"|cos|={c:.12f}")
    for k, s in enumerate(s_list):
        r = _rank(s, rank_tol)
        rep.add("s_rank_le_1", k, r <= 1, f"rank={r}")
        rep.add("s_rank_le_K+1", k, r <= bound, f"rank={r}")
        if r >= 1:
            c = _top_colinearity(s, channels.estimates[k])
            rep.add("s_along_estimate", k, c >= 1 - COLINEAR_TOL, f"|cos|={c:.12f}")
    return rep


def check_solution_rank(channels: ChannelSet, sol: BeamformingSolution, targets: TargetSinrs,
                        rank_tol: float = RANK_TOL) -> RankReport:
    w, s = covariance_views(sol)
    return check_rank_structure(channels, w, s, sol.multipliers_e, sol.multipliers_s, targets, rank_tol)


def solution_ranks(sol: BeamformingSolution, rank_tol: float = RANK_TOL) -> tuple[int, list[int]]:
    w, s = covariance_views(sol)
    return _rank(w, rank_tol), [_rank(m, rank_tol) for m in s]


# ------------------------------------------------------------------ KKT

@dataclass
class KktReport:
    """Per-user residuals keyed by condition; ``relative`` divides by
    ``max(1, largest term magnitude)``."""

    applicable: bool
    absolute: dict = field(default_factory=dict)
    relative: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def max_relative(self) -> float:
        if not self.applicable:
            return float("nan")
        return max(float(np.max(np.abs(v))) for v in self.relative.values())

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "absolute": {k: np.asarray(v).tolist() for k, v in self.absolute.items()},
            "relative": {k: np.asarray(v).tolist() for k, v in self.relative.items()},
            "notes": self.notes,
        }


KKT_NOTES = [
    "stationarity in mu_e and P_e is not checked: the Lagrangian has no multiplier for P_e >= 0, "
    "so it cannot hold at the boundary P_e = 0",
]


def _rel(res, *terms):
    mag = np.maximum.reduce([np.abs(np.asarray(t, dtype=float)) for t in terms] + [np.ones_like(res)])
    return res / mag


def kkt_residuals(channels: ChannelSet, sol: BeamformingSolution, targets: TargetSinrs) -> KktReport:
    """Residuals of the power-allocation optimality system for user powers."""
    if sol.method_tag != "robust":
        return KktReport(False, notes=[f"not applicable to method {sol.method_tag!r}"])
    mu = sol.multipliers_s
    if np.any(np.isnan(mu)) or np.any(channels.error_radii <= 0):
        return KktReport(False, notes=["multipliers absent (zero error radius)"])
    p = sol.info_powers
    xi = sol.dual_xi
    h = channels.estimate_norms
    h2 = h**2
    eps = channels.error_radii
    gam = targets.gamma
    s2 = channels.noise_vars
    den = mu * gam + p

    quad = p**2 * h2 / den**2
    stat_mu = xi * eps**2 - xi * quad
    stat_p_term = xi * mu**2 * gam * h2 / den**2
    stat_p = 1.0 - stat_p_term
    f_term = mu * p * h2 / den
    binding = f_term - s2 - mu * eps**2
    slack = xi * binding
    mu_form = p * (h - eps) / (gam * eps)
    xi_form = gam / (h - eps) ** 2

    rep = KktReport(True, notes=list(KKT_NOTES))
    rep.absolute = {
        "stationarity_mu_s": stat_mu,
        "stationarity_p": stat_p,
        "binding": binding,
        "complementary_slackness": slack,
        "mu_s_closed_form": mu - mu_form,
        "xi_closed_form": xi - xi_form,
    }
    rep.relative = {
        "stationarity_mu_s": _rel(stat_mu, xi * eps**2, xi * quad),
        "stationarity_p": _rel(stat_p, stat_p_term),
        "binding": _rel(binding, f_term, s2, mu * eps**2),
        "complementary_slackness": _rel(slack, xi * f_term, xi * s2, xi * mu * eps**2),
        "mu_s_closed_form": _rel(mu - mu_form, mu, mu_form),
        "xi_closed_form": _rel(xi - xi_form, xi, xi_form),
    }
    return rep


def eve_constraint_residual(channels: ChannelSet, sol: BeamformingSolution) -> np.ndarray:
    """Left side of the per-target Eve power-allocation constraint.

    The noise/multiplier part is evaluated as ``eps^2 (sigma^2/eps^2 - mu)``,
    which is exact (0.0) at the binding multiplier ``mu = sigma^2/eps^2``;
    the unfactored ``sigma^2 - mu eps^2`` is off by one ulp in about one case
    in eight.
    """
    mu = sol.multipliers_e
    pe = sol.an_power
    he2 = float(np.vdot(channels.eve_estimate, channels.eve_estimate).real)
    eps2 = channels.eve_error_radius**2
    s2 = channels.eve_noise_var
    first = np.zeros_like(mu) if pe == 0.0 else mu * pe * he2 / (mu + pe)
    if eps2 == 0.0:
        return first + s2
    return first + eps2 * (s2 / eps2 - mu)


def p2_constraint(mu: float, p: float, norm_h: float, gamma: float, sigma2: float, eps: float) -> float:
    """``mu P ||h||^2 / (mu gamma + P) - sigma^2 - mu eps^2``."""
    if p == 0.0:
        return -sigma2 - mu * eps * eps
    return mu * p * norm_h * norm_h / (mu * gamma + p) - sigma2 - mu * eps * eps


# ------------------------------------------------------------------ P2 oracle

def _max_over_mu(p, norm_h, gamma, sigma2, eps, iterations=120):
    # constraint <= P||h||^2/gamma - sigma^2 - mu eps^2 < 0 beyond this point
    hi = p * norm_h * norm_h / (gamma * eps * eps) if eps > 0 else None
    if hi is None:
        return p * norm_h * norm_h / gamma - sigma2
    a, b = 0.0, hi
    g = (math.sqrt(5.0) - 1.0) / 2.0
    m1, m2 = b - g * (b - a), a + g * (b - a)
    f1 = p2_constraint(m1, p, norm_h, gamma, sigma2, eps)
    f2 = p2_constraint(m2, p, norm_h, gamma, sigma2, eps)
    for _ in range(iterations):
        if f1 < f2:
            a, m1, f1 = m1, m2, f2
            m2 = a + g * (b - a)
            f2 = p2_constraint(m2, p, norm_h, gamma, sigma2, eps)
        else:
            b, m2, f2 = m2, m1, f1
            m1 = b - g * (b - a)
            f1 = p2_constraint(m1, p, norm_h, gamma, sigma2, eps)
    return max(f1, f2)


def p2_power_oracle(norm_h: float, gamma: float, sigma2: float, eps: float) -> float:
    """Smallest ``P`` admitting a multiplier ``mu > 0`` that satisfies the
    per-user power-allocation constraint.

    Outer bisection on ``P`` (run to float resolution); inner golden-section
    maximisation over ``mu`` of the constraint, which is concave in ``mu``.
    """
    if not (norm_h > 0 and gamma > 0 and sigma2 > 0 and eps >= 0):
        raise VerificationError("p2 oracle needs positive ||h||, gamma, sigma^2 and eps >= 0")
    if eps >= norm_h:
        raise VerificationError(f"infeasible geometry: eps={eps} >= ||h||={norm_h}")

    def feasible(p):
        return _max_over_mu(p, norm_h, gamma, sigma2, eps) >= 0.0

    hi = 1.0
    while not feasible(hi):
        hi *= 2.0
    lo = hi / 2.0
    while feasible(lo):
        hi, lo = lo, lo / 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= 1e-15 * hi:
            break
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi
