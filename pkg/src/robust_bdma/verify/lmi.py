"""S-procedure certificates for the robust SINR constraints.

For user k the robust constraint
``(h~ + d)^H X_s (h~ + d) - sigma^2 >= 0  for all ||d|| <= eps``
holds iff some ``mu >= 0`` makes

    [[X + mu I,   X h~            ],
     [h~^H X,     h~^H X h~ + c - mu eps^2]]

positive semidefinite (``c = -sigma_k^2``); Eve's constraint is the same with
``X_e`` and ``c = +sigma_e^2``. The smallest eigenvalue of this block is
concave in ``mu`` (it is the minimum of affine functions), so a golden-section
search seeded from a log grid finds the best certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ..beamformer import BeamformingSolution, TargetSinrs, covariance_views
from ..channel import ChannelSet, _c2l
from ..hermitian import HermitianMatrix, block_matrix, generalized_schur_feasible, is_psd
from .worst_case import robust_quadratic_margin, worst_case_eve_sinr, worst_case_user_sinr

EVE_CONSTRAINT, USER_CONSTRAINT = "eve_constraint", "user_constraint"
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LMI_TOL = 1e-9
ORACLE_TOL = 1e-9


def build_x_matrices(sol: BeamformingSolution, targets: TargetSinrs) -> tuple[list[HermitianMatrix], list[HermitianMatrix]]:
    """``X_e,k = sum_{i!=k} S_i + W_e - S_k / gamma_e,k`` and
    ``X_s,k = S_k / gamma_k - sum_{i!=k} S_i - W_e``."""
    w, s = covariance_views(sol)
    total = sum((m.data for m in s), np.zeros_like(w.data)) + w.data
    x_e, x_s = [], []
    for k, sk in enumerate(s):
        others = total - sk.data
        x_e.append(HermitianMatrix(others - sk.data / targets.gamma_e[k]))
        x_s.append(HermitianMatrix(sk.data / targets.gamma[k] - others))
    return x_e, x_s


@dataclass(frozen=True, eq=False)
class LmiBlock:
    matrix: HermitianMatrix
    kind: str
    user_index: int
    mu: float


def _block_parts(x: np.ndarray, h: np.ndarray, c: float):
    xh = x @ h
    return xh, float(np.vdot(h, xh).real) + c


def lmi_block(x, h, c: float, mu: float, eps: float, kind: str = USER_CONSTRAINT, user: int = 0) -> LmiBlock:
    x = x.data if isinstance(x, HermitianMatrix) else np.asarray(x, dtype=complex)
    h = np.asarray(h, dtype=complex)
    xh, corner = _block_parts(x, h, c)
    m = block_matrix(x + mu * np.eye(h.size), xh, corner - mu * eps**2)
    return LmiBlock(m, kind, user, float(mu))


def _min_eigs(x: np.ndarray, h: np.ndarray, c: float, eps: float, mus: np.ndarray) -> np.ndarray:
    n = h.size
    xh, corner = _block_parts(x, h, c)
    base = np.empty((n + 1, n + 1), dtype=complex)
    base[:n, :n] = x
    base[:n, n] = xh
    base[n, :n] = xh.conj()
    base[n, n] = corner
    shift = np.diag(np.append(np.ones(n), -eps**2)).astype(complex)
    stack = base[None] + np.asarray(mus, dtype=float)[:, None, None] * shift[None]
    return np.linalg.eigvalsh(stack)[:, 0]


def mu_bracket(x: np.ndarray, h: np.ndarray, c: float, eps: float, total_power: float) -> float:
    """Upper end of the multiplier search interval.

    Beyond ``(||h||^2 ||X|| + |c|) / eps^2`` the corner entry is negative, so
    no certificate exists there; the bound is widened by the usual
    ``max(sigma^2/eps^2, total power) * 1e3`` rule.
    """
    xnorm = float(np.linalg.norm(x, 2))
    hn2 = float(np.vdot(h, h).real)
    return max(abs(c) / eps**2, total_power, (hn2 * xnorm + abs(c)) / eps**2, 1e-12) * 1e3


def maximize_margin(x, h, c: float, eps: float, mu_hi: float, grid_points: int = 1000,
                    iterations: int = 200) -> tuple[float, float, np.ndarray]:
    """Best ``(mu, min eigenvalue)`` over ``[0, mu_hi]`` plus the log grid used.

    The grid locates the peak; golden-section then refines inside the two
    neighbouring grid cells.
    """
    x = x.data if isinstance(x, HermitianMatrix) else np.asarray(x, dtype=complex)
    h = np.asarray(h, dtype=complex)
    grid = np.concatenate([[0.0], np.logspace(np.log10(mu_hi) - 15, np.log10(mu_hi), grid_points - 1)])
    vals = _min_eigs(x, h, c, eps, grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]

    def f(mu):
        return float(_min_eigs(x, h, c, eps, np.array([mu]))[0])

    a, b = lo, hi
    m1, m2 = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    f1, f2 = f(m1), f(m2)
    for _ in range(iterations):
        if b - a <= 1e-15 * max(abs(b), 1e-300):
            break
        if f1 < f2:
            a, m1, f1 = m1, m2, f2
            m2 = a + GOLDEN * (b - a)
            f2 = f(m2)
        else:
            b, m2, f2 = m2, m1, f1
            m1 = b - GOLDEN * (b - a)
            f1 = f(m1)
    best_mu, best_val = (m1, f1) if f1 >= f2 else (m2, f2)
    if vals[i] > best_val:
        best_mu, best_val = float(grid[i]), float(vals[i])
    return float(best_mu), float(best_val), grid


def lmi_scale(x: np.ndarray, h: np.ndarray, c: float) -> float:
    hn2 = float(np.vdot(h, h).real)
    return max(float(np.linalg.norm(x, 2)) * (1.0 + hn2), abs(c), 1e-300)


def schur_path_feasible(x, h, c: float, mu: float, eps: float, tol: float = LMI_TOL) -> bool:
    """Block PSD via ``X + mu I >= 0``, range inclusion and Schur complement."""
    x = x.data if isinstance(x, HermitianMatrix) else np.asarray(x, dtype=complex)
    h = np.asarray(h, dtype=complex)
    a = x + mu * np.eye(h.size)
    xh, corner = _block_parts(x, h, c)
    scale = lmi_scale(x, h, c) + mu * max(1.0, eps**2)
    if not is_psd(a, tol * scale).feasible:
        return False
    return generalized_schur_feasible(a, xh, corner - mu * eps**2, tol=tol)


@dataclass
class ConstraintCheck:
    kind: str
    user: int
    target: float
    mu: float
    lmi_margin: float
    lmi_satisfied: bool
    oracle_margin: float
    oracle_satisfied: bool
    worst_case_sinr: float
    witness: np.ndarray
    route: str
    mu_grid: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def agree(self) -> bool:
        return self.lmi_satisfied == self.oracle_satisfied

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "user": self.user,
            "target_sinr": self.target,
            "mu": self.mu,
            "lmi_margin": self.lmi_margin,
            "lmi_satisfied": self.lmi_satisfied,
            "oracle_margin": self.oracle_margin,
            "oracle_satisfied": self.oracle_satisfied,
            "worst_case_sinr": self.worst_case_sinr,
            "witness": _c2l(self.witness),
            "witness_norm": float(np.linalg.norm(self.witness)),
            "route": self.route,
        }
        if self.mu_grid is not None and not self.lmi_satisfied:
            d["mu_grid"] = self.mu_grid.tolist()
        return d


@dataclass
class FeasibilityReport:
    checks: list[ConstraintCheck]

    @property
    def satisfied(self) -> bool:
        return all(c.lmi_satisfied and c.oracle_satisfied for c in self.checks)

    @property
    def oracle_satisfied(self) -> bool:
        return all(c.oracle_satisfied for c in self.checks)

    @property
    def verdicts_agree(self) -> bool:
        return all(c.agree for c in self.checks)

    def by_kind(self, kind: str) -> list[ConstraintCheck]:
        return [c for c in self.checks if c.kind == kind]

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "verdicts_agree": self.verdicts_agree,
            "constraints": [c.to_dict() for c in self.checks],
        }


MuSearch = Union[str, Sequence[float]]


def _check_one(kind, k, x, h, c, eps, total_power, mu_fixed, target, wc, grid_points):
    x = x.data
    scale = lmi_scale(x, h, c)
    grid = None
    if eps == 0.0:
        # no uncertainty: the certificate reduces to the nominal constraint
        mu, margin = 0.0, float(np.vdot(h, x @ h).real) + c
    elif mu_fixed is not None:
        mu = float(mu_fixed)
        margin = float(_min_eigs(x, h, c, eps, np.array([mu]))[0])
    else:
        mu_hi = mu_bracket(x, h, c, eps, total_power)
        mu, margin, grid = maximize_margin(x, h, c, eps, mu_hi, grid_points=grid_points)
    oracle_margin, _ = robust_quadratic_margin(x, h, c, eps)
    oscale = max(float(np.linalg.norm(x, 2)) * (np.linalg.norm(h) + eps) ** 2, abs(c), 1e-300)
    return ConstraintCheck(
        kind=kind,
        user=k,
        target=float(target),
        mu=mu,
        lmi_margin=margin,
        lmi_satisfied=bool(margin >= -LMI_TOL * scale),
        oracle_margin=oracle_margin,
        oracle_satisfied=bool(oracle_margin >= -ORACLE_TOL * oscale),
        worst_case_sinr=wc.sinr,
        witness=wc.witness,
        route=wc.route,
        mu_grid=grid,
    )


def check_lmi_feasibility(channels: ChannelSet, sol: BeamformingSolution, targets: TargetSinrs,
                          mu_search: MuSearch = "maximize", grid_points: int = 1000) -> FeasibilityReport:
    """Evaluate every robust constraint two ways.

    ``mu_search="maximize"`` searches the multiplier; a pair of sequences
    ``(mu_e, mu_s)`` evaluates the blocks at fixed multipliers instead. Each
    check also carries the exact worst-case oracle verdict and SINR.
    """
    x_e, x_s = build_x_matrices(sol, targets)
    fixed_e = fixed_s = [None] * sol.n_users
    if not isinstance(mu_search, str):
        fixed_e, fixed_s = mu_search
    elif mu_search != "maximize":
        raise ValueError(f"unknown mu_search {mu_search!r}")
    total = sol.total_power
    checks = []
    for k in range(sol.n_users):
        wc_e = worst_case_eve_sinr(channels, sol, k)
        checks.append(_check_one(EVE_CONSTRAINT, k, x_e[k], channels.eve_estimate, channels.eve_noise_var,
                                 channels.eve_error_radius, total, fixed_e[k], targets.gamma_e[k], wc_e,
                                 grid_points))
        wc_s = worst_case_user_sinr(channels, sol, k)
        checks.append(_check_one(USER_CONSTRAINT, k, x_s[k], channels.estimates[k], -float(channels.noise_vars[k]),
                                 float(channels.error_radii[k]), total, fixed_s[k], targets.gamma[k], wc_s,
                                 grid_points))
    return FeasibilityReport(checks)
