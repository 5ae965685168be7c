"""Brute-force oracles shared by the verifier and acceptance tests."""
import numpy as np
from scipy.optimize import minimize

from robust_bdma.beamformer import BeamformingSolution, TargetSinrs
from robust_bdma.channel import ChannelSet


def sinr(h, sol, k, noise):
    g = np.abs(sol.beams.conj() @ h) ** 2
    an = abs(np.vdot(h, sol.an_beam)) ** 2
    return g[k] / (g.sum() - g[k] + an + noise)


def sinr_many(hs, sol, k, noise):
    g = np.abs(hs.conj() @ sol.beams.T) ** 2
    an = np.abs(hs.conj() @ sol.an_beam) ** 2
    return g[:, k] / (g.sum(axis=1) - g[:, k] + an + noise)


def random_instance(rng, n=None, k=None, aligned=False):
    """Orthogonal estimates, random error radii, random beams and targets."""
    n = n or int(rng.integers(2, 9))
    k = k or int(rng.integers(1, min(3, n - 1) + 1))
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(z)
    est = (q[:, : k + 1] * rng.uniform(1.0, 3.0, k + 1)).T
    norms = np.linalg.norm(est, axis=1)
    radii = rng.uniform(0.02, 0.35, k + 1) * norms
    noise = rng.uniform(0.5, 2.0, k + 1)
    cs = ChannelSet(est[:k], est[k], radii[:k], radii[k], noise[:k], noise[k])
    if aligned:
        dirs = est[:k] / norms[:k, None]
        an_dir = est[k] / norms[k]
    else:
        d = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
        dirs = d / np.linalg.norm(d, axis=1)[:, None]
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        an_dir = a / np.linalg.norm(a)
    use_an = rng.uniform() < 0.5
    sol = BeamformingSolution(dirs, rng.uniform(0.1, 3.0, k), an_dir if use_an else None,
                              float(rng.uniform(0.1, 2.0)) if use_an else 0.0,
                              np.full(k, np.nan), np.full(k, np.nan), np.full(k, np.nan), "random")
    nom_u = np.array([sinr(est[i], sol, i, noise[i]) for i in range(k)])
    nom_e = np.array([sinr(est[k], sol, i, noise[k]) for i in range(k)])
    gamma = nom_u * rng.uniform(0.02, 1.0, k)
    gamma_e = np.minimum(np.maximum(nom_e, 1e-3) * rng.uniform(1.0, 200.0, k), 0.9 * gamma)
    return cs, sol, TargetSinrs(gamma, gamma_e)


def _refine(fun, x0, eps):
    cons = {"type": "ineq", "fun": lambda x: eps**2 - x @ x, "jac": lambda x: -2 * x}
    res = minimize(fun, x0, method="SLSQP", constraints=[cons],
                   options={"ftol": 1e-15, "maxiter": 500})
    x = res.x
    nx = np.linalg.norm(x)
    if nx > eps:
        x = x * (eps / nx)
    return fun(x), x


def grid_extremum(cs: ChannelSet, sol: BeamformingSolution, k: int, who: str, m: int = 60):
    """Extremum of a realised SINR by a dense grid over the error projections
    on every estimate direction, refined by SLSQP over the full complex error.

    ``who="user"`` minimises user k's SINR, ``who="eve"`` maximises Eve's SINR
    towards target k.
    """
    allest = cs.all_estimates
    hats = allest / np.linalg.norm(allest, axis=1)[:, None]
    if who == "user":
        h0, eps, noise, sign = cs.estimates[k], cs.error_radii[k], cs.noise_vars[k], 1.0
    else:
        h0, eps, noise, sign = cs.eve_estimate, cs.eve_error_radius, cs.eve_noise_var, -1.0
    d = hats.shape[0]
    # real projection coefficients suffice on the grid: worst phases are real
    # for beams along the estimates, and SLSQP below explores the full space
    coords = _sphere_grid(d, m)
    radii = np.linspace(0, 1, 21)
    best_val, best_x = np.inf, None
    for r in radii:
        deltas = r * eps * (coords @ hats)  # rows are perturbations
        vals = sign * sinr_many(h0 + deltas, sol, k, noise)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x = vals[i], deltas[i]
    n = h0.size

    def fun(x):
        return sign * sinr(h0 + x[:n] + 1j * x[n:], sol, k, noise)

    x0 = np.concatenate([best_x.real, best_x.imag])
    val, _ = _refine(fun, x0, eps)
    return sign * min(val, best_val)


def _sphere_grid(d, m):
    """Real points on the unit (d-1)-sphere, both signs per coordinate."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    t = np.linspace(0, np.pi, m)
    out = []
    for first in t:
        rest = _sphere_grid(d - 1, max(m // 2, 8)) if d > 2 else np.array([[1.0], [-1.0]])
        for r in rest:
            out.append(np.concatenate([[np.cos(first)], np.sin(first) * r]))
    return np.unique(np.round(np.array(out), 15), axis=0)
