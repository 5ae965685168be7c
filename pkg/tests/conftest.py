import numpy as np
import pytest

from robust_bdma import ScenarioConfig, TargetSinrs, make_channel_set, solve_robust


def random_hermitian(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a + a.conj().T) / 2


def random_psd(rng, n, rank):
    b = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return b @ b.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def desk_scenario():
    cfg = ScenarioConfig(n_antennas=128, n_users=30, gamma_db=10.0, g=0.5)
    chans = make_channel_set(cfg)
    targets = TargetSinrs.uniform(30, cfg.gamma, cfg.gamma_e)
    return cfg, chans, targets, solve_robust(chans, targets)
