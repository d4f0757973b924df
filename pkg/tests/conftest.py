import numpy as np
import pytest

from baequiv.data import PairedSample, load_fixture, transform
from baequiv.report import analyze

SEED = 42
B = 2000


def make_sample(x, y, name="sim"):
    x = np.asarray(x, dtype=float)
    return PairedSample(tuple(str(i + 1) for i in range(len(x))), x, np.asarray(y, dtype=float), name=name)


def structural_sample(rng, n, *, bias=0.0, slope=1.0, sd_true=10.0, sd_x=1.0, sd_y=1.0, mean=50.0):
    true = rng.normal(mean, sd_true, n)
    x = true + rng.normal(0.0, sd_x, n)
    y = bias + slope * true + rng.normal(0.0, sd_y, n)
    return make_sample(x, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def pefr():
    return load_fixture("pefr")


@pytest.fixture(scope="session")
def case_analyses():
    """Full pipeline on every reference dataset, seed 42, B = 2000."""
    surrogate = {"surrogate": True}
    plasma = load_fixture("plasma-volume")
    samples = {
        "pefr": (load_fixture("pefr"), None),
        "syst-bp": (load_fixture("syst-bp"), surrogate),
        "plasma-raw": (plasma, surrogate),
        "plasma-log": (transform(plasma, "log"), surrogate),
        "plasma-1.11": (transform(plasma, "scale-y=1.11"), surrogate),
        "fat-milk": (load_fixture("fat-milk"), surrogate),
        "blocking-drugs": (load_fixture("blocking-drugs"), surrogate),
    }
    return {k: analyze(s, seed=SEED, B=B, input_info=info) for k, (s, info) in samples.items()}
