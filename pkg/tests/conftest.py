import numpy as np
import pytest

from aoi_dpp.channel import GilbertElliotChannel, IIDChannel
from aoi_dpp.model import FrameConfig, SystemState


def reference_model() -> GilbertElliotChannel:
    return GilbertElliotChannel(p11_1=0.9, p01_1=0.6, p11_2=0.9, p01_2=0.6)


def reference_cfg(v: float) -> FrameConfig:
    return FrameConfig(T=20, K=15, q=12.0, A_max=20, V=v)


@pytest.fixture
def ge_reference():
    return reference_model()


def random_instance(rng: np.random.Generator):
    """Small random instance for oracle cross-checks: T <= 3, A_max <= 4, K <= 2."""
    T = int(rng.integers(1, 4))
    K = int(rng.integers(1, min(T, 2) + 1))
    q = float(rng.uniform(0, K))
    a_max = int(rng.integers(1, 5))
    v = float(rng.choice([0.0, 1.0, 5.0]))
    z = float(rng.choice([0.0, 1.0, 10.0]))
    cfg = FrameConfig(T=T, K=K, q=q, A_max=a_max, V=v)
    if rng.random() < 0.5:
        model = IIDChannel(p1=float(rng.random()), p2=float(rng.random()))
        mem = None
    else:
        model = GilbertElliotChannel(
            p11_1=float(rng.random()),
            p01_1=float(rng.random()),
            p11_2=float(rng.random()),
            p01_2=float(rng.random()),
        )
        mem = (int(rng.integers(2)), int(rng.integers(2)))
    state = SystemState(int(rng.integers(1, a_max + 1)), int(rng.integers(0, K + 1)), mem)
    return cfg, model, state, z
