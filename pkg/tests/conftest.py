import pytest

from poolforge.corpus import VectorStore
from poolforge.model import TrainConfig
from poolforge.selection import SeedConfig, SeedKind
from poolforge.simulate import SimulationConfig
from poolforge.synth import SynthSpec, generate_collection

FAST_TRAIN = TrainConfig(learning_rate=1.0, max_iters=80, grad_tolerance=1e-5, oversample=True)


@pytest.fixture(scope="session")
def small_collection():
    """8 topics x 60 docs with runs; shared read-only across tests."""
    spec = SynthSpec(
        topics=8,
        pool_size=60,
        prevalence=(0.15,),
        systems=5,
        quality_range=(0.7, 0.98),
        rng_seed=5,
    )
    return generate_collection(spec)


@pytest.fixture(scope="session")
def small_store(small_collection):
    return VectorStore.from_documents(small_collection.docs, max_features=15000)


def fast_sim_config(**kwargs) -> SimulationConfig:
    defaults = dict(
        seed_cfg=SeedConfig(kind=SeedKind.IS, is_rel=3, is_nonrel=3),
        train_cfg=FAST_TRAIN,
        rng_seed=11,
    )
    defaults.update(kwargs)
    return SimulationConfig(**defaults)
