import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# trained once per session; ~2 minutes on one core
MODEL_CORPUS = dict(count=20, seed=1000)
MODEL_SEED = 0


@pytest.fixture(scope="session")
def trained():
    from attncap.training import CorpusSpec, train_from_corpus

    return train_from_corpus(CorpusSpec(**MODEL_CORPUS), seed=MODEL_SEED)


@pytest.fixture(scope="session")
def model(trained):
    return trained.model


@pytest.fixture(scope="session")
def model_path(model, tmp_path_factory):
    p = tmp_path_factory.mktemp("model") / "model.json"
    model.save(p)
    return p


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
