import numpy as np
import pytest

from plancherel.groups import build_model, compute_haar_normalization
from plancherel.quadrature import QuadratureSpec

MODEL_TAGS = ("sl2r", "so13", "sl3r")


@pytest.fixture(scope="session")
def spec():
    return QuadratureSpec()


@pytest.fixture(scope="session", params=MODEL_TAGS)
def model(request):
    return build_model(request.param)


@pytest.fixture(scope="session")
def models():
    return {tag: build_model(tag) for tag in MODEL_TAGS}


@pytest.fixture(scope="session")
def haar_all(models, spec):
    # computed once per session: the sl3r normalization needs the 3-D rule
    return {tag: compute_haar_normalization(m, spec) for tag, m in models.items()}


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
