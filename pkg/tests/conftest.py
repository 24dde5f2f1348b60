import numpy as np
import pytest

from phishpoc.dataset import Dataset, FeatureDescriptor, FeatureSchema, canonical_schema, synthetic_phishing


@pytest.fixture(scope="session")
def canonical():
    return canonical_schema()


@pytest.fixture(scope="session")
def small_synthetic():
    return synthetic_phishing(240, 160, seed=11)


def tiny_schema(n=3, domain="discrete"):
    return FeatureSchema(tuple(FeatureDescriptor(f"f{i}", "URL", domain) for i in range(n)), name=f"tiny{n}")


def separable_2d(n=500, seed=0, margin=0.5):
    """Two Gaussian-ish clouds split by the line x0 + x1 = 0 with a gap."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-3, 3, size=(4 * n, 2))
    s = X.sum(axis=1)
    keep = np.abs(s) > margin
    X = X[keep][:n]
    y = (X.sum(axis=1) > 0).astype(int)
    schema = FeatureSchema.real_valued(["a", "b"])
    return Dataset(schema, X, y, name="separable")
