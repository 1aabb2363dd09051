import numpy as np
import pytest

from ronfa import EmbeddingSet, SupportItem


@pytest.fixture
def small_set() -> EmbeddingSet:
    """Six well-separated classes, 8 items each, d=4."""
    rng = np.random.default_rng(1234)
    centers = rng.normal(0, 1, (6, 4)) * 50.0
    vectors = np.concatenate([c + rng.normal(0, 0.5, (8, 4)) for c in centers])
    labels = np.repeat(np.arange(6), 8)
    return EmbeddingSet(
        dim=4,
        class_names=tuple(f"c{i}" for i in range(6)),
        vectors=vectors.astype(np.float32),
        labels=labels,
    )


def make_support(features, labels) -> list[SupportItem]:
    """Clean support items from parallel feature/label sequences."""
    return [
        SupportItem(np.asarray(f, dtype=np.float64), int(l), int(l), False)
        for f, l in zip(features, labels)
    ]
