import numpy as np
import pytest

from fscompare.data import ExpressionMatrix, SynthSpec, binary_view, synthesize


@pytest.fixture
def small_matrix():
    return synthesize(SynthSpec(m_per_class=5, n=40, n_planted=5, effect_size=2.0, seed=3))


@pytest.fixture
def small_view(small_matrix):
    return binary_view(small_matrix, "control", "treated")


def make_matrix(values, labels, prefix="f"):
    values = np.asarray(values, dtype=float)
    m, n = values.shape
    return ExpressionMatrix([f"s{i}" for i in range(m)], [f"{prefix}{j}" for j in range(n)],
                            values, labels)
